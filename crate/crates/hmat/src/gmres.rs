use nalgebra::DMatrix;

use crate::{HError, HLu, HMatrix};

/// Square linear map `x ↦ y`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for (j, &xj) in x.iter().enumerate() {
            for (yi, a) in y.iter_mut().zip(self.column(j).iter()) {
                *yi += a * xj;
            }
        }
    }
}

impl LinearOperator for HMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.matvec(x).expect("operator dimension checked by caller"));
    }
}

/// Applies the inverse of the factored matrix.
impl LinearOperator for HLu {
    fn dim(&self) -> usize {
        HLu::dim(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.solve(x).expect("operator dimension checked by caller"));
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    /// Relative tolerance on the preconditioned residual.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative preconditioned residual after each iteration, starting with 1.
    pub residuals: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Left-preconditioned GMRES without restarts (modified Gram-Schmidt,
/// Givens rotations), starting from zero.
pub fn gmres(
    op: &dyn LinearOperator,
    precond: Option<&dyn LinearOperator>,
    b: &[f64],
    config: GmresConfig,
) -> Result<GmresSolution, HError> {
    let n = op.dim();
    if b.len() != n {
        return Err(HError::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    if let Some(p) = precond {
        if p.dim() != n {
            return Err(HError::DimensionMismatch {
                expected: n,
                found: p.dim(),
            });
        }
    }
    let prec = |v: &[f64]| -> Vec<f64> {
        match precond {
            Some(p) => {
                let mut out = vec![0.0; n];
                p.apply(v, &mut out);
                out
            }
            None => v.to_vec(),
        }
    };

    let r0 = prec(b);
    let beta = dot(&r0, &r0).sqrt();
    let mut residuals = vec![1.0];
    if beta == 0.0 {
        return Ok(GmresSolution {
            x: vec![0.0; n],
            iterations: 0,
            residuals,
        });
    }
    let mut basis: Vec<Vec<f64>> = vec![r0.iter().map(|v| v / beta).collect()];
    let mut h: Vec<Vec<f64>> = Vec::new();
    let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    let mut g = vec![beta];
    let mut av = vec![0.0; n];

    for j in 0..config.max_iter.min(n) {
        op.apply(&basis[j], &mut av);
        let mut w = prec(&av);
        let mut col = vec![0.0; j + 2];
        for (i, v) in basis.iter().enumerate() {
            let hij = dot(&w, v);
            col[i] = hij;
            for (wk, vk) in w.iter_mut().zip(v) {
                *wk -= hij * vk;
            }
        }
        let hnext = dot(&w, &w).sqrt();
        col[j + 1] = hnext;
        for i in 0..j {
            let t = cs[i] * col[i] + sn[i] * col[i + 1];
            col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
            col[i] = t;
        }
        let rho = col[j].hypot(col[j + 1]);
        let (c, s) = if rho == 0.0 {
            (1.0, 0.0)
        } else {
            (col[j] / rho, col[j + 1] / rho)
        };
        col[j] = rho;
        col[j + 1] = 0.0;
        cs.push(c);
        sn.push(s);
        g.push(-s * g[j]);
        g[j] *= c;
        h.push(col);
        let rel = g[j + 1].abs() / beta;
        residuals.push(rel);
        let done = rel <= config.tol || hnext == 0.0;
        if done {
            return Ok(GmresSolution {
                x: combine(&basis, &h, &g, j + 1, n),
                iterations: j + 1,
                residuals,
            });
        }
        basis.push(w.iter().map(|v| v / hnext).collect());
    }
    Err(HError::NoConvergence {
        iterations: residuals.len() - 1,
        last: *residuals.last().expect("initial residual"),
        residuals,
    })
}

fn combine(basis: &[Vec<f64>], h: &[Vec<f64>], g: &[f64], k: usize, n: usize) -> Vec<f64> {
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| h[j][i] * y[j]).sum();
        y[i] = (g[i] - s) / h[i][i];
    }
    let mut x = vec![0.0; n];
    for (v, yi) in basis.iter().zip(&y) {
        for (xk, vk) in x.iter_mut().zip(v) {
            *xk += yi * vk;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_converges_at_once() {
        let id = DMatrix::<f64>::identity(6, 6);
        let b = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let s = gmres(&id, None, &b, GmresConfig::default()).unwrap();
        assert_eq!(s.iterations, 1);
        for (x, bb) in s.x.iter().zip(&b) {
            assert!((x - bb).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = DMatrix::<f64>::identity(3, 3) * 2.0;
        let s = gmres(&a, None, &[0.0; 3], GmresConfig::default()).unwrap();
        assert_eq!(s.iterations, 0);
        assert_eq!(s.x, vec![0.0; 3]);
    }

    #[test]
    fn exhausting_iterations_is_an_error() {
        let n = 30;
        let a = DMatrix::from_fn(n, n, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
        let b = vec![1.0; n];
        let err = gmres(
            &a,
            None,
            &b,
            GmresConfig {
                tol: 1e-14,
                max_iter: 3,
            },
        )
        .unwrap_err();
        assert!(matches!(err, HError::NoConvergence { iterations: 3, .. }));
    }
}
