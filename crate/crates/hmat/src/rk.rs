use nalgebra::DMatrix;

/// Singular values below this fraction of the largest are numerical noise.
const NUMERICAL_FLOOR: f64 = 1e-14;

/// Rank-k factorisation `A·Bᵀ` of an `m × n` block.
#[derive(Debug, Clone, PartialEq)]
pub struct RkMatrix {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl RkMatrix {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Self {
        assert_eq!(a.ncols(), b.ncols(), "factor ranks differ");
        Self { a, b }
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            a: DMatrix::zeros(m, 0),
            b: DMatrix::zeros(n, 0),
        }
    }

    pub fn nrows(&self) -> usize {
        self.a.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.b.nrows()
    }

    pub fn rank(&self) -> usize {
        self.a.ncols()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        &self.a * self.b.transpose()
    }

    pub fn storage_bytes(&self) -> usize {
        8 * self.rank() * (self.nrows() + self.ncols())
    }

    /// `y += alpha · A (Bᵀ x)`.
    pub fn apply(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for l in 0..self.rank() {
            let c: f64 = self.b.column(l).iter().zip(x).map(|(b, x)| b * x).sum::<f64>() * alpha;
            if c != 0.0 {
                for (yi, ai) in y.iter_mut().zip(self.a.column(l).iter()) {
                    *yi += c * ai;
                }
            }
        }
    }

    /// `y += alpha · B (Aᵀ x)`.
    pub fn apply_transpose(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        Self {
            a: self.b.clone(),
            b: self.a.clone(),
        }
        .apply(alpha, x, y)
    }

    /// Truncated SVD of a dense block.
    pub fn from_dense(m: &DMatrix<f64>, eps: f64) -> Self {
        let (rows, cols) = m.shape();
        if rows == 0 || cols == 0 {
            return Self::zeros(rows, cols);
        }
        let svd = m.clone().svd(true, true);
        let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
        truncate(&u, svd.singular_values.as_slice(), &vt.transpose(), eps)
    }

    /// QR of both factors, SVD of the small core, then truncation of the
    /// smallest singular values while the Frobenius norm of the discarded
    /// tail stays below `eps` times that of the block.
    pub fn recompress(&self, eps: f64) -> Self {
        let (m, n, k) = (self.nrows(), self.ncols(), self.rank());
        if k == 0 {
            return self.clone();
        }
        let qa = self.a.clone().qr();
        let qb = self.b.clone().qr();
        let core = qa.r() * qb.r().transpose();
        let svd = core.svd(true, true);
        let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
        let u = qa.q() * u;
        let v = qb.q() * vt.transpose();
        let out = truncate(&u, svd.singular_values.as_slice(), &v, eps);
        debug_assert_eq!((out.nrows(), out.ncols()), (m, n));
        out
    }

    /// `self + scale · other`, recompressed.
    pub fn add(&self, scale: f64, other: &RkMatrix, eps: f64) -> Self {
        let k1 = self.rank();
        let k2 = other.rank();
        let mut a = DMatrix::zeros(self.nrows(), k1 + k2);
        let mut b = DMatrix::zeros(self.ncols(), k1 + k2);
        a.columns_mut(0, k1).copy_from(&self.a);
        b.columns_mut(0, k1).copy_from(&self.b);
        a.columns_mut(k1, k2).copy_from(&(&other.a * scale));
        b.columns_mut(k1, k2).copy_from(&other.b);
        Self { a, b }.recompress(eps)
    }
}

fn truncate(u: &DMatrix<f64>, sigma: &[f64], v: &DMatrix<f64>, eps: f64) -> RkMatrix {
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let sorted: Vec<f64> = order.iter().map(|&i| sigma[i]).collect();
    let k = truncation_rank(&sorted, eps);
    let mut a = DMatrix::zeros(u.nrows(), k);
    let mut b = DMatrix::zeros(v.nrows(), k);
    for (l, &i) in order.iter().take(k).enumerate() {
        a.set_column(l, &(u.column(i) * sigma[i]));
        b.set_column(l, &v.column(i));
    }
    RkMatrix { a, b }
}

/// Smallest rank whose discarded tail has Frobenius norm at most
/// `eps · ‖σ‖`; values below the numerical floor are always dropped.
pub fn truncation_rank(sorted_sigma: &[f64], eps: f64) -> usize {
    let Some(&top) = sorted_sigma.first() else {
        return 0;
    };
    if top <= 0.0 {
        return 0;
    }
    let mut k = sorted_sigma.iter().take_while(|&&s| s > NUMERICAL_FLOOR * top).count();
    let total: f64 = sorted_sigma.iter().map(|s| s * s).sum();
    let budget = eps * eps * total;
    let mut tail: f64 = sorted_sigma[k..].iter().map(|s| s * s).sum();
    while k > 0 && tail + sorted_sigma[k - 1].powi(2) <= budget {
        tail += sorted_sigma[k - 1].powi(2);
        k -= 1;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_rank_respects_tail() {
        assert_eq!(truncation_rank(&[1.0, 1e-3, 1e-7], 1e-6), 2);
        assert_eq!(truncation_rank(&[1.0, 1e-3, 1e-7], 1e-2), 1);
        assert_eq!(truncation_rank(&[1.0, 0.5], 0.0), 2);
        assert_eq!(truncation_rank(&[0.0, 0.0], 0.1), 0);
        assert_eq!(truncation_rank(&[], 0.1), 0);
    }

    #[test]
    fn redundant_factors_collapse() {
        let a = DMatrix::from_fn(10, 8, |i, j| {
            ((i + 1) * (j % 3 + 1)) as f64 + (j % 3) as f64 * (i * i) as f64
        });
        let b = DMatrix::from_fn(7, 8, |i, j| (i as f64 - j as f64).sin());
        let r = RkMatrix::new(a, b);
        let c = r.recompress(0.0);
        assert!(c.rank() <= 8);
        assert!((c.to_dense() - r.to_dense()).norm() <= 1e-12 * r.to_dense().norm());
    }

    #[test]
    fn apply_matches_dense() {
        let r = RkMatrix::new(
            DMatrix::from_fn(4, 2, |i, j| (i + 2 * j) as f64),
            DMatrix::from_fn(3, 2, |i, j| (i as f64) - (j as f64)),
        );
        let x = [1.0, -2.0, 0.5];
        let mut y = vec![1.0; 4];
        r.apply(2.0, &x, &mut y);
        let d = r.to_dense() * nalgebra::DVector::from_column_slice(&x) * 2.0;
        for i in 0..4 {
            assert!((y[i] - 1.0 - d[i]).abs() < 1e-14);
        }
        let mut z = vec![0.0; 3];
        r.apply_transpose(1.0, &[1.0, 0.0, 0.0, 0.0], &mut z);
        for j in 0..3 {
            assert!((z[j] - r.to_dense()[(0, j)]).abs() < 1e-14);
        }
    }
}
