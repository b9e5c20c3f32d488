use nalgebra::{DMatrix, DVector};

use crate::RkMatrix;

/// Row and column access to an implicitly given block.
pub trait EntryOracle {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn row(&mut self, i: usize, out: &mut [f64]);
    fn col(&mut self, j: usize, out: &mut [f64]);
}

/// An explicit matrix as an oracle.
pub struct DenseOracle<'a>(pub &'a DMatrix<f64>);

impl EntryOracle for DenseOracle<'_> {
    fn nrows(&self) -> usize {
        self.0.nrows()
    }

    fn ncols(&self) -> usize {
        self.0.ncols()
    }

    fn row(&mut self, i: usize, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.0[(i, j)];
        }
    }

    fn col(&mut self, j: usize, out: &mut [f64]) {
        out.copy_from_slice(self.0.column(j).as_slice());
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcaOutcome {
    pub rk: RkMatrix,
    /// The rank reached `min(m, n)` before the stopping criterion held.
    pub full_rank: bool,
    pub rows_generated: usize,
    pub cols_generated: usize,
}

/// Partially pivoted adaptive cross approximation.
///
/// Pivots are the largest residual entries of the current row and column;
/// the rank grows until `‖a_k‖·‖b_k‖ <= eps·‖A_k B_kᵀ‖_F`, with the
/// Frobenius norm updated incrementally.
pub fn aca(oracle: &mut impl EntryOracle, eps: f64) -> AcaOutcome {
    let (m, n) = (oracle.nrows(), oracle.ncols());
    let max_rank = m.min(n);
    let mut us: Vec<DVector<f64>> = Vec::new();
    let mut vs: Vec<DVector<f64>> = Vec::new();
    let mut used = vec![false; m];
    let mut row = vec![0.0; n];
    let mut col = vec![0.0; m];
    let mut norm2 = 0.0;
    let (mut rows_generated, mut cols_generated) = (0, 0);
    let mut converged = max_rank == 0;
    let mut next = Some(0);

    while let Some(i) = next {
        if us.len() == max_rank {
            break;
        }
        oracle.row(i, &mut row);
        rows_generated += 1;
        used[i] = true;
        for (u, v) in us.iter().zip(&vs) {
            let ui = u[i];
            if ui != 0.0 {
                for (r, vj) in row.iter_mut().zip(v.iter()) {
                    *r -= ui * vj;
                }
            }
        }
        let (j, pivot) = row.iter().enumerate().fold(
            (0, 0.0f64),
            |best, (j, &x)| if x.abs() > best.1.abs() { (j, x) } else { best },
        );
        if pivot == 0.0 {
            if us.is_empty() {
                // Nothing found yet: keep scanning rows to tell a zero block apart.
                next = used.iter().position(|&u| !u);
                converged = next.is_none();
                continue;
            }
            converged = true;
            break;
        }
        let v = DVector::from_iterator(n, row.iter().map(|x| x / pivot));
        oracle.col(j, &mut col);
        cols_generated += 1;
        for (u, w) in us.iter().zip(&vs) {
            let wj = w[j];
            if wj != 0.0 {
                for (c, ui) in col.iter_mut().zip(u.iter()) {
                    *c -= wj * ui;
                }
            }
        }
        let u = DVector::from_column_slice(&col);
        let cross: f64 = us.iter().zip(&vs).map(|(a, b)| u.dot(a) * v.dot(b)).sum();
        let (nu, nv) = (u.norm(), v.norm());
        norm2 += 2.0 * cross + nu * nu * nv * nv;
        us.push(u);
        vs.push(v);
        if nu * nv <= eps * norm2.max(0.0).sqrt() {
            converged = true;
            break;
        }
        let last = us.last().expect("just pushed");
        next = (0..m)
            .filter(|&r| !used[r])
            .fold(None, |best: Option<usize>, r| match best {
                Some(b) if last[b].abs() >= last[r].abs() => Some(b),
                _ => Some(r),
            });
    }
    if next.is_none() && !converged {
        converged = us.len() < max_rank;
    }
    let k = us.len();
    let a = DMatrix::from_fn(m, k, |i, l| us[l][i]);
    let b = DMatrix::from_fn(n, k, |j, l| vs[l][j]);
    AcaOutcome {
        rk: RkMatrix::new(a, b),
        full_rank: !converged && k == max_rank,
        rows_generated,
        cols_generated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_is_exact() {
        let m = DMatrix::from_fn(6, 5, |i, j| (i as f64 + 1.0) * (2.0 - j as f64));
        let out = aca(&mut DenseOracle(&m), 1e-12);
        assert_eq!(out.rk.rank(), 1);
        assert!((out.rk.to_dense() - &m).norm() < 1e-13);
        assert!(!out.full_rank);
    }

    #[test]
    fn zero_block_has_rank_zero() {
        let m = DMatrix::zeros(4, 7);
        let out = aca(&mut DenseOracle(&m), 1e-6);
        assert_eq!(out.rk.rank(), 0);
        assert!(!out.full_rank);
    }

    #[test]
    fn identity_is_full_rank() {
        let m = DMatrix::identity(5, 5);
        let out = aca(&mut DenseOracle(&m), 1e-6);
        assert!(out.full_rank);
        assert!((out.rk.to_dense() - &m).norm() < 1e-14);
    }

    #[test]
    fn pivot_row_may_start_zero() {
        let m = DMatrix::from_fn(5, 4, |i, j| if i == 3 { (j + 1) as f64 } else { 0.0 });
        let out = aca(&mut DenseOracle(&m), 1e-10);
        assert_eq!(out.rk.rank(), 1);
        assert!((out.rk.to_dense() - &m).norm() < 1e-14);
    }
}
