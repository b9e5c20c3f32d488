use nalgebra::{DMatrix, Dyn, PermutationSequence};

use crate::{aca, DenseOracle, HError, HMatrix, HNode, RkMatrix};

/// Partially pivoted LU of a diagonal leaf, `P A = L U`.
#[derive(Debug, Clone)]
pub struct DenseLu {
    l: DMatrix<f64>,
    u: DMatrix<f64>,
    p: PermutationSequence<Dyn>,
}

impl DenseLu {
    pub fn new(a: DMatrix<f64>, offset: usize) -> Result<Self, HError> {
        let lu = a.lu();
        let u = lu.u();
        if (0..u.nrows()).any(|i| u[(i, i)] == 0.0 || !u[(i, i)].is_finite()) {
            return Err(HError::ZeroPivot { offset });
        }
        Ok(Self {
            l: lu.l(),
            p: lu.p().clone(),
            u,
        })
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    /// `X ← L⁻¹ P X`.
    fn forward(&self, x: &mut DMatrix<f64>) {
        self.p.permute_rows(x);
        self.l.solve_lower_triangular_with_diag_mut(x, 1.0);
    }

    /// `X ← U⁻¹ X`.
    fn backward(&self, x: &mut DMatrix<f64>) {
        self.u.solve_upper_triangular_mut(x);
    }

    /// `X ← U⁻ᵀ X`.
    fn backward_tr(&self, x: &mut DMatrix<f64>) {
        self.u.tr_solve_upper_triangular_mut(x);
    }

    pub(crate) fn reconstruct(&self) -> DMatrix<f64> {
        let mut a = &self.l * &self.u;
        self.p.inv_permute_rows(&mut a);
        a
    }
}

/// Block LU of an H-matrix, `M ≈ L̃ U` with `L̃` block lower triangular
/// whose diagonal leaves are row-permuted unit lower triangles.
#[derive(Debug, Clone)]
pub struct HLu {
    root: HNode,
    row_perm: Vec<usize>,
    col_perm: Vec<usize>,
}

impl HLu {
    /// Factorises in place; off-diagonal updates are truncated at `eps`.
    pub fn new(matrix: HMatrix, eps: f64) -> Result<Self, HError> {
        let (mut root, row_perm, col_perm) = matrix.into_parts();
        if root.nrows() != root.ncols() {
            return Err(HError::DimensionMismatch {
                expected: root.nrows(),
                found: root.ncols(),
            });
        }
        factor(&mut root, eps, 0)?;
        Ok(Self {
            root,
            row_perm,
            col_perm,
        })
    }

    pub fn dim(&self) -> usize {
        self.row_perm.len()
    }

    pub fn storage_bytes(&self) -> usize {
        self.root.storage_bytes()
    }

    /// Solves `M x = b` with the approximate factors.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, HError> {
        if b.len() != self.dim() {
            return Err(HError::DimensionMismatch {
                expected: self.dim(),
                found: b.len(),
            });
        }
        let mut y: Vec<f64> = self.row_perm.iter().map(|&i| b[i]).collect();
        forward_vec(&self.root, &mut y);
        backward_vec(&self.root, &mut y);
        let mut x = vec![0.0; y.len()];
        for (k, &j) in self.col_perm.iter().enumerate() {
            x[j] = y[k];
        }
        Ok(x)
    }
}

fn factor(node: &mut HNode, eps: f64, offset: usize) -> Result<(), HError> {
    match node {
        HNode::Dense(m) => {
            *node = HNode::Lu(Box::new(DenseLu::new(
                std::mem::replace(m, DMatrix::zeros(0, 0)),
                offset,
            )?));
        }
        HNode::LowRank(r) => {
            *node = HNode::Lu(Box::new(DenseLu::new(r.to_dense(), offset)?));
        }
        HNode::Lu(_) => {}
        HNode::Block { rows, cols, children } => {
            if rows != cols {
                return Err(HError::Structure("diagonal block with unequal partitions".into()));
            }
            let q = rows.len();
            let mut off = offset;
            for k in 0..q {
                factor(&mut children[k * q + k], eps, off)?;
                off += rows[k];
                let diag = std::mem::replace(&mut children[k * q + k], HNode::placeholder());
                for j in k + 1..q {
                    solve_lower(&diag, &mut children[k * q + j], eps)?;
                }
                for i in k + 1..q {
                    solve_upper_right(&diag, &mut children[i * q + k], eps)?;
                }
                children[k * q + k] = diag;
                for i in k + 1..q {
                    for j in k + 1..q {
                        let mut c = std::mem::replace(&mut children[i * q + j], HNode::placeholder());
                        mul_sub(&mut c, &children[i * q + k], &children[k * q + j], eps)?;
                        children[i * q + j] = c;
                    }
                }
            }
        }
    }
    Ok(())
}

fn row_offsets(sizes: &[usize]) -> Vec<usize> {
    let mut o = Vec::with_capacity(sizes.len() + 1);
    let mut s = 0;
    o.push(0);
    for &n in sizes {
        s += n;
        o.push(s);
    }
    o
}

/// `X ← L̃⁻¹ X` for a dense right-hand side.
fn forward_dense(l: &HNode, x: &mut DMatrix<f64>) -> Result<(), HError> {
    match l {
        HNode::Lu(f) => {
            f.forward(x);
            Ok(())
        }
        HNode::Block { rows, children, .. } => {
            let q = rows.len();
            let off = row_offsets(rows);
            for k in 0..q {
                let mut xk = x.rows(off[k], rows[k]).into_owned();
                for i in 0..k {
                    let xi = x.rows(off[i], rows[i]).into_owned();
                    xk -= children[k * q + i].mul_dense(&xi);
                }
                forward_dense(&children[k * q + k], &mut xk)?;
                x.rows_mut(off[k], rows[k]).copy_from(&xk);
            }
            Ok(())
        }
        _ => Err(HError::Structure("unfactored diagonal block".into())),
    }
}

/// `X ← U⁻ᵀ X` for a dense right-hand side.
fn backward_tr_dense(u: &HNode, x: &mut DMatrix<f64>) -> Result<(), HError> {
    match u {
        HNode::Lu(f) => {
            f.backward_tr(x);
            Ok(())
        }
        HNode::Block { cols, children, .. } => {
            let q = cols.len();
            let off = row_offsets(cols);
            for k in 0..q {
                let mut xk = x.rows(off[k], cols[k]).into_owned();
                for j in 0..k {
                    let xj = x.rows(off[j], cols[j]).into_owned();
                    xk -= children[j * q + k].tr_mul_dense(&xj);
                }
                backward_tr_dense(&children[k * q + k], &mut xk)?;
                x.rows_mut(off[k], cols[k]).copy_from(&xk);
            }
            Ok(())
        }
        _ => Err(HError::Structure("unfactored diagonal block".into())),
    }
}

/// `B ← L̃⁻¹ B`.
fn solve_lower(l: &HNode, b: &mut HNode, eps: f64) -> Result<(), HError> {
    match b {
        HNode::LowRank(r) => forward_dense(l, &mut r.a),
        HNode::Dense(m) => forward_dense(l, m),
        HNode::Block {
            rows: br,
            cols: bc,
            children: bch,
        } => {
            if let HNode::Block {
                rows: lr,
                children: lch,
                ..
            } = l
            {
                if lr == br {
                    let q = lr.len();
                    let nc = bc.len();
                    for c in 0..nc {
                        for k in 0..q {
                            let mut t = std::mem::replace(&mut bch[k * nc + c], HNode::placeholder());
                            for i in 0..k {
                                mul_sub(&mut t, &lch[k * q + i], &bch[i * nc + c], eps)?;
                            }
                            solve_lower(&lch[k * q + k], &mut t, eps)?;
                            bch[k * nc + c] = t;
                        }
                    }
                    return Ok(());
                }
            }
            let mut d = b.to_dense();
            forward_dense(l, &mut d)?;
            *b = HNode::Dense(d);
            Ok(())
        }
        HNode::Lu(_) => Err(HError::Structure("factored block off the diagonal".into())),
    }
}

/// `B ← B U⁻¹`.
fn solve_upper_right(u: &HNode, b: &mut HNode, eps: f64) -> Result<(), HError> {
    match b {
        HNode::LowRank(r) => backward_tr_dense(u, &mut r.b),
        HNode::Dense(m) => {
            let mut t = m.transpose();
            backward_tr_dense(u, &mut t)?;
            *m = t.transpose();
            Ok(())
        }
        HNode::Block {
            rows: br,
            cols: bc,
            children: bch,
        } => {
            if let HNode::Block {
                cols: uc,
                children: uch,
                ..
            } = u
            {
                if uc == bc {
                    let q = uc.len();
                    let nr = br.len();
                    for r in 0..nr {
                        for k in 0..q {
                            let mut t = std::mem::replace(&mut bch[r * q + k], HNode::placeholder());
                            for j in 0..k {
                                mul_sub(&mut t, &bch[r * q + j], &uch[j * q + k], eps)?;
                            }
                            solve_upper_right(&uch[k * q + k], &mut t, eps)?;
                            bch[r * q + k] = t;
                        }
                    }
                    return Ok(());
                }
            }
            let mut t = b.to_dense().transpose();
            backward_tr_dense(u, &mut t)?;
            *b = HNode::Dense(t.transpose());
            Ok(())
        }
        HNode::Lu(_) => Err(HError::Structure("factored block off the diagonal".into())),
    }
}

/// `C ← C − A·B` with truncation of low-rank targets at `eps`.
fn mul_sub(c: &mut HNode, a: &HNode, b: &HNode, eps: f64) -> Result<(), HError> {
    match (a, b) {
        (HNode::LowRank(ra), _) => {
            let v = b.tr_mul_dense(&ra.b);
            sub_rk(c, &RkMatrix::new(ra.a.clone(), v), eps)
        }
        (_, HNode::LowRank(rb)) => {
            let u = a.mul_dense(&rb.a);
            sub_rk(c, &RkMatrix::new(u, rb.b.clone()), eps)
        }
        (HNode::Dense(da), HNode::Dense(db)) => sub_rk(c, &RkMatrix::new(da.clone(), db.transpose()), eps),
        (
            HNode::Block {
                rows: ar,
                cols: ac,
                children: ach,
            },
            HNode::Block {
                rows: br,
                cols: bcs,
                children: bch,
            },
        ) if ac == br && matches!(c, HNode::Block { rows, cols, .. } if rows == ar && cols == bcs) => {
            let HNode::Block { children: cch, .. } = c else {
                unreachable!()
            };
            let (p, q, r) = (ar.len(), ac.len(), bcs.len());
            for i in 0..p {
                for j in 0..r {
                    for k in 0..q {
                        mul_sub(&mut cch[i * r + j], &ach[i * q + k], &bch[k * r + j], eps)?;
                    }
                }
            }
            Ok(())
        }
        (HNode::Dense(da), _) => {
            let p = b.tr_mul_dense(&da.transpose()).transpose();
            sub_dense(c, &p, eps)
        }
        _ => {
            let p = a.mul_dense(&b.to_dense());
            sub_dense(c, &p, eps)
        }
    }
}

fn sub_rk(c: &mut HNode, r: &RkMatrix, eps: f64) -> Result<(), HError> {
    if r.rank() == 0 {
        return Ok(());
    }
    match c {
        HNode::Dense(m) => {
            m.gemm(-1.0, &r.a, &r.b.transpose(), 1.0);
            Ok(())
        }
        HNode::LowRank(own) => {
            *own = own.add(-1.0, r, eps);
            Ok(())
        }
        HNode::Block { rows, cols, children } => {
            let ro = row_offsets(rows);
            let co = row_offsets(cols);
            for (bi, &nr) in rows.iter().enumerate() {
                for (bj, &nc) in cols.iter().enumerate() {
                    let piece = RkMatrix::new(r.a.rows(ro[bi], nr).into_owned(), r.b.rows(co[bj], nc).into_owned());
                    sub_rk(&mut children[bi * cols.len() + bj], &piece, eps)?;
                }
            }
            Ok(())
        }
        HNode::Lu(_) => Err(HError::Structure("update of a factored block".into())),
    }
}

fn sub_dense(c: &mut HNode, p: &DMatrix<f64>, eps: f64) -> Result<(), HError> {
    match c {
        HNode::Dense(m) => {
            *m -= p;
            Ok(())
        }
        HNode::LowRank(own) => {
            let approx = aca(&mut DenseOracle(p), eps * 0.1).rk;
            *own = own.add(-1.0, &approx, eps);
            Ok(())
        }
        HNode::Block { rows, cols, children } => {
            let ro = row_offsets(rows);
            let co = row_offsets(cols);
            for (bi, &nr) in rows.iter().enumerate() {
                for (bj, &nc) in cols.iter().enumerate() {
                    let piece = p.view((ro[bi], co[bj]), (nr, nc)).into_owned();
                    sub_dense(&mut children[bi * cols.len() + bj], &piece, eps)?;
                }
            }
            Ok(())
        }
        HNode::Lu(_) => Err(HError::Structure("update of a factored block".into())),
    }
}

fn forward_vec(l: &HNode, x: &mut [f64]) {
    match l {
        HNode::Lu(f) => {
            let mut v = DMatrix::from_column_slice(x.len(), 1, x);
            f.forward(&mut v);
            x.copy_from_slice(v.as_slice());
        }
        HNode::Block { rows, children, .. } => {
            let q = rows.len();
            let off = row_offsets(rows);
            for k in 0..q {
                let (head, tail) = x.split_at_mut(off[k]);
                let xk = &mut tail[..rows[k]];
                for i in 0..k {
                    children[k * q + i].apply(-1.0, &head[off[i]..off[i + 1]], xk);
                }
                forward_vec(&children[k * q + k], xk);
            }
        }
        _ => unreachable!("diagonal blocks are factored"),
    }
}

fn backward_vec(u: &HNode, x: &mut [f64]) {
    match u {
        HNode::Lu(f) => {
            let mut v = DMatrix::from_column_slice(x.len(), 1, x);
            f.backward(&mut v);
            x.copy_from_slice(v.as_slice());
        }
        HNode::Block { rows, children, .. } => {
            let q = rows.len();
            let off = row_offsets(rows);
            for k in (0..q).rev() {
                let (head, tail) = x.split_at_mut(off[k + 1]);
                let xk = &mut head[off[k]..];
                for j in k + 1..q {
                    let s = off[j] - off[k + 1];
                    children[k * q + j].apply(-1.0, &tail[s..s + rows[j]], xk);
                }
                backward_vec(&children[k * q + k], xk);
            }
        }
        _ => unreachable!("diagonal blocks are factored"),
    }
}
