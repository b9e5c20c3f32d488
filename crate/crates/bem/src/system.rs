//! The collocation system `L x = R g` in dense and hierarchical form.

use hmat::{gmres, BlockTree, ClusterTree, GmresConfig, HLu, HMatrix, LinearOperator, Subdivision};
use nalgebra::{DMatrix, DVector};

use crate::assembly::{BlockMatrix, Discretisation, OperatorSource, Side};
use crate::patches::{Dof, Layout};
use crate::{BemError, Result, Vec2};

/// Dense block system. Columns of `lhs` follow `unknowns`, columns of
/// `rhs` follow `knowns`, rows follow the collocation points.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSystem {
    pub lhs: BlockMatrix,
    pub rhs: BlockMatrix,
    pub known: Vec<Vec2>,
    pub unknowns: Vec<Dof>,
    pub knowns: Vec<Dof>,
}

/// Scalar copy with component `a` of entry `i` at `a·rows + i`.
pub fn direction_major(m: &BlockMatrix) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(2 * m.rows, 2 * m.cols);
    for i in 0..m.rows {
        for j in 0..m.cols {
            let e = m.data[i * m.cols + j];
            for a in 0..2 {
                for b in 0..2 {
                    out[(a * m.rows + i, b * m.cols + j)] = e[2 * a + b];
                }
            }
        }
    }
    out
}

/// Scalar copy with component `a` of entry `i` at `2i + a`.
pub fn interleaved(m: &BlockMatrix) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(2 * m.rows, 2 * m.cols);
    for i in 0..m.rows {
        for j in 0..m.cols {
            let e = m.data[i * m.cols + j];
            for a in 0..2 {
                for b in 0..2 {
                    out[(2 * i + a, 2 * j + b)] = e[2 * a + b];
                }
            }
        }
    }
    out
}

/// Scalar sub-block of direction pair `(a, b)`.
pub fn direction_block(m: &BlockMatrix, a: usize, b: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows, m.cols, |i, j| m.data[i * m.cols + j][2 * a + b])
}

pub fn to_direction_major(v: &[Vec2]) -> Vec<f64> {
    v.iter().map(|c| c.x).chain(v.iter().map(|c| c.y)).collect()
}

pub fn from_direction_major(v: &[f64]) -> Vec<Vec2> {
    let n = v.len() / 2;
    (0..n).map(|i| Vec2::new(v[i], v[n + i])).collect()
}

impl BlockSystem {
    /// Assembles both sides. Failing entries are collected over all rows.
    pub fn build(disc: &Discretisation) -> Result<Self> {
        let layout = disc.layout();
        let n = layout.unknowns.len();
        let m = layout.knowns.len();
        let mut needed = vec![false; layout.n_traction()];
        for dof in layout.unknowns.iter().chain(&layout.knowns) {
            if let Dof::Traction(t) = *dof {
                needed[t] = true;
            }
        }
        let needs_k = layout
            .unknowns
            .iter()
            .chain(&layout.knowns)
            .any(|d| matches!(d, Dof::Displacement(_)));
        let mut lhs = BlockMatrix::zeros(disc.rows(), n);
        let mut rhs = BlockMatrix::zeros(disc.rows(), m);
        let mut errors = Vec::new();
        for i in 0..disc.rows() {
            let v = match disc.v_row(i, &needed) {
                Ok(v) => v,
                Err(e) => {
                    errors.push(e);
                    continue;
                }
            };
            let a = if needs_k {
                match disc.k_row(i) {
                    Ok(mut k) => {
                        for &(g, val) in disc.row_values(i) {
                            k[g][0] -= val;
                            k[g][3] -= val;
                        }
                        k
                    }
                    Err(e) => {
                        errors.push(e);
                        continue;
                    }
                }
            } else {
                Vec::new()
            };
            let entry = |dof: &Dof, side: Side| -> [f64; 4] {
                let (sv, sa) = match side {
                    Side::Lhs => (1.0, -1.0),
                    Side::Rhs => (-1.0, 1.0),
                };
                match *dof {
                    Dof::Traction(t) => v[t].map(|x| sv * x),
                    Dof::Displacement(g) => a[g].map(|x| sa * x),
                }
            };
            for (j, dof) in layout.unknowns.iter().enumerate() {
                lhs.data[i * n + j] = entry(dof, Side::Lhs);
            }
            for (j, dof) in layout.knowns.iter().enumerate() {
                rhs.data[i * m + j] = entry(dof, Side::Rhs);
            }
        }
        if !errors.is_empty() {
            return Err(BemError::Assembly(errors));
        }
        Ok(Self {
            lhs,
            rhs,
            known: layout.known_values.clone(),
            unknowns: layout.unknowns.clone(),
            knowns: layout.knowns.clone(),
        })
    }

    /// `R g` in direction-major order.
    pub fn rhs_vector(&self) -> DVector<f64> {
        let g = DVector::from_vec(to_direction_major(&self.known));
        direction_major(&self.rhs) * g
    }

    /// Unknown coefficients by dense LU.
    pub fn solve(&self) -> Result<Vec<Vec2>> {
        let x = direction_major(&self.lhs)
            .lu()
            .solve(&self.rhs_vector())
            .ok_or(BemError::SingularSystem)?;
        Ok(from_direction_major(x.as_slice()))
    }
}

/// Parameters of the hierarchical backend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HConfig {
    /// ACA and recompression accuracy.
    pub eps_h: f64,
    /// Truncation accuracy of the preconditioner.
    pub eps_lu: f64,
    /// Relative residual at which GMRES stops.
    pub eps_s: f64,
    pub eta: f64,
    pub n_min: usize,
    pub max_iter: usize,
}

impl Default for HConfig {
    fn default() -> Self {
        Self {
            eps_h: 1e-6,
            eps_lu: 1e-1,
            eps_s: 1e-6,
            eta: 1.0,
            n_min: 8,
            max_iter: 2000,
        }
    }
}

/// Both sides compressed as H-matrices.
#[derive(Debug, Clone)]
pub struct HSystem {
    pub lhs: HMatrix,
    pub rhs: Option<HMatrix>,
    pub known: Vec<f64>,
    pub unknowns: Vec<Dof>,
    pub knowns: Vec<Dof>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HSolution {
    pub coefficients: Vec<Vec2>,
    pub iterations: usize,
    pub residuals: Vec<f64>,
}

fn check_source(source: &OperatorSource) -> Result<()> {
    match source.take_error() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

impl HSystem {
    /// The row tree is built on the collocation points; the unknown
    /// columns reuse its partition so that diagonal blocks stay square.
    pub fn build(disc: &Discretisation, cfg: &HConfig) -> Result<Self> {
        let layout = disc.layout();
        let rows = ClusterTree::build(&disc.row_boxes(), cfg.n_min);
        let lhs_cols = rows.rebox(&disc.column_boxes(&layout.unknowns)?);
        let lhs_tree = BlockTree::build(&rows, &lhs_cols, cfg.eta, Subdivision::Balanced);
        let source = OperatorSource::new(disc, layout.unknowns.clone(), Side::Lhs)?;
        let lhs = HMatrix::build(&source, &lhs_tree, &rows, &lhs_cols, cfg.eps_h);
        check_source(&source)?;
        let rhs = if layout.knowns.is_empty() {
            None
        } else {
            let cols = ClusterTree::build(&disc.column_boxes(&layout.knowns)?, cfg.n_min);
            let tree = BlockTree::build(&rows, &cols, cfg.eta, Subdivision::Stall);
            let source = OperatorSource::new(disc, layout.knowns.clone(), Side::Rhs)?;
            let m = HMatrix::build(&source, &tree, &rows, &cols, cfg.eps_h);
            check_source(&source)?;
            Some(m)
        };
        Ok(Self {
            lhs,
            rhs,
            known: to_direction_major(&layout.known_values),
            unknowns: layout.unknowns.clone(),
            knowns: layout.knowns.clone(),
        })
    }

    pub fn rhs_vector(&self) -> Result<Vec<f64>> {
        match &self.rhs {
            Some(r) => Ok(r.matvec(&self.known)?),
            None => Ok(vec![0.0; self.lhs.nrows()]),
        }
    }

    /// GMRES on the left-hand side, optionally preconditioned by an H-LU
    /// factorisation truncated at `eps_lu`.
    pub fn solve(&self, cfg: &HConfig, precondition: bool) -> Result<HSolution> {
        let b = self.rhs_vector()?;
        let lu = if precondition {
            Some(HLu::new(self.lhs.clone(), cfg.eps_lu)?)
        } else {
            None
        };
        let sol = gmres(
            &self.lhs,
            lu.as_ref().map(|l| l as &dyn LinearOperator),
            &b,
            GmresConfig {
                tol: cfg.eps_s,
                max_iter: cfg.max_iter,
            },
        )?;
        Ok(HSolution {
            coefficients: from_direction_major(&sol.x),
            iterations: sol.iterations,
            residuals: sol.residuals,
        })
    }

    pub fn storage_bytes(&self) -> usize {
        self.lhs.storage_bytes() + self.rhs.as_ref().map_or(0, |r| r.storage_bytes())
    }

    pub fn dense_bytes(&self) -> usize {
        self.lhs.dense_bytes() + self.rhs.as_ref().map_or(0, |r| r.dense_bytes())
    }
}

/// Storage of one system matrix and its compression ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageReport {
    pub dense_bytes: usize,
    pub actual_bytes: usize,
    pub c_sub: f64,
    pub c_h: f64,
    pub c_tot: f64,
}

/// `c_H = S(M) / S(M_H)` and `c_tot = c_H · c_sub`.
pub fn compression_report(dense_bytes: usize, actual_bytes: usize, c_sub: f64) -> Result<StorageReport> {
    if actual_bytes == 0 {
        return Err(BemError::Domain("actual storage is zero".into()));
    }
    let c_h = dense_bytes as f64 / actual_bytes as f64;
    Ok(StorageReport {
        dense_bytes,
        actual_bytes,
        c_sub,
        c_h,
        c_tot: c_h * c_sub,
    })
}

/// Ratio of right-hand side storage between a layout whose known data are
/// refined with the unknowns and the subparametric one. Both have the same
/// rows and omit homogeneous data, so the ratio is that of known counts.
pub fn c_sub(sub: &Layout, iso: &Layout) -> f64 {
    if sub.knowns.is_empty() {
        1.0
    } else {
        iso.knowns.len() as f64 / sub.knowns.len() as f64
    }
}
