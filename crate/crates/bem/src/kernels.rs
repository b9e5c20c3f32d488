//! Plane-strain Kelvin solutions.
//!
//! `U[i][j]` is the displacement in direction `j` at `y` caused by a unit
//! point force in direction `i` at `x`; `T[i][j]` is the matching traction
//! on a surface through `y` with normal `n`. Both depend on `y - x` only.

use std::f64::consts::PI;

use nalgebra::Matrix2;

use crate::{BemError, Result, Vec2};

pub type Mat2 = Matrix2<f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub lame_lambda: f64,
    pub lame_mu: f64,
}

impl Material {
    pub fn new(youngs_modulus: f64, poisson_ratio: f64) -> Result<Self> {
        if !(youngs_modulus > 0.0 && youngs_modulus.is_finite()) {
            return Err(BemError::Material(format!("E = {youngs_modulus}")));
        }
        if !(poisson_ratio > -1.0 && poisson_ratio < 0.5) {
            return Err(BemError::Material(format!("ν = {poisson_ratio} outside (-1, 0.5)")));
        }
        let (e, nu) = (youngs_modulus, poisson_ratio);
        Ok(Self {
            youngs_modulus: e,
            poisson_ratio: nu,
            lame_lambda: e * nu / ((1.0 - 2.0 * nu) * (1.0 + nu)),
            lame_mu: e / (2.0 * (1.0 + nu)),
        })
    }

    /// Rock mass used by the tunnel studies: E = 10000, ν = 0.25.
    pub fn rock() -> Self {
        Self::new(10_000.0, 0.25).expect("valid constants")
    }

    pub(crate) fn consts(&self) -> KernelConsts {
        let nu = self.poisson_ratio;
        KernelConsts {
            cu: 1.0 / (8.0 * PI * self.lame_mu * (1.0 - nu)),
            a: 3.0 - 4.0 * nu,
            ct: -1.0 / (4.0 * PI * (1.0 - nu)),
            b: 1.0 - 2.0 * nu,
        }
    }
}

/// Precomputed factors for the inner quadrature loops.
#[derive(Debug, Clone, Copy)]
pub(crate) struct KernelConsts {
    cu: f64,
    a: f64,
    ct: f64,
    b: f64,
}

impl KernelConsts {
    /// `U` for `d = y - x ≠ 0`, row-major.
    #[inline]
    pub fn u(&self, d: Vec2) -> [f64; 4] {
        let r2 = d.norm_squared();
        let r = r2.sqrt();
        let (r1, r2_) = (d.x / r, d.y / r);
        let diag = self.a * (-r.ln());
        [
            self.cu * (diag + r1 * r1),
            self.cu * r1 * r2_,
            self.cu * r1 * r2_,
            self.cu * (diag + r2_ * r2_),
        ]
    }

    /// `T` for `d = y - x ≠ 0` and unit normal `n` at `y`, row-major.
    #[inline]
    pub fn t(&self, d: Vec2, n: Vec2) -> [f64; 4] {
        let r = d.norm();
        let g = [d.x / r, d.y / r];
        let nn = [n.x, n.y];
        let drdn = g[0] * n.x + g[1] * n.y;
        let f = self.ct / r;
        let mut out = [0.0; 4];
        for i in 0..2 {
            for j in 0..2 {
                let delta = if i == j { 1.0 } else { 0.0 };
                out[2 * i + j] =
                    f * (drdn * (self.b * delta + 2.0 * g[i] * g[j]) - self.b * (g[i] * nn[j] - g[j] * nn[i]));
            }
        }
        out
    }
}

fn to_mat(v: [f64; 4]) -> Mat2 {
    Mat2::new(v[0], v[1], v[2], v[3])
}

pub fn kelvin_u(material: &Material, x: Vec2, y: Vec2) -> Result<Mat2> {
    let d = y - x;
    if d.norm() == 0.0 {
        return Err(BemError::Singular);
    }
    Ok(to_mat(material.consts().u(d)))
}

pub fn kelvin_t(material: &Material, x: Vec2, y: Vec2, n: Vec2) -> Result<Mat2> {
    let d = y - x;
    if d.norm() == 0.0 {
        return Err(BemError::Singular);
    }
    let len = n.norm();
    if (len - 1.0).abs() > 1e-12 {
        return Err(BemError::NonUnitNormal(len));
    }
    Ok(to_mat(material.consts().t(d, n)))
}

/// Free term at a point where the boundary is smooth.
pub fn free_term_smooth() -> Mat2 {
    Mat2::identity() * 0.5
}
