use nalgebra::DMatrix;

use crate::anchors::{greville_anchors, EndKind};
use crate::basis::{derivs_only, rational_derivs, rational_values, values_and_derivs, values_only, MAX_ORDER};
use crate::ops::{OpKind, Tally};
use crate::{KnotVector, NurbsBasis, NurbsError, Result, Vec2};

/// Planar NURBS curve `χ(u) = Σ R_k(u) c_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NurbsCurve {
    basis: NurbsBasis,
    points: Vec<Vec2>,
}

/// Point, tangent and length element of a curve at one parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub point: Vec2,
    pub tangent: Vec2,
    pub jacobian: f64,
}

impl CurvePoint {
    /// Unit normal obtained by turning the tangent clockwise; it points out of
    /// the region enclosed by a counter-clockwise curve.
    pub fn normal(&self) -> Vec2 {
        Vec2::new(self.tangent.y, -self.tangent.x) / self.jacobian
    }
}

impl NurbsCurve {
    pub fn new(basis: NurbsBasis, points: Vec<Vec2>) -> Result<Self> {
        if points.len() != basis.count() {
            return Err(NurbsError::CountMismatch {
                points: points.len(),
                basis: basis.count(),
            });
        }
        if points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(NurbsError::InvalidKnots("non-finite control point".into()));
        }
        Ok(Self { basis, points })
    }

    /// Straight segment of order 1 from `a` to `b` on `[0, 1]`.
    pub fn line(a: Vec2, b: Vec2) -> Self {
        let kv = KnotVector::new(vec![0.0, 0.0, 1.0, 1.0], 1).expect("static knots");
        Self {
            basis: NurbsBasis::bspline(kv),
            points: vec![a, b],
        }
    }

    /// Exact rational quadratic arc around `center`, counter-clockwise from
    /// angle `start` by `sweep` (< π) radians, on `[0, 1]`.
    pub fn arc(center: Vec2, radius: f64, start: f64, sweep: f64) -> Result<Self> {
        if !(sweep > 0.0 && sweep < std::f64::consts::PI) {
            return Err(NurbsError::InvalidKnots(format!(
                "a single rational quadratic arc needs 0 < sweep < π, got {sweep}"
            )));
        }
        let half = 0.5 * sweep;
        let dir = |a: f64| Vec2::new(a.cos(), a.sin());
        let p0 = center + radius * dir(start);
        let p2 = center + radius * dir(start + sweep);
        let p1 = center + (radius / half.cos()) * dir(start + half);
        let kv = KnotVector::new(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0], 2)?;
        let basis = NurbsBasis::new(kv, vec![1.0, half.cos(), 1.0])?;
        Self::new(basis, vec![p0, p1, p2])
    }

    pub fn basis(&self) -> &NurbsBasis {
        &self.basis
    }

    pub fn knots(&self) -> &KnotVector {
        self.basis.knots()
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        self.basis.weights()
    }

    pub fn domain(&self) -> (f64, f64) {
        self.knots().domain()
    }

    pub fn start(&self) -> Vec2 {
        self.points[0]
    }

    pub fn end(&self) -> Vec2 {
        self.points[self.points.len() - 1]
    }

    pub fn eval(&self, u: f64) -> Result<CurvePoint> {
        let span = self.knots().find_span(u)?;
        Ok(self.eval_in_span(span, u))
    }

    /// Evaluation on a known span (no domain check).
    #[inline]
    pub fn eval_in_span(&self, span: usize, u: f64) -> CurvePoint {
        let b = self.basis.eval_in_span(span, u);
        let first = b.first();
        let mut point = Vec2::zeros();
        let mut tangent = Vec2::zeros();
        for (a, (&r, &dr)) in b.values().iter().zip(b.derivs()).enumerate() {
            point += r * self.points[first + a];
            tangent += dr * self.points[first + a];
        }
        CurvePoint {
            point,
            tangent,
            jacobian: tangent.norm(),
        }
    }

    pub fn point(&self, u: f64) -> Result<Vec2> {
        Ok(self.eval(u)?.point)
    }

    /// Point or tangent through the instrumented path. B-spline kinds ignore
    /// the weights.
    pub fn eval_counted<T: Tally>(&self, kind: OpKind, u: f64, tally: &mut T) -> Result<Vec2> {
        let kv = self.knots();
        let span = kv.find_span(u)?;
        let p = kv.degree();
        let first = span - p;
        let w = self.basis.weights();
        let mut vals = [0.0; MAX_ORDER];
        let mut ders = [0.0; MAX_ORDER];
        let coeffs = match kind {
            OpKind::BsplinePoint => {
                values_only(kv, span, u, &mut vals, tally);
                vals
            }
            OpKind::BsplineTangent => {
                derivs_only(kv, span, u, &mut ders, tally);
                ders
            }
            OpKind::NurbsPoint => {
                values_only(kv, span, u, &mut vals, tally);
                rational_values(w, first, p, &mut vals, tally);
                vals
            }
            OpKind::NurbsTangent => {
                values_and_derivs(kv, span, u, &mut vals, &mut ders, tally);
                rational_derivs(w, first, p, &mut vals, &mut ders, false, tally);
                ders
            }
        };
        let mut out = Vec2::zeros();
        for a in 0..=p {
            out += coeffs[a] * self.points[first + a];
        }
        tally.add(p as u64 + 1);
        Ok(out)
    }

    fn homogeneous(&self) -> Vec<[f64; 3]> {
        self.points
            .iter()
            .zip(self.weights())
            .map(|(c, &w)| [w * c.x, w * c.y, w])
            .collect()
    }

    fn from_homogeneous(knots: KnotVector, pw: &[[f64; 3]]) -> Result<Self> {
        let weights: Vec<f64> = pw.iter().map(|q| q[2]).collect();
        let points = pw.iter().map(|q| Vec2::new(q[0] / q[2], q[1] / q[2])).collect();
        Self::new(NurbsBasis::new(knots, weights)?, points)
    }

    /// Single knot insertion; the curve is unchanged.
    pub fn insert_knot(&self, u: f64) -> Result<Self> {
        let kv = self.knots();
        let new_kv = kv.with_inserted(u)?;
        if kv.crowds(u) {
            return Err(NurbsError::InvalidKnots(format!(
                "knot {u} closer than the separation tolerance to an existing knot"
            )));
        }
        let p = kv.degree();
        let k = kv.knots();
        let s = kv.find_span(u)?;
        let old = self.homogeneous();
        let mut new = Vec::with_capacity(old.len() + 1);
        for i in 0..=old.len() {
            let q = if i + p <= s {
                old[i]
            } else if i > s {
                old[i - 1]
            } else {
                let alpha = (u - k[i]) / (k[i + p] - k[i]);
                let mut q = [0.0; 3];
                for c in 0..3 {
                    q[c] = alpha * old[i][c] + (1.0 - alpha) * old[i - 1][c];
                }
                q
            };
            new.push(q);
        }
        Self::from_homogeneous(new_kv, &new)
    }

    /// Raises the order by one; every distinct knot gains one multiplicity.
    pub fn elevate(&self) -> Result<Self> {
        let target = self.knots().elevated();
        if target.degree() + 1 > MAX_ORDER {
            return Err(NurbsError::OrderTooHigh(target.degree()));
        }
        // The homogeneous curve is a piecewise polynomial that lies in the
        // elevated space, so interpolation at distinct anchors recovers it.
        let anchors = greville_anchors(&target, EndKind::Continuous)?.anchors;
        let poly = NurbsBasis::bspline(target.clone());
        let n = target.num_basis();
        let mut a = DMatrix::zeros(n, n);
        let mut rhs = DMatrix::zeros(n, 3);
        let old = self.homogeneous();
        for (row, &u) in anchors.iter().enumerate() {
            let span = target.find_span(u)?;
            let b = poly.bspline_in_span(span, u);
            for (j, v) in b.indices().zip(b.values()) {
                a[(row, j)] = *v;
            }
            let ob = self.basis.bspline_in_span(self.knots().find_span(u)?, u);
            for (j, v) in ob.indices().zip(ob.values()) {
                for c in 0..3 {
                    rhs[(row, c)] += v * old[j][c];
                }
            }
        }
        let lu = a.lu();
        let mut pw = Vec::with_capacity(n);
        let sol = lu
            .solve(&rhs)
            .ok_or_else(|| NurbsError::Singular("elevation interpolation".into()))?;
        for i in 0..n {
            pw.push([sol[(i, 0)], sol[(i, 1)], sol[(i, 2)]]);
        }
        Self::from_homogeneous(target, &pw)
    }

    /// Control-point axis-aligned box `(min, max)`.
    pub fn control_box(&self) -> (Vec2, Vec2) {
        bounding_box(&self.points)
    }
}

pub(crate) fn bounding_box(points: &[Vec2]) -> (Vec2, Vec2) {
    let mut lo = Vec2::repeat(f64::INFINITY);
    let mut hi = Vec2::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

impl NurbsBasis {
    /// Nested basis with `u` inserted; weights follow the rational insertion rule.
    pub fn insert_knot(&self, u: f64) -> Result<Self> {
        Ok(self.weight_curve()?.insert_knot(u)?.basis)
    }

    /// Nested basis of order `p + 1`.
    pub fn elevate(&self) -> Result<Self> {
        Ok(self.weight_curve()?.elevate()?.basis)
    }

    fn weight_curve(&self) -> Result<NurbsCurve> {
        NurbsCurve::new(self.clone(), vec![Vec2::zeros(); self.count()])
    }
}

/// Solve the square system `[R_j(τ_i)] x = rhs` for interpolation at `tau`.
pub fn interpolate(basis: &NurbsBasis, tau: &[f64], rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = basis.count();
    let mut a = DMatrix::zeros(n, n);
    for (row, &u) in tau.iter().enumerate() {
        let b = basis.eval_nurbs(u)?;
        for (j, v) in b.indices().zip(b.values()) {
            a[(row, j)] = *v;
        }
    }
    a.lu()
        .solve(rhs)
        .ok_or_else(|| NurbsError::Singular("interpolation matrix".into()))
}
