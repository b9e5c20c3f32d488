use std::ops::Range;

use crate::ops::{NoTally, Tally};
use crate::{KnotVector, NurbsError, Result};

/// Largest supported number of non-zero functions per span (order + 1).
pub const MAX_ORDER: usize = 16;

/// Non-zero basis functions at one parameter.
#[derive(Debug, Clone, Copy)]
pub struct BasisValues {
    pub span: usize,
    pub degree: usize,
    values: [f64; MAX_ORDER],
    derivs: [f64; MAX_ORDER],
}

impl BasisValues {
    /// Global index of the first non-zero function.
    pub fn first(&self) -> usize {
        self.span - self.degree
    }

    pub fn indices(&self) -> Range<usize> {
        self.first()..self.span + 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values[..=self.degree]
    }

    pub fn derivs(&self) -> &[f64] {
        &self.derivs[..=self.degree]
    }

    /// Value of global function `i` (zero outside the non-zero range).
    pub fn value_of(&self, i: usize) -> f64 {
        if self.indices().contains(&i) {
            self.values[i - self.first()]
        } else {
            0.0
        }
    }
}

/// Cox-de Boor triangle up to order `q` on `span`. Writes `q + 1` values.
/// When `last_level` is given, the quotients of the final level are kept:
/// `last_level[r] = N_{r,q-1} / (ξ_{k+q} - ξ_k)` for the lower-order function `r`.
#[inline]
fn triangle<T: Tally>(
    k: &[f64],
    q: usize,
    span: usize,
    u: f64,
    n: &mut [f64; MAX_ORDER],
    mut last_level: Option<&mut [f64; MAX_ORDER]>,
    t: &mut T,
) {
    let mut left = [0.0; MAX_ORDER];
    let mut right = [0.0; MAX_ORDER];
    n[0] = 1.0;
    for j in 1..=q {
        left[j] = u - k[span + 1 - j];
        right[j] = k[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = n[r] / (right[r + 1] + left[j - r]);
            if j == q {
                if let Some(l) = last_level.as_deref_mut() {
                    l[r] = temp;
                }
            }
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
            t.add(3);
        }
        n[j] = saved;
    }
}

/// Values and first derivatives of the `p + 1` B-splines non-zero on `span`.
#[inline]
pub(crate) fn values_and_derivs<T: Tally>(
    kv: &KnotVector,
    span: usize,
    u: f64,
    vals: &mut [f64; MAX_ORDER],
    ders: &mut [f64; MAX_ORDER],
    t: &mut T,
) {
    let p = kv.degree();
    let mut quot = [0.0; MAX_ORDER];
    triangle(kv.knots(), p, span, u, vals, Some(&mut quot), t);
    let pf = p as f64;
    for a in 0..=p {
        let lower = if a > 0 { quot[a - 1] } else { 0.0 };
        let upper = if a < p { quot[a] } else { 0.0 };
        ders[a] = pf * (lower - upper);
    }
    t.add(p as u64 + 1);
}

/// Values only.
#[inline]
pub(crate) fn values_only<T: Tally>(kv: &KnotVector, span: usize, u: f64, vals: &mut [f64; MAX_ORDER], t: &mut T) {
    triangle(kv.knots(), kv.degree(), span, u, vals, None, t);
}

/// First derivatives only, from the order `p - 1` triangle.
#[inline]
pub(crate) fn derivs_only<T: Tally>(kv: &KnotVector, span: usize, u: f64, ders: &mut [f64; MAX_ORDER], t: &mut T) {
    let p = kv.degree();
    let k = kv.knots();
    let mut lower = [0.0; MAX_ORDER];
    triangle(k, p - 1, span, u, &mut lower, None, t);
    lower[p] = 0.0;
    let pf = p as f64;
    let mut scaled = [0.0; MAX_ORDER];
    for r in 0..=p {
        let width = k[span + r + 1] - k[span + r + 1 - p];
        let width = if width > 0.0 { width } else { 1.0 };
        scaled[r] = pf * (lower[r] / width);
        t.add(2);
    }
    for a in 0..=p {
        let prev = if a > 0 { scaled[a - 1] } else { 0.0 };
        ders[a] = prev - scaled[a];
    }
}

/// Rational values `R = N w / W` from B-spline values.
#[inline]
pub(crate) fn rational_values<T: Tally>(w: &[f64], first: usize, p: usize, vals: &mut [f64; MAX_ORDER], t: &mut T) {
    let mut total = 0.0;
    for a in 0..=p {
        vals[a] *= w[first + a];
        total += vals[a];
    }
    for v in vals.iter_mut().take(p + 1) {
        *v /= total;
    }
    t.add(2 * (p as u64 + 1));
}

/// Rational derivatives `R' = (N' w - N w β) / W` with `β = W'/W`; values
/// are overwritten by `R` only when `want_values` is set.
#[inline]
pub(crate) fn rational_derivs<T: Tally>(
    w: &[f64],
    first: usize,
    p: usize,
    vals: &mut [f64; MAX_ORDER],
    ders: &mut [f64; MAX_ORDER],
    want_values: bool,
    t: &mut T,
) {
    let (mut total, mut dtotal) = (0.0, 0.0);
    for a in 0..=p {
        vals[a] *= w[first + a];
        ders[a] *= w[first + a];
        total += vals[a];
        dtotal += ders[a];
    }
    t.add(2 * (p as u64 + 1));
    let beta = dtotal / total;
    t.add(1);
    for a in 0..=p {
        ders[a] = (ders[a] - vals[a] * beta) / total;
    }
    t.add(2 * (p as u64 + 1));
    if want_values {
        for v in vals.iter_mut().take(p + 1) {
            *v /= total;
        }
    }
}

/// B-spline basis with per-function positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct NurbsBasis {
    knots: KnotVector,
    weights: Vec<f64>,
    uniform: bool,
}

impl NurbsBasis {
    pub fn new(knots: KnotVector, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != knots.num_basis() {
            return Err(NurbsError::InvalidWeights(format!(
                "{} weights for {} functions",
                weights.len(),
                knots.num_basis()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(NurbsError::InvalidWeights("weights must be positive".into()));
        }
        let uniform = weights.iter().all(|&w| w == weights[0]);
        Ok(Self {
            knots,
            weights,
            uniform,
        })
    }

    /// Polynomial basis (all weights one).
    pub fn bspline(knots: KnotVector) -> Self {
        let n = knots.num_basis();
        Self {
            knots,
            weights: vec![1.0; n],
            uniform: true,
        }
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degree(&self) -> usize {
        self.knots.degree()
    }

    pub fn count(&self) -> usize {
        self.weights.len()
    }

    pub fn is_rational(&self) -> bool {
        !self.uniform
    }

    /// Polynomial B-spline values and derivatives, ignoring the weights.
    pub fn eval_bspline(&self, u: f64) -> Result<BasisValues> {
        let span = self.knots.find_span(u)?;
        Ok(self.bspline_in_span(span, u))
    }

    /// Rational values and derivatives.
    pub fn eval_nurbs(&self, u: f64) -> Result<BasisValues> {
        let span = self.knots.find_span(u)?;
        Ok(self.eval_in_span(span, u))
    }

    pub(crate) fn bspline_in_span(&self, span: usize, u: f64) -> BasisValues {
        let mut out = BasisValues {
            span,
            degree: self.degree(),
            values: [0.0; MAX_ORDER],
            derivs: [0.0; MAX_ORDER],
        };
        values_and_derivs(&self.knots, span, u, &mut out.values, &mut out.derivs, &mut NoTally);
        out
    }

    /// Rational values and derivatives on a known span (no domain check).
    pub fn eval_in_span(&self, span: usize, u: f64) -> BasisValues {
        let mut out = self.bspline_in_span(span, u);
        if !self.uniform {
            let p = self.degree();
            rational_derivs(
                &self.weights,
                span - p,
                p,
                &mut out.values,
                &mut out.derivs,
                true,
                &mut NoTally,
            );
        }
        out
    }

    /// Rational values only on a known span; derivatives are left zero.
    pub fn values_in_span(&self, span: usize, u: f64) -> BasisValues {
        let p = self.degree();
        let mut out = BasisValues {
            span,
            degree: p,
            values: [0.0; MAX_ORDER],
            derivs: [0.0; MAX_ORDER],
        };
        values_only(&self.knots, span, u, &mut out.values, &mut NoTally);
        if !self.uniform {
            rational_values(&self.weights, span - p, p, &mut out.values, &mut NoTally);
        }
        out
    }

    /// Value of the single rational function `i` at `u`.
    pub fn value(&self, i: usize, u: f64) -> Result<f64> {
        Ok(self.eval_nurbs(u)?.value_of(i))
    }

    /// Value of function `i` evaluated with the polynomial piece of `span`,
    /// i.e. the one-sided limit when `u` sits on a span end.
    pub fn value_from_span(&self, i: usize, span: usize, u: f64) -> f64 {
        self.values_in_span(span, u).value_of(i)
    }
}
