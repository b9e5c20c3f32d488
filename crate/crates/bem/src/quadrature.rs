//! Gauss–Legendre rules, order-escalating integration and the splitting of
//! an element around (nearly) singular points.

use std::sync::OnceLock;

use crate::{BemError, Result, Vec2};

/// Largest cached rule.
pub const MAX_RULE: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    fn compute(g: usize) -> Self {
        let mut nodes = vec![0.0; g];
        let mut weights = vec![0.0; g];
        let n = g as f64;
        for i in 0..g.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(g, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(g, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[g - 1 - i] = x;
            weights[i] = w;
            weights[g - 1 - i] = w;
        }
        if g % 2 == 1 {
            nodes[g / 2] = 0.0;
        }
        Self { nodes, weights }
    }
}

/// `P_g(x)` and its derivative by the three-term recurrence.
fn legendre(g: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if g == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=g {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = g as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

/// The `g`-point rule on (−1, 1). Rules are built once for every order up to
/// [`MAX_RULE`] on first use.
///
/// # Panics
/// If `g == 0` or `g > MAX_RULE`.
pub fn gauss_rule(g: usize) -> &'static GaussRule {
    static RULES: OnceLock<Vec<GaussRule>> = OnceLock::new();
    assert!((1..=MAX_RULE).contains(&g), "no Gauss rule with {g} points");
    &RULES.get_or_init(|| (1..=MAX_RULE).map(GaussRule::compute).collect())[g - 1]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub eps_q: f64,
    pub g0: usize,
    pub g_step: usize,
    pub g_max: usize,
    /// Regions are bisected while `diam > near_factor · dist`.
    pub near_factor: f64,
    /// Bisections toward a singular point before the graded innermost piece.
    pub singular_levels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            eps_q: 1e-9,
            g0: 4,
            g_step: 2,
            g_max: 64,
            near_factor: 1.0,
            singular_levels: 24,
        }
    }
}

impl QuadratureConfig {
    pub fn with_eps(eps_q: f64) -> Self {
        Self {
            eps_q,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BemError::QuadratureConfig(m));
        if !(self.eps_q > 0.0 && self.eps_q < 1.0) {
            return bad(format!("eps_Q = {} outside (0, 1)", self.eps_q));
        }
        if !(self.g0 >= 1 && self.g0 < self.g_max && self.g_max <= MAX_RULE) {
            return bad(format!("need 1 ≤ G0 < G_max ≤ {MAX_RULE}"));
        }
        if self.g_step == 0 {
            return bad("G_step must be positive".into());
        }
        if !(self.near_factor > 0.0) {
            return bad("near-singular factor must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    Regular,
    NearlySingular,
    Singular,
}

/// End of a region at which the integrand is singular.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularEnd {
    Start,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationRegion {
    pub patch: usize,
    pub a: f64,
    pub b: f64,
    pub kind: RegionKind,
    /// Quadratic grading toward this end, set on the pieces touching a
    /// singular point.
    pub graded: Option<SingularEnd>,
}

impl IntegrationRegion {
    pub fn regular(patch: usize, a: f64, b: f64) -> Self {
        Self {
            patch,
            a,
            b,
            kind: RegionKind::Regular,
            graded: None,
        }
    }

    /// Parameter and `du/dξ` for `ξ ∈ (−1, 1)`.
    #[inline]
    pub fn map(&self, xi: f64) -> (f64, f64) {
        let len = self.b - self.a;
        match self.graded {
            None => (self.a + 0.5 * len * (xi + 1.0), 0.5 * len),
            Some(end) => {
                let eta = 0.5 * (xi + 1.0);
                let s = len * eta * eta;
                let u = match end {
                    SingularEnd::Start => self.a + s,
                    SingularEnd::End => self.b - s,
                };
                (u, len * eta)
            }
        }
    }
}

/// Converged value and the work spent on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub value: Vec<f64>,
    pub order: usize,
    pub evaluations: usize,
}

fn apply_rule<F: FnMut(f64, &mut [f64])>(
    f: &mut F,
    region: &IntegrationRegion,
    g: usize,
    sum: &mut [f64],
    abs: &mut [f64],
    scratch: &mut [f64],
) {
    sum.fill(0.0);
    abs.fill(0.0);
    let rule = gauss_rule(g);
    for (&xi, &w) in rule.nodes.iter().zip(&rule.weights) {
        let (u, du) = region.map(xi);
        f(u, scratch);
        let w = w * du;
        for ((s, a), v) in sum.iter_mut().zip(abs.iter_mut()).zip(scratch.iter()) {
            *s += w * v;
            *a += (w * v).abs();
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Integrates the vector-valued `f` (it writes `len` values for a parameter
/// `u`) over `region` with orders `G0, G0 + step, …` until two successive
/// results agree to `eps_Q` relative to the newer one. Differences at the
/// level of summation round-off are accepted as converged.
pub fn integrate_adaptive<F: FnMut(f64, &mut [f64])>(
    f: F,
    region: &IntegrationRegion,
    len: usize,
    config: &QuadratureConfig,
) -> Result<Quadrature> {
    integrate_with_floor(f, region, len, config, 0.0)
}

/// As [`integrate_adaptive`], but changes below `floor` in norm also count as
/// converged; used when the region is one piece of a larger integral.
pub fn integrate_with_floor<F: FnMut(f64, &mut [f64])>(
    mut f: F,
    region: &IntegrationRegion,
    len: usize,
    config: &QuadratureConfig,
    floor: f64,
) -> Result<Quadrature> {
    let mut scratch = vec![0.0; len];
    let mut abs = vec![0.0; len];
    let mut prev = vec![0.0; len];
    let mut cur = vec![0.0; len];
    let mut g = config.g0;
    apply_rule(&mut f, region, g, &mut prev, &mut abs, &mut scratch);
    let mut evaluations = g;
    let mut change = f64::INFINITY;
    while g + config.g_step <= config.g_max {
        g += config.g_step;
        apply_rule(&mut f, region, g, &mut cur, &mut abs, &mut scratch);
        evaluations += g;
        let diff = prev
            .iter()
            .zip(&cur)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let size = norm(&cur);
        change = if size > 0.0 { diff / size } else { diff };
        if diff <= config.eps_q * size || diff <= floor || diff <= 64.0 * f64::EPSILON * norm(&abs) {
            return Ok(Quadrature {
                value: cur,
                order: g,
                evaluations,
            });
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Err(BemError::Quadrature {
        order: g,
        change,
        best: prev,
    })
}

const MAX_NEAR_DEPTH: usize = 48;

/// Splits the element `[a, b]` of `patch` for integration against the
/// collocation point `x`. `singular` is the pre-image of `x` when it lies in
/// the closed element; `point` maps parameters to the curve.
pub fn classify_and_subdivide<P: Fn(f64) -> Vec2>(
    patch: usize,
    a: f64,
    b: f64,
    x: Vec2,
    singular: Option<f64>,
    point: &P,
    config: &QuadratureConfig,
) -> Vec<IntegrationRegion> {
    let mut out = Vec::new();
    match singular {
        None => near_split(patch, a, b, x, point, config, 0, &mut out),
        Some(u0) => {
            let u0 = u0.clamp(a, b);
            if u0 > a {
                let mut lo = a;
                for _ in 0..config.singular_levels {
                    let mid = 0.5 * (lo + u0);
                    if !(mid > lo && mid < u0) {
                        break;
                    }
                    near_split(patch, lo, mid, x, point, config, 1, &mut out);
                    lo = mid;
                }
                out.push(IntegrationRegion {
                    patch,
                    a: lo,
                    b: u0,
                    kind: RegionKind::Singular,
                    graded: Some(SingularEnd::End),
                });
            }
            if b > u0 {
                let mut inner = Vec::new();
                let mut hi = b;
                for _ in 0..config.singular_levels {
                    let mid = 0.5 * (u0 + hi);
                    if !(mid > u0 && mid < hi) {
                        break;
                    }
                    let mut piece = Vec::new();
                    near_split(patch, mid, hi, x, point, config, 1, &mut piece);
                    inner.push(piece);
                    hi = mid;
                }
                out.push(IntegrationRegion {
                    patch,
                    a: u0,
                    b: hi,
                    kind: RegionKind::Singular,
                    graded: Some(SingularEnd::Start),
                });
                // Keep ascending parameter order.
                for piece in inner.into_iter().rev() {
                    out.extend(piece);
                }
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn near_split<P: Fn(f64) -> Vec2>(
    patch: usize,
    a: f64,
    b: f64,
    x: Vec2,
    point: &P,
    config: &QuadratureConfig,
    depth: usize,
    out: &mut Vec<IntegrationRegion>,
) {
    let m = 0.5 * (a + b);
    let (pa, pm, pb) = (point(a), point(m), point(b));
    let diam = (pa - pb).norm().max((pa - pm).norm()).max((pm - pb).norm());
    let dist = (pa - x).norm().min((pm - x).norm()).min((pb - x).norm());
    if diam > config.near_factor * dist && depth < MAX_NEAR_DEPTH && m > a && m < b {
        near_split(patch, a, m, x, point, config, depth + 1, out);
        near_split(patch, m, b, x, point, config, depth + 1, out);
    } else {
        out.push(IntegrationRegion {
            patch,
            a,
            b,
            kind: if depth == 0 {
                RegionKind::Regular
            } else {
                RegionKind::NearlySingular
            },
            graded: None,
        });
    }
}

/// Integral over the union of `regions`, to `eps_Q` relative to the whole.
/// A first pass with the `G0` rule estimates `∫|f|` over the union; a piece
/// is accepted once its change falls below `eps_Q` times that size over
/// `√regions`, which keeps tiny pieces next to a singularity from chasing
/// round-off.
pub fn integrate_regions<F: FnMut(f64, &mut [f64])>(
    mut f: F,
    regions: &[IntegrationRegion],
    len: usize,
    config: &QuadratureConfig,
) -> Result<Vec<f64>> {
    let mut total = vec![0.0; len];
    let floor = if regions.len() > 1 {
        let (mut sum, mut abs, mut scratch) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
        let mut estimate = vec![0.0; len];
        for r in regions {
            apply_rule(&mut f, r, config.g0, &mut sum, &mut abs, &mut scratch);
            for (e, v) in estimate.iter_mut().zip(&abs) {
                *e += v;
            }
        }
        config.eps_q * norm(&estimate) / (regions.len() as f64).sqrt()
    } else {
        0.0
    };
    for r in regions {
        let q = integrate_with_floor(&mut f, r, len, config, floor)?;
        for (t, v) in total.iter_mut().zip(&q.value) {
            *t += v;
        }
    }
    Ok(total)
}
