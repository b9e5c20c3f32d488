//! Manufactured-solution studies: built-in geometries, test settings, error
//! norms, mesh parameter, rate fitting and per-level reports.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use nurbs::NurbsCurve;

use crate::assembly::Discretisation;
use crate::kernels::Material;
use crate::patches::{
    point_force_field, BcKind, Boundary, Dof, FieldKind, KnownData, Layout, Refinement, SubparametricPatch,
};
use crate::quadrature::{integrate_adaptive, integrate_with_floor, IntegrationRegion, QuadratureConfig};
use crate::system::{c_sub, direction_major, from_direction_major, BlockSystem, HConfig, HSystem};
use crate::{BemError, Result, Vec2};

/// Built-in geometries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryName {
    Circle,
    Tunnel,
}

impl FromStr for GeometryName {
    type Err = BemError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(Self::Circle),
            "tunnel" => Ok(Self::Tunnel),
            other => Err(BemError::Domain(format!(
                "unknown geometry '{other}'; built-in geometries are: circle, tunnel"
            ))),
        }
    }
}

impl GeometryName {
    pub fn curves(self) -> Result<Vec<NurbsCurve>> {
        match self {
            Self::Circle => circle_curves(1.0),
            Self::Tunnel => tunnel_curves(),
        }
    }
}

/// Circle of the given radius around the origin as four quarter arcs.
pub fn circle_curves(radius: f64) -> Result<Vec<NurbsCurve>> {
    (0..4)
        .map(|k| Ok(NurbsCurve::arc(Vec2::zeros(), radius, k as f64 * FRAC_PI_2, FRAC_PI_2)?))
        .collect()
}

/// Axis-aligned square `[0, side]²` as four straight patches.
pub fn square_curves(side: f64) -> Vec<NurbsCurve> {
    let c = [
        Vec2::new(0.0, 0.0),
        Vec2::new(side, 0.0),
        Vec2::new(side, side),
        Vec2::new(0.0, side),
    ];
    (0..4).map(|k| NurbsCurve::line(c[k], c[(k + 1) % 4])).collect()
}

/// Crown, side wall and invert radii of the tunnel profile.
pub const TUNNEL_RADII: [f64; 3] = [4.55, 2.95, 9.45];

/// Circular arc given by center, radius, start angle and sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub center: Vec2,
    pub radius: f64,
    pub start: f64,
    pub sweep: f64,
}

/// Tunnel profile with tangent-continuous joins, counter-clockwise from the
/// invert: invert (`r₃`), right wall (`r₂`), crown in two quarters (`r₁`),
/// left wall (`r₂`).
///
/// The crown is centred at the origin and meets the walls on the x-axis,
/// so the wall centres sit at `(±(r₁ − r₂), 0)`. The invert centre lies on
/// the y-axis at distance `r₃ − r₂` from both wall centres.
pub fn tunnel_arcs() -> [Arc; 5] {
    let [r1, r2, r3] = TUNNEL_RADII;
    let cx = r1 - r2;
    let cos_phi = cx / (r3 - r2);
    let phi = cos_phi.acos();
    let invert_y = (r3 - r2) * phi.sin();
    [
        Arc {
            center: Vec2::new(0.0, invert_y),
            radius: r3,
            start: -PI + phi,
            sweep: PI - 2.0 * phi,
        },
        Arc {
            center: Vec2::new(cx, 0.0),
            radius: r2,
            start: -phi,
            sweep: phi,
        },
        Arc {
            center: Vec2::zeros(),
            radius: r1,
            start: 0.0,
            sweep: FRAC_PI_2,
        },
        Arc {
            center: Vec2::zeros(),
            radius: r1,
            start: FRAC_PI_2,
            sweep: FRAC_PI_2,
        },
        Arc {
            center: Vec2::new(-cx, 0.0),
            radius: r2,
            start: PI,
            sweep: phi,
        },
    ]
}

pub fn tunnel_curves() -> Result<Vec<NurbsCurve>> {
    tunnel_arcs()
        .iter()
        .map(|a| Ok(NurbsCurve::arc(a.center, a.radius, a.start, a.sweep)?))
        .collect()
}

/// Closed boundary with one condition and one data set on every patch.
pub fn uniform_boundary(curves: &[NurbsCurve], bc: BcKind, known: KnownData, complex: bool) -> Result<Boundary> {
    let patches = curves
        .iter()
        .map(|c| SubparametricPatch::new(c.clone(), bc, known.clone(), complex))
        .collect::<Result<Vec<_>>>()?;
    Boundary::new(patches)
}

/// Winding-number test on a fine polygon through the boundary.
pub fn encloses(boundary: &Boundary, x: Vec2) -> Result<bool> {
    const SAMPLES: usize = 256;
    let mut pts = Vec::new();
    for p in boundary.patches() {
        let (a, b) = p.geometry().domain();
        for s in 0..SAMPLES {
            pts.push(p.geometry().point(a + (b - a) * s as f64 / SAMPLES as f64)?);
        }
    }
    let mut winding = 0.0;
    for i in 0..pts.len() {
        let (p, q) = (pts[i] - x, pts[(i + 1) % pts.len()] - x);
        winding += (p.x * q.y - p.y * q.x).atan2(p.dot(&q));
    }
    Ok(winding.abs() > PI)
}

fn arc_length(curve: &NurbsCurve, span: usize, a: f64, b: f64, quad: &QuadratureConfig) -> Result<f64> {
    let q = integrate_adaptive(
        |u, out| out[0] = curve.eval_in_span(span, u).jacobian,
        &IntegrationRegion::regular(0, a, b),
        1,
        quad,
    )?;
    Ok(q.value[0])
}

/// `h = A_max / A`: longest element of the unknown fields over the total
/// boundary length.
pub fn mesh_parameter(boundary: &Boundary, quad: &QuadratureConfig) -> Result<f64> {
    let mut total = 0.0;
    let mut longest = 0.0f64;
    for p in boundary.patches() {
        let geo = p.geometry();
        for (span, a, b) in geo.knots().spans() {
            total += arc_length(geo, span, a, b, quad)?;
        }
        for (_, a, b) in p.basis(p.unknown_kind()).knots().spans() {
            let span = geo.knots().find_span(0.5 * (a + b))?;
            longest = longest.max(arc_length(geo, span, a, b, quad)?);
        }
    }
    Ok(longest / total)
}

/// Least-squares slope of `log e` over `log h` on the last three levels.
pub fn fit_rate(h: &[f64], e: &[f64]) -> Result<f64> {
    if h.len() != e.len() || h.len() < 3 {
        return Err(BemError::Domain(format!(
            "rate fit needs at least 3 levels, got {}",
            h.len().min(e.len())
        )));
    }
    let n = h.len();
    let xs: Vec<f64> = h[n - 3..].iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e[n - 3..].iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / 3.0;
    let my = ys.iter().sum::<f64>() / 3.0;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    /// Single-layer density solved from `V ψ = u`.
    IndirectV,
    /// Double-layer density solved from `(C + K − I) φ = u`.
    IndirectK,
    DirectNeumann,
    DirectDirichlet,
}

impl FromStr for TestKind {
    type Err = BemError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "indirect_v" | "indirect_V" => Ok(Self::IndirectV),
            "indirect_k" | "indirect_K" => Ok(Self::IndirectK),
            "direct_neumann" | "neumann" => Ok(Self::DirectNeumann),
            "direct_dirichlet" | "dirichlet" => Ok(Self::DirectDirichlet),
            other => Err(BemError::Domain(format!(
                "unknown problem '{other}'; expected indirect_v, indirect_k, direct_neumann or direct_dirichlet"
            ))),
        }
    }
}

impl TestKind {
    pub fn is_indirect(self) -> bool {
        matches!(self, Self::IndirectV | Self::IndirectK)
    }

    pub fn bc(self) -> BcKind {
        match self {
            Self::IndirectV | Self::DirectDirichlet => BcKind::Dirichlet,
            Self::IndirectK | Self::DirectNeumann => BcKind::Neumann,
        }
    }
}

/// Point forces generating the exact field, and the points where an
/// indirect solution is checked.
///
/// Indirect settings solve an interior problem: sources lie outside the
/// enclosed region and check points inside. Direct settings solve the
/// exterior problem: sources lie inside the hole.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSetting {
    pub kind: TestKind,
    pub sources: Vec<(Vec2, Vec2)>,
    pub checks: Vec<Vec2>,
}

fn polar(r: f64, a: f64) -> Vec2 {
    Vec2::new(r * a.cos(), r * a.sin())
}

impl TestSetting {
    /// Sources at twice the radius and check points at half the radius of a
    /// circle centred at the origin.
    pub fn circle_indirect(kind: TestKind, radius: f64) -> Self {
        Self {
            kind,
            sources: vec![
                (polar(2.0 * radius, 0.3), Vec2::new(1.0, 0.5)),
                (polar(2.0 * radius, 2.4), Vec2::new(-0.3, 1.0)),
                (polar(2.0 * radius, 4.4), Vec2::new(0.7, -0.8)),
            ],
            checks: (0..8).map(|k| polar(0.5 * radius, 0.2 + k as f64 * PI / 4.0)).collect(),
        }
    }

    /// Interior problem in the tunnel region: sources about one crown
    /// radius outside the profile, check points inside.
    pub fn tunnel_indirect(kind: TestKind) -> Self {
        Self {
            kind,
            sources: vec![
                (Vec2::new(0.5, 9.0), Vec2::new(1.0, 0.5)),
                (Vec2::new(8.5, -2.0), Vec2::new(-0.3, 1.0)),
                (Vec2::new(-8.0, 1.5), Vec2::new(0.7, -0.8)),
            ],
            checks: vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.5, 1.5),
                Vec2::new(-2.0, 2.5),
                Vec2::new(2.0, -1.5),
                Vec2::new(-1.0, -2.0),
                Vec2::new(0.3, 3.0),
            ],
        }
    }

    /// Sources spread inside the tunnel opening.
    pub fn tunnel_direct(kind: TestKind) -> Self {
        Self {
            kind,
            sources: vec![
                (Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.5)),
                (Vec2::new(1.5, -1.0), Vec2::new(-0.3, 1.0)),
                (Vec2::new(-1.5, 0.5), Vec2::new(0.7, -0.8)),
            ],
            checks: Vec::new(),
        }
    }

    /// Sources at half the radius inside a circle centred at the origin.
    pub fn circle_direct(kind: TestKind, radius: f64) -> Self {
        Self {
            kind,
            sources: vec![
                (polar(0.5 * radius, 0.3), Vec2::new(1.0, 0.5)),
                (polar(0.4 * radius, 2.4), Vec2::new(-0.3, 1.0)),
                (polar(0.5 * radius, 4.4), Vec2::new(0.7, -0.8)),
            ],
            checks: Vec::new(),
        }
    }

    /// Default setting of a built-in geometry.
    pub fn builtin(kind: TestKind, geometry: GeometryName) -> Self {
        match (geometry, kind.is_indirect()) {
            (GeometryName::Circle, true) => Self::circle_indirect(kind, 1.0),
            (GeometryName::Circle, false) => Self::circle_direct(kind, 1.0),
            (GeometryName::Tunnel, true) => Self::tunnel_indirect(kind),
            (GeometryName::Tunnel, false) => Self::tunnel_direct(kind),
        }
    }

    /// Boundary carrying the data of this setting.
    pub fn boundary(&self, curves: &[NurbsCurve]) -> Result<Boundary> {
        let known = if self.kind.is_indirect() {
            KnownData::Zero
        } else {
            KnownData::PointForces(self.sources.clone())
        };
        uniform_boundary(curves, self.kind.bc(), known, !self.kind.is_indirect())
    }

    pub fn validate(&self, boundary: &Boundary) -> Result<()> {
        if self.sources.is_empty() {
            return Err(BemError::Domain("test setting without source points".into()));
        }
        let sources_inside = !self.kind.is_indirect();
        for (x, _) in &self.sources {
            if encloses(boundary, *x)? != sources_inside {
                return Err(BemError::Domain(format!(
                    "source point {x:?} lies in the solution domain"
                )));
            }
        }
        for x in &self.checks {
            if !encloses(boundary, *x)? {
                return Err(BemError::Domain(format!(
                    "check point {x:?} lies outside the solution domain"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Dense,
    HMatrix,
}

impl FromStr for Backend {
    type Err = BemError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Self::Dense),
            "hmatrix" => Ok(Self::HMatrix),
            other => Err(BemError::Domain(format!(
                "unknown backend '{other}'; expected dense or hmatrix"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub order: usize,
    /// Refinements applied before the first reported level.
    pub first_level: usize,
    pub levels: usize,
    pub refinement: Refinement,
    pub material: Material,
    pub quadrature: QuadratureConfig,
    pub backend: Backend,
    pub hmatrix: HConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            order: 2,
            first_level: 0,
            levels: 4,
            refinement: Refinement::UniformMidpoint,
            material: Material::rock(),
            quadrature: QuadratureConfig::default(),
            backend: Backend::HMatrix,
            hmatrix: HConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelRecord {
    pub level: usize,
    pub h: f64,
    /// Scalar unknowns.
    pub n: usize,
    /// Scalar known coefficients stored.
    pub m: usize,
    pub e_rel: f64,
    /// Slope against the previous level.
    pub rate: Option<f64>,
    pub c_h: f64,
    pub c_sub: f64,
    pub c_tot: f64,
    pub iterations: Option<usize>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StudyReport {
    pub records: Vec<LevelRecord>,
}

pub const CSV_HEADER: &str = "level,h,n,m,e_rel,rate,c_H,c_sub,c_tot,seconds";

impl StudyReport {
    pub fn h(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.h).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.e_rel).collect()
    }

    /// Rate over the last three levels.
    pub fn fitted_rate(&self) -> Result<f64> {
        fit_rate(&self.h(), &self.errors())
    }

    /// CSV with [`CSV_HEADER`]; wall times only when `timings` is set.
    pub fn to_csv(&self, timings: bool) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let rate = r.rate.map_or(String::new(), |v| format!("{v:.6}"));
            let secs = if timings {
                format!("{:.3}", r.seconds)
            } else {
                String::new()
            };
            writeln!(
                out,
                "{},{:.6e},{},{},{:.6e},{},{:.6},{:.6},{:.6},{}",
                r.level, r.h, r.n, r.m, r.e_rel, rate, r.c_h, r.c_sub, r.c_tot, secs
            )
            .expect("writing to a String");
        }
        out
    }
}

/// Solution of one level in global numbering.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSolution {
    pub displacement: Vec<Vec2>,
    pub traction: Vec<Vec2>,
    pub c_h: f64,
    pub iterations: Option<usize>,
}

/// Solves the system of `disc`. When `rhs` is given it replaces `R g`.
pub fn solve_system(disc: &Discretisation, rhs: Option<Vec<f64>>, cfg: &StudyConfig) -> Result<LevelSolution> {
    let layout = disc.layout();
    let (coeffs, c_h, iterations) = match cfg.backend {
        Backend::Dense => {
            let sys = BlockSystem::build(disc)?;
            let coeffs = match rhs {
                None => sys.solve()?,
                Some(b) => {
                    let x = direction_major(&sys.lhs)
                        .lu()
                        .solve(&nalgebra::DVector::from_vec(b))
                        .ok_or(BemError::SingularSystem)?;
                    from_direction_major(x.as_slice())
                }
            };
            (coeffs, 1.0, None)
        }
        Backend::HMatrix => {
            let mut sys = HSystem::build(disc, &cfg.hmatrix)?;
            if let Some(b) = rhs {
                sys.rhs = None;
                let sol = solve_h_with(&sys, &b, &cfg.hmatrix)?;
                (
                    sol.0,
                    sys.dense_bytes() as f64 / sys.storage_bytes() as f64,
                    Some(sol.1),
                )
            } else {
                let sol = sys.solve(&cfg.hmatrix, true)?;
                (
                    sol.coefficients,
                    sys.dense_bytes() as f64 / sys.storage_bytes() as f64,
                    Some(sol.iterations),
                )
            }
        }
    };
    let (displacement, traction) = scatter(layout, &coeffs);
    Ok(LevelSolution {
        displacement,
        traction,
        c_h,
        iterations,
    })
}

fn solve_h_with(sys: &HSystem, b: &[f64], cfg: &HConfig) -> Result<(Vec<Vec2>, usize)> {
    let lu = hmat::HLu::new(sys.lhs.clone(), cfg.eps_lu)?;
    let sol = hmat::gmres(
        &sys.lhs,
        Some(&lu),
        b,
        hmat::GmresConfig {
            tol: cfg.eps_s,
            max_iter: cfg.max_iter,
        },
    )?;
    Ok((from_direction_major(&sol.x), sol.iterations))
}

/// Unknown coefficients placed at their global indices; known ones are zero.
pub fn scatter(layout: &Layout, coeffs: &[Vec2]) -> (Vec<Vec2>, Vec<Vec2>) {
    let mut disp = vec![Vec2::zeros(); layout.n_displacement()];
    let mut trac = vec![Vec2::zeros(); layout.n_traction()];
    for (dof, c) in layout.unknowns.iter().zip(coeffs) {
        match *dof {
            Dof::Displacement(g) => disp[g] = *c,
            Dof::Traction(t) => trac[t] = *c,
        }
    }
    (disp, trac)
}

/// Relative boundary L² error of the unknown field against the trace of
/// the point forces, integrated at `eps_Q / 10` relative to the reference.
pub fn boundary_l2_error(
    boundary: &Boundary,
    layout: &Layout,
    material: &Material,
    solution: &LevelSolution,
    sources: &[(Vec2, Vec2)],
    quad: &QuadratureConfig,
) -> Result<f64> {
    let fine = QuadratureConfig {
        eps_q: quad.eps_q / 10.0,
        ..*quad
    };
    let mut err = 0.0;
    let mut reference = 0.0;
    for (k, p) in boundary.patches().iter().enumerate() {
        let kind = p.unknown_kind();
        let local: Vec<Vec2> = match kind {
            FieldKind::Displacement => layout.disp_global[k]
                .iter()
                .map(|&g| solution.displacement[g])
                .collect(),
            FieldKind::Traction => layout.trac_global[k].iter().map(|&t| solution.traction[t]).collect(),
        };
        let geo = p.geometry();
        let basis = p.basis(kind);
        for (span, a, b) in basis.knots().spans() {
            let geo_span = geo.knots().find_span(0.5 * (a + b))?;
            let region = IntegrationRegion::regular(k, a, b);
            let exact = |u: f64| {
                let cp = geo.eval_in_span(geo_span, u);
                (cp, point_force_field(material, sources, cp.point, cp.normal(), kind))
            };
            let r = integrate_adaptive(
                |u, out| {
                    let (cp, ex) = exact(u);
                    out[0] = ex.norm_squared() * cp.jacobian;
                },
                &region,
                1,
                &fine,
            )?;
            let e = integrate_with_floor(
                |u, out| {
                    let (cp, ex) = exact(u);
                    let bv = basis.values_in_span(span, u);
                    let uh: Vec2 = bv.indices().zip(bv.values()).map(|(j, v)| *v * local[j]).sum();
                    out[0] = (uh - ex).norm_squared() * cp.jacobian;
                },
                &region,
                1,
                &fine,
                fine.eps_q * r.value[0],
            )?;
            err += e.value[0];
            reference += r.value[0];
        }
    }
    Ok((err / reference).sqrt())
}

/// Max-norm relative error of the layer potential at the check points.
pub fn check_point_error(disc: &Discretisation, solution: &LevelSolution, setting: &TestSetting) -> Result<f64> {
    let material = disc.material();
    let mut err = 0.0f64;
    let mut reference = 0.0f64;
    for &x in &setting.checks {
        let uh = match setting.kind {
            TestKind::IndirectV => disc.potential(x, FieldKind::Traction, &solution.traction)?,
            _ => disc.potential(x, FieldKind::Displacement, &solution.displacement)?,
        };
        let exact = point_force_field(material, &setting.sources, x, Vec2::x(), FieldKind::Displacement);
        err = err.max((uh - exact).norm());
        reference = reference.max(exact.norm());
    }
    Ok(err / reference)
}

/// Boundary of refinement level `level` (counted from the input curves).
pub fn level_boundary(base: &Boundary, cfg: &StudyConfig, level: usize) -> Result<Boundary> {
    let mut b = base.clone().with_order(cfg.order)?;
    for _ in 0..level {
        b.refine(cfg.refinement)?;
    }
    Ok(b)
}

/// One level: assemble, solve and measure.
pub fn run_level(base: &Boundary, setting: &TestSetting, cfg: &StudyConfig, level: usize) -> Result<LevelRecord> {
    let start = Instant::now();
    let boundary = level_boundary(base, cfg, level)?;
    let h = mesh_parameter(&boundary, &cfg.quadrature)?;
    let iso = Layout::new(&boundary.isoparametric_known()?, &cfg.material)?;
    let disc = Discretisation::new(boundary, cfg.material, cfg.quadrature)?;
    let layout = disc.layout();
    let rhs = if setting.kind.is_indirect() {
        let sign = if setting.kind == TestKind::IndirectK { -1.0 } else { 1.0 };
        let u: Vec<Vec2> = layout
            .collocation
            .points
            .iter()
            .map(|p| sign * point_force_field(&cfg.material, &setting.sources, p.x, Vec2::x(), FieldKind::Displacement))
            .collect();
        Some(crate::system::to_direction_major(&u))
    } else {
        None
    };
    let solution = solve_system(&disc, rhs, cfg)?;
    let e_rel = if setting.kind.is_indirect() {
        check_point_error(&disc, &solution, setting)?
    } else {
        boundary_l2_error(
            disc.boundary(),
            layout,
            &cfg.material,
            &solution,
            &setting.sources,
            &cfg.quadrature,
        )?
    };
    let c_sub = c_sub(layout, &iso);
    Ok(LevelRecord {
        level,
        h,
        n: layout.n(),
        m: layout.m(),
        e_rel,
        rate: None,
        c_h: solution.c_h,
        c_sub,
        c_tot: solution.c_h * c_sub,
        iterations: solution.iterations,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs levels `first_level .. first_level + levels` in sequence.
pub fn run_study(curves: &[NurbsCurve], setting: &TestSetting, cfg: &StudyConfig) -> Result<StudyReport> {
    if cfg.levels == 0 {
        return Err(BemError::Domain("a study needs at least one level".into()));
    }
    let base = setting.boundary(curves)?;
    setting.validate(&base)?;
    let mut report = StudyReport::default();
    for level in cfg.first_level..cfg.first_level + cfg.levels {
        let mut rec = run_level(&base, setting, cfg, level)?;
        if let Some(prev) = report.records.last() {
            rec.rate = Some((prev.e_rel / rec.e_rel).ln() / (prev.h / rec.h).ln());
        }
        report.records.push(rec);
    }
    Ok(report)
}

pub fn run_indirect_test(curves: &[NurbsCurve], setting: &TestSetting, cfg: &StudyConfig) -> Result<StudyReport> {
    if !setting.kind.is_indirect() {
        return Err(BemError::Domain("setting is not an indirect test".into()));
    }
    run_study(curves, setting, cfg)
}

pub fn run_direct_test(curves: &[NurbsCurve], setting: &TestSetting, cfg: &StudyConfig) -> Result<StudyReport> {
    if setting.kind.is_indirect() {
        return Err(BemError::Domain("setting is not a direct test".into()));
    }
    run_study(curves, setting, cfg)
}
