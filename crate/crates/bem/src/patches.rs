//! Patches with separate geometry, displacement and traction bases, the
//! global numbering of their coefficients and the collocation points.

use std::str::FromStr;

use nalgebra::DMatrix;
use nurbs::{greville_anchors, interpolate, CurvePoint, EndKind, KnotVector, NurbsBasis, NurbsCurve};

use crate::kernels::Material;
use crate::{BemError, Result, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    /// Displacement prescribed, traction unknown.
    Dirichlet,
    /// Traction prescribed, displacement unknown.
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Displacement,
    Traction,
}

/// Prescribed boundary data of a patch.
#[derive(Debug, Clone, PartialEq)]
pub enum KnownData {
    Zero,
    Constant(Vec2),
    /// Linear in the patch parameter between the two end values.
    Linear {
        start: Vec2,
        end: Vec2,
    },
    /// Trace of the elastic field of point forces `(position, force)`.
    PointForces(Vec<(Vec2, Vec2)>),
}

impl KnownData {
    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }

    /// Value of the data at parameter `u` of a patch with domain `(a, b)`.
    pub fn value(&self, kind: FieldKind, material: &Material, at: &CurvePoint, u: f64, domain: (f64, f64)) -> Vec2 {
        match self {
            Self::Zero => Vec2::zeros(),
            Self::Constant(c) => *c,
            Self::Linear { start, end } => {
                let s = (u - domain.0) / (domain.1 - domain.0);
                start * (1.0 - s) + end * s
            }
            Self::PointForces(loads) => point_force_field(material, loads, at.point, at.normal(), kind),
        }
    }
}

/// Displacement or traction (on a surface with normal `n`) at `y` due to
/// point forces.
pub fn point_force_field(material: &Material, loads: &[(Vec2, Vec2)], y: Vec2, n: Vec2, kind: FieldKind) -> Vec2 {
    let k = material.consts();
    let mut out = Vec2::zeros();
    for (x, f) in loads {
        let v = match kind {
            FieldKind::Displacement => k.u(y - x),
            FieldKind::Traction => k.t(y - x, n),
        };
        out += Vec2::new(v[0] * f.x + v[2] * f.y, v[1] * f.x + v[3] * f.y);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refinement {
    /// One knot in the middle of every non-zero span.
    UniformMidpoint,
    /// Order raised by one.
    OrderElevation,
    /// Every midpoint inserted `p` times.
    BezierMultiplicity,
}

impl FromStr for Refinement {
    type Err = BemError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform_midpoint_insertion" | "midpoint" => Ok(Self::UniformMidpoint),
            "order_elevation" | "elevation" => Ok(Self::OrderElevation),
            "bezier_multiplicity" | "bezier" => Ok(Self::BezierMultiplicity),
            other => Err(BemError::UnknownStrategy(other.into())),
        }
    }
}

fn refine_basis(basis: &NurbsBasis, strategy: Refinement) -> Result<NurbsBasis> {
    let p = basis.degree();
    Ok(match strategy {
        Refinement::OrderElevation => basis.elevate()?,
        Refinement::UniformMidpoint | Refinement::BezierMultiplicity => {
            let times = if strategy == Refinement::UniformMidpoint { 1 } else { p };
            let mut out = basis.clone();
            for m in basis.knots().span_midpoints() {
                for _ in 0..times {
                    out = out.insert_knot(m)?;
                }
            }
            out
        }
    })
}

/// One patch of the boundary. The geometry keeps its initial basis; the
/// two field bases are refined independently of it.
#[derive(Debug, Clone, PartialEq)]
pub struct SubparametricPatch {
    geometry: NurbsCurve,
    bc: BcKind,
    known: KnownData,
    complex: bool,
    displacement: NurbsBasis,
    traction: NurbsBasis,
    corners: Vec<f64>,
    /// Whether the traction field continues into the previous and next patch.
    trac_joined: (bool, bool),
}

/// Interior knots where the curve has a kink.
fn kinks(geometry: &NurbsCurve) -> Result<Vec<f64>> {
    let p = geometry.degree();
    let kv = geometry.knots();
    let mut out = Vec::new();
    for (u, m) in kv.interior() {
        if m < p {
            continue;
        }
        let k = kv.knots();
        let right = kv.find_span(u)?;
        let left = (p..right).rev().find(|&s| k[s] < k[s + 1]).unwrap_or(p);
        let tl = geometry.eval_in_span(left, u).tangent.normalize();
        let tr = geometry.eval_in_span(right, u).tangent.normalize();
        if m > p || (tl - tr).norm() > 1e-9 {
            out.push(u);
        }
    }
    Ok(out)
}

fn with_corners(basis: &NurbsBasis, corners: &[f64]) -> Result<NurbsBasis> {
    let mut out = basis.clone();
    for &c in corners {
        while out.knots().multiplicity(c) <= out.degree() {
            out = out.insert_knot(c)?;
        }
    }
    Ok(out)
}

impl SubparametricPatch {
    /// Fields start from the geometry basis; the traction basis is broken at
    /// every kink. `complex` known data are refined together with the
    /// unknown field; other known data stay on the initial basis.
    pub fn new(geometry: NurbsCurve, bc: BcKind, known: KnownData, complex: bool) -> Result<Self> {
        let corners = kinks(&geometry)?;
        if geometry.knots().interior().iter().any(|&(_, m)| m > geometry.degree()) {
            return Err(BemError::Geometry("geometry is discontinuous inside a patch".into()));
        }
        let displacement = geometry.basis().clone();
        let traction = with_corners(&displacement, &corners)?;
        Ok(Self {
            geometry,
            bc,
            known,
            complex,
            displacement,
            traction,
            corners,
            trac_joined: (false, false),
        })
    }

    /// Sets both field bases to order `p`, by elevating the geometry basis
    /// or, below the geometry order, by a polynomial basis on its breakpoints.
    pub fn with_order(mut self, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(BemError::Domain("field order must be at least 1".into()));
        }
        let geo = self.geometry.basis();
        let q = geo.degree();
        let disp = if p >= q {
            let mut b = geo.clone();
            for _ in q..p {
                b = b.elevate()?;
            }
            b
        } else {
            let kv = geo.knots();
            let (a, b) = kv.domain();
            let mut k = vec![a; p + 1];
            for (u, m) in kv.interior() {
                k.extend(std::iter::repeat_n(u, m.min(p)));
            }
            k.extend(std::iter::repeat_n(b, p + 1));
            NurbsBasis::bspline(KnotVector::new(k, p)?)
        };
        self.traction = with_corners(&disp, &self.corners)?;
        self.displacement = disp;
        Ok(self)
    }

    pub fn geometry(&self) -> &NurbsCurve {
        &self.geometry
    }

    pub fn bc(&self) -> BcKind {
        self.bc
    }

    pub fn known(&self) -> &KnownData {
        &self.known
    }

    pub fn is_complex(&self) -> bool {
        self.complex
    }

    pub fn corners(&self) -> &[f64] {
        &self.corners
    }

    pub fn displacement(&self) -> &NurbsBasis {
        &self.displacement
    }

    pub fn traction(&self) -> &NurbsBasis {
        &self.traction
    }

    pub fn basis(&self, kind: FieldKind) -> &NurbsBasis {
        match kind {
            FieldKind::Displacement => &self.displacement,
            FieldKind::Traction => &self.traction,
        }
    }

    pub fn unknown_kind(&self) -> FieldKind {
        match self.bc {
            BcKind::Dirichlet => FieldKind::Traction,
            BcKind::Neumann => FieldKind::Displacement,
        }
    }

    pub fn known_kind(&self) -> FieldKind {
        match self.bc {
            BcKind::Dirichlet => FieldKind::Displacement,
            BcKind::Neumann => FieldKind::Traction,
        }
    }

    /// Refines the unknown field, and the known field too when its data are
    /// complex.
    pub fn refine(&mut self, strategy: Refinement) -> Result<()> {
        let kinds = if self.complex {
            vec![FieldKind::Displacement, FieldKind::Traction]
        } else {
            vec![self.unknown_kind()]
        };
        for kind in kinds {
            let refined = refine_basis(self.basis(kind), strategy)?;
            match kind {
                FieldKind::Displacement => self.displacement = refined,
                FieldKind::Traction => self.traction = refined,
            }
        }
        Ok(())
    }

    /// Whether the traction field continues across the start and the end.
    pub fn traction_joined(&self) -> (bool, bool) {
        self.trac_joined
    }

    /// Anchors of a field. Traction ends not joined to a neighbour move
    /// inside.
    pub fn anchors(&self, kind: FieldKind) -> Result<Vec<f64>> {
        let kv = self.basis(kind).knots();
        let mut tau = greville_anchors(kv, EndKind::Continuous)?.anchors;
        if kind == FieldKind::Traction && self.trac_joined != (true, true) {
            let open = greville_anchors(kv, EndKind::Discontinuous)?.anchors;
            let last = tau.len() - 1;
            if !self.trac_joined.0 {
                tau[0] = open[0];
            }
            if !self.trac_joined.1 {
                tau[last] = open[last];
            }
            if tau.windows(2).any(|w| w[0] >= w[1]) {
                return Err(BemError::Geometry("traction anchors coincide".into()));
            }
        }
        Ok(tau)
    }

    /// Coefficients interpolating `g` at the anchors of field `kind`.
    pub fn project<G: Fn(&CurvePoint, f64) -> Vec2>(&self, kind: FieldKind, g: G) -> Result<Vec<Vec2>> {
        let tau = self.anchors(kind)?;
        let mut rhs = DMatrix::zeros(tau.len(), 2);
        for (i, &u) in tau.iter().enumerate() {
            let v = g(&self.geometry.eval(u)?, u);
            rhs[(i, 0)] = v.x;
            rhs[(i, 1)] = v.y;
        }
        let c = interpolate(self.basis(kind), &tau, &rhs)?;
        Ok((0..tau.len()).map(|i| Vec2::new(c[(i, 0)], c[(i, 1)])).collect())
    }

    /// The known data interpolated on the known field basis.
    pub fn project_known(&self, material: &Material) -> Result<Vec<Vec2>> {
        let kind = self.known_kind();
        let domain = self.geometry.domain();
        self.project(kind, |cp, u| self.known.value(kind, material, cp, u, domain))
    }

    /// Field value at `u` for coefficients on the basis of `kind`.
    pub fn field_value(&self, kind: FieldKind, coeffs: &[Vec2], u: f64) -> Result<Vec2> {
        let b = self.basis(kind).eval_nurbs(u)?;
        Ok(b.indices().zip(b.values()).map(|(j, v)| coeffs[j] * *v).sum())
    }
}

/// Patches joined end to start into one closed, counter-clockwise curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    patches: Vec<SubparametricPatch>,
}

impl Boundary {
    /// Traction functions are shared across a join when both sides have the
    /// same condition, the tangent is continuous and the data agree there.
    pub fn new(mut patches: Vec<SubparametricPatch>) -> Result<Self> {
        if patches.is_empty() {
            return Err(BemError::Geometry("no patches".into()));
        }
        let scale = patches
            .iter()
            .flat_map(|p| p.geometry.points())
            .fold(0.0f64, |m, q| m.max(q.norm()))
            .max(1.0);
        for (k, p) in patches.iter().enumerate() {
            let next = &patches[(k + 1) % patches.len()];
            let gap = (p.geometry.end() - next.geometry.start()).norm();
            if gap > 1e-10 * scale {
                return Err(BemError::Geometry(format!(
                    "patch {k} ends {gap:.3e} away from the start of patch {}",
                    (k + 1) % patches.len()
                )));
            }
        }
        let np = patches.len();
        for k in 0..np {
            let next = (k + 1) % np;
            let joined = traction_joins(&patches[k], &patches[next])?;
            patches[k].trac_joined.1 = joined;
            patches[next].trac_joined.0 = joined;
        }
        Ok(Self { patches })
    }

    pub fn patches(&self) -> &[SubparametricPatch] {
        &self.patches
    }

    pub fn patch(&self, k: usize) -> &SubparametricPatch {
        &self.patches[k]
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn with_order(self, p: usize) -> Result<Self> {
        let patches = self
            .patches
            .into_iter()
            .map(|q| q.with_order(p))
            .collect::<Result<_>>()?;
        Ok(Self { patches })
    }

    pub fn refine(&mut self, strategy: Refinement) -> Result<()> {
        self.patches.iter_mut().try_for_each(|p| p.refine(strategy))
    }

    /// The same boundary with every patch's known data declared complex and
    /// the known field refined at every breakpoint of the unknown one.
    pub fn isoparametric_known(&self) -> Result<Self> {
        let mut out = self.clone();
        for p in &mut out.patches {
            p.complex = true;
            let breaks = p.basis(p.unknown_kind()).knots().interior();
            let mut known = p.basis(p.known_kind()).clone();
            for (u, _) in breaks {
                if known.knots().multiplicity(u) == 0 {
                    known = known.insert_knot(u)?;
                }
            }
            match p.known_kind() {
                FieldKind::Displacement => p.displacement = known,
                FieldKind::Traction => p.traction = known,
            }
        }
        Ok(out)
    }
}

fn traction_joins(a: &SubparametricPatch, b: &SubparametricPatch) -> Result<bool> {
    if a.bc != b.bc {
        return Ok(false);
    }
    let (_, ua) = a.geometry.domain();
    let (ub, _) = b.geometry.domain();
    let ta = a.geometry.eval(ua)?.tangent.normalize();
    let tb = b.geometry.eval(ub)?.tangent.normalize();
    if (ta - tb).norm() > 1e-9 {
        return Ok(false);
    }
    if a.bc == BcKind::Dirichlet {
        return Ok(true);
    }
    Ok(match (&a.known, &b.known) {
        (KnownData::PointForces(x), KnownData::PointForces(y)) => x == y,
        (KnownData::PointForces(_), _) | (_, KnownData::PointForces(_)) => false,
        (x, y) => end_value(x, true) == end_value(y, false),
    })
}

/// Value of parameter-defined data at the end (`true`) or start of a patch.
fn end_value(data: &KnownData, at_end: bool) -> Option<Vec2> {
    match data {
        KnownData::Zero => Some(Vec2::zeros()),
        KnownData::Constant(c) => Some(*c),
        KnownData::Linear { start, end } => Some(if at_end { *end } else { *start }),
        KnownData::PointForces(_) => None,
    }
}

/// A coefficient of the global system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dof {
    /// Global traction function index.
    Traction(usize),
    /// Global displacement function index.
    Displacement(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollocationPoint {
    pub x: Vec2,
    /// Every `(patch, parameter)` that maps to `x`; two entries at a join.
    pub locations: Vec<(usize, f64)>,
    pub field: FieldKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollocationSet {
    pub points: Vec<CollocationPoint>,
}

impl CollocationSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn count(&self, field: FieldKind) -> usize {
        self.points.iter().filter(|p| p.field == field).count()
    }
}

/// Global numbering of all coefficients. Displacement functions at patch
/// joins are shared by both patches; traction functions only at joins
/// marked by [`SubparametricPatch::traction_joined`].
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub disp_global: Vec<Vec<usize>>,
    pub disp_owners: Vec<Vec<(usize, usize)>>,
    pub trac_global: Vec<Vec<usize>>,
    pub trac_owners: Vec<Vec<(usize, usize)>>,
    /// Columns of the left-hand side: Dirichlet tractions, then free
    /// displacements.
    pub unknowns: Vec<Dof>,
    /// Columns of the right-hand side; homogeneous data are left out.
    pub knowns: Vec<Dof>,
    /// Coefficient of each entry of `knowns`.
    pub known_values: Vec<Vec2>,
    /// Row `i` belongs to `unknowns[i]`.
    pub collocation: CollocationSet,
}

/// Global ids per `(patch, function)` where the last function of patch `k`
/// and the first of the next one coincide if `joined[k]`, plus the owners of
/// each id.
fn shared_numbering(counts: &[usize], joined: &[bool]) -> (Vec<Vec<usize>>, Vec<Vec<(usize, usize)>>) {
    let np = counts.len();
    let mut global: Vec<Vec<usize>> = Vec::with_capacity(np);
    let mut next = 0usize;
    for (k, &n) in counts.iter().enumerate() {
        let mut ids = Vec::with_capacity(n);
        for j in 0..n {
            let id = if j == 0 && k > 0 && joined[k - 1] {
                global[k - 1][counts[k - 1] - 1]
            } else if j + 1 == n && k + 1 == np && joined[k] && !(k == 0 && j == 0) {
                0
            } else {
                next += 1;
                next - 1
            };
            ids.push(id);
        }
        global.push(ids);
    }
    let mut owners = vec![Vec::new(); next];
    for (k, ids) in global.iter().enumerate() {
        for (j, &g) in ids.iter().enumerate() {
            owners[g].push((k, j));
        }
    }
    (global, owners)
}

impl Layout {
    pub fn new(boundary: &Boundary, material: &Material) -> Result<Self> {
        let patches = boundary.patches();
        let np = patches.len();
        let disp_counts: Vec<usize> = patches.iter().map(|p| p.displacement.count()).collect();
        let (disp_global, disp_owners) = shared_numbering(&disp_counts, &vec![true; np]);
        let n_disp = disp_owners.len();
        let trac_counts: Vec<usize> = patches.iter().map(|p| p.traction.count()).collect();
        let trac_joins: Vec<bool> = patches.iter().map(|p| p.trac_joined.1).collect();
        let (trac_global, trac_owners) = shared_numbering(&trac_counts, &trac_joins);

        let disp_known = |g: usize| disp_owners[g].iter().any(|&(k, _)| patches[k].bc == BcKind::Dirichlet);
        let mut unknowns = Vec::new();
        let mut points = Vec::new();
        let trac_anchors = patches
            .iter()
            .map(|p| p.anchors(FieldKind::Traction))
            .collect::<Result<Vec<_>>>()?;
        for (t, owners) in trac_owners.iter().enumerate() {
            if patches[owners[0].0].bc != BcKind::Dirichlet {
                continue;
            }
            unknowns.push(Dof::Traction(t));
            let locations: Vec<(usize, f64)> = owners.iter().map(|&(k, j)| (k, trac_anchors[k][j])).collect();
            let (k, u) = locations[0];
            points.push(CollocationPoint {
                x: patches[k].geometry.point(u)?,
                locations,
                field: FieldKind::Traction,
            });
        }
        let disp_anchors = patches
            .iter()
            .map(|p| p.anchors(FieldKind::Displacement))
            .collect::<Result<Vec<_>>>()?;
        for g in 0..n_disp {
            if disp_known(g) {
                continue;
            }
            unknowns.push(Dof::Displacement(g));
            let locations: Vec<(usize, f64)> = disp_owners[g].iter().map(|&(k, j)| (k, disp_anchors[k][j])).collect();
            let (k, u) = locations[0];
            points.push(CollocationPoint {
                x: patches[k].geometry.point(u)?,
                locations,
                field: FieldKind::Displacement,
            });
        }
        let collocation = CollocationSet { points };
        check_distinct(&collocation)?;

        let coeffs = patches
            .iter()
            .map(|p| {
                if p.known.is_zero() {
                    Ok(Vec::new())
                } else {
                    p.project_known(material)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut knowns = Vec::new();
        let mut known_values = Vec::new();
        for (g, owners) in disp_owners.iter().enumerate() {
            let source = owners
                .iter()
                .find(|&&(k, _)| patches[k].bc == BcKind::Dirichlet && !patches[k].known.is_zero());
            if let Some(&(k, j)) = source {
                knowns.push(Dof::Displacement(g));
                known_values.push(coeffs[k][j]);
            }
        }
        for (t, owners) in trac_owners.iter().enumerate() {
            let (k, j) = owners[0];
            if patches[k].bc == BcKind::Neumann && !patches[k].known.is_zero() {
                knowns.push(Dof::Traction(t));
                known_values.push(coeffs[k][j]);
            }
        }
        Ok(Self {
            disp_global,
            disp_owners,
            trac_global,
            trac_owners,
            unknowns,
            knowns,
            known_values,
            collocation,
        })
    }

    pub fn n_displacement(&self) -> usize {
        self.disp_owners.len()
    }

    pub fn n_traction(&self) -> usize {
        self.trac_owners.len()
    }

    /// Scalar unknowns (two per coefficient).
    pub fn n(&self) -> usize {
        2 * self.unknowns.len()
    }

    /// Scalar known coefficients stored in the right-hand side.
    pub fn m(&self) -> usize {
        2 * self.knowns.len()
    }
}

fn check_distinct(set: &CollocationSet) -> Result<()> {
    let scale = set.points.iter().fold(1.0f64, |m, p| m.max(p.x.norm()));
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by(|&a, &b| set.points[a].x.x.total_cmp(&set.points[b].x.x));
    let tol = 1e-12 * scale;
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if set.points[j].x.x - set.points[i].x.x > tol {
                break;
            }
            if (set.points[j].x - set.points[i].x).norm() <= tol {
                return Err(BemError::CoincidentCollocation(i.min(j), i.max(j)));
            }
        }
    }
    Ok(())
}

/// Collocation points of the unknown fields of `boundary`.
pub fn collocation_points(boundary: &Boundary) -> Result<CollocationSet> {
    Ok(Layout::new(boundary, &Material::rock())?.collocation)
}
