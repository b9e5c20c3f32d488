//! Collocation entries of the single layer `V` and of the closed double
//! layer `K̂ = C + K`.
//!
//! The strongly singular part of `K̂` is never integrated. On the elements
//! touching a collocation point `x_i` the integrand is `T (φ_j(y) − φ_j(x_i))`,
//! which is at most weakly singular, and the remainder is fixed by rigid-body
//! motion: `C(x_i) + CPV∫ T = 0`, so
//! `K̂_ij = raw_ij − φ_j(x_i) ∫_{far} T`.

use std::collections::HashMap;
use std::sync::Mutex;

use hmat::{BlockSource, BoundingBox};
use nurbs::bezier_segments;

use crate::kernels::{KernelConsts, Mat2, Material};
use crate::patches::{Boundary, Dof, FieldKind, Layout};
use crate::quadrature::{classify_and_subdivide, integrate_regions, IntegrationRegion, QuadratureConfig};
use crate::{BemError, Result, Vec2};

/// A non-zero knot span of one field basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    pub patch: usize,
    pub field: FieldKind,
    /// Span index in the field basis.
    pub span: usize,
    /// Span index in the geometry basis.
    pub geo_span: usize,
    pub a: f64,
    pub b: f64,
}

/// 2×2 blocks stored row-major per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 4]>,
}

impl BlockMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![[0.0; 4]; rows * cols],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Mat2 {
        let v = self.data[i * self.cols + j];
        Mat2::new(v[0], v[1], v[2], v[3])
    }

    /// Sum of the blocks of row `i`.
    pub fn row_sum(&self, i: usize) -> Mat2 {
        (0..self.cols).map(|j| self.get(i, j)).sum()
    }
}

/// Boundary, numbering and the data needed to integrate against it.
#[derive(Debug)]
pub struct Discretisation {
    boundary: Boundary,
    layout: Layout,
    material: Material,
    consts: KernelConsts,
    quad: QuadratureConfig,
    disp_elements: Vec<Element>,
    trac_elements: Vec<Element>,
    disp_support: Vec<Vec<usize>>,
    trac_support: Vec<Vec<usize>>,
    /// Displacement functions that do not vanish at each collocation point.
    row_values: Vec<Vec<(usize, f64)>>,
}

fn elements(boundary: &Boundary, field: FieldKind) -> Result<Vec<Element>> {
    let mut out = Vec::new();
    for (k, p) in boundary.patches().iter().enumerate() {
        let geo = p.geometry().knots();
        for (span, a, b) in p.basis(field).knots().spans() {
            out.push(Element {
                patch: k,
                field,
                span,
                geo_span: geo.find_span(0.5 * (a + b))?,
                a,
                b,
            });
        }
    }
    Ok(out)
}

impl Discretisation {
    pub fn new(boundary: Boundary, material: Material, quad: QuadratureConfig) -> Result<Self> {
        quad.validate()?;
        let layout = Layout::new(&boundary, &material)?;
        let disp_elements = elements(&boundary, FieldKind::Displacement)?;
        let trac_elements = elements(&boundary, FieldKind::Traction)?;
        let mut disp_support = vec![Vec::new(); layout.n_displacement()];
        let mut trac_support = vec![Vec::new(); layout.n_traction()];
        for (id, e) in disp_elements.iter().enumerate() {
            let p = boundary.patch(e.patch).displacement().degree();
            for local in e.span - p..=e.span {
                let g = layout.disp_global[e.patch][local];
                if disp_support[g].last() != Some(&id) {
                    disp_support[g].push(id);
                }
            }
        }
        for (id, e) in trac_elements.iter().enumerate() {
            let p = boundary.patch(e.patch).traction().degree();
            for local in e.span - p..=e.span {
                let t = layout.trac_global[e.patch][local];
                if trac_support[t].last() != Some(&id) {
                    trac_support[t].push(id);
                }
            }
        }
        let mut row_values = Vec::with_capacity(layout.collocation.len());
        for point in &layout.collocation.points {
            let (k, u0) = point.locations[0];
            let b = boundary.patch(k).displacement().eval_nurbs(u0)?;
            let vals = b
                .indices()
                .zip(b.values())
                .filter(|(_, v)| **v != 0.0)
                .map(|(local, v)| (layout.disp_global[k][local], *v))
                .collect();
            row_values.push(vals);
        }
        Ok(Self {
            consts: material.consts(),
            boundary,
            layout,
            material,
            quad,
            disp_elements,
            trac_elements,
            disp_support,
            trac_support,
            row_values,
        })
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn material(&self) -> &Material {
        &self.material
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quad
    }

    pub fn elements(&self, field: FieldKind) -> &[Element] {
        match field {
            FieldKind::Displacement => &self.disp_elements,
            FieldKind::Traction => &self.trac_elements,
        }
    }

    pub fn rows(&self) -> usize {
        self.layout.collocation.len()
    }

    /// `φ_g(x_i)` for the displacement functions not vanishing at row `i`.
    pub fn row_values(&self, row: usize) -> &[(usize, f64)] {
        &self.row_values[row]
    }

    fn global(&self, e: &Element, local: usize) -> usize {
        match e.field {
            FieldKind::Displacement => self.layout.disp_global[e.patch][local],
            FieldKind::Traction => self.layout.trac_global[e.patch][local],
        }
    }

    /// Pre-image of collocation point `row` in the closed element, if any.
    pub fn singular_parameter(&self, row: usize, e: &Element) -> Option<f64> {
        self.layout.collocation.points[row]
            .locations
            .iter()
            .find(|&&(k, u)| k == e.patch && e.a <= u && u <= e.b)
            .map(|&(_, u)| u)
    }

    fn regions(&self, x: Vec2, e: &Element, singular: Option<f64>) -> Vec<IntegrationRegion> {
        let geo = self.boundary.patch(e.patch).geometry();
        let point = |u: f64| geo.eval_in_span(e.geo_span, u).point;
        classify_and_subdivide(e.patch, e.a, e.b, x, singular, &point, &self.quad)
    }

    /// `∫_e K(y − x, n(y)) (N_a(y) − shift_a) dΓ` for the `p + 1` functions
    /// active on `e`, four values each.
    fn integrate<K: Fn(Vec2, Vec2) -> [f64; 4]>(
        &self,
        x: Vec2,
        e: &Element,
        singular: Option<f64>,
        shift: Option<&[f64]>,
        kernel: K,
    ) -> Result<Vec<f64>> {
        let patch = self.boundary.patch(e.patch);
        let geo = patch.geometry();
        let basis = patch.basis(e.field);
        let p = basis.degree();
        let regions = self.regions(x, e, singular);
        let integrand = |u: f64, out: &mut [f64]| {
            let cp = geo.eval_in_span(e.geo_span, u);
            // A node next to the singular point may round onto it.
            if cp.point == x {
                out.fill(0.0);
                return;
            }
            let n = Vec2::new(cp.tangent.y, -cp.tangent.x) / cp.jacobian;
            let k = kernel(cp.point - x, n);
            let b = basis.values_in_span(e.span, u);
            for (a, &v) in b.values().iter().enumerate() {
                let w = (v - shift.map_or(0.0, |s| s[a])) * cp.jacobian;
                for c in 0..4 {
                    out[4 * a + c] = k[c] * w;
                }
            }
        };
        integrate_regions(integrand, &regions, 4 * (p + 1), &self.quad)
    }

    fn entry_error(&self, row: usize, e: &Element, source: BemError) -> BemError {
        let element = self
            .elements(e.field)
            .iter()
            .filter(|f| f.patch == e.patch)
            .position(|f| f.span == e.span)
            .unwrap_or(0);
        BemError::Entry {
            row,
            patch: e.patch,
            element,
            source: Box::new(source),
        }
    }

    /// `V` contributions of one traction element, per active function.
    fn v_element(&self, row: usize, e: &Element) -> Result<Vec<f64>> {
        let x = self.layout.collocation.points[row].x;
        let k = self.consts;
        self.integrate(x, e, self.singular_parameter(row, e), None, |d, _| k.u(d))
            .map_err(|err| self.entry_error(row, e, err))
    }

    /// Raw `K` contributions of one displacement element and whether the
    /// element touches the collocation point (then with the value at the
    /// point subtracted).
    fn k_element(&self, row: usize, e: &Element) -> Result<(Vec<f64>, bool)> {
        let x = self.layout.collocation.points[row].x;
        let k = self.consts;
        let singular = self.singular_parameter(row, e);
        let shift = singular.map(|_| {
            let p = self.boundary.patch(e.patch).displacement().degree();
            (e.span - p..=e.span)
                .map(|local| {
                    let g = self.global(e, local);
                    self.row_values[row].iter().find(|v| v.0 == g).map_or(0.0, |v| v.1)
                })
                .collect::<Vec<f64>>()
        });
        let out = self
            .integrate(x, e, singular, shift.as_deref(), |d, n| k.t(d, n))
            .map_err(|err| self.entry_error(row, e, err))?;
        Ok((out, singular.is_some()))
    }

    /// `V_ij` summed over the support of traction function `j`.
    pub fn entry_v(&self, row: usize, j: usize) -> Result<Mat2> {
        let mut sum = [0.0; 4];
        for &id in &self.trac_support[j] {
            let e = &self.trac_elements[id];
            let vals = self.v_element(row, e)?;
            let p = self.boundary.patch(e.patch).traction().degree();
            for (a, local) in (e.span - p..=e.span).enumerate() {
                if self.global(e, local) == j {
                    for c in 0..4 {
                        sum[c] += vals[4 * a + c];
                    }
                }
            }
        }
        Ok(Mat2::new(sum[0], sum[1], sum[2], sum[3]))
    }

    /// `∫ T φ_j` over the support of displacement function `j`. On elements
    /// touching `x_i` the value `φ_j(x_i)` is subtracted from `φ_j`.
    pub fn entry_k(&self, row: usize, j: usize) -> Result<Mat2> {
        let mut sum = [0.0; 4];
        for &id in &self.disp_support[j] {
            let e = &self.disp_elements[id];
            let (vals, _) = self.k_element(row, e)?;
            let p = self.boundary.patch(e.patch).displacement().degree();
            for (a, local) in (e.span - p..=e.span).enumerate() {
                if self.global(e, local) == j {
                    for c in 0..4 {
                        sum[c] += vals[4 * a + c];
                    }
                }
            }
        }
        Ok(Mat2::new(sum[0], sum[1], sum[2], sum[3]))
    }

    /// Full row of `V`; traction elements of patches whose functions are
    /// not in `needed` are skipped.
    pub fn v_row(&self, row: usize, needed: &[bool]) -> Result<Vec<[f64; 4]>> {
        let mut out = vec![[0.0; 4]; self.layout.n_traction()];
        for e in &self.trac_elements {
            let p = self.boundary.patch(e.patch).traction().degree();
            if !(e.span - p..=e.span).any(|l| needed[self.global(e, l)]) {
                continue;
            }
            let vals = self.v_element(row, e)?;
            for (a, local) in (e.span - p..=e.span).enumerate() {
                let g = self.global(e, local);
                for c in 0..4 {
                    out[g][c] += vals[4 * a + c];
                }
            }
        }
        Ok(out)
    }

    /// Full row of the closed double layer `K̂`. The far integral of `T` is
    /// the sum of the computed far contributions, so the row sums vanish to
    /// round-off.
    pub fn k_row(&self, row: usize) -> Result<Vec<[f64; 4]>> {
        let mut out = vec![[0.0; 4]; self.layout.n_displacement()];
        let mut far = [0.0; 4];
        for e in &self.disp_elements {
            let (vals, near) = self.k_element(row, e)?;
            let p = self.boundary.patch(e.patch).displacement().degree();
            for (a, local) in (e.span - p..=e.span).enumerate() {
                let g = self.global(e, local);
                for c in 0..4 {
                    out[g][c] += vals[4 * a + c];
                    if !near {
                        far[c] += vals[4 * a + c];
                    }
                }
            }
        }
        close_row(&mut out, &self.row_values[row], far);
        Ok(out)
    }

    /// Dense `V` over all traction functions.
    pub fn v_matrix(&self) -> Result<BlockMatrix> {
        let needed = vec![true; self.layout.n_traction()];
        let mut m = BlockMatrix::zeros(self.rows(), self.layout.n_traction());
        for i in 0..self.rows() {
            let row = self.v_row(i, &needed)?;
            m.data[i * m.cols..(i + 1) * m.cols].copy_from_slice(&row);
        }
        Ok(m)
    }

    /// Dense closed `K̂` over all displacement functions.
    pub fn k_matrix(&self) -> Result<BlockMatrix> {
        let mut m = BlockMatrix::zeros(self.rows(), self.layout.n_displacement());
        for i in 0..self.rows() {
            let row = self.k_row(i)?;
            m.data[i * m.cols..(i + 1) * m.cols].copy_from_slice(&row);
        }
        Ok(m)
    }

    /// `∫ T` over the boundary minus the displacement elements touching
    /// `x_i`, integrated span by span over the geometry.
    pub fn far_traction_integral(&self, row: usize) -> Result<[f64; 4]> {
        let point = &self.layout.collocation.points[row];
        let x = point.x;
        let k = self.consts;
        let mut total = [0.0; 4];
        for (kp, patch) in self.boundary.patches().iter().enumerate() {
            let geo = patch.geometry();
            let mut holes: Vec<(f64, f64)> = self
                .disp_elements
                .iter()
                .filter(|e| e.patch == kp && self.singular_parameter(row, e).is_some())
                .map(|e| (e.a, e.b))
                .collect();
            holes.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (geo_span, a, b) in geo.knots().spans() {
                let mut pieces = vec![(a, b)];
                for &(ha, hb) in &holes {
                    pieces = pieces
                        .into_iter()
                        .flat_map(|(pa, pb)| {
                            let mut v = Vec::new();
                            if ha > pa {
                                v.push((pa, ha.min(pb)));
                            }
                            if hb < pb {
                                v.push((hb.max(pa), pb));
                            }
                            v.into_iter().filter(|(s, t)| t > s)
                        })
                        .collect();
                }
                for (pa, pb) in pieces {
                    let pt = |u: f64| geo.eval_in_span(geo_span, u).point;
                    let regions = classify_and_subdivide(kp, pa, pb, x, None, &pt, &self.quad);
                    let f = |u: f64, out: &mut [f64]| {
                        let cp = geo.eval_in_span(geo_span, u);
                        let n = Vec2::new(cp.tangent.y, -cp.tangent.x) / cp.jacobian;
                        let t = k.t(cp.point - x, n);
                        for c in 0..4 {
                            out[c] = t[c] * cp.jacobian;
                        }
                    };
                    let v = integrate_regions(f, &regions, 4, &self.quad)?;
                    for c in 0..4 {
                        total[c] += v[c];
                    }
                }
            }
        }
        Ok(total)
    }

    /// Layer potential at a point off the boundary: `∫ U(x, y) ψ(y) dΓ_y`
    /// for a traction field, `∫ T(x, y) φ(y) dΓ_y` for a displacement field.
    /// `coeffs` are indexed by global function number.
    pub fn potential(&self, x: Vec2, field: FieldKind, coeffs: &[Vec2]) -> Result<Vec2> {
        let k = self.consts;
        let mut total = Vec2::zeros();
        for e in self.elements(field) {
            let patch = self.boundary.patch(e.patch);
            let geo = patch.geometry();
            let basis = patch.basis(field);
            let regions = self.regions(x, e, None);
            let f = |u: f64, out: &mut [f64]| {
                let cp = geo.eval_in_span(e.geo_span, u);
                let b = basis.values_in_span(e.span, u);
                let density: Vec2 = b
                    .indices()
                    .zip(b.values())
                    .map(|(local, v)| *v * coeffs[self.global(e, local)])
                    .sum();
                let m = match field {
                    FieldKind::Traction => k.u(cp.point - x),
                    FieldKind::Displacement => k.t(cp.point - x, cp.normal()),
                };
                out[0] = (m[0] * density.x + m[1] * density.y) * cp.jacobian;
                out[1] = (m[2] * density.x + m[3] * density.y) * cp.jacobian;
            };
            let v = integrate_regions(f, &regions, 2, &self.quad)?;
            total += Vec2::new(v[0], v[1]);
        }
        Ok(total)
    }

    /// Point boxes of the collocation points.
    pub fn row_boxes(&self) -> Vec<BoundingBox> {
        self.layout
            .collocation
            .points
            .iter()
            .map(|p| BoundingBox::point([p.x.x, p.x.y]))
            .collect()
    }

    /// Boxes around the supports of the given coefficients.
    pub fn column_boxes(&self, cols: &[Dof]) -> Result<Vec<BoundingBox>> {
        let decomp = self
            .boundary
            .patches()
            .iter()
            .map(|p| bezier_segments(p.geometry(), &[p.displacement().knots(), p.traction().knots()]))
            .collect::<nurbs::Result<Vec<_>>>()?;
        let boxed = |k: usize, field: FieldKind, j: usize| {
            let (lo, hi) = decomp[k].support_box(self.boundary.patch(k).basis(field).knots(), j);
            BoundingBox::new([lo.x, lo.y], [hi.x, hi.y])
        };
        Ok(cols
            .iter()
            .map(|dof| match *dof {
                Dof::Traction(t) => self.layout.trac_owners[t]
                    .iter()
                    .fold(BoundingBox::empty(), |acc, &(k, j)| {
                        acc.union(&boxed(k, FieldKind::Traction, j))
                    }),
                Dof::Displacement(g) => self.layout.disp_owners[g]
                    .iter()
                    .fold(BoundingBox::empty(), |acc, &(k, j)| {
                        acc.union(&boxed(k, FieldKind::Displacement, j))
                    }),
            })
            .collect())
    }
}

/// `K̂_ij = raw_ij − φ_j(x_i) · far`.
fn close_row(row: &mut [[f64; 4]], values: &[(usize, f64)], far: [f64; 4]) {
    for &(g, v) in values {
        for c in 0..4 {
            row[g][c] -= v * far[c];
        }
    }
}

/// Which side of the collocation equations a set of columns belongs to.
/// With `A = K̂ − Φ` (`Φ_ij = φ_j(x_i) I`) the equations read
/// `V t = A u`; unknown columns go left, known columns right.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `+V` for tractions, `−A` for displacements.
    Lhs,
    /// `−V` for tractions, `+A` for displacements.
    Rhs,
}

impl Side {
    fn signs(self) -> (f64, f64) {
        match self {
            Side::Lhs => (1.0, -1.0),
            Side::Rhs => (-1.0, 1.0),
        }
    }
}

/// Entries of one side of the system for the H-matrix builder. Errors
/// raised inside [`BlockSource::fill`] are kept and reported by
/// [`OperatorSource::take_error`].
pub struct OperatorSource<'a> {
    disc: &'a Discretisation,
    cols: Vec<Dof>,
    side: Side,
    far: Vec<[f64; 4]>,
    error: Mutex<Option<BemError>>,
}

impl<'a> OperatorSource<'a> {
    pub fn new(disc: &'a Discretisation, cols: Vec<Dof>, side: Side) -> Result<Self> {
        let needs_far = cols.iter().any(|d| matches!(d, Dof::Displacement(_)));
        let far = if needs_far {
            (0..disc.rows())
                .map(|i| disc.far_traction_integral(i))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        Ok(Self {
            disc,
            cols,
            side,
            far,
            error: Mutex::new(None),
        })
    }

    pub fn columns(&self) -> &[Dof] {
        &self.cols
    }

    pub fn take_error(&self) -> Option<BemError> {
        self.error.lock().expect("unpoisoned").take()
    }

    fn record(&self, e: BemError) {
        let mut slot = self.error.lock().expect("unpoisoned");
        if slot.is_none() {
            *slot = Some(e);
        }
    }

    /// 2×2 entries for `rows × cols`, row-major.
    pub fn entries(&self, rows: &[usize], cols: &[usize]) -> Result<Vec<[f64; 4]>> {
        let d = self.disc;
        let (v_sign, a_sign) = self.side.signs();
        let mut disp_pos = HashMap::new();
        let mut trac_pos = HashMap::new();
        let mut disp_elems = Vec::new();
        let mut trac_elems = Vec::new();
        for (c, &col) in cols.iter().enumerate() {
            match self.cols[col] {
                Dof::Displacement(g) => {
                    disp_pos.insert(g, c);
                    disp_elems.extend_from_slice(&d.disp_support[g]);
                }
                Dof::Traction(t) => {
                    trac_pos.insert(t, c);
                    trac_elems.extend_from_slice(&d.trac_support[t]);
                }
            }
        }
        for v in [&mut disp_elems, &mut trac_elems] {
            v.sort_unstable();
            v.dedup();
        }
        let mut out = vec![[0.0; 4]; rows.len() * cols.len()];
        for (r, &row) in rows.iter().enumerate() {
            let line = &mut out[r * cols.len()..(r + 1) * cols.len()];
            for &id in &trac_elems {
                let e = &d.trac_elements[id];
                let vals = d.v_element(row, e)?;
                let p = d.boundary.patch(e.patch).traction().degree();
                for (a, local) in (e.span - p..=e.span).enumerate() {
                    if let Some(&c) = trac_pos.get(&d.global(e, local)) {
                        for q in 0..4 {
                            line[c][q] += v_sign * vals[4 * a + q];
                        }
                    }
                }
            }
            for &id in &disp_elems {
                let e = &d.disp_elements[id];
                let (vals, _) = d.k_element(row, e)?;
                let p = d.boundary.patch(e.patch).displacement().degree();
                for (a, local) in (e.span - p..=e.span).enumerate() {
                    if let Some(&c) = disp_pos.get(&d.global(e, local)) {
                        for q in 0..4 {
                            line[c][q] += a_sign * vals[4 * a + q];
                        }
                    }
                }
            }
            for &(g, v) in &d.row_values[row] {
                if let Some(&c) = disp_pos.get(&g) {
                    let far = self.far[row];
                    for q in 0..4 {
                        let identity = if q == 0 || q == 3 { 1.0 } else { 0.0 };
                        line[c][q] -= a_sign * v * (far[q] + identity);
                    }
                }
            }
        }
        Ok(out)
    }
}

impl BlockSource for OperatorSource<'_> {
    fn components(&self) -> usize {
        2
    }

    fn nrows(&self) -> usize {
        self.disc.rows()
    }

    fn ncols(&self) -> usize {
        self.cols.len()
    }

    fn fill(&self, rows: &[usize], cols: &[usize], out: &mut [f64]) {
        match self.entries(rows, cols) {
            Ok(entries) => {
                for (slot, e) in out.chunks_exact_mut(4).zip(entries) {
                    slot.copy_from_slice(&e);
                }
            }
            Err(e) => {
                out.fill(0.0);
                self.record(e);
            }
        }
    }
}

/// Free term implied by rigid-body motion at `χ_patch(u0)`:
/// `−∫_{Γ∖B_ρ(x)} T(x, y) dΓ_y`. `ρ` must be small enough that the curve
/// crosses the circle of radius `ρ` once on each side of `x`.
pub fn implied_free_term(
    boundary: &Boundary,
    material: &Material,
    patch: usize,
    u0: f64,
    rho: f64,
    quad: &QuadratureConfig,
) -> Result<Mat2> {
    // All geometry spans around the loop.
    let segs: Vec<(usize, usize, f64, f64)> = boundary
        .patches()
        .iter()
        .enumerate()
        .flat_map(|(k, p)| {
            p.geometry()
                .knots()
                .spans()
                .into_iter()
                .map(move |(s, a, b)| (k, s, a, b))
        })
        .collect();
    let m = segs.len();
    let point = |s: usize, u: f64| {
        let (k, gs, _, _) = segs[s];
        boundary.patch(k).geometry().eval_in_span(gs, u).point
    };
    let start = segs
        .iter()
        .position(|&(k, _, a, b)| k == patch && a <= u0 && u0 <= b)
        .ok_or_else(|| BemError::Domain(format!("parameter {u0} outside patch {patch}")))?;
    let x = point(start, u0);
    let crossing = |s: usize, lo: f64, hi: f64, forward: bool| {
        let (mut near, mut far) = if forward { (lo, hi) } else { (hi, lo) };
        for _ in 0..200 {
            let mid = 0.5 * (near + far);
            if mid == near || mid == far {
                break;
            }
            if (point(s, mid) - x).norm() < rho {
                near = mid;
            } else {
                far = mid;
            }
        }
        far
    };
    let walk = |forward: bool| -> Result<(usize, f64)> {
        let mut s = start;
        let mut from = u0;
        for _ in 0..=m {
            let (_, _, a, b) = segs[s];
            let end = if forward { b } else { a };
            if (point(s, end) - x).norm() >= rho {
                let (lo, hi) = if forward { (from, b) } else { (a, from) };
                return Ok((s, crossing(s, lo, hi, forward)));
            }
            s = if forward { (s + 1) % m } else { (s + m - 1) % m };
            from = if forward { segs[s].2 } else { segs[s].3 };
        }
        Err(BemError::Domain(format!(
            "ball of radius {rho} contains the whole boundary"
        )))
    };
    let (sf, uf) = walk(true)?;
    let (sb, ub) = walk(false)?;
    let mut pieces = vec![(sf, uf, segs[sf].3)];
    let between = if sf == sb { m - 1 } else { (sb + m - sf - 1) % m };
    for j in 1..=between {
        let s = (sf + j) % m;
        pieces.push((s, segs[s].2, segs[s].3));
    }
    pieces.push((sb, segs[sb].2, ub));

    let k = material.consts();
    let mut total = [0.0; 4];
    for (s, a, b) in pieces {
        if b <= a {
            continue;
        }
        let (kp, gs, _, _) = segs[s];
        let geo = boundary.patch(kp).geometry();
        let pt = |u: f64| geo.eval_in_span(gs, u).point;
        let regions = classify_and_subdivide(kp, a, b, x, None, &pt, quad);
        let f = |u: f64, out: &mut [f64]| {
            let cp = geo.eval_in_span(gs, u);
            let n = Vec2::new(cp.tangent.y, -cp.tangent.x) / cp.jacobian;
            let t = k.t(cp.point - x, n);
            for c in 0..4 {
                out[c] = t[c] * cp.jacobian;
            }
        };
        let v = integrate_regions(f, &regions, 4, quad)?;
        for c in 0..4 {
            total[c] -= v[c];
        }
    }
    Ok(Mat2::new(total[0], total[1], total[2], total[3]))
}
