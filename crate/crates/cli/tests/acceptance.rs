//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use bem::assembly::{Discretisation, OperatorSource, Side};
use bem::harness::{
    circle_curves, fit_rate, run_study, tunnel_curves, uniform_boundary, Backend, StudyConfig, TestKind, TestSetting,
};
use bem::kernels::Material;
use bem::patches::{BcKind, Boundary, KnownData, Layout, Refinement};
use bem::quadrature::QuadratureConfig;
use bem::system::{c_sub, direction_major, BlockSystem, HConfig, HSystem};
use bem::Vec2;
use hmat::{
    aca, approximate_block, truncation_rank, BlockKind, BlockTree, ClusterTree, DenseOracle, FarLeaf, Subdivision,
};
use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use nurbs::{
    anchor_offsets, bezier_segments, predicted_op_count, EndKind, KnotVector, NurbsBasis, NurbsCurve, OpCounter, OpKind,
};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// xorshift64*; a fixed seed keeps the sample set identical between runs.
struct Rng(u64);

impl Rng {
    fn next(&mut self) -> f64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        (self.0.wrapping_mul(0x2545_F491_4F6C_DD1D) >> 11) as f64 / (1u64 << 53) as f64
    }

    fn below(&mut self, n: usize) -> usize {
        (self.next() * n as f64) as usize % n
    }
}

fn random_basis(rng: &mut Rng) -> NurbsBasis {
    let p = 1 + rng.below(5);
    let mut inner: Vec<(f64, usize)> = (0..rng.below(5))
        .map(|_| (0.02 + 0.96 * rng.next(), 1 + rng.below(p)))
        .collect();
    inner.sort_by(|a, b| a.0.total_cmp(&b.0));
    inner.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-3);
    let mut k = vec![0.0; p + 1];
    for (v, m) in inner {
        k.extend(std::iter::repeat_n(v, m));
    }
    k.extend(std::iter::repeat_n(1.0, p + 1));
    let kv = KnotVector::new(k, p).unwrap();
    let w = (0..kv.num_basis()).map(|_| 0.3 + 2.7 * rng.next()).collect();
    NurbsBasis::new(kv, w).unwrap()
}

fn basis_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = Rng(0x9E37_79B9_7F4A_7C15);
    let (mut worst_sum, mut worst_fd, mut fd_checked) = (0.0f64, 0.0f64, 0);
    for _ in 0..1000 {
        let b = random_basis(&mut rng);
        let u = rng.next();
        let e = b.eval_nurbs(u).map_err(err)?;
        worst_sum = worst_sum.max((e.values().iter().sum::<f64>() - 1.0).abs());
        let h = 1e-6;
        let clear = b.knots().knots().iter().all(|&k| (k - u).abs() > 10.0 * h);
        if clear {
            let ep = b.eval_nurbs(u + h).map_err(err)?;
            let em = b.eval_nurbs(u - h).map_err(err)?;
            let scale = e.derivs().iter().fold(1.0f64, |m, d| m.max(d.abs()));
            for i in e.indices() {
                let fd = (ep.value_of(i) - em.value_of(i)) / (2.0 * h);
                worst_fd = worst_fd.max((fd - e.derivs()[i - e.first()]).abs() / scale);
            }
            fd_checked += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst_sum <= 1e-12 && worst_fd < 1e-6 && secs < 1.0,
        format!("max |Σ−1| {worst_sum:.1e}, max derivative error {worst_fd:.1e} ({fd_checked} samples), {secs:.3} s"),
    )
}

fn operation_counts() -> Outcome {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    for p in 1..=5usize {
        let mut k = vec![0.0; p + 1];
        k.push(0.4);
        k.extend(std::iter::repeat_n(1.0, p + 1));
        let n = p + 2;
        let basis = NurbsBasis::new(
            KnotVector::new(k, p).map_err(err)?,
            (0..n).map(|i| 1.0 + 0.1 * i as f64).collect(),
        )
        .map_err(err)?;
        let pts = (0..n).map(|i| Vec2::new(i as f64, (i % 2) as f64)).collect();
        let c = NurbsCurve::new(basis, pts).map_err(err)?;
        for kind in OpKind::ALL {
            for u in [0.0, 0.25, 0.4, 0.9, 1.0] {
                let mut counter = OpCounter::new();
                c.eval_counted(kind, u, &mut counter).map_err(err)?;
                if counter.count() != predicted_op_count(kind, p) {
                    mismatches.push(format!("{kind} p={p} u={u}: {}", counter.count()));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        mismatches.is_empty() && secs < 1.0,
        format!("4 kinds × p=1..5 exact, {secs:.3} s {mismatches:?}"),
    )
}

fn anchor_offsets_exact() -> Outcome {
    let k: Vec<Ratio<i64>> = [0, 0, 0, 1, 2, 2, 2, 3, 3, 3]
        .iter()
        .map(|&v| Ratio::from_integer(v))
        .collect();
    let off = anchor_offsets(&k, 2, EndKind::Continuous);
    let sixth = Ratio::new(1, 6);
    let nonzero: Vec<(usize, Ratio<i64>)> = off
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, o)| *o != Ratio::from_integer(0))
        .collect();
    check(
        nonzero == vec![(3, -sixth), (4, sixth)],
        format!("non-zero offsets {nonzero:?}"),
    )
}

fn bezier_merge() -> Outcome {
    let geo = KnotVector::new(vec![0., 0., 0., 0., 2., 4., 4., 4., 4.], 3).map_err(err)?;
    let pts = (0..5).map(|i| Vec2::new(i as f64, (i * i) as f64 * 0.1)).collect();
    let curve = NurbsCurve::new(NurbsBasis::bspline(geo), pts).map_err(err)?;
    let psi = KnotVector::new(vec![0., 0., 0., 0., 1., 2., 3., 4., 4., 4., 4.], 3).map_err(err)?;
    let phi = KnotVector::new(vec![0., 0., 0., 0., 0., 2., 2., 4., 4., 4., 4., 4.], 4).map_err(err)?;
    let d = bezier_segments(&curve, &[&psi, &phi]).map_err(err)?;
    let expected = [0., 0., 0., 0., 1., 1., 1., 2., 2., 2., 3., 3., 3., 4., 4., 4., 4.];
    check(d.knots.knots() == expected, format!("Ξ_h = {:?}", d.knots.knots()))
}

fn neumann_boundary(curves: &[NurbsCurve], p: usize, levels: usize, known: KnownData) -> Result<Boundary, String> {
    let mut b = uniform_boundary(curves, BcKind::Neumann, known, false)
        .map_err(err)?
        .with_order(p)
        .map_err(err)?;
    for _ in 0..levels {
        b.refine(Refinement::UniformMidpoint).map_err(err)?;
    }
    Ok(b)
}

fn closure() -> Outcome {
    let mut worst = 0.0f64;
    let material = Material::rock();
    let quad = QuadratureConfig::with_eps(1e-12);
    let geometries = [
        ("circle", circle_curves(1.0).map_err(err)?),
        ("tunnel", tunnel_curves().map_err(err)?),
    ];
    for (_, curves) in &geometries {
        for p in 1..=4 {
            let b = neumann_boundary(curves, p, 2, KnownData::Zero)?;
            let d = Discretisation::new(b, material, quad).map_err(err)?;
            let k = d.k_matrix().map_err(err)?;
            for i in 0..k.rows {
                worst = worst.max(k.row_sum(i).norm());
            }
        }
    }
    let mut ratios = Vec::new();
    for (name, curves, patch, u0) in [
        ("circle", &geometries[0].1, 1, 0.3),
        ("tunnel", &geometries[1].1, 2, 0.4),
    ] {
        let b = neumann_boundary(curves, 2, 0, KnownData::Zero)?;
        let scale = if name == "tunnel" { 4.0 } else { 1.0 };
        let errors: Vec<f64> = (0..5)
            .map(|j| {
                let rho = scale * 0.1 / 2f64.powi(j);
                bem::assembly::implied_free_term(&b, &material, patch, u0, rho, &quad)
                    .map(|c| (c - bem::kernels::free_term_smooth()).norm())
                    .map_err(err)
            })
            .collect::<Result<_, _>>()?;
        ratios.extend(errors.windows(2).map(|w| w[1] / w[0]));
    }
    let worst_ratio = ratios.iter().fold(0.0f64, |m, &r| m.max(r));
    check(
        worst <= 1e-10 && worst_ratio <= 0.55,
        format!("max row sum {worst:.1e} (p = 1..4, circle and tunnel); free term error ratio per halving ≤ {worst_ratio:.3}"),
    )
}

struct RateCase {
    label: &'static str,
    curves: Vec<NurbsCurve>,
    setting: TestSetting,
    order: usize,
    first_level: usize,
    target: f64,
}

fn rate_studies() -> Outcome {
    let circle = circle_curves(1.0).map_err(err)?;
    let tunnel = tunnel_curves().map_err(err)?;
    let case = |label, curves: &Vec<NurbsCurve>, setting, order, first_level, target| RateCase {
        label,
        curves: curves.clone(),
        setting,
        order,
        first_level,
        target,
    };
    let cases = [
        case(
            "circle V p=2",
            &circle,
            TestSetting::circle_indirect(TestKind::IndirectV, 1.0),
            2,
            5,
            4.0,
        ),
        case(
            "tunnel V p=2",
            &tunnel,
            TestSetting::tunnel_indirect(TestKind::IndirectV),
            2,
            5,
            4.0,
        ),
        case(
            "circle C+K p=2",
            &circle,
            TestSetting::circle_indirect(TestKind::IndirectK, 1.0),
            2,
            5,
            3.0,
        ),
        case(
            "tunnel C+K p=2",
            &tunnel,
            TestSetting::tunnel_indirect(TestKind::IndirectK),
            2,
            5,
            3.0,
        ),
        case(
            "circle Neumann p=2",
            &circle,
            TestSetting::circle_direct(TestKind::DirectNeumann, 1.0),
            2,
            5,
            3.0,
        ),
        case(
            "tunnel Neumann p=2",
            &tunnel,
            TestSetting::tunnel_direct(TestKind::DirectNeumann),
            2,
            5,
            3.0,
        ),
        case(
            "circle Neumann p=3",
            &circle,
            TestSetting::circle_direct(TestKind::DirectNeumann, 1.0),
            3,
            5,
            4.0,
        ),
        case(
            "tunnel Neumann p=3",
            &tunnel,
            TestSetting::tunnel_direct(TestKind::DirectNeumann),
            3,
            5,
            4.0,
        ),
        case(
            "circle Dirichlet p=2",
            &circle,
            TestSetting::circle_direct(TestKind::DirectDirichlet, 1.0),
            2,
            5,
            3.0,
        ),
        case(
            "tunnel Dirichlet p=2",
            &tunnel,
            TestSetting::tunnel_direct(TestKind::DirectDirichlet),
            2,
            5,
            3.0,
        ),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for c in &cases {
        let cfg = StudyConfig {
            order: c.order,
            first_level: c.first_level,
            levels: 3,
            backend: Backend::Dense,
            quadrature: QuadratureConfig::with_eps(1e-12),
            ..StudyConfig::default()
        };
        let report = run_study(&c.curves, &c.setting, &cfg).map_err(err)?;
        let rate = fit_rate(&report.h(), &report.errors()).map_err(err)?;
        let n = report.records.last().map_or(0, |r| r.n);
        let pass = (rate - c.target).abs() <= 0.5 && (1000..=2000).contains(&n);
        ok &= pass;
        lines.push(format!(
            "{}: {rate:.2} (target {} ± 0.5, n = {n}){}",
            c.label,
            c.target,
            if pass { "" } else { " ✗" }
        ));
    }
    check(ok, lines.join("; "))
}

fn tunnel_discretisation(levels: usize) -> Result<Discretisation, String> {
    let setting = TestSetting::tunnel_direct(TestKind::DirectNeumann);
    let b = neumann_boundary(
        &tunnel_curves().map_err(err)?,
        2,
        levels,
        KnownData::PointForces(setting.sources),
    )?;
    Discretisation::new(b, Material::rock(), QuadratureConfig::default()).map_err(err)
}

fn aca_fidelity() -> Outcome {
    let eps = 1e-6;
    let d = tunnel_discretisation(6)?;
    let layout = d.layout();
    let n = layout.n();
    let rows = ClusterTree::build(&d.row_boxes(), 8);
    let cols = rows.rebox(&d.column_boxes(&layout.unknowns).map_err(err)?);
    let tree = BlockTree::build(&rows, &cols, 1.0, Subdivision::Balanced);
    let source = OperatorSource::new(&d, layout.unknowns.clone(), Side::Lhs).map_err(err)?;
    let (mut blocks, mut worst_err, mut worst_excess) = (0, 0.0f64, i64::MIN);
    for leaf in tree.leaves().filter(|b| b.kind == BlockKind::Admissible) {
        let r = rows.indices(leaf.row).to_vec();
        let c = cols.indices(leaf.col).to_vec();
        let entries = source.entries(&r, &c).map_err(err)?;
        let approx = approximate_block(&source, &r, &c, eps);
        for (ab, far) in approx.iter().enumerate() {
            let m = DMatrix::from_fn(r.len(), c.len(), |i, j| entries[i * c.len() + j][ab]);
            let got = match far {
                FarLeaf::LowRank(rk) => rk.to_dense(),
                FarLeaf::Dense { matrix, .. } => matrix.clone(),
            };
            let norm = m.norm();
            if norm > 0.0 {
                worst_err = worst_err.max((&m - got).norm() / norm);
            }
            let mut sigma = m.clone().svd(false, false).singular_values.as_slice().to_vec();
            sigma.sort_by(|a, b| b.total_cmp(a));
            let svd_rank = truncation_rank(&sigma, eps) as i64;
            let aca_rank = aca(&mut DenseOracle(&m), eps).rk.rank() as i64;
            worst_excess = worst_excess.max(aca_rank - svd_rank);
            blocks += 1;
        }
    }
    check(
        blocks > 0 && n <= 1024 && worst_err <= 10.0 * eps && worst_excess <= 5,
        format!(
            "{blocks} admissible component blocks at n = {n}: max ‖M−ABᵀ‖/‖M‖ {worst_err:.1e}, max rank excess over SVD {worst_excess}"
        ),
    )
}

fn relative(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let size: f64 = b.iter().map(|y| y * y).sum();
    (diff / size).sqrt()
}

fn h_vs_dense() -> Outcome {
    let (eps_h, eps_s) = (1e-6, 1e-6);
    let cfg = HConfig {
        eps_h,
        eps_s,
        ..HConfig::default()
    };
    let bound = 10.0 * (eps_h + eps_s);
    let d = tunnel_discretisation(4)?;
    let dense = BlockSystem::build(&d).map_err(err)?;
    let h = HSystem::build(&d, &cfg).map_err(err)?;
    let l = direction_major(&dense.lhs);
    let mut rng = Rng(7);
    let x: Vec<f64> = (0..l.ncols()).map(|_| rng.next() - 0.5).collect();
    let dense_y = &l * DVector::from_column_slice(&x);
    let h_y = h.lhs.matvec(&x).map_err(err)?;
    let matvec = relative(&h_y, dense_y.as_slice());
    let h_rhs = h.rhs_vector().map_err(err)?;
    let rhs = relative(&h_rhs, dense.rhs_vector().as_slice());
    let dense_x = bem::system::to_direction_major(&dense.solve().map_err(err)?);
    let h_x = bem::system::to_direction_major(&h.solve(&cfg, true).map_err(err)?.coefficients);
    let solve = relative(&h_x, &dense_x);
    check(
        matvec <= bound && rhs <= bound && solve <= bound,
        format!("relative differences: matvec {matvec:.1e}, rhs {rhs:.1e}, solution {solve:.1e} (bound {bound:.0e})"),
    )
}

fn compression_trend() -> Outcome {
    let cfg = HConfig::default();
    let mut stats = Vec::new();
    for levels in [5, 7] {
        let d = tunnel_discretisation(levels)?;
        let h = HSystem::build(&d, &cfg).map_err(err)?;
        let n = d.layout().n() as f64;
        let s = h.lhs.storage_bytes() as f64;
        stats.push((n, h.lhs.dense_bytes() as f64 / s, s / (n * n.log2())));
    }
    let (small, large) = (stats[0], stats[1]);
    let growth = large.2 / small.2;
    check(
        large.1 > small.1 && small.1 > 1.0 && (0.25..=4.0).contains(&growth),
        format!(
            "c_H {:.2} at n = {} and {:.2} at n = {}; S/(n log₂ n) ratio {growth:.2}",
            small.1, small.0, large.1, large.0
        ),
    )
}

fn subparametric_ratio() -> Outcome {
    let mut b = neumann_boundary(
        &tunnel_curves().map_err(err)?,
        2,
        0,
        KnownData::Constant(Vec2::new(0.0, -1.0)),
    )?;
    let m = Material::rock();
    let mut ratios = Vec::new();
    for level in 0..=4 {
        if level > 0 {
            b.refine(Refinement::UniformMidpoint).map_err(err)?;
        }
        let sub = Layout::new(&b, &m).map_err(err)?;
        let iso = Layout::new(&b.isoparametric_known().map_err(err)?, &m).map_err(err)?;
        ratios.push(c_sub(&sub, &iso));
    }
    check(
        ratios.windows(2).all(|w| w[1] > w[0]) && ratios[4] > 4.0,
        format!("c_sub per level {ratios:.2?}"),
    )
}

fn preconditioning() -> Outcome {
    let d = tunnel_discretisation(6)?;
    let cfg = HConfig {
        eps_lu: 1e-1,
        ..HConfig::default()
    };
    let h = HSystem::build(&d, &cfg).map_err(err)?;
    let plain = h.solve(&cfg, false).map_err(err)?.iterations;
    let pre = h.solve(&cfg, true).map_err(err)?.iterations;
    let n = d.layout().n();
    check(
        n >= 512 && plain >= 2 * pre,
        format!("n = {n}: {plain} iterations without, {pre} with H-LU"),
    )
}

fn determinism() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_igabem"))
            .args(["converge", "--geometry", "tunnel", "--levels", "3"])
            .output()
            .map_err(err)
    };
    let (a, b) = (run()?, run()?);
    if !a.status.success() {
        return Err(String::from_utf8_lossy(&a.stderr).into_owned());
    }
    check(
        a.stdout == b.stdout && !a.stdout.is_empty(),
        format!("two converge runs, {} bytes each", a.stdout.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("basis partition of unity and derivatives", basis_correctness),
        ("operation counts", operation_counts),
        ("anchor offsets", anchor_offsets_exact),
        ("Bézier merge", bezier_merge),
        ("rigid-body closure", closure),
        ("convergence rates", rate_studies),
        ("ACA fidelity", aca_fidelity),
        ("H vs dense", h_vs_dense),
        ("compression trend", compression_trend),
        ("subparametric storage ratio", subparametric_ratio),
        ("H-LU preconditioning", preconditioning),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1} s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1} s]", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
