//! The four subcommands.

use std::fmt::Write as _;
use std::time::Instant;

use bem::assembly::Discretisation;
use bem::harness::{
    level_boundary, mesh_parameter, run_study, solve_system, uniform_boundary, TestSetting, CSV_HEADER,
};
use bem::patches::{Boundary, FieldKind, KnownData, Layout};
use bem::system::{c_sub, compression_report, HSystem};
use bem::Vec2;
use clap::Subcommand;
use nurbs::{predicted_op_count, KnotVector, NurbsBasis, NurbsCurve, OpCounter, OpKind};

use crate::config::{GeometrySource, RunConfig, Settings};
use crate::geometry::GeometryFile;
use crate::Result;

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Convergence study on a manufactured solution.
    Converge(Settings),
    /// Storage of the hierarchical system across levels.
    Compress(Settings),
    /// Counted against predicted geometry operations for p = 1..5.
    OpsCount(Settings),
    /// Boundary fields of one level at the collocation points.
    Solve(Settings),
}

impl Command {
    pub fn settings(&self) -> &Settings {
        match self {
            Self::Converge(s) | Self::Compress(s) | Self::OpsCount(s) | Self::Solve(s) => s,
        }
    }

    pub fn run(&self, cfg: &RunConfig) -> Result<String> {
        match self {
            Self::Converge(_) => converge(cfg),
            Self::Compress(_) => compress(cfg),
            Self::OpsCount(_) => ops_count(),
            Self::Solve(_) => solve(cfg),
        }
    }
}

fn setting_and_curves(cfg: &RunConfig) -> Result<(TestSetting, Vec<NurbsCurve>)> {
    Ok(match &cfg.geometry {
        GeometrySource::Builtin(name) => (TestSetting::builtin(cfg.problem, *name), name.curves()?),
        GeometrySource::File(path) => {
            let file = GeometryFile::load(path)?;
            (file.setting(cfg.problem)?, file.curves()?)
        }
    })
}

pub fn converge(cfg: &RunConfig) -> Result<String> {
    let (setting, curves) = setting_and_curves(cfg)?;
    Ok(run_study(&curves, &setting, &cfg.study())?.to_csv(cfg.timings))
}

/// Built-in geometries carry constant known data; files keep theirs.
fn data_boundary(cfg: &RunConfig) -> Result<Boundary> {
    Ok(match &cfg.geometry {
        GeometrySource::Builtin(name) => uniform_boundary(
            &name.curves()?,
            cfg.problem.bc(),
            KnownData::Constant(Vec2::new(0.0, -1.0)),
            false,
        )?,
        GeometrySource::File(path) => GeometryFile::load(path)?.boundary()?,
    })
}

/// Standard columns; the error and rate columns stay empty.
pub fn compress(cfg: &RunConfig) -> Result<String> {
    let study = cfg.study();
    let base = data_boundary(cfg)?;
    let mut out = format!("{CSV_HEADER}\n");
    for level in cfg.first_level..cfg.first_level + cfg.levels {
        let start = Instant::now();
        let boundary = level_boundary(&base, &study, level)?;
        let h = mesh_parameter(&boundary, &study.quadrature)?;
        let iso = Layout::new(&boundary.isoparametric_known()?, &study.material)?;
        let disc = Discretisation::new(boundary, study.material, study.quadrature)?;
        let sys = HSystem::build(&disc, &study.hmatrix)?;
        let layout = disc.layout();
        let r = compression_report(sys.dense_bytes(), sys.storage_bytes(), c_sub(layout, &iso))?;
        let secs = if cfg.timings {
            format!("{:.3}", start.elapsed().as_secs_f64())
        } else {
            String::new()
        };
        writeln!(
            out,
            "{level},{h:.6e},{},{},,,{:.6},{:.6},{:.6},{secs}",
            layout.n(),
            layout.m(),
            r.c_h,
            r.c_sub,
            r.c_tot
        )
        .expect("writing to a String");
    }
    Ok(out)
}

/// Rational curve of order `p` with an interior knot.
fn sample_curve(p: usize) -> Result<NurbsCurve> {
    let mut k = vec![0.0; p + 1];
    k.push(0.37);
    k.extend(std::iter::repeat_n(1.0, p + 1));
    let n = p + 2;
    let weights = (0..n).map(|i| 1.0 + 0.25 * (i % 2) as f64).collect();
    let pts = (0..n).map(|i| Vec2::new(i as f64, (i * i % 3) as f64)).collect();
    Ok(NurbsCurve::new(NurbsBasis::new(KnotVector::new(k, p)?, weights)?, pts)?)
}

pub const OPS_HEADER: &str = "kind,p,predicted,counted";

pub fn ops_count() -> Result<String> {
    let mut out = format!("{OPS_HEADER}\n");
    for kind in OpKind::ALL {
        for p in 1..=5 {
            let c = sample_curve(p)?;
            let mut counter = OpCounter::new();
            c.eval_counted(kind, 0.61, &mut counter)?;
            writeln!(out, "{kind},{p},{},{}", predicted_op_count(kind, p), counter.count())
                .expect("writing to a String");
        }
    }
    Ok(out)
}

pub const SOLVE_HEADER: &str = "patch,u,x,y,u_x,u_y,t_x,t_y";

/// Solves the finest level of the configured range. Built-in geometries
/// carry the data of the manufactured solution.
pub fn solve(cfg: &RunConfig) -> Result<String> {
    let study = cfg.study();
    let base = match &cfg.geometry {
        GeometrySource::Builtin(name) => {
            let s = TestSetting::builtin(cfg.problem, *name);
            let b = s.boundary(&name.curves()?)?;
            s.validate(&b)?;
            b
        }
        GeometrySource::File(path) => GeometryFile::load(path)?.boundary()?,
    };
    let boundary = level_boundary(&base, &study, cfg.first_level + cfg.levels - 1)?;
    let disc = Discretisation::new(boundary, study.material, study.quadrature)?;
    let sol = solve_system(&disc, None, &study)?;
    let layout = disc.layout();
    let (disp, trac) = (&sol.displacement, &sol.traction);
    let mut out = format!("{SOLVE_HEADER}\n");
    for point in &layout.collocation.points {
        let (k, u) = point.locations[0];
        let patch = disc.boundary().patch(k);
        let field = |kind: FieldKind| -> Result<Vec2> {
            let coeffs: Vec<Vec2> = if kind == patch.unknown_kind() {
                match kind {
                    FieldKind::Displacement => layout.disp_global[k].iter().map(|&g| disp[g]).collect(),
                    FieldKind::Traction => layout.trac_global[k].iter().map(|&t| trac[t]).collect(),
                }
            } else {
                patch.project_known(disc.material())?
            };
            Ok(patch.field_value(kind, &coeffs, u)?)
        };
        let d = field(FieldKind::Displacement)?;
        let t = field(FieldKind::Traction)?;
        writeln!(
            out,
            "{k},{u:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            point.x.x, point.x.y, d.x, d.y, t.x, t.y
        )
        .expect("writing to a String");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bem::harness::GeometryName;

    fn config(geometry: &str, problem: &str, levels: usize) -> RunConfig {
        RunConfig::from_settings(Settings {
            geometry: Some(geometry.into()),
            problem: Some(problem.into()),
            levels: Some(levels),
            backend: Some("dense".into()),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn ops_table_matches_closed_forms() {
        let csv = ops_count().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(OPS_HEADER));
        let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
        assert_eq!(rows.len(), 20);
        for r in rows {
            assert_eq!(r[2], r[3], "{r:?}");
        }
    }

    #[test]
    fn converge_rows_follow_levels() {
        let csv = converge(&config("circle", "direct_neumann", 4)).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 5);
        let h: Vec<f64> = lines[1..]
            .iter()
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        for w in h.windows(2) {
            assert!((w[1] / w[0] - 0.5).abs() < 0.03, "{h:?}");
        }
    }

    #[test]
    fn compress_reports_growing_subparametric_ratio() {
        let mut cfg = config("tunnel", "direct_neumann", 3);
        cfg.backend = bem::harness::Backend::HMatrix;
        let csv = compress(&cfg).unwrap();
        let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
        assert_eq!(rows.len(), 3);
        let c_sub: Vec<f64> = rows.iter().map(|r| r[7].parse().unwrap()).collect();
        assert!(c_sub.windows(2).all(|w| w[1] > w[0]), "{c_sub:?}");
        assert!(rows
            .iter()
            .all(|r| r[4].is_empty() && r[5].is_empty() && r[9].is_empty()));
    }

    #[test]
    fn solved_boundary_matches_manufactured_traction_data() {
        let cfg = config("circle", "direct_dirichlet", 5);
        let csv = solve(&cfg).unwrap();
        let setting = TestSetting::builtin(cfg.problem, GeometryName::Circle);
        let m = bem::kernels::Material::rock();
        let mut worst = 0.0f64;
        let mut size = 0.0f64;
        for line in csv.lines().skip(1) {
            let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            let x = Vec2::new(f[2], f[3]);
            let exact = bem::patches::point_force_field(&m, &setting.sources, x, x.normalize(), FieldKind::Traction);
            worst = worst.max((Vec2::new(f[6], f[7]) - exact).norm());
            size = size.max(exact.norm());
        }
        assert!(worst < 0.01 * size, "{worst} of {size}");
    }

    #[test]
    fn file_geometry_runs() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/circle.toml");
        let csv = converge(&config(path, "indirect_v", 1)).unwrap();
        assert_eq!(csv.lines().count(), 2);
        let csv = solve(&config(path, "direct_neumann", 1)).unwrap();
        assert!(csv.lines().count() > 4);
    }
}
