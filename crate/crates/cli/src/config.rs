//! Run configuration from an optional TOML file and command-line overrides.

use std::path::{Path, PathBuf};

use bem::harness::{Backend, GeometryName, StudyConfig, TestKind};
use bem::kernels::Material;
use bem::patches::Refinement;
use bem::quadrature::QuadratureConfig;
use bem::system::HConfig;
use clap::Args;
use serde::Deserialize;

use crate::{CliError, Result};

/// Settings shared by every subcommand. Unset values come from the
/// `--config` file, then from the defaults.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    /// Built-in geometry (circle, tunnel) or a geometry file.
    #[arg(long)]
    pub geometry: Option<String>,
    /// indirect_v, indirect_k, direct_neumann or direct_dirichlet.
    #[arg(long)]
    pub problem: Option<String>,
    /// Order of the field bases.
    #[arg(long)]
    pub order: Option<usize>,
    /// Number of refinement levels.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Refinements applied before the first level.
    #[arg(long)]
    pub first_level: Option<usize>,
    /// midpoint, elevation or bezier.
    #[arg(long)]
    pub refinement: Option<String>,
    #[arg(long)]
    pub eps_q: Option<f64>,
    #[arg(long)]
    pub eps_h: Option<f64>,
    #[arg(long)]
    pub eps_lu: Option<f64>,
    #[arg(long)]
    pub eps_s: Option<f64>,
    /// Admissibility parameter.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Leaf size of the cluster trees.
    #[arg(long)]
    pub nmin: Option<usize>,
    /// dense or hmatrix.
    #[arg(long)]
    pub backend: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Fill the seconds column with wall times.
    #[arg(long)]
    #[serde(default)]
    pub timings: bool,
    /// TOML file with any of the settings above.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Settings {
    /// Fields set here win over those of `base`.
    pub fn over(self, base: Settings) -> Settings {
        Settings {
            geometry: self.geometry.or(base.geometry),
            problem: self.problem.or(base.problem),
            order: self.order.or(base.order),
            levels: self.levels.or(base.levels),
            first_level: self.first_level.or(base.first_level),
            refinement: self.refinement.or(base.refinement),
            eps_q: self.eps_q.or(base.eps_q),
            eps_h: self.eps_h.or(base.eps_h),
            eps_lu: self.eps_lu.or(base.eps_lu),
            eps_s: self.eps_s.or(base.eps_s),
            eta: self.eta.or(base.eta),
            nmin: self.nmin.or(base.nmin),
            backend: self.backend.or(base.backend),
            out: self.out.or(base.out),
            timings: self.timings || base.timings,
            config: self.config.or(base.config),
        }
    }

    pub fn from_file(path: &Path) -> Result<Settings> {
        let text = read(path)?;
        toml::from_str(&text).map_err(|source| CliError::Parse {
            path: path.display().to_string(),
            source,
        })
    }
}

pub(crate) fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeometrySource {
    Builtin(GeometryName),
    File(PathBuf),
}

impl GeometrySource {
    /// Built-in names first; anything that looks like a path is a file.
    pub fn parse(s: &str) -> Result<Self> {
        match s.parse::<GeometryName>() {
            Ok(name) => Ok(Self::Builtin(name)),
            Err(e) => {
                if s.contains('.') || s.contains('/') || Path::new(s).exists() {
                    Ok(Self::File(PathBuf::from(s)))
                } else {
                    Err(CliError::Config(e.to_string()))
                }
            }
        }
    }
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geometry: GeometrySource,
    pub problem: TestKind,
    pub order: usize,
    pub levels: usize,
    pub first_level: usize,
    pub refinement: Refinement,
    pub eps_q: f64,
    pub eps_h: f64,
    pub eps_lu: f64,
    pub eps_s: f64,
    pub eta: f64,
    pub n_min: usize,
    pub backend: Backend,
    pub out: Option<PathBuf>,
    pub timings: bool,
}

fn tolerance(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} = {v} must lie in (0, 1)")))
    }
}

impl RunConfig {
    /// Reads the `--config` file if given and validates the result.
    pub fn resolve(flags: Settings) -> Result<Self> {
        let merged = match &flags.config {
            Some(path) => {
                let file = Settings::from_file(path)?;
                flags.over(file)
            }
            None => flags,
        };
        Self::from_settings(merged)
    }

    pub fn from_settings(s: Settings) -> Result<Self> {
        let geometry = GeometrySource::parse(s.geometry.as_deref().unwrap_or("circle"))?;
        let problem = s
            .problem
            .as_deref()
            .unwrap_or("direct_neumann")
            .parse::<TestKind>()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let order = s.order.unwrap_or(2);
        if order == 0 {
            return Err(CliError::Config("order must be at least 1".into()));
        }
        let levels = s.levels.unwrap_or(4);
        if levels == 0 {
            return Err(CliError::Config("levels must be at least 1".into()));
        }
        let refinement = s
            .refinement
            .as_deref()
            .unwrap_or("midpoint")
            .parse::<Refinement>()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let eta = s.eta.unwrap_or(1.0);
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(CliError::Config(format!("eta = {eta} must lie in (0, 1]")));
        }
        let n_min = s.nmin.unwrap_or(8);
        if n_min == 0 {
            return Err(CliError::Config("nmin must be at least 1".into()));
        }
        let backend = s
            .backend
            .as_deref()
            .unwrap_or("hmatrix")
            .parse::<Backend>()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Self {
            geometry,
            problem,
            order,
            levels,
            first_level: s.first_level.unwrap_or(0),
            refinement,
            eps_q: tolerance("eps_q", s.eps_q.unwrap_or(1e-9))?,
            eps_h: tolerance("eps_h", s.eps_h.unwrap_or(1e-6))?,
            eps_lu: tolerance("eps_lu", s.eps_lu.unwrap_or(1e-1))?,
            eps_s: tolerance("eps_s", s.eps_s.unwrap_or(1e-6))?,
            eta,
            n_min,
            backend,
            out: s.out,
            timings: s.timings,
        })
    }

    pub fn study(&self) -> StudyConfig {
        StudyConfig {
            order: self.order,
            first_level: self.first_level,
            levels: self.levels,
            refinement: self.refinement,
            material: Material::rock(),
            quadrature: QuadratureConfig::with_eps(self.eps_q),
            backend: self.backend,
            hmatrix: HConfig {
                eps_h: self.eps_h,
                eps_lu: self.eps_lu,
                eps_s: self.eps_s,
                eta: self.eta,
                n_min: self.n_min,
                ..HConfig::default()
            },
        }
    }
}
