//! Geometry files: patches with knots, weighted control points, boundary
//! condition and known data, plus optional manufactured-solution points.
//!
//! ```toml
//! [[patch]]
//! order = 2
//! knots = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0]
//! points = [[1.0, 0.0, 1.0], [1.0, 1.0, 0.7071067811865476], [0.0, 1.0, 1.0]]
//! bc = "neumann"
//! known = { type = "constant", value = [0.0, -1.0] }
//!
//! [test]
//! sources = [{ position = [0.2, 0.1], force = [1.0, 0.0] }]
//! checks = [[0.3, 0.3]]
//! ```

use std::path::Path;

use bem::harness::{TestKind, TestSetting};
use bem::patches::{BcKind, Boundary, KnownData, SubparametricPatch};
use bem::Vec2;
use nurbs::{KnotVector, NurbsBasis, NurbsCurve};
use serde::Deserialize;

use crate::config::read;
use crate::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    #[serde(rename = "patch")]
    pub patches: Vec<PatchSpec>,
    pub test: Option<TestSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchSpec {
    pub order: usize,
    pub knots: Vec<f64>,
    /// `(x, y, w)` per control point.
    pub points: Vec<[f64; 3]>,
    pub bc: BcSpec,
    #[serde(default)]
    pub known: KnownSpec,
    /// Known data refined together with the unknowns.
    #[serde(default)]
    pub complex: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcSpec {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum KnownSpec {
    #[default]
    Zero,
    Constant {
        value: [f64; 2],
    },
    Linear {
        start: [f64; 2],
        end: [f64; 2],
    },
    /// Trace of the field of point forces.
    Source {
        sources: Vec<SourceSpec>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub position: [f64; 2],
    pub force: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSpec {
    pub sources: Vec<SourceSpec>,
    #[serde(default)]
    pub checks: Vec<[f64; 2]>,
}

fn v(a: [f64; 2]) -> Vec2 {
    Vec2::new(a[0], a[1])
}

fn loads(s: &[SourceSpec]) -> Vec<(Vec2, Vec2)> {
    s.iter().map(|s| (v(s.position), v(s.force))).collect()
}

impl PatchSpec {
    pub fn curve(&self) -> Result<NurbsCurve> {
        let kv = KnotVector::new(self.knots.clone(), self.order)?;
        let weights = self.points.iter().map(|p| p[2]).collect();
        let pts = self.points.iter().map(|p| Vec2::new(p[0], p[1])).collect();
        Ok(NurbsCurve::new(NurbsBasis::new(kv, weights)?, pts)?)
    }

    pub fn bc(&self) -> BcKind {
        match self.bc {
            BcSpec::Dirichlet => BcKind::Dirichlet,
            BcSpec::Neumann => BcKind::Neumann,
        }
    }

    pub fn known(&self) -> KnownData {
        match &self.known {
            KnownSpec::Zero => KnownData::Zero,
            KnownSpec::Constant { value } => KnownData::Constant(v(*value)),
            KnownSpec::Linear { start, end } => KnownData::Linear {
                start: v(*start),
                end: v(*end),
            },
            KnownSpec::Source { sources } => KnownData::PointForces(loads(sources)),
        }
    }
}

impl GeometryFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let file: Self = toml::from_str(text).map_err(|source| CliError::Parse {
            path: origin.to_string(),
            source,
        })?;
        if file.patches.is_empty() {
            return Err(CliError::Geometry(format!("{origin}: no [[patch]] entries")));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read(path)?, &path.display().to_string())
    }

    pub fn curves(&self) -> Result<Vec<NurbsCurve>> {
        self.patches
            .iter()
            .enumerate()
            .map(|(k, p)| p.curve().map_err(|e| CliError::Geometry(format!("patch[{k}]: {e}"))))
            .collect()
    }

    /// Boundary with the conditions and data as written.
    pub fn boundary(&self) -> Result<Boundary> {
        let patches = self
            .patches
            .iter()
            .zip(self.curves()?)
            .map(|(p, c)| SubparametricPatch::new(c, p.bc(), p.known(), p.complex))
            .collect::<bem::Result<Vec<_>>>()?;
        Ok(Boundary::new(patches)?)
    }

    /// Manufactured-solution setting from the `[test]` table.
    pub fn setting(&self, kind: TestKind) -> Result<TestSetting> {
        let t = self
            .test
            .as_ref()
            .ok_or_else(|| CliError::Geometry("geometry file has no [test] table with source points".into()))?;
        Ok(TestSetting {
            kind,
            sources: loads(&t.sources),
            checks: t.checks.iter().map(|&c| v(c)).collect(),
        })
    }
}
