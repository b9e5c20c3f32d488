use std::fmt;
use std::str::FromStr;

use crate::NurbsError;

/// Sink for multiplication/division tallies on the counted evaluation path.
pub trait Tally {
    fn add(&mut self, n: u64);
}

/// Zero-sized tally used by the uninstrumented hot path.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoTally;

impl Tally for NoTally {
    #[inline(always)]
    fn add(&mut self, _: u64) {}
}

/// Running count of multiplications and divisions. One per worker.
#[derive(Debug, Default, Clone)]
pub struct OpCounter {
    count: u64,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn reset(&mut self) {
        self.count = 0;
    }
}

impl Tally for OpCounter {
    #[inline]
    fn add(&mut self, n: u64) {
        self.count += n;
    }
}

/// Geometry evaluations whose cost is tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    BsplinePoint,
    BsplineTangent,
    NurbsPoint,
    NurbsTangent,
}

impl OpKind {
    pub const ALL: [OpKind; 4] = [
        OpKind::BsplinePoint,
        OpKind::BsplineTangent,
        OpKind::NurbsPoint,
        OpKind::NurbsTangent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::BsplinePoint => "bspline_point",
            OpKind::BsplineTangent => "bspline_tangent",
            OpKind::NurbsPoint => "nurbs_point",
            OpKind::NurbsTangent => "nurbs_tangent",
        }
    }

    pub fn is_rational(self) -> bool {
        matches!(self, OpKind::NurbsPoint | OpKind::NurbsTangent)
    }

    pub fn is_tangent(self) -> bool {
        matches!(self, OpKind::BsplineTangent | OpKind::NurbsTangent)
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OpKind {
    type Err = NurbsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OpKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| NurbsError::UnknownKind(s.to_string()))
    }
}

/// Closed-form multiplication/division count for one curve evaluation of order `p`.
pub fn predicted_op_count(kind: OpKind, p: usize) -> u64 {
    let p = p as u64;
    let twice = match kind {
        OpKind::BsplinePoint => 3 * p * p + 5 * p + 2,
        OpKind::BsplineTangent => 3 * p * p + 3 * p + 6,
        OpKind::NurbsPoint => 3 * p * p + 9 * p + 6,
        OpKind::NurbsTangent => 3 * p * p + 15 * p + 14,
    };
    twice / 2
}
