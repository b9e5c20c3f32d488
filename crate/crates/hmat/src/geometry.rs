/// Axis-parallel box in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl BoundingBox {
    pub fn new(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Self { lo, hi }
    }

    /// Degenerate box of a single point.
    pub fn point(p: [f64; 2]) -> Self {
        Self { lo: p, hi: p }
    }

    /// Identity element of [`BoundingBox::union`].
    pub fn empty() -> Self {
        Self {
            lo: [f64::INFINITY; 2],
            hi: [f64::NEG_INFINITY; 2],
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            lo: [self.lo[0].min(other.lo[0]), self.lo[1].min(other.lo[1])],
            hi: [self.hi[0].max(other.hi[0]), self.hi[1].max(other.hi[1])],
        }
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    /// Axis of largest extent; ties go to the lower axis.
    pub fn longest_axis(&self) -> usize {
        if self.extent(1) > self.extent(0) {
            1
        } else {
            0
        }
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.lo[0] + self.hi[0]), 0.5 * (self.lo[1] + self.hi[1])]
    }

    /// Length of the diagonal.
    pub fn diam(&self) -> f64 {
        self.extent(0).hypot(self.extent(1))
    }

    /// Euclidean distance between the two boxes (zero if they touch).
    pub fn dist(&self, other: &Self) -> f64 {
        let gap = |a: usize| (other.lo[a] - self.hi[a]).max(self.lo[a] - other.hi[a]).max(0.0);
        gap(0).hypot(gap(1))
    }

    pub fn contains(&self, other: &Self) -> bool {
        (0..2).all(|a| self.lo[a] <= other.lo[a] && other.hi[a] <= self.hi[a])
    }
}

/// `min(diam B_t, diam B_s) <= eta * dist(B_t, B_s)`, never for touching boxes.
pub fn admissible(t: &BoundingBox, s: &BoundingBox, eta: f64) -> bool {
    let d = t.dist(s);
    d > 0.0 && t.diam().min(s.diam()) <= eta * d
}
