use crate::basis::MAX_ORDER;
use crate::{NurbsError, Result};

/// Open, non-decreasing knot vector of order `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    knots: Vec<f64>,
    degree: usize,
}

/// Refinement never places a new knot closer than this to an existing one.
pub const KNOT_SEPARATION: f64 = 1e-12;

impl KnotVector {
    pub fn new(knots: Vec<f64>, degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(NurbsError::InvalidKnots("order must be at least 1".into()));
        }
        if degree + 1 > MAX_ORDER {
            return Err(NurbsError::OrderTooHigh(degree));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(NurbsError::InvalidKnots("non-finite knot".into()));
        }
        if knots.len() < 2 * (degree + 1) {
            return Err(NurbsError::InvalidKnots(format!(
                "{} knots cannot form an open vector of order {degree}",
                knots.len()
            )));
        }
        if knots.windows(2).any(|w| w[0] > w[1]) {
            return Err(NurbsError::InvalidKnots("knots must be non-decreasing".into()));
        }
        let first = knots[0];
        let last = knots[knots.len() - 1];
        if first >= last {
            return Err(NurbsError::InvalidKnots("no non-zero knot span".into()));
        }
        let head = knots.iter().take_while(|&&k| k == first).count();
        let tail = knots.iter().rev().take_while(|&&k| k == last).count();
        if head != degree + 1 || tail != degree + 1 {
            return Err(NurbsError::InvalidKnots(format!(
                "end knots must be repeated exactly {} times (found {head} and {tail})",
                degree + 1
            )));
        }
        let inner = &knots[degree + 1..knots.len() - degree - 1];
        let mut i = 0;
        while i < inner.len() {
            let m = inner[i..].iter().take_while(|&&k| k == inner[i]).count();
            if m > degree + 1 {
                return Err(NurbsError::InvalidKnots(format!(
                    "interior knot {} has multiplicity {m} > {}",
                    inner[i],
                    degree + 1
                )));
            }
            i += m;
        }
        Ok(Self { knots, degree })
    }

    /// Open knot vector on `[a, b]` with `spans` equal spans.
    pub fn uniform(degree: usize, spans: usize, a: f64, b: f64) -> Result<Self> {
        let spans = spans.max(1);
        let mut knots = vec![a; degree + 1];
        for i in 1..spans {
            knots.push(a + (b - a) * i as f64 / spans as f64);
        }
        knots.extend(std::iter::repeat_n(b, degree + 1));
        Self::new(knots, degree)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    pub fn check_domain(&self, u: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if !(lo..=hi).contains(&u) {
            return Err(NurbsError::OutOfDomain { u, lo, hi });
        }
        Ok(())
    }

    /// Index `s` of the span with `knots[s] <= u < knots[s+1]`; the right end
    /// of the domain maps to the last non-zero span.
    pub fn find_span(&self, u: f64) -> Result<usize> {
        self.check_domain(u)?;
        let n = self.num_basis() - 1;
        if u >= self.knots[n + 1] {
            return Ok(n);
        }
        let (mut lo, mut hi) = (self.degree, n + 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if u < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(lo)
    }

    /// Multiplicity of `u` as a knot, by exact comparison.
    pub fn multiplicity(&self, u: f64) -> usize {
        self.knots.iter().filter(|&&k| k == u).count()
    }

    /// Distinct knot values with their multiplicities.
    pub fn distinct(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &k in &self.knots {
            match out.last_mut() {
                Some((v, m)) if *v == k => *m += 1,
                _ => out.push((k, 1)),
            }
        }
        out
    }

    /// Distinct interior knots with their multiplicities.
    pub fn interior(&self) -> Vec<(f64, usize)> {
        let d = self.distinct();
        d[1..d.len() - 1].to_vec()
    }

    /// Non-zero knot spans as `(span index, start, end)`.
    pub fn spans(&self) -> Vec<(usize, f64, f64)> {
        let p = self.degree;
        (p..self.num_basis())
            .filter(|&s| self.knots[s] < self.knots[s + 1])
            .map(|s| (s, self.knots[s], self.knots[s + 1]))
            .collect()
    }

    pub fn num_spans(&self) -> usize {
        self.spans().len()
    }

    /// Parametric support `[ξ_i, ξ_{i+p+1}]` of basis function `i`.
    pub fn support(&self, i: usize) -> (f64, f64) {
        (self.knots[i], self.knots[i + self.degree + 1])
    }

    /// Greville abscissae: averages of `p` consecutive knots.
    pub fn greville(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.num_basis())
            .map(|i| {
                let run = &self.knots[i + 1..=i + p];
                if run[0] == run[p - 1] {
                    run[0]
                } else {
                    (run.iter().sum::<f64>() / p as f64).clamp(run[0], run[p - 1])
                }
            })
            .collect()
    }

    /// Copy with `u` inserted once.
    pub fn with_inserted(&self, u: f64) -> Result<Self> {
        let (lo, hi) = self.domain();
        if u <= lo || u >= hi {
            return Err(NurbsError::OutOfDomain { u, lo, hi });
        }
        let mut knots = self.knots.clone();
        let pos = knots.partition_point(|&k| k <= u);
        knots.insert(pos, u);
        Self::new(knots, self.degree)
    }

    /// Copy with every distinct knot repeated once more and order `p + 1`.
    pub fn elevated(&self) -> Self {
        let mut knots = Vec::with_capacity(self.knots.len() + self.distinct().len());
        for (v, m) in self.distinct() {
            knots.extend(std::iter::repeat_n(v, m + 1));
        }
        Self {
            knots,
            degree: self.degree + 1,
        }
    }

    /// Midpoints of all non-zero spans.
    pub fn span_midpoints(&self) -> Vec<f64> {
        self.spans().iter().map(|&(_, a, b)| 0.5 * (a + b)).collect()
    }

    /// Whether `u` is too close to an existing (different) knot to be inserted.
    pub fn crowds(&self, u: f64) -> bool {
        self.knots.iter().any(|&k| k != u && (k - u).abs() < KNOT_SEPARATION)
    }
}
