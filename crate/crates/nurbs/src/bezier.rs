use crate::curve::bounding_box;
use crate::{KnotVector, NurbsCurve, NurbsError, Result, Vec2};

/// Control polygon of one polynomial (rational) piece of the geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct BezierSegment {
    pub start: f64,
    pub end: f64,
    pub points: Vec<Vec2>,
    pub weights: Vec<f64>,
}

/// Geometry split at every knot of itself and of the accompanying field bases.
#[derive(Debug, Clone, PartialEq)]
pub struct BezierDecomposition {
    pub knots: KnotVector,
    pub segments: Vec<BezierSegment>,
}

/// Decomposes `geometry` at the union of its own interior knots and those of
/// `fields`; every interior knot of the merged vector gets multiplicity equal
/// to the geometry order.
pub fn bezier_segments(geometry: &NurbsCurve, fields: &[&KnotVector]) -> Result<BezierDecomposition> {
    let p = geometry.degree();
    let range = geometry.domain();
    let mut cuts: Vec<f64> = geometry.knots().interior().iter().map(|&(v, _)| v).collect();
    for kv in fields {
        if kv.domain() != range {
            return Err(NurbsError::RangeMismatch(format!(
                "{:?} vs geometry {:?}",
                kv.domain(),
                range
            )));
        }
        cuts.extend(kv.interior().iter().map(|&(v, _)| v));
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite knots"));
    cuts.dedup();

    let mut curve = geometry.clone();
    for &c in &cuts {
        let have = curve.knots().multiplicity(c);
        if have > p {
            return Err(NurbsError::InvalidKnots(format!("geometry is discontinuous at {c}")));
        }
        for _ in have..p {
            curve = curve.insert_knot(c)?;
        }
    }

    let mut bounds = vec![range.0];
    bounds.extend(&cuts);
    bounds.push(range.1);
    let segments = bounds
        .windows(2)
        .enumerate()
        .map(|(s, w)| BezierSegment {
            start: w[0],
            end: w[1],
            points: curve.points()[s * p..=s * p + p].to_vec(),
            weights: curve.weights()[s * p..=s * p + p].to_vec(),
        })
        .collect();
    Ok(BezierDecomposition {
        knots: curve.knots().clone(),
        segments,
    })
}

impl BezierDecomposition {
    /// Axis-aligned box around the control points of all segments meeting
    /// the parametric interval `[a, b]`; it contains the curve piece.
    pub fn interval_box(&self, a: f64, b: f64) -> (Vec2, Vec2) {
        let pts: Vec<Vec2> = self
            .segments
            .iter()
            .filter(|s| s.end > a && s.start < b)
            .flat_map(|s| s.points.iter().copied())
            .collect();
        bounding_box(&pts)
    }

    /// Box around the geometry over the support of function `j` of `field`.
    pub fn support_box(&self, field: &KnotVector, j: usize) -> (Vec2, Vec2) {
        let (a, b) = field.support(j);
        self.interval_box(a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merged_vector_of_mixed_inputs() {
        let theta = KnotVector::new(vec![0., 0., 0., 0., 2., 4., 4., 4., 4.], 3).unwrap();
        let pts = (0..5).map(|i| Vec2::new(i as f64, (i * i) as f64 * 0.1)).collect();
        let geo = NurbsCurve::new(crate::NurbsBasis::bspline(theta), pts).unwrap();
        let psi = KnotVector::new(vec![0., 0., 0., 0., 1., 2., 3., 4., 4., 4., 4.], 3).unwrap();
        let phi = KnotVector::new(vec![0., 0., 0., 0., 0., 2., 2., 4., 4., 4., 4., 4.], 4).unwrap();
        let d = bezier_segments(&geo, &[&psi, &phi]).unwrap();
        assert_eq!(
            d.knots.knots(),
            &[0., 0., 0., 0., 1., 1., 1., 2., 2., 2., 3., 3., 3., 4., 4., 4., 4.]
        );
        assert_eq!(d.segments.len(), 4);
    }

    #[test]
    fn single_segment_is_unchanged() {
        let c = NurbsCurve::arc(Vec2::zeros(), 2.0, 0.1, 1.0).unwrap();
        let d = bezier_segments(&c, &[]).unwrap();
        assert_eq!(d.knots, *c.knots());
        assert_eq!(d.segments[0].points, c.points());
    }

    #[test]
    fn range_mismatch_is_rejected() {
        let c = NurbsCurve::arc(Vec2::zeros(), 2.0, 0.1, 1.0).unwrap();
        let other = KnotVector::new(vec![0., 0., 0., 2., 2., 2.], 2).unwrap();
        assert!(bezier_segments(&c, &[&other]).is_err());
    }

    #[test]
    fn line_support_box_is_exact() {
        let c = NurbsCurve::line(Vec2::new(0.0, 0.0), Vec2::new(4.0, 2.0));
        let field = KnotVector::uniform(1, 4, 0.0, 1.0).unwrap();
        let d = bezier_segments(&c, &[&field]).unwrap();
        let (lo, hi) = d.support_box(&field, 2);
        assert!((lo - Vec2::new(1.0, 0.5)).norm() < 1e-14);
        assert!((hi - Vec2::new(3.0, 1.5)).norm() < 1e-14);
    }
}
