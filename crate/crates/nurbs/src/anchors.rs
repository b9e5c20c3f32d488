use num_traits::Num;

use crate::{KnotVector, NurbsError, Result};

/// Treatment of the first and last function of a basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndKind {
    /// The field continues across the basis ends; end anchors stay put.
    Continuous,
    /// The field is independent on each side of the ends (C⁻¹ there), so the
    /// end anchors are shifted inwards like interior discontinuities.
    Discontinuous,
}

/// One anchor per basis function.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    pub greville: Vec<f64>,
    pub offsets: Vec<f64>,
    pub anchors: Vec<f64>,
}

impl AnchorSet {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.anchors.windows(2).all(|w| w[0] < w[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

fn small<T: Num>(n: usize) -> T {
    (0..n).fold(T::zero(), |acc, _| acc + T::one())
}

/// Offsets of the Greville abscissae of discontinuous functions.
///
/// A function whose support starts (ends) with `p + 1` equal knots jumps at
/// its Greville abscissa. Its abscissa is placed at the right (left) end of
/// its value cluster in the sorted union `û` of knots and abscissae, and
/// shifted by the mean of the differences to its `L` neighbours on either
/// side (`L = 1` for `p < 3`, else 2), the window being clamped at the ends
/// of `û`. Generic so that it can be checked in exact arithmetic.
pub fn anchor_offsets<T>(knots: &[T], p: usize, ends: EndKind) -> Vec<T>
where
    T: Num + Clone + PartialOrd,
{
    let n = knots.len() - p - 1;
    let pt: T = small(p);
    let greville: Vec<T> = (0..n)
        .map(|i| {
            let run = &knots[i + 1..=i + p];
            if run[0] == run[p - 1] {
                run[0].clone()
            } else {
                run.iter().cloned().fold(T::zero(), |a, b| a + b) / pt.clone()
            }
        })
        .collect();
    let mut merged: Vec<T> = knots.iter().chain(greville.iter()).cloned().collect();
    merged.sort_by(|a, b| a.partial_cmp(b).expect("comparable knots"));
    let window = if p < 3 { 1 } else { 2 };
    let denom: T = small(2 * window + 1);

    (0..n)
        .map(|i| {
            let side = if knots[i] == knots[i + p] {
                Some(Side::Right)
            } else if knots[i + 1] == knots[i + p + 1] {
                Some(Side::Left)
            } else {
                None
            };
            let is_end = i == 0 || i == n - 1;
            let side = match side {
                Some(s) if !is_end || ends == EndKind::Discontinuous => s,
                _ => return T::zero(),
            };
            let g = &greville[i];
            let lo = merged.iter().position(|v| v == g).expect("abscissa in û");
            let hi = merged.iter().rposition(|v| v == g).expect("abscissa in û");
            let at = if side == Side::Left { lo } else { hi };
            let mut sum = T::zero();
            for l in 1..=window {
                if at >= l {
                    sum = sum + (merged[at - l].clone() - merged[at].clone());
                }
                if at + l < merged.len() {
                    sum = sum + (merged[at + l].clone() - merged[at].clone());
                }
            }
            sum / denom.clone()
        })
        .collect()
}

/// Greville abscissae plus discontinuity offsets.
///
/// The offset rule keeps anchors apart for `p <= 3`; for higher orders a
/// C⁻¹ knot followed closely by a simple knot can make an offset anchor reach
/// its neighbour, which is reported rather than repaired.
pub fn greville_anchors(kv: &KnotVector, ends: EndKind) -> Result<AnchorSet> {
    let greville = kv.greville();
    let offsets = anchor_offsets(kv.knots(), kv.degree(), ends);
    let anchors: Vec<f64> = greville.iter().zip(&offsets).map(|(g, a)| g + a).collect();
    for (j, &x) in anchors.iter().enumerate() {
        let (lo, hi) = kv.support(j);
        if x < lo || x > hi {
            return Err(NurbsError::CoincidentAnchors(j, j));
        }
        if j > 0 && anchors[j - 1] >= x {
            return Err(NurbsError::CoincidentAnchors(j - 1, j));
        }
    }
    Ok(AnchorSet {
        greville,
        offsets,
        anchors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuous_basis_has_no_offsets() {
        let kv = KnotVector::new(vec![0., 0., 0., 1., 2., 2., 3., 3., 3.], 2).unwrap();
        let a = greville_anchors(&kv, EndKind::Continuous).unwrap();
        assert!(a.offsets.iter().all(|&o| o == 0.0));
        assert!(a.is_strictly_increasing());
    }

    #[test]
    fn discontinuous_pair_is_separated() {
        let kv = KnotVector::new(vec![0., 0., 0., 1., 2., 2., 2., 3., 3., 3.], 2).unwrap();
        let a = greville_anchors(&kv, EndKind::Continuous).unwrap();
        assert_eq!(a.greville[3], 2.0);
        assert_eq!(a.greville[4], 2.0);
        assert!((a.offsets[3] + 1.0 / 6.0).abs() < 1e-15);
        assert!((a.offsets[4] - 1.0 / 6.0).abs() < 1e-15);
        assert!(a.is_strictly_increasing());
    }

    #[test]
    fn discontinuous_ends_move_inwards() {
        let kv = KnotVector::new(vec![0., 0., 0., 1., 2., 2., 2.], 2).unwrap();
        let a = greville_anchors(&kv, EndKind::Discontinuous).unwrap();
        assert!(a.offsets[0] > 0.0);
        assert!(a.offsets[a.len() - 1] < 0.0);
        assert!(a.offsets[1..a.len() - 1].iter().all(|&o| o == 0.0));
    }

    #[test]
    fn cubic_uses_two_neighbours() {
        let kv = KnotVector::new(vec![0., 0., 0., 0., 1., 2., 2., 2., 2., 3., 3., 3., 3.], 3).unwrap();
        let a = greville_anchors(&kv, EndKind::Continuous).unwrap();
        let g = &a.greville;
        assert_eq!(g[4], 2.0);
        assert_eq!(g[5], 2.0);
        assert!(a.offsets[4] < 0.0 && a.offsets[5] > 0.0);
        assert!(a.is_strictly_increasing());
    }

    #[test]
    fn quartic_offset_can_reach_its_neighbour() {
        let kv = KnotVector::new(
            vec![0., 0., 0., 0., 0., 4., 4., 4., 4., 4., 8., 40., 40., 40., 40., 40.],
            4,
        )
        .unwrap();
        let off = anchor_offsets(kv.knots(), 4, EndKind::Continuous);
        let g = kv.greville();
        assert_eq!(g[5] + off[5], g[6]);
        assert_eq!(
            greville_anchors(&kv, EndKind::Continuous),
            Err(NurbsError::CoincidentAnchors(5, 6))
        );
    }
}
