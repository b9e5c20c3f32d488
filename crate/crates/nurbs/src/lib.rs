//! B-spline and NURBS curve bases for isogeometric boundary elements.
//!
//! Knot vectors are open (end knots repeated `p + 1` times). Evaluation
//! follows the Cox-de Boor triangle; rational derivatives use the quotient
//! rule written in terms of the weighted sums. Refinement (knot insertion,
//! order elevation) never changes the represented curve.

mod anchors;
mod basis;
mod bezier;
mod curve;
mod error;
mod knots;
mod ops;

pub use anchors::{anchor_offsets, greville_anchors, AnchorSet, EndKind};
pub use basis::{BasisValues, NurbsBasis, MAX_ORDER};
pub use bezier::{bezier_segments, BezierDecomposition, BezierSegment};
pub use curve::{interpolate, CurvePoint, NurbsCurve};
pub use error::NurbsError;
pub use knots::KnotVector;
pub use ops::{predicted_op_count, NoTally, OpCounter, OpKind, Tally};

/// Points and vectors in the plane.
pub type Vec2 = nalgebra::Vector2<f64>;

pub type Result<T> = std::result::Result<T, NurbsError>;
