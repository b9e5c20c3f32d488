//! Hierarchical matrices for collocation boundary element systems.
//!
//! Geometrically balanced cluster trees, block trees with the standard
//! admissibility condition, adaptive cross approximation, truncated-SVD
//! recompression and coarsening, matrix-vector products, an H-LU
//! factorisation and left-preconditioned GMRES.

mod aca;
mod block;
mod cluster;
mod error;
mod geometry;
mod gmres;
mod hmatrix;
mod lu;
mod rk;

pub use aca::{aca, AcaOutcome, DenseOracle, EntryOracle};
pub use block::{BlockKind, BlockNode, BlockTree, Subdivision};
pub use cluster::{Cluster, ClusterTree};
pub use error::HError;
pub use geometry::{admissible, BoundingBox};
pub use gmres::{gmres, GmresConfig, GmresSolution, LinearOperator};
pub use hmatrix::{approximate_block, BlockSource, BuildStats, DenseSource, FarLeaf, HMatrix, HNode};
pub use lu::{DenseLu, HLu};
pub use rk::{truncation_rank, RkMatrix};
