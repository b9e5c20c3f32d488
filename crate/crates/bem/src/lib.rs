pub mod assembly;
mod error;
pub mod harness;
pub mod kernels;
pub mod patches;
pub mod quadrature;
pub mod system;

pub use error::BemError;

pub type Vec2 = nurbs::Vec2;
pub type Result<T> = std::result::Result<T, BemError>;
