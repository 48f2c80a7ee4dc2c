//! Dynamics of the degree-two quasiregular maps `H(z) = h(z)²`, where `h`
//! is the affine stretch by `K > 1` in the direction `θ`.
//!
//! The crate computes the fixed rays of `H` and the bifurcation at `K_θ`,
//! iterates the induced circle map and its Blaschke model, tracks the complex
//! dilatation of iterates as a chain of disk automorphisms, partitions the
//! plane into escaping and attracted points, and reports trace invariants
//! that rule out quasiconformal conjugacies.

pub mod angle;
pub mod blaschke;
pub mod circle;
pub mod error;
pub mod fixed_rays;
pub mod mobius;
pub mod obstruction;
pub mod params;
pub mod plane;

pub use angle::CircleAngle;
pub use error::{Error, Result};
pub use params::{ComplexPoint, MapParams};
