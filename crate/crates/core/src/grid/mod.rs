//! Uniform-grid substrate: the rasterized domain, its distance field, discrete
//! calculus on cell-centered scalars and face-staggered vectors, and weighted norms.

mod calculus;
mod distance;
mod domain;
mod field;
mod norm;
pub mod pgm;
mod sum;

pub use domain::dist;
pub use norm::Magnitudes;
pub use calculus::{divergence, gradient, inner_scalar, inner_vector, jacobian_magnitude};
pub use distance::{distance_transform, exact_edt_squared, DistanceField};
pub use domain::{label_components, rasterize_predicate, Ball, BoundingBox, GridDomain, GridShape};
pub use field::{BoundaryCondition, ScalarField, VectorField};
pub use norm::{weighted_lp_norm, weighted_lp_norm_values, WeightedNorm};
pub use sum::{compensated_sum, NeumaierSum};
