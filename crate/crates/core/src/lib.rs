//! Discrete divergence solvers on John domains via Whitney decompositions.

pub mod error;
pub mod grid;
pub mod john;
pub mod linalg;
pub mod whitney;
pub mod divsolve;
pub mod experiments;
pub mod poincare;

pub use error::{Error, Result};
