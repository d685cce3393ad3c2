//! Domain-family generators, built-in right-hand sides, and the sweep harness
//! that tabulates John, Poincaré, Hardy, and solvability metrics.

mod domains;
mod patterns;
mod sweep;

pub use domains::{cantor_intervals, generate, DomainSpec, Family};
pub use patterns::{rhs, rhs_batch, RhsPattern};
pub use sweep::{run_sweep, MetricSpec, Row, SweepConfig, SweepResult, SCHEMA_VERSION};
