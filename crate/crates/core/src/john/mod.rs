//! Geometry of John domains on the grid: admissible-path estimates of the
//! John constant, the separation property, diameters of components cut off
//! by a ball, and dyadic Hausdorff-content thickness of the complement.

mod components;
mod path;
mod separation;
mod thickness;

pub use components::{component_diameter_test, ComponentDiameter};
pub use path::{
    default_samples, john_constant, quasihyperbolic_path, verify_witness, write_paths_csv, JohnAssessment, JohnOptions, SampleResult,
};
pub use separation::{separation_check, Curves, SampleSeparation, SeparationFailure, SeparationReport};
pub use thickness::{content_thickness, Thickness};
