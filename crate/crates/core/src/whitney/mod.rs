//! Dyadic Whitney decomposition of a grid domain, the chain tree toward a
//! center point, and the mean-zero splitting of a right-hand side along it.

mod decompose;
mod transfer;
mod tree;

pub use decompose::{whitney_decompose, whitney_decompose_with, WhitneyCube, WhitneyDecomposition, SIGMA};
pub use transfer::{decompose_rhs, Piece, RhsDecomposition};
pub use tree::{build_tree, TreeExport, WhitneyTree};
