//! Sparse symmetric factorization for lattice operators.

mod ldl;
mod ordering;

pub use ldl::{SparseLdl, TripletBuilder};
pub use ordering::nested_dissection;
