//! Zero-trace solutions of `div v = f`: local minimum-energy solvers on
//! dilated Whitney cubes assembled along the chain decomposition of `f`, a
//! global minimum-energy baseline, and the norm bookkeeping for the
//! solvability conditions.

mod norms;
mod region;
mod solvers;

pub use norms::{div_norms, residual, DivNorms};
pub use region::{LocalMethod, LocalSolution, RegionSystem, SolverOptions};
pub use solvers::{
    condition_report, local_solve, solve_global, solve_whitney, ConditionReport, ConditionRow,
    DivSolution, EstimateChains, GlobalSolver, Method, WhitneySolver,
};
