use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rasterized mask splits into {components} components")]
    DisconnectedRaster { components: usize },
    #[error("no cell survived rasterization")]
    EmptyRaster,
    #[error("mask touches the array border; a one-cell exterior margin is required")]
    NoMargin,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cube {cube} cannot reach the root cube")]
    UnreachableCube { cube: usize },
    #[error("right-hand side is not mean-zero (mean {mean:e}, tolerance {tolerance:e})")]
    MeanNotZero { mean: f64, tolerance: f64 },
    #[error("overlap between cube {child} and its parent {parent} has no cells")]
    OverlapTooSmall { child: usize, parent: usize },
    #[error("sample {sample} cannot reach the center")]
    NoPath { sample: usize },
    #[error("({p}, {q}) is not a Sobolev triple in dimension {n}: {reason}")]
    NotASobolevTriple { p: f64, q: f64, n: usize, reason: String },
    #[error("iteration did not converge after {iterations} steps (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("whitney decomposition failed: {0}")]
    DecompositionFailed(String),
    #[error("div v differs from f: relative residual {residual:e}")]
    PreconditionResidual { residual: f64 },
    #[error("bad domain spec: {0}")]
    InvalidSpec(String),
    #[error("pgm: {0}")]
    Pgm(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
