use thiserror::Error;

use crate::grid::CellId;

#[derive(Debug, Error)]
pub enum RrmError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("corner nodes {first:?} and {second:?} share cell {cell:?}")]
    CornerSeparation {
        cell: CellId,
        first: [f64; 2],
        second: [f64; 2],
    },

    #[error("patch unavailable around cell {cell:?}: {reason}")]
    PatchUnavailable { cell: CellId, reason: String },

    #[error("basis construction failed at cell {cell:?}: cubic residual {residual:e}")]
    CubicResidual { cell: CellId, residual: f64 },

    #[error("coefficient error at ({x}, {y}): {reason}")]
    Coefficient { x: f64, y: f64, reason: String },

    #[error("solver error: {0}")]
    Solver(String),

    #[error("eigen pencil error: {0}")]
    Pencil(String),

    #[error("found only {found} of {requested} admissible eigenvalues")]
    PartialEigen {
        requested: usize,
        found: usize,
        lambdas: Vec<f64>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, RrmError>;
