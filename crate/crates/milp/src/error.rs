use thiserror::Error;

use crate::solution::MilpSolution;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Node or time cap hit before the search closed. Carries the best
    /// assignment found so far (if any) and the proven upper bound.
    #[error("search limits exceeded (bound {bound})")]
    LimitsExceeded {
        incumbent: Option<Box<MilpSolution>>,
        bound: f64,
    },

    #[error("model does not have the expected structure: {0}")]
    StructureMismatch(String),

    #[error("heuristic found no feasible assignment")]
    NoFeasibleFound,

    #[error("simplex failed to converge after {0} iterations")]
    Numerical(usize),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
