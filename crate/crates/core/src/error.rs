use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}, byte {offset}: {message}")]
    Parse {
        line: usize,
        offset: usize,
        message: String,
    },

    #[error("cyclic blank-node structure through {node}")]
    CyclicBlankNode { node: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown node: {0}")]
    UnknownNode(String),

    #[error("negative sampling infeasible: graph has no non-edges")]
    NegativeSamplingInfeasible,

    #[error("not enough non-edges for negative sampling: need {needed}, have {available}")]
    NotEnoughNonEdges { needed: usize, available: usize },

    #[error(
        "eigensolver did not converge after {iterations} iterations (residual norm {residual:e})"
    )]
    EigenNonConvergence { iterations: usize, residual: f64 },

    #[error("non-finite loss at epoch {epoch} (last finite loss {last_finite})")]
    NonFiniteLoss { epoch: usize, last_finite: f64 },

    #[error("X^T W X is singular even with ridge {ridge:e}; increase the ridge term")]
    SingularHessian { ridge: f64 },

    #[error("logistic regression did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    LogisticNonConvergence {
        iterations: usize,
        gradient_norm: f64,
    },

    #[error("versions share no node IRIs")]
    NoOverlap,

    #[error("malformed embedding file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
