use thiserror::Error;

/// Errors raised by the comb metrology library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate subsystem label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("subsystem `{0}` has invalid dimension 0")]
    ZeroDimension(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("label list is not a permutation of the subsystem labels")]
    NotPermutation,

    #[error("operator is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("operator is not a density operator: {0}")]
    NotDensity(String),

    #[error("state is not normalized (norm {norm:.12})")]
    NotNormalized { norm: f64 },

    #[error("ports `{0}` share a label but have the same role")]
    RoleCollision(String),

    #[error("port `{0}` is left unlinked")]
    UnlinkedPort(String),

    #[error("invalid port specification: {0}")]
    InvalidPorts(String),

    #[error("Kraus operators are not trace non-increasing (excess {excess:.3e})")]
    NotTraceNonIncreasing { excess: f64 },

    #[error("parameter {theta} outside the admissible domain [{lo}, {hi}]")]
    OutsideDomain { theta: f64, lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quantum Fisher information is zero; the estimation error is unbounded")]
    UnboundedError,
}

pub type Result<T> = std::result::Result<T, Error>;
