use thiserror::Error;

/// Errors raised by kernel construction, gluing, certification and sampling.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("label {label:?} appears more than once")]
    DuplicateLabel { label: String },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("matrix is not Hermitian: entries ({row}, {col}) and ({col}, {row}) differ by {deviation:e}")]
    NotHermitian {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("label sets must intersect in exactly one label, found {shared:?}")]
    IntersectionNotSingleton { shared: Vec<String> },

    #[error("glue label {label:?} is not shared by both operands")]
    GlueLabelNotShared { label: String },

    #[error("diagonal entry at basepoint {label:?} is {re}{im:+}i, expected 1")]
    BasepointNotUnit { label: String, re: f64, im: f64 },

    #[error("basepoint {label:?} has no real positive diagonal entry to normalize by")]
    BasepointNotPositive { label: String },

    #[error("label {label:?} not found")]
    LabelNotFound { label: String },

    #[error("eigensolver failed to converge on a {dim}x{dim} matrix")]
    NumericalFailure { dim: usize },

    #[error("kernel is not positive semidefinite (min eigenvalue {min_eigenvalue:e}, threshold {threshold:e})")]
    NotPsd { min_eigenvalue: f64, threshold: f64 },

    #[error("covariance cannot be factored (min eigenvalue {min_eigenvalue:e}, threshold {threshold:e})")]
    FactorizationFailure { min_eigenvalue: f64, threshold: f64 },

    #[error("realizations use different basepoints {first:?} and {second:?}")]
    BasepointMismatch { first: String, second: String },

    #[error("label {label:?} occurs in both realizations away from the basepoint")]
    LabelCollision { label: String },

    #[error("sample batch has {rows} rows, at least {required} needed")]
    EmptyBatch { rows: usize, required: usize },

    #[error("sample count must be at least 1")]
    InvalidSampleCount,

    #[error("real-mode sampling requires a kernel with zero imaginary parts")]
    RealModeRequiresRealKernel,

    #[error("gluing graph is not a tree: {reason}")]
    NotATree { reason: String },

    #[error("invalid tolerance {value}: must be finite and positive")]
    InvalidTolerance { value: f64 },
}

impl KernelError {
    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            KernelError::DuplicateLabel { .. } => "DuplicateLabel",
            KernelError::DimensionMismatch { .. } => "DimensionMismatch",
            KernelError::NotHermitian { .. } => "NotHermitian",
            KernelError::IntersectionNotSingleton { .. } => "IntersectionNotSingleton",
            KernelError::GlueLabelNotShared { .. } => "GlueLabelNotShared",
            KernelError::BasepointNotUnit { .. } => "BasepointNotUnit",
            KernelError::BasepointNotPositive { .. } => "BasepointNotPositive",
            KernelError::LabelNotFound { .. } => "LabelNotFound",
            KernelError::NumericalFailure { .. } => "NumericalFailure",
            KernelError::NotPsd { .. } => "NotPsd",
            KernelError::FactorizationFailure { .. } => "FactorizationFailure",
            KernelError::BasepointMismatch { .. } => "BasepointMismatch",
            KernelError::LabelCollision { .. } => "LabelCollision",
            KernelError::EmptyBatch { .. } => "EmptyBatch",
            KernelError::InvalidSampleCount => "InvalidSampleCount",
            KernelError::RealModeRequiresRealKernel => "RealModeRequiresRealKernel",
            KernelError::NotATree { .. } => "NotATree",
            KernelError::InvalidTolerance { .. } => "InvalidTolerance",
        }
    }

    /// True for failures of a mathematical property (positivity, convergence)
    /// as opposed to malformed or inconsistent input.
    pub fn is_mathematical(&self) -> bool {
        matches!(
            self,
            KernelError::NumericalFailure { .. }
                | KernelError::NotPsd { .. }
                | KernelError::FactorizationFailure { .. }
        )
    }
}

pub type Result<T, E = KernelError> = std::result::Result<T, E>;
