use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("label collision: '{0}' appears in both operands")]
    LabelCollision(String),
    #[error("label not found: '{0}'")]
    LabelNotFound(String),
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("operator is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("operator is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("RecordCapacityError: {0}")]
    RecordCapacity(String),
    #[error("locality violation: {0}")]
    LocalityViolation(String),
    #[error("protocol order error: {0}")]
    ProtocolOrder(String),
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
    #[error("unknown sweep parameter '{0}'")]
    UnknownParameter(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical invariant violated: {0}")]
    InvariantViolation(String),
}

impl LabError {
    /// True for errors caused by bad user input rather than by a broken
    /// numerical invariant inside the toolkit.
    pub fn is_config_error(&self) -> bool {
        !matches!(
            self,
            LabError::InvariantViolation(_) | LabError::NotHermitian { .. } | LabError::NotUnitary { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
