use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CsbError {
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("circuit width {width} exceeds the dense channel cap of {cap} qubits")]
    Capacity { width: usize, cap: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("spectrum has no eigenpair with unequal phases; lift the degeneracy first")]
    DegenerateSpectrum,

    #[error("hard cycle gate `{gate}` admits no non-trivial local Pauli frame")]
    UnsupportedCycle { gate: String },

    #[error("mode set is empty: {0}")]
    EmptyModes(String),

    #[error("no sampled diagonal entries in the {0} subspace")]
    EmptySubspace(&'static str),

    #[error("missing eigenpair required to estimate {0}")]
    MissingPair(&'static str),

    #[error("non-finite signal value at L={0}")]
    NonFinite(usize),

    #[error("openqasm line {line}: {reason}")]
    Qasm { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, CsbError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> CsbError {
    CsbError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
