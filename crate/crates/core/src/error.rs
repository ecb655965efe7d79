use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("qubit index {qubit} out of range for a {qubit_count}-qubit register")]
    QubitOutOfRange { qubit: usize, qubit_count: usize },
    #[error("gate acts twice on qubit {0}")]
    DuplicateQubit(usize),
    #[error("parameter slot {slot} missing (only {available} parameters supplied)")]
    MissingParameter { slot: usize, available: usize },
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("circuit parameter slots are not contiguous: {0}")]
    ParameterSlots(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("amplitude encoding of row {row} failed: all entries are zero")]
    ZeroEncodingRow { row: usize },
    #[error("sample {sample}, patch ({patch_row}, {patch_col}) cannot be amplitude encoded: all entries are zero")]
    ZeroPatch {
        sample: usize,
        patch_row: usize,
        patch_col: usize,
    },
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("shot count must be positive")]
    ZeroShots,
    #[error("generator family {family} could not reach the success-probability floor after {retries} attempts")]
    Generation { family: usize, retries: usize },
    #[error("label {label} out of range (classes: {classes})")]
    Label { label: usize, classes: usize },
    #[error("non-finite loss at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize },
    #[error("malformed IDX data: {0}")]
    Idx(String),
    #[error("image is entirely zero")]
    ZeroImage,
    #[error("{0}")]
    Config(String),
}

pub type Result<T> = core::result::Result<T, Error>;
