use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unnormalizable: state vector has zero norm")]
    Unnormalizable,

    #[error("non-finite amplitude or matrix entry")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("subsystem dimensions must be positive and nonempty")]
    InvalidDims,

    #[error("slot {slot} out of range for {num_slots} subsystems")]
    SlotOutOfRange { slot: usize, num_slots: usize },

    #[error("operator is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("not a projector: {0}")]
    NotProjector(String),

    #[error("not a projective family: {0}")]
    NotFamily(String),

    #[error("vectors are not an orthonormal basis: {0}")]
    NotOrthonormal(String),

    #[error("operator is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("outcome {outcome} out of range for family of size {size}")]
    OutcomeOutOfRange { outcome: usize, size: usize },

    #[error("impossible outcome: probability {0:e} is below tolerance")]
    ImpossibleOutcome(f64),

    #[error("expectation value has imaginary part {0:e}")]
    NonRealProbability(f64),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("state space too large: {0}")]
    TooLarge(String),

    #[error("singular point: amplitude evaluated at a slit position")]
    SingularPoint,

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("would re-measure pointer: slot {0} carries a pointer label")]
    PointerSlot(usize),

    #[error("invalid branch ledger: {0}")]
    InvalidLedger(String),
}

pub type Result<T> = std::result::Result<T, Error>;
