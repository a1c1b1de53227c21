use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit count {0} outside supported range 1..={max}", max = crate::statevec::MAX_QUBITS)]
    QubitCount(usize),

    #[error("qubit index {index} out of range for a {num_qubits}-qubit register")]
    QubitIndex { index: usize, num_qubits: usize },

    #[error("control and target must differ (both {0})")]
    ControlIsTarget(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("amplitude count {0} is not a power of two")]
    AmplitudeCount(usize),

    #[error("duplicate measurement target {0}")]
    DuplicateTarget(usize),

    #[error("outcome {outcome} on qubit {qubit} has zero probability")]
    ImpossibleOutcome { qubit: usize, outcome: u8 },

    #[error("length mismatch in {what}: expected {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("label {0} is not a binary class index")]
    InvalidLabel(usize),

    #[error("expectation pair ({z}, {y}) is not a pure RX state")]
    InconsistentExpectations { z: f64, y: f64 },

    #[error("teleported weight {index} could not be decoded: {source}")]
    WeightTransfer {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("ring hand-off failed at round {round}, client {client}: {source}")]
    HandOff {
        round: usize,
        client: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
