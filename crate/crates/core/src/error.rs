use thiserror::Error;

#[derive(Debug, Error)]
pub enum PeaError {
    #[error("dimension mismatch: expected {expected} qubits, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("qubit index {index} out of range for {n_qubits}-qubit register")]
    QubitIndex { index: usize, n_qubits: usize },

    #[error("invalid Pauli string {0:?}")]
    PauliParse(String),

    #[error("product of anticommuting Pauli strings has an imaginary phase")]
    ImaginaryPhase,

    #[error("circuit is not Clifford: {0}")]
    NotClifford(String),

    #[error("invalid noise model: {0}")]
    NoiseModel(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid sampling request: {0}")]
    Sampling(String),

    #[error("signal lost at G = {gain}: |mean| = {mean:.3e} is within 3 standard errors ({stderr:.3e})")]
    SignalLost { gain: f64, mean: f64, stderr: f64 },

    #[error("expectation values change sign across the gain series")]
    SignInconsistent,

    #[error("invalid gain series: {0}")]
    Series(String),

    #[error("design error: {0}")]
    Design(String),

    #[error("integrator did not converge: {0}")]
    Convergence(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PeaError {
    /// Process exit code used by the `pea` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            PeaError::Config(_) | PeaError::PauliParse(_) | PeaError::NoiseModel(_) => 2,
            PeaError::Parameter(_) | PeaError::Io(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, PeaError>;
