use swept_core::engines::EngineError;
use swept_core::substep::KernelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid run: {0}")]
    Spec(String),
    #[error("numerical blow-up: {0}")]
    BlowUp(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("engines disagree: {0}")]
    Mismatch(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl BenchError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Spec(_) => 2,
            BenchError::BlowUp(_) => 3,
            BenchError::Transport(_) => 4,
            BenchError::Mismatch(_) | BenchError::Io(_) | BenchError::Csv(_) => 1,
        }
    }
}

impl From<EngineError> for BenchError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Kernel(k) => BenchError::BlowUp(k.to_string()),
            EngineError::Plan(p) => BenchError::Spec(p.to_string()),
            EngineError::TransportCount { .. } => BenchError::Spec(e.to_string()),
            EngineError::State(_) => BenchError::Spec(e.to_string()),
            EngineError::Transport(_)
            | EngineError::Protocol(_)
            | EngineError::WorkerPanicked(_) => BenchError::Transport(e.to_string()),
        }
    }
}

impl From<KernelError> for BenchError {
    fn from(e: KernelError) -> Self {
        BenchError::BlowUp(e.to_string())
    }
}

impl From<swept_core::transport::TransportError> for BenchError {
    fn from(e: swept_core::transport::TransportError) -> Self {
        BenchError::Transport(e.to_string())
    }
}
