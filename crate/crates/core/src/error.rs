use thiserror::Error;

/// Errors produced by the descriptor, representation, and matching stack.
#[derive(Debug, Error)]
pub enum DcpError {
    /// Malformed file contents (bad magic, truncated payload, ...).
    #[error("format error: {0}")]
    Format(String),

    /// Well-formed input that this implementation does not handle.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Invalid configuration or parameter combination.
    #[error("config error: {0}")]
    Config(String),

    /// Missing or inconsistent input data.
    #[error("input error: {0}")]
    Input(String),

    /// Vector/matrix dimension mismatch.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Landmark constellation unusable for solving a transform.
    #[error("degenerate landmarks: {0}")]
    DegenerateLandmarks(String),

    /// Training data cannot identify the requested model.
    #[error("degenerate training data: {0}")]
    DegenerateTraining(String),

    /// Evaluation input lacks the variation the metric needs.
    #[error("degenerate evaluation input: {0}")]
    DegenerateEval(String),

    /// Numerical conditioning failure (near-zero eigenvalue, singular system).
    #[error("conditioning error: {0}")]
    Conditioning(String),

    /// Score undefined for the given operands (e.g. cosine of a zero vector).
    #[error("undefined similarity: {0}")]
    UndefinedSimilarity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DcpError {
    /// Process exit code class for the CLI: 2 config, 3 input, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            DcpError::Config(_) | DcpError::Dimension(_) => 2,
            DcpError::Format(_)
            | DcpError::Unsupported(_)
            | DcpError::Input(_)
            | DcpError::DegenerateLandmarks(_)
            | DcpError::Io(_) => 3,
            DcpError::DegenerateTraining(_)
            | DcpError::DegenerateEval(_)
            | DcpError::Conditioning(_)
            | DcpError::UndefinedSimilarity(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, DcpError>;
