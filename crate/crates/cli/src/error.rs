use std::fmt;
use std::path::Path;

/// Exit status of a failed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    /// Bad flags, bad config or I/O failure.
    Usage = 2,
    /// Training produced a non-finite loss.
    Divergence = 3,
    /// Checkpoint or feature file problem.
    Model = 4,
    /// Malformed or empty score input.
    ScoreInput = 5,
}

impl ExitCode {
    fn label(self) -> &'static str {
        match self {
            ExitCode::Usage => "usage",
            ExitCode::Divergence => "divergence",
            ExitCode::Model => "model",
            ExitCode::ScoreInput => "score-input",
        }
    }
}

/// A failure reported as `error: <label>: <message>` on one line.
#[derive(Debug)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl CliError {
    pub fn new(code: ExitCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(ExitCode::Usage, message)
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Self::usage(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Keep the whole report on a single line.
        let flat = self.message.replace(['\n', '\r'], " ");
        write!(f, "error: {}: {}", self.code.label(), flat)
    }
}

pub type CliResult<T> = Result<T, CliError>;
