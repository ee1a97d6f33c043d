use gllab_core::LabError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error(transparent)]
    Lab(#[from] LabError),

    /// Outputs were written but every requested estimate is censored.
    #[error("censored results only: {0}")]
    CensoredOnly(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    /// 2 for bad input, 3 for numeric failure, 4 for range or censoring-only results.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::CensoredOnly(_) => 4,
            CliError::Lab(e) => match e {
                LabError::NumericFailure { .. } | LabError::NoSpectralGap { .. } => 3,
                LabError::Range(_) => 4,
                LabError::Domain(_)
                | LabError::Invariant(_)
                | LabError::DimensionMismatch { .. }
                | LabError::InsufficientData(_)
                | LabError::Unsupported(_) => 2,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Lab(LabError::Domain("p".into())).exit_code(), 2);
        assert_eq!(CliError::Lab(LabError::NoSpectralGap { ratio: 1.0, terms: 20 }).exit_code(), 3);
        assert_eq!(CliError::Lab(LabError::NumericFailure { routine: "svd", iterations: 9 }).exit_code(), 3);
        assert_eq!(CliError::Lab(LabError::Range("n".into())).exit_code(), 4);
        assert_eq!(CliError::CensoredOnly("all zero".into()).exit_code(), 4);
    }
}
