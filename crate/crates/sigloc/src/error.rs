use std::fmt;

/// Failures surfaced by the command line tool, mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Configuration problems, all of them at once. Exit code 2.
    Config(Vec<String>),
    /// A numerical check failed: gap violation, oracle disagreement, too
    /// many excluded samples. Exit code 1.
    Compute(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) | CliError::Io(_) => 1,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(vec![msg.into()])
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(errs) => {
                write!(f, "configuration error{}:", if errs.len() == 1 { "" } else { "s" })?;
                for e in errs {
                    write!(f, "\n  - {e}")?;
                }
                Ok(())
            }
            CliError::Compute(msg) => write!(f, "computation failed: {msg}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<sigloc_core::Error> for CliError {
    fn from(e: sigloc_core::Error) -> Self {
        use sigloc_core::Error as E;
        match e {
            E::InvalidParameter(_) | E::CriticalParameters(_) | E::ParityMismatch { .. } | E::InvalidGeometry(_) => {
                CliError::config(e.to_string())
            }
            other => CliError::Compute(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Compute(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Compute(format!("json: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
