use std::fmt;

/// CLI failure, mapped one-to-one onto process exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Library error or divergence while running.
    Runtime(String),
    /// Scenario failed validation; every diagnostic is kept.
    Invalid(Vec<String>),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
            CliError::Invalid(d) => {
                write!(f, "invalid scenario ({} problem{})", d.len(), if d.len() == 1 { "" } else { "s" })?;
                for m in d {
                    write!(f, "\n  {m}")?;
                }
                Ok(())
            }
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<egt_core::Error> for CliError {
    fn from(e: egt_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
