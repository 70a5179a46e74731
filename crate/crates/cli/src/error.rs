use std::fmt;

/// A failed run, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// A check, certification or simulation failed (exit 2).
    Validation(String),
    /// The scheduling model has no feasible solution (exit 3).
    Infeasible(String),
    /// Unreadable, unwritable or schema-violating input (exit 4).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub fn schema(msg: impl Into<String>) -> CliError {
    CliError::Io(format!("schema: {}", msg.into()))
}
