use std::fmt;

/// Failure of a CLI run, mapped onto a process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid flags or configuration values.
    Config(String),
    /// File system failure while writing reports.
    Io(std::io::Error),
    /// Numerical or runtime failure inside the library.
    Core(floquet_aaw::Error),
}

impl CliError {
    pub const CONFIG_EXIT: u8 = 64;
    pub const IO_EXIT: u8 = 4;
    pub const RUNTIME_EXIT: u8 = 3;

    pub fn config(e: floquet_aaw::Error) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => Self::CONFIG_EXIT,
            CliError::Io(_) => Self::IO_EXIT,
            CliError::Core(_) => Self::RUNTIME_EXIT,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<floquet_aaw::Error> for CliError {
    fn from(e: floquet_aaw::Error) -> Self {
        match e {
            floquet_aaw::Error::Domain(msg) => CliError::Config(msg),
            floquet_aaw::Error::UnknownExample { .. } => CliError::Config(e.to_string()),
            other => CliError::Core(other),
        }
    }
}
