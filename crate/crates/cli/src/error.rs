use std::fmt;
use std::path::Path;

/// Failure classes, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Io(String),
    Regime(String),
    Numerical(String),
    Other(String),
}

impl CliError {
    pub fn parse(origin: &Path, e: impl fmt::Display) -> Self {
        CliError::Parse(format!("{}: {e}", origin.display()))
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Other(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Io(_) => 3,
            CliError::Regime(_) => 4,
            CliError::Numerical(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Regime(m) => write!(f, "regime error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
            CliError::Other(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<srnn::Error> for CliError {
    fn from(e: srnn::Error) -> Self {
        use srnn::Error as E;
        let msg = e.to_string();
        match e {
            E::Parse { .. } | E::Serde(_) => CliError::Parse(msg),
            E::Io { .. } => CliError::Io(msg),
            E::Regime(_) | E::DegenerateDirection { .. } => CliError::Regime(msg),
            E::Numerical(_) => CliError::Numerical(msg),
            E::Domain(_) | E::Dimension { .. } | E::EmptyDataset => CliError::Other(msg),
        }
    }
}
