use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] darkmkt::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config {path}: {detail}")]
    Config { path: PathBuf, detail: String },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for invalid input, 2 for solver failure, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        use darkmkt::Error as E;
        match self {
            CliError::Io { .. } => 3,
            CliError::Config { .. } | CliError::Usage(_) => 1,
            CliError::Model(e) => match e {
                E::NoConvergence { .. }
                | E::Infeasible(_)
                | E::BlowUp { .. }
                | E::Roots(_)
                | E::Singular(_)
                | E::Consistency(_)
                | E::Dominance(_) => 2,
                _ => 1,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
