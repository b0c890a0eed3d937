//! Library side of the `msjlab` command-line tool: grid-spec parsing, the
//! fixed-schema CSV writer, a dependency-free SVG plot emitter, and the
//! subcommand runners. The binary in `main.rs` is a thin wrapper.

pub mod csvout;
pub mod grid;
pub mod run;
pub mod svg;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] msjlab::Error),

    #[error("invalid grid spec: {0}")]
    Grid(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Exit status contract: 1 for config/validation problems, 2 for
    /// compute failures (caps, instability, solver trouble).
    pub fn exit_code(&self) -> i32 {
        use msjlab::Error as E;
        match self {
            CliError::Grid(_) | CliError::Usage(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Lib(e) => match e {
                E::InvalidConfig(_)
                | E::ConfigParse { .. }
                | E::NotCanonical(_)
                | E::NoLargeJobs
                | E::InvalidSimConfig(_) => 1,
                E::MaterializationCap { .. }
                | E::StateCapExceeded { .. }
                | E::SolverFailure { .. }
                | E::ReducibleChain { .. }
                | E::ApparentInstability { .. }
                | E::ConsistencyCheck(_) => 2,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
