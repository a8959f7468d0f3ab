use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dangling reference to {kind} `{id}` ({context})")]
    DanglingReference {
        kind: &'static str,
        id: String,
        context: String,
    },

    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },

    #[error("`{id}` cannot reach a power plant in the pristine grid")]
    DisconnectedGrid { id: String },

    #[error("location ({x:.1}, {y:.1}) lies outside every wind cell")]
    OutOfExtent { x: f64, y: f64 },

    #[error("unknown road link `{0}`")]
    UnknownLink(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("no repair row for {kind} with damage {damage}")]
    MissingRepairRow { kind: String, damage: String },

    #[error("improvement is undefined for a zero baseline TRL")]
    UndefinedImprovement,

    #[error("replication exceeded the hard cap of {cap} hours")]
    HardCapExceeded {
        cap: u32,
        snapshot: Box<crate::engine::StateSnapshot>,
    },

    #[error("infeasible testbed parameters: {0}")]
    Infeasible(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;

impl SimError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        SimError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
