use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad or missing configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Input data that violates a documented contract.
    #[error("data error: {0}")]
    Data(String),

    #[error("invalid coordinate: lat={lat}, lon={lon}")]
    InvalidCoordinate { lat: f64, lon: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("statistic undefined: {0}")]
    Degenerate(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv { path: path.into(), source }
    }

    pub fn in_stage(stage: &'static str, source: Error) -> Self {
        Error::Stage { stage, source: Box::new(source) }
    }

    /// Process exit code: 2 config/validation, 3 data, 4 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_)
            | Error::InvalidCoordinate { .. }
            | Error::Io { .. }
            | Error::Csv { .. }
            | Error::Degenerate(_) => 3,
            Error::Stage { source, .. } => source.exit_code(),
            Error::Internal(_) => 4,
        }
    }
}
