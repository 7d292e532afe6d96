use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid is CFL-unstable (dt = {dt:e} > dx^2/2 = {limit:e}); pass allow_unstable to override")]
    UnstableGrid { dt: f64, limit: f64 },

    #[error("noise array is {got_t}x{got_x}, grid needs {want_t}x{want_x}")]
    DimensionMismatch {
        got_t: usize,
        got_x: usize,
        want_t: usize,
        want_x: usize,
    },

    #[error("non-finite field value at time step {step}, cell {cell}")]
    BlowUp { step: usize, cell: usize },

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("ratio d/a undefined at (t = {t}, x = {x}, u = {u}): a vanishes but d = {d}")]
    RatioUndefined { t: f64, x: f64, u: f64, d: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("config line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("config field `{field}`: {msg}")]
    ConfigInvalid { field: String, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::ConfigInvalid {
            field: field.into(),
            msg: msg.into(),
        }
    }
}
