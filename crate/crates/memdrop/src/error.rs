use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        // Surface underlying I/O failures as such so exit codes stay honest.
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                _ => unreachable!("is_io_error implies Io kind"),
            }
        } else {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::Parse {
                line,
                msg: e.to_string(),
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
