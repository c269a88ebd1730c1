use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the toolkit reports. Loader errors carry enough location
/// (line, column, byte offset) to point at the offending input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("time {time:.9} s is outside the interpolable range [{start:.9}, {end:.9}]")]
    Domain { time: f64, start: f64, end: f64 },

    #[error("{} point time(s) outside the trajectory range [{start:.9}, {end:.9}]: {}", times.len(), format_times(times))]
    PointTimes { times: Vec<f64>, start: f64, end: f64 },

    #[error("IMU coverage error: {0}")]
    Coverage(String),

    #[error("{path}: format error: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("{path}: truncated record at byte offset {offset}")]
    Truncated { path: PathBuf, offset: usize },

    #[error("{path}: filename stem is not a nanosecond timestamp")]
    Naming { path: PathBuf },

    #[error("{path}: sidecar has {found} entries, expected {expected}")]
    Sidecar { path: PathBuf, expected: usize, found: usize },

    #[error("{path}:{line}:{column}: parse error: {msg}")]
    Parse { path: PathBuf, line: usize, column: usize, msg: String },

    #[error("{path}:{line}: timestamps are not strictly increasing")]
    Order { path: PathBuf, line: usize },

    #[error("{path}:{line}: rotation is not orthonormal (|RtR - I| = {deviation:e})")]
    Geometry { path: PathBuf, line: usize, deviation: f64 },

    #[error("no translated image for frame {frame_id} at {path}")]
    Lookup { frame_id: String, path: PathBuf },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn format_times(times: &[f64]) -> String {
    const SHOWN: usize = 8;
    let mut s = times.iter().take(SHOWN).map(|t| format!("{t:.6}")).collect::<Vec<_>>().join(", ");
    if times.len() > SHOWN {
        s.push_str(", ...");
    }
    s
}

/// Coarse grouping used by front-ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Format,
    Trajectory,
    Degenerate,
    Input,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Format { .. }
            | Error::Truncated { .. }
            | Error::Naming { .. }
            | Error::Sidecar { .. }
            | Error::Parse { .. }
            | Error::Order { .. }
            | Error::Geometry { .. }
            | Error::Lookup { .. }
            | Error::Io { .. } => ErrorKind::Format,
            Error::Domain { .. } | Error::PointTimes { .. } | Error::Coverage(_) => ErrorKind::Trajectory,
            Error::Degenerate(_) => ErrorKind::Degenerate,
            Error::Input(_) => ErrorKind::Input,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
