//! File access and the mapping from library errors to exit codes.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use bevkit::Error;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FORMAT: i32 = 3;
pub const EXIT_SHAPE: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Format {
        path: PathBuf,
        offset: usize,
        message: String,
    },
    Shape(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Format { .. } => EXIT_FORMAT,
            CliError::Shape(_) => EXIT_SHAPE,
            CliError::Failure(_) => EXIT_FAILURE,
        }
    }

    /// Attributes a decoding error to the file it came from.
    pub fn in_file(path: &Path) -> impl FnOnce(Error) -> CliError + '_ {
        move |e| match e {
            Error::Format { offset, message } => CliError::Format {
                path: path.to_path_buf(),
                offset,
                message,
            },
            other => CliError::from(other),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Format { path, offset, message } => {
                write!(f, "malformed file {} at byte {offset}: {message}", path.display())
            }
            CliError::Shape(m) => write!(f, "shape mismatch: {m}"),
            CliError::Failure(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_shape_error() {
            return CliError::Shape(e.to_string());
        }
        match e {
            Error::InvalidParameter(m) => CliError::Usage(m),
            Error::Format { offset, message } => CliError::Format {
                path: PathBuf::from("<input>"),
                offset,
                message,
            },
            other => CliError::Failure(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::Failure(format!("cannot read {}: {e}", path.display())))
}

/// Reads `path` and decodes it, attributing format errors to the file.
pub fn load<T>(path: &Path, decode: impl FnOnce(&[u8]) -> bevkit::Result<T>) -> CliResult<T> {
    decode(&read(path)?).map_err(CliError::in_file(path))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let fail = |e: std::io::Error| CliError::Failure(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}
