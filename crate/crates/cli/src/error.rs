use std::fmt;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

/// Everything that can stop a command. Usage, parse and I/O problems exit with 2,
/// library failures with 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Parse {
        path: Option<PathBuf>,
        line: Option<u64>,
        message: String,
    },
    Io {
        path: PathBuf,
        message: String,
    },
    Domain(ddtraj::Error),
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn parse(line: Option<u64>, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: None,
            line,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }

    /// Attaches a file path to a parse error that does not carry one yet.
    pub fn in_file(self, file: &Path) -> Self {
        match self {
            CliError::Parse {
                path: None,
                line,
                message,
            } => CliError::Parse {
                path: Some(file.to_path_buf()),
                line,
                message,
            },
            other => other,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            _ => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Parse { .. } => "parse",
            CliError::Io { .. } => "io",
            CliError::Domain(e) => match e {
                ddtraj::Error::Dimension(_) => "dimension",
                ddtraj::Error::Argument(_) => "argument",
                ddtraj::Error::NotObservable { .. } => "not_observable",
                ddtraj::Error::Weave { .. } => "weave",
                ddtraj::Error::UnsupportedRecovery(_) => "unsupported_recovery",
                ddtraj::Error::Linalg(_) => "linalg",
            },
        }
    }

    /// Single-line JSON record written to stderr on failure.
    pub fn to_json(&self) -> Value {
        let mut record = json!({ "error": self.kind(), "message": self.to_string() });
        match self {
            CliError::Parse { path, line, .. } => {
                if let Some(p) = path {
                    record["path"] = json!(p.display().to_string());
                }
                if let Some(l) = line {
                    record["line"] = json!(l);
                }
            }
            CliError::Io { path, .. } => record["path"] = json!(path.display().to_string()),
            _ => {}
        }
        record
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Parse {
                path,
                line,
                message,
            } => {
                if let Some(p) = path {
                    write!(f, "{}: ", p.display())?;
                }
                match line {
                    Some(l) => write!(f, "line {l}: {message}"),
                    None => f.write_str(message),
                }
            }
            CliError::Io { path, message } => write!(f, "{}: {message}", path.display()),
            CliError::Domain(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ddtraj::Error> for CliError {
    fn from(e: ddtraj::Error) -> Self {
        CliError::Domain(e)
    }
}
