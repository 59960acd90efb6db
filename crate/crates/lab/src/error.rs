use std::path::{Path, PathBuf};

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] higher_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// A file exists but its contents do not parse.
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("unknown preset {name:?} (expected one of: {known})")]
    UnknownPreset { name: String, known: String },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Checkpoint(String),
}

impl LabError {
    pub fn kind(&self) -> &'static str {
        match self {
            LabError::Core(e) => e.kind(),
            LabError::Io { .. } => "io",
            LabError::Format { .. } => "format",
            LabError::UnknownPreset { .. } | LabError::Usage(_) => "usage",
            LabError::Checkpoint(_) => "checkpoint",
        }
    }

    /// Usage and configuration mistakes exit with status 2.
    pub fn exit_code(&self) -> u8 {
        match self.kind() {
            "usage" | "config" | "parse" => 2,
            _ => 1,
        }
    }

    pub(crate) fn format(path: &Path, message: impl ToString) -> Self {
        LabError::Format {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }
}

pub(crate) fn io(path: &Path) -> impl FnOnce(std::io::Error) -> LabError + '_ {
    move |source| LabError::Io {
        path: path.to_path_buf(),
        source,
    }
}
