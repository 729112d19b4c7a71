use std::path::{Path, PathBuf};

/// Failure of a CLI command, carrying its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] spadfusion_core::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    /// `path` context around a library error raised while reading or writing it.
    #[error("{path}: {source}")]
    File { path: PathBuf, source: spadfusion_core::Error },

    #[error("{0}")]
    Usage(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    /// 0 success, 2 user/config error, 3 I/O or file-format error, 4 numerical failure.
    pub fn exit_code(&self) -> u8 {
        use spadfusion_core::Error as E;
        let core = match self {
            CliError::Io { .. } => return 3,
            CliError::Usage(_) => return 2,
            CliError::Core(e) | CliError::File { source: e, .. } => e,
        };
        match core {
            E::Io(_) | E::BadMagic(_) | E::Unsupported { .. } | E::PayloadMismatch { .. } => 3,
            E::Numerical(_) => 4,
            _ => 2,
        }
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub(crate) fn file_err(path: &Path) -> impl FnOnce(spadfusion_core::Error) -> CliError + '_ {
    move |source| CliError::File { path: path.to_path_buf(), source }
}

/// Attaches `path` to library errors raised while interpreting its contents.
pub(crate) fn in_file(path: &Path) -> impl FnOnce(CliError) -> CliError + '_ {
    move |err| match err {
        CliError::Core(source) => CliError::File { path: path.to_path_buf(), source },
        other => other,
    }
}
