use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}:{line}: {reason}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("seq {seq}: unexpected revert: {reason}")]
    UnexpectedRevert { seq: u64, reason: String },
    #[error("seq {seq}: expected revert \"{expected}\" but the command succeeded")]
    MissingRevert { seq: u64, expected: String },
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn parse(path: &Path, line: usize, reason: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.to_path_buf(),
            line,
            reason: reason.into(),
        }
    }

    pub fn other(msg: impl Into<String>) -> Self {
        CliError::Other(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Other(_) => 1,
            CliError::Parse { .. } => 2,
            CliError::UnexpectedRevert { .. } => 3,
            CliError::MissingRevert { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::other(format!("cannot read {}: {e}", path.display())))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::other(format!("cannot read {}: {e}", path.display())))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::other(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::other(format!("cannot write {}: {e}", path.display())))
}
