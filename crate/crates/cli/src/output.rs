//! Atomic file output.

use crate::error::CliError;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Output directory that must exist before anything is written.
#[derive(Clone, Debug)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn open(root: &Path) -> Result<Self, CliError> {
        if !root.is_dir() {
            return Err(CliError::MissingOutputDir(root.to_path_buf()));
        }
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes through a temporary file in the same directory, then renames it into place.
    pub fn write(&self, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
        let target = self.path(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.root).map_err(|e| CliError::io(&self.root, e))?;
        tmp.write_all(contents).map_err(|e| CliError::io(tmp.path(), e))?;
        tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
        tmp.persist(&target).map_err(|e| CliError::io(&target, e.error))?;
        Ok(target)
    }

    pub fn write_json<T: serde::Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutputDir::open(dir.path()).unwrap();
        out.write("a.txt", b"one").unwrap();
        out.write("a.txt", b"two").unwrap();
        assert_eq!(std::fs::read(out.path("a.txt")).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn missing_directory_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let err = OutputDir::open(&dir.path().join("nope")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
