use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Output directory of a run. All writes go through it, so nothing lands
/// outside the directory.
#[derive(Debug, Clone)]
pub struct ReportDir {
    root: PathBuf,
}

impl ReportDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Self { root })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    /// Writes `name` (a bare file name) inside the directory.
    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        if name.contains(['/', '\\']) || name == ".." {
            return Err(Error::param("name", format!("`{name}` is not a plain file name")));
        }
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
