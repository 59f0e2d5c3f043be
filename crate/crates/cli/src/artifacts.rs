//! In-memory artifact trees, written out all at once.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Relative path -> file contents.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ArtifactTree {
    files: BTreeMap<PathBuf, Vec<u8>>,
}

impl ArtifactTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, path: impl Into<PathBuf>, contents: impl Into<Vec<u8>>) {
        self.files.insert(path.into(), contents.into());
    }

    /// Adds every file of `other` under `prefix`.
    pub fn nest(&mut self, prefix: impl AsRef<Path>, other: ArtifactTree) {
        for (path, contents) in other.files {
            self.files.insert(prefix.as_ref().join(path), contents);
        }
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.keys().map(PathBuf::as_path)
    }

    pub fn get(&self, path: impl AsRef<Path>) -> Option<&[u8]> {
        self.files.get(path.as_ref()).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// Writes each file through a temporary sibling and a rename. If any
    /// write fails, files already written by this call are removed.
    pub fn write_to(&self, root: &Path) -> std::io::Result<()> {
        let mut written: Vec<PathBuf> = Vec::new();
        let result = (|| {
            for (rel, contents) in &self.files {
                let path = root.join(rel);
                let dir = path.parent().unwrap_or(root);
                std::fs::create_dir_all(dir)?;
                let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
                tmp.write_all(contents)?;
                tmp.as_file().sync_all()?;
                tmp.persist(&path).map_err(|e| e.error)?;
                written.push(path);
            }
            Ok(())
        })();
        if result.is_err() {
            for path in &written {
                let _ = std::fs::remove_file(path);
            }
        }
        result
    }
}
