//! Output files are staged in memory and written only after a command has
//! finished all of its work, each through a temp file renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

pub struct Artifacts {
    dir: PathBuf,
    overwrite: bool,
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn new(dir: &Path, overwrite: bool) -> Self {
        Self { dir: dir.to_path_buf(), overwrite, files: Vec::new() }
    }

    /// Fails early when any of `names` already exists and overwriting is off.
    pub fn guard(&self, names: &[&str]) -> Result<()> {
        if self.overwrite {
            return Ok(());
        }
        let existing: Vec<&str> = names.iter().copied().filter(|n| self.dir.join(n).exists()).collect();
        if existing.is_empty() {
            Ok(())
        } else {
            Err(CliError::Data(format!(
                "refusing to overwrite {} in {} (pass --overwrite)",
                existing.join(", "),
                self.dir.display()
            )))
        }
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    /// Builds a file by writing into a buffer.
    pub fn add_with<F, E>(&mut self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<(), E>,
        CliError: From<E>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.add(name, buf);
        Ok(())
    }

    pub fn names(&self) -> Vec<&str> {
        self.files.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Writes every staged file. Returns the written paths.
    pub fn commit(self) -> Result<Vec<PathBuf>> {
        self.guard(&self.names())?;
        std::fs::create_dir_all(&self.dir)
            .map_err(|e| CliError::Data(format!("cannot create {}: {e}", self.dir.display())))?;
        let io = |p: &Path, e: std::io::Error| CliError::Data(format!("cannot write {}: {e}", p.display()));
        let mut written = Vec::new();
        for (name, bytes) in self.files {
            let path = self.dir.join(&name);
            let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| io(&path, e))?;
            tmp.write_all(&bytes).map_err(|e| io(&path, e))?;
            tmp.as_file().sync_all().map_err(|e| io(&path, e))?;
            tmp.persist(&path).map_err(|e| io(&path, e.error))?;
            written.push(path);
        }
        Ok(written)
    }
}
