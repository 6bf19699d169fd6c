//! All-or-nothing artifact writing.
//!
//! Artifacts are rendered into memory first, so computation errors never
//! touch the disk. They are then written into a temporary directory next to
//! the output directory and moved into place with renames.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Artifacts {
    files: BTreeMap<PathBuf, Vec<u8>>,
}

impl Artifacts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a file at `rel`, a path relative to the output directory.
    pub fn add(&mut self, rel: impl Into<PathBuf>, contents: impl Into<Vec<u8>>) {
        self.files.insert(rel.into(), contents.into());
    }

    pub fn get(&self, rel: impl AsRef<Path>) -> Option<&[u8]> {
        self.files.get(rel.as_ref()).map(Vec::as_slice)
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.keys().map(PathBuf::as_path)
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// Writes everything under `out_dir` and returns the final paths.
    pub fn commit(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        let parent = match out_dir.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent)
            .map_err(CliError::io(format!("creating {}", parent.display())))?;
        let staging = tempfile::Builder::new()
            .prefix(".plunge-staging-")
            .tempdir_in(&parent)
            .map_err(CliError::io(format!(
                "creating staging directory in {}",
                parent.display()
            )))?;

        for (rel, bytes) in &self.files {
            let path = staging.path().join(rel);
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir)
                    .map_err(CliError::io(format!("creating {}", dir.display())))?;
            }
            fs::write(&path, bytes).map_err(CliError::io(format!("writing {}", path.display())))?;
        }

        if !out_dir.exists() {
            let staged = staging.keep();
            fs::rename(&staged, out_dir).map_err(|e| {
                let _ = fs::remove_dir_all(&staged);
                CliError::Io {
                    context: format!("moving outputs to {}", out_dir.display()),
                    source: e,
                }
            })?;
        } else {
            for rel in self.files.keys() {
                let dest = out_dir.join(rel);
                if let Some(dir) = dest.parent() {
                    fs::create_dir_all(dir)
                        .map_err(CliError::io(format!("creating {}", dir.display())))?;
                }
                fs::rename(staging.path().join(rel), &dest)
                    .map_err(CliError::io(format!("moving output to {}", dest.display())))?;
            }
        }
        Ok(self.files.keys().map(|rel| out_dir.join(rel)).collect())
    }
}

/// CSV document from a header and rows of already formatted cells.
pub fn csv_document<I>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Shortest round-trip decimal; empty for a missing value.
pub fn num(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commit_into_new_and_existing_dirs() {
        let root = tempfile::tempdir().unwrap();
        let out = root.path().join("a/b");
        let mut arts = Artifacts::new();
        arts.add("x.csv", "1\n");
        arts.add("graphs/g.dot", "graph {\n}\n");
        let written = arts.commit(&out).unwrap();
        assert_eq!(written.len(), 2);
        assert_eq!(
            fs::read_to_string(out.join("graphs/g.dot")).unwrap(),
            "graph {\n}\n"
        );

        arts.add("x.csv", "2\n");
        arts.commit(&out).unwrap();
        assert_eq!(fs::read_to_string(out.join("x.csv")).unwrap(), "2\n");
        // no staging leftovers
        let leftovers: Vec<_> = fs::read_dir(root.path().join("a"))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(leftovers, ["b"]);
    }

    #[test]
    fn csv_quotes_when_needed() {
        let doc = csv_document(&["a", "b"], [vec!["x,y".to_string(), "1".to_string()]]);
        assert_eq!(String::from_utf8(doc).unwrap(), "a,b\n\"x,y\",1\n");
    }
}
