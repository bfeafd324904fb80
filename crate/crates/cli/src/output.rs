use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Files produced by a command, held in memory until the command has fully
/// succeeded so that a failing run leaves nothing behind.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(String, String)>,
}

impl OutputSet {
    pub fn add(&mut self, name: &str, contents: impl Into<String>) {
        self.files.push((name.to_string(), contents.into()));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.add(name, s);
        Ok(())
    }

    /// Writes every file into `dir`, each through a temporary name and a rename.
    pub fn commit(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut written = Vec::new();
        for (name, contents) in &self.files {
            let target = dir.join(name);
            let tmp = dir.join(format!(".{name}.tmp"));
            fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
            fs::rename(&tmp, &target)
                .with_context(|| format!("renaming to {}", target.display()))?;
            written.push(target);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commit_writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut o = OutputSet::default();
        o.add("a.csv", "x\n1\n");
        o.add_json("b.json", &serde_json::json!({"k": 1})).unwrap();
        let out = dir.path().join("nested");
        o.commit(&out).unwrap();
        assert_eq!(fs::read_to_string(out.join("a.csv")).unwrap(), "x\n1\n");
        assert_eq!(
            fs::read_to_string(out.join("b.json")).unwrap(),
            "{\n  \"k\": 1\n}\n"
        );
        assert_eq!(fs::read_dir(&out).unwrap().count(), 2);
    }
}
