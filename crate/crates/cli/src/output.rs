//! Output directory handling. Every file is written to a temporary file in
//! the target directory and renamed into place.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

pub const EFFECTIVE_CONFIG: &str = "effective_config.toml";

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn subdir(&self, name: &str) -> anyhow::Result<OutDir> {
        OutDir::create(&self.root.join(name))
    }

    pub fn write_with<F>(&self, name: &str, fill: F) -> anyhow::Result<PathBuf>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        let target = self.path(name);
        let tmp = tempfile::NamedTempFile::new_in(&self.root)
            .with_context(|| format!("creating temporary file in {}", self.root.display()))?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            fill(&mut w).with_context(|| format!("writing {}", target.display()))?;
            w.flush()?;
        }
        tmp.persist(&target)
            .with_context(|| format!("moving output into {}", target.display()))?;
        Ok(target)
    }

    pub fn write_str(&self, name: &str, text: &str) -> anyhow::Result<PathBuf> {
        self.write_with(name, |w| w.write_all(text.as_bytes()))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> anyhow::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_str(name, &text)
    }

    /// Record the settings a command actually ran with.
    pub fn echo_config<T: Serialize>(&self, command: &str, effective: &T) -> anyhow::Result<()> {
        #[derive(Serialize)]
        struct Echo<'a, T> {
            command: &'a str,
            effective: &'a T,
        }
        let text = toml::to_string(&Echo { command, effective }).context("serializing effective config")?;
        self.write_str(EFFECTIVE_CONFIG, &text)?;
        Ok(())
    }
}

/// Fail early, before any work, if an input is missing.
pub fn require_files<'a>(paths: impl IntoIterator<Item = &'a PathBuf>) -> anyhow::Result<()> {
    for p in paths {
        if !p.is_file() {
            anyhow::bail!("input file {} does not exist", p.display());
        }
    }
    Ok(())
}
