use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Sidecar written as `<file>.meta.json` next to every output.
#[derive(Debug, Serialize)]
struct Sidecar<'a> {
    version: &'a str,
    command: &'a str,
    file: &'a str,
    config_hash: &'a str,
    seed: u64,
}

pub struct OutputDir {
    dir: PathBuf,
    command: &'static str,
    config_hash: String,
    seed: u64,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(
        dir: &Path,
        command: &'static str,
        config_hash: String,
        seed: u64,
    ) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command,
            config_hash,
            seed,
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        let meta = Sidecar {
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            file: name,
            config_hash: &self.config_hash,
            seed: self.seed,
        };
        let meta_path = self.dir.join(format!("{name}.meta.json"));
        let json = serde_json::to_string_pretty(&meta)? + "\n";
        fs::write(&meta_path, json).with_context(|| format!("writing {}", meta_path.display()))?;
        self.written.push(path);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let json = serde_json::to_string_pretty(value)? + "\n";
        self.write(name, &json)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
