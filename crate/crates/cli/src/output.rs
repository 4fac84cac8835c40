use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

pub const MANIFEST: &str = "manifest.json";

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "DACD_OUT";

pub fn default_root() -> PathBuf {
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("dacd-out"))
}

/// Output directory that refuses to clobber existing files unless told to.
pub struct OutputDir {
    root: PathBuf,
    overwrite: bool,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: PathBuf, overwrite: bool, planned: &[&str]) -> Result<Self> {
        fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
        if !overwrite {
            let existing: Vec<&str> = planned
                .iter()
                .copied()
                .chain(std::iter::once(MANIFEST))
                .filter(|f| root.join(f).exists())
                .collect();
            if !existing.is_empty() {
                bail!(
                    "{} already contains {}; pass --overwrite to replace",
                    root.display(),
                    existing.join(", ")
                );
            }
        }
        Ok(Self {
            root,
            overwrite,
            written: Vec::new(),
        })
    }

    pub fn write_with<F>(&mut self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let path = self.root.join(name);
        if !self.overwrite && path.exists() {
            bail!("refusing to overwrite {}", path.display());
        }
        let mut w = BufWriter::new(
            File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        );
        f(&mut w)?;
        w.flush()
            .with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    /// Writes the manifest last, so its presence marks a complete directory.
    pub fn finish(
        mut self,
        command: &str,
        config: Option<&Path>,
        seed: Option<u64>,
        params: serde_json::Value,
    ) -> Result<PathBuf> {
        let manifest = RunManifest {
            command: command.to_string(),
            config: config.map(|p| p.display().to_string()),
            output_dir: self.root.display().to_string(),
            seed,
            params,
            files: std::mem::take(&mut self.written),
        };
        self.write_json(MANIFEST, &manifest)?;
        Ok(self.root)
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<String>,
    pub output_dir: String,
    pub seed: Option<u64>,
    pub params: serde_json::Value,
    pub files: Vec<String>,
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST);
    if !path.exists() {
        bail!(
            "{} is not a completed run directory (no {MANIFEST})",
            dir.display()
        );
    }
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
