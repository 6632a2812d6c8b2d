use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

use crate::OutArgs;

/// Output directory of one command invocation.
pub struct RunDir {
    pub path: PathBuf,
    files: Vec<String>,
}

impl RunDir {
    /// `<out_dir>/<hash>-<unix seconds>`, or the explicit `--run-dir`.
    pub fn create(out: &OutArgs, hash: u64) -> Result<Self> {
        let path = match &out.run_dir {
            Some(p) => p.clone(),
            None => {
                let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
                let base = out.out_dir.join(format!("{hash:016x}-{secs}"));
                let mut path = base.clone();
                let mut n = 1;
                while path.exists() {
                    path = PathBuf::from(format!("{}-{n}", base.display()));
                    n += 1;
                }
                path
            }
        };
        fs::create_dir_all(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(RunDir { path, files: Vec::new() })
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    /// Writes a file through `f` and records it for the manifest.
    pub fn write(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let path = self.file(name);
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        f(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Appends to a file; the first append of an invocation truncates it.
    pub fn append(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let path = self.file(name);
        let first = !self.files.iter().any(|n| n == name);
        let file = fs::OpenOptions::new()
            .create(true)
            .write(true)
            .append(!first)
            .truncate(first)
            .open(&path)
            .with_context(|| format!("opening {}", path.display()))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        self.write(name, |w| Ok(w.write_all(bytes)?))
    }

    pub fn record(&mut self, name: &str) {
        self.files.push(name.to_string());
    }

    /// `sha256  name` lines for every file written, sorted by name.
    pub fn finish(mut self) -> Result<PathBuf> {
        self.files.sort();
        self.files.dedup();
        let mut manifest = String::new();
        for name in &self.files {
            manifest.push_str(&format!("{}  {name}\n", sha256_file(&self.file(name))?));
        }
        fs::write(self.file("MANIFEST"), manifest)?;
        Ok(self.path)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}
