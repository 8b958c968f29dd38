//! Files shared between pipeline stages. Every text artifact starts with
//! `#` lines carrying the resolved configuration and the master seed.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use crate::domain::InteractionHistory;
use crate::error::{Error, Result};

pub const HISTORY: &str = "history.txt";
pub const GENERATOR: &str = "generator.txt";
pub const RECONSTRUCTED: &str = "reconstructed.txt";
pub const ENCODED: &str = "encoded.txt";
pub const TRUTH: &str = "truth.txt";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_JSON: &str = "report.json";
pub const TIMINGS: &str = "timings.csv";
pub const LOCK: &str = ".veb.lock";

/// Variant of the trained network: tree-weighted loss or plain BCE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkVariant {
    TreeLoss,
    Bce,
}

impl NetworkVariant {
    fn suffix(self) -> &'static str {
        match self {
            NetworkVariant::TreeLoss => "",
            NetworkVariant::Bce => "-bceloss",
        }
    }

    pub fn params_file(self) -> String {
        format!("vae{}.bin", self.suffix())
    }

    pub fn log_file(self) -> String {
        format!("train_log{}.csv", self.suffix())
    }

    pub fn generated_file(self) -> String {
        format!("generated{}.txt", self.suffix())
    }
}

pub fn selected_file(method: &str) -> String {
    format!("selected-{method}.txt")
}

/// The configuration and seed lines every artifact begins with.
pub fn provenance(cfg: &ExperimentConfig) -> Vec<String> {
    vec![format!("seed {}", cfg.seed), format!("config {}", cfg.stamp())]
}

pub fn comment_block(cfg: &ExperimentConfig, extra: &[String]) -> String {
    provenance(cfg)
        .iter()
        .chain(extra)
        .flat_map(|l| l.lines().map(|l| format!("# {l}\n")).collect::<Vec<_>>())
        .collect()
}

/// Exclusive ownership of an output directory for the lifetime of the guard.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    lock: PathBuf,
}

impl OutputDir {
    /// Creates the directory if needed and takes its lock file.
    pub fn open(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        let lock = root.join(LOCK);
        fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&lock)
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::AlreadyExists => Error::Config(format!(
                    "output directory {} is in use (remove {} if no other run is active)",
                    root.display(),
                    lock.display()
                )),
                _ => Error::io(&lock, e),
            })?;
        Ok(Self {
            root: root.to_path_buf(),
            lock,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn read_string(&self, name: &str) -> Result<String> {
        let path = self.path(name);
        fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
    }

    pub fn read_bytes(&self, name: &str) -> Result<Vec<u8>> {
        let path = self.path(name);
        fs::read(&path).map_err(|e| Error::io(&path, e))
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).exists()
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

/// `L=<len>` then one `action observation` line per step.
pub fn write_history(h: &InteractionHistory) -> String {
    let mut out = format!("L={}\n", h.len());
    for (a, o) in &h.steps {
        out.push_str(&format!("{a} {o}\n"));
    }
    out
}

pub fn read_history(text: &str) -> Result<InteractionHistory> {
    let what = "history";
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::parse(what, "empty file"))?;
    let len: usize = header
        .strip_prefix("L=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::parse(what, format!("bad header `{header}`")))?;
    let steps = lines
        .map(|l| {
            let mut it = l.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(o)), None) => Ok((a, o)),
                _ => Err(Error::parse(what, format!("bad step `{l}`"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if steps.len() != len {
        return Err(Error::LengthMismatch {
            expected: len,
            actual: steps.len(),
        });
    }
    Ok(InteractionHistory::new(steps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_roundtrip() {
        let h = InteractionHistory::new(vec![(0, 1), (2, 0), (1, 1)]);
        let text = format!("# seed 1\n{}", write_history(&h));
        assert_eq!(read_history(&text).unwrap(), h);
        assert!(read_history("L=2\n0 1\n").is_err());
        assert!(read_history("0 1\n").is_err());
    }

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("nested/out");
        let out = OutputDir::open(&root).unwrap();
        assert!(OutputDir::open(&root).is_err());
        drop(out);
        let again = OutputDir::open(&root).unwrap();
        again.write("x.txt", "hi").unwrap();
        assert_eq!(again.read_string("x.txt").unwrap(), "hi");
    }

    #[test]
    fn comments_prefix_every_line() {
        let cfg = ExperimentConfig::default();
        let block = comment_block(&cfg, &["a\nb".to_string()]);
        assert!(block.lines().all(|l| l.starts_with("# ")));
        assert_eq!(block.lines().count(), 4);
    }
}
