use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.txt";

/// Record of one command run: what was asked for and what came out.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// Canonical config listing, parseable by `ExperimentConfig::parse`.
    pub config: String,
    /// `(file name relative to the output directory, sha256 hex)`, in emission order.
    pub files: Vec<(String, String)>,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

impl RunManifest {
    pub fn new(command: &str, config: String) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: unix_now(),
            finished_unix: 0,
            config,
            files: Vec::new(),
        }
    }

    /// Hashes `dir/name` and appends it.
    pub fn record(&mut self, dir: &Path, name: &str) -> Result<()> {
        let sum = sha256_file(&dir.join(name))?;
        self.files.push((name.to_string(), sum));
        Ok(())
    }

    pub fn checksum(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, s)| s.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "command = {}\nversion = {}\nstarted_unix = {}\nfinished_unix = {}\n[config]\n{}[files]\n",
            self.command, self.version, self.started_unix, self.finished_unix, self.config
        );
        for (name, sum) in &self.files {
            out.push_str(&format!("{sum}  {name}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Config(format!("manifest: {m}"));
        let (head, rest) = text.split_once("[config]\n").ok_or_else(|| bad("missing [config]"))?;
        let (config, files) = rest.split_once("[files]\n").ok_or_else(|| bad("missing [files]"))?;
        let field = |key: &str| -> Result<String> {
            head.lines()
                .filter_map(|l| l.split_once('='))
                .find(|(k, _)| k.trim() == key)
                .map(|(_, v)| v.trim().to_string())
                .ok_or_else(|| bad(&format!("missing {key}")))
        };
        let stamp = |key: &str| -> Result<u64> { field(key)?.parse().map_err(|_| bad(&format!("bad {key}"))) };
        let files = files
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split_once("  ").map(|(s, n)| (n.to_string(), s.to_string())).ok_or_else(|| bad("bad file line"))
            })
            .collect::<Result<_>>()?;
        Ok(RunManifest {
            command: field("command")?,
            version: field("version")?,
            started_unix: stamp("started_unix")?,
            finished_unix: stamp("finished_unix")?,
            config: config.to_string(),
            files,
        })
    }

    pub fn write(&mut self, dir: &Path) -> Result<()> {
        self.finished_unix = unix_now();
        fs::write(dir.join(MANIFEST_NAME), self.to_text())?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(dir.join(MANIFEST_NAME))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.csv"), "x\n1\n").unwrap();
        let mut m = RunManifest::new("verify", "geometry.h = 0.0625\nrun.seed = 7\n".into());
        m.record(dir.path(), "a.csv").unwrap();
        m.write(dir.path()).unwrap();
        let back = RunManifest::read(dir.path()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.checksum("a.csv").unwrap(), hex::encode(Sha256::digest(b"x\n1\n")));
        assert!(RunManifest::parse("command = x\n").is_err());
    }
}
