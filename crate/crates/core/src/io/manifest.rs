//! Run manifests: config echo, results and artifact hashes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{OutputPaths, RunConfig};
use super::sha256_hex;
use crate::error::{Result, VacuaError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// File name of the artifact, without its directory.
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    pub results: serde_json::Value,
    pub artifacts: Vec<Artifact>,
    /// SHA-256 over everything above except output locations.
    pub content_sha256: String,
    /// Not covered by `content_sha256`.
    pub wall_time_seconds: f64,
}

#[derive(Serialize)]
struct Hashed<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a RunConfig,
    results: &'a serde_json::Value,
    artifacts: &'a [Artifact],
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: &RunConfig,
        results: serde_json::Value,
        artifacts: Vec<Artifact>,
        wall_time_seconds: f64,
    ) -> Result<Self> {
        let mut m = Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            results,
            artifacts,
            content_sha256: String::new(),
            wall_time_seconds,
        };
        m.content_sha256 = m.content_hash()?;
        Ok(m)
    }

    pub fn content_hash(&self) -> Result<String> {
        let config = RunConfig {
            output: OutputPaths::default(),
            ..self.config.clone()
        };
        let body = serde_json::to_string(&Hashed {
            command: &self.command,
            version: &self.version,
            config: &config,
            results: &self.results,
            artifacts: &self.artifacts,
        })
        .map_err(|e| VacuaError::Io(e.to_string()))?;
        Ok(sha256_hex(body.as_bytes()))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s =
            serde_json::to_string_pretty(self).map_err(|e| VacuaError::Io(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| VacuaError::Config(e.to_string()))
    }
}

pub fn artifact(path: &Path, sha256: String) -> Artifact {
    Artifact {
        name: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        sha256,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    #[test]
    fn hash_ignores_wall_time_and_output_paths() {
        let mut c = RunConfig::default();
        let a = RunManifest::new("solve", &c, serde_json::json!({"x": 1.5}), vec![], 0.1).unwrap();
        c.output.csv = Some(PathBuf::from("/elsewhere/traj.csv"));
        let b = RunManifest::new("solve", &c, serde_json::json!({"x": 1.5}), vec![], 7.0).unwrap();
        assert_eq!(a.content_sha256, b.content_sha256);
        let d = RunManifest::new("solve", &c, serde_json::json!({"x": 1.25}), vec![], 0.1).unwrap();
        assert_ne!(a.content_sha256, d.content_sha256);
    }

    #[test]
    fn round_trip() {
        let m = RunManifest::new(
            "vacuum",
            &RunConfig::default(),
            serde_json::json!([1, 2]),
            vec![],
            0.5,
        )
        .unwrap();
        let back: RunManifest = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
