//! Run manifests. Every artifact-producing command drops one next to its
//! output so a run can be reproduced from the recorded parameters alone.

use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// Subcommand that produced the artifact.
    pub command: String,
    /// Spec hash of the environment involved, when there is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub env_hash: Option<String>,
    pub seed: u64,
    pub jobs: usize,
    /// Full resolved parameter set; enough to re-run the command.
    pub parameters: serde_json::Value,
    pub tool_version: String,
    /// Wall-clock creation time, seconds since the Unix epoch. Excluded from
    /// reproducibility comparisons.
    pub created_unix_s: u64,
}

impl RunManifest {
    pub fn new(
        command: &str,
        env_hash: Option<String>,
        seed: u64,
        jobs: usize,
        parameters: serde_json::Value,
    ) -> Self {
        RunManifest {
            command: command.to_string(),
            env_hash,
            seed,
            jobs,
            parameters,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    /// Writes the manifest next to `artifact` and returns the path written.
    pub fn write_next_to(&self, artifact: &Path) -> io::Result<PathBuf> {
        let path = manifest_path(artifact);
        let body = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        std::fs::write(&path, body + "\n")?;
        Ok(path)
    }
}

/// `<artifact>.manifest.json`, alongside the artifact.
pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut name = artifact
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".manifest.json");
    artifact.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_path_appends_suffix() {
        assert_eq!(
            manifest_path(Path::new("/tmp/out/data.bin")),
            PathBuf::from("/tmp/out/data.bin.manifest.json")
        );
        assert_eq!(
            manifest_path(Path::new("weights.onwt")),
            PathBuf::from("weights.onwt.manifest.json")
        );
    }

    #[test]
    fn roundtrips_through_json() {
        let m = RunManifest::new(
            "dataset",
            Some("abc123".into()),
            42,
            4,
            serde_json::json!({"k": 100, "n_paths": 500}),
        );
        let dir = tempfile::tempdir().unwrap();
        let artifact = dir.path().join("corpus.onds");
        let written = m.write_next_to(&artifact).unwrap();
        assert_eq!(written, dir.path().join("corpus.onds.manifest.json"));
        let back: RunManifest =
            serde_json::from_str(&std::fs::read_to_string(&written).unwrap()).unwrap();
        assert_eq!(back.command, "dataset");
        assert_eq!(back.env_hash.as_deref(), Some("abc123"));
        assert_eq!(back.seed, 42);
        assert_eq!(back.parameters["k"], 100);
        assert_eq!(back.tool_version, env!("CARGO_PKG_VERSION"));
    }
}
