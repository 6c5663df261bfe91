//! Parameter loading, run manifests and CSV writing.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thz_gbsm::params::{bundled_documents, ParamLibrary, PARAMS_DIR_ENV};

/// Invalid flags, inputs or parameter files; reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// A parameter library with the hash of the text it was loaded from.
pub struct LoadedParams {
    pub library: ParamLibrary,
    pub sha256: String,
}

/// `--params` file, else the directory named by the environment, else the bundled sets.
pub fn load_params(path: Option<&Path>) -> Result<LoadedParams> {
    let read = |p: &Path| {
        fs::read(p).map_err(|e| config_error(format!("--params: cannot read {}: {e}", p.display())))
    };
    match path {
        Some(p) => {
            let bytes = read(p)?;
            let library = ParamLibrary::from_file(p).map_err(|e| config_error(format!("--params: {e}")))?;
            Ok(LoadedParams {
                library,
                sha256: sha256_hex(&bytes),
            })
        }
        None => match std::env::var_os(PARAMS_DIR_ENV) {
            Some(dir) => {
                let dir = PathBuf::from(dir);
                let mut bytes = read(&dir.join("measured.toml"))?;
                bytes.extend(read(&dir.join("3gpp.toml"))?);
                let library = ParamLibrary::from_dir(&dir)
                    .map_err(|e| config_error(format!("{PARAMS_DIR_ENV}: {e}")))?;
                Ok(LoadedParams {
                    library,
                    sha256: sha256_hex(&bytes),
                })
            }
            None => {
                let (measured, gpp) = bundled_documents();
                Ok(LoadedParams {
                    library: ParamLibrary::bundled(),
                    sha256: sha256_hex(format!("{measured}{gpp}").as_bytes()),
                })
            }
        },
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_sha256: Option<String>,
    pub seed: Option<u64>,
    pub timestamp: String,
    pub tool_version: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, params_sha256: Option<String>, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            params_sha256,
            input_sha256: None,
            seed,
            timestamp: chrono::Utc::now().to_rfc3339(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
        }
    }
}

/// Collects output files for one run directory and finishes with its manifest.
pub struct OutputDir {
    dir: PathBuf,
    manifest: RunManifest,
}

impl OutputDir {
    pub fn create(dir: &Path, manifest: RunManifest) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("cannot write {}", path.display()))?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write_text(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    pub fn finish(self) -> Result<()> {
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&self.manifest)? + "\n")
            .with_context(|| format!("cannot write {}", path.display()))
    }
}
