use std::path::{Path, PathBuf};
use std::time::Instant;

use indexmap::IndexMap;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Record of one command invocation, written as `manifest.json` in the output directory.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: IndexMap<String, String>,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    /// Paths relative to the output directory, sorted.
    pub outputs: Vec<String>,
    pub tool_version: String,
    /// Wall-clock seconds; only recorded with `--timing` so that reruns stay byte-identical.
    pub duration_seconds: Option<f64>,
}

/// Collects outputs while a command runs, then writes the manifest.
pub struct Recorder {
    root: PathBuf,
    started: Instant,
    timing: bool,
    manifest: RunManifest,
}

impl Recorder {
    pub fn new(command: &str, root: &Path, parameters: &impl Serialize, seed: Option<u64>, timing: bool) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|source| CliError::Io {
            path: root.display().to_string(),
            source,
        })?;
        Ok(Self {
            root: root.to_path_buf(),
            started: Instant::now(),
            timing,
            manifest: RunManifest {
                command: command.to_string(),
                inputs: IndexMap::new(),
                parameters: serde_json::to_value(parameters).map_err(homcluster::Error::from)?,
                seed,
                outputs: Vec::new(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                duration_seconds: None,
            },
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn input(&mut self, role: &str, path: &Path) {
        self.manifest.inputs.insert(role.to_string(), path.display().to_string());
    }

    /// Absolute path for `rel` under the output directory, registered as an output.
    pub fn output(&mut self, rel: impl AsRef<Path>) -> CliResult<PathBuf> {
        let rel = rel.as_ref();
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|source| CliError::Io {
                path: parent.display().to_string(),
                source,
            })?;
        }
        let name = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        self.manifest.outputs.push(name);
        Ok(path)
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.manifest.outputs.sort();
        for rel in &self.manifest.outputs {
            if !self.root.join(rel).is_file() {
                return Err(CliError::MissingOutput(rel.clone()));
            }
        }
        if self.timing {
            self.manifest.duration_seconds = Some(self.started.elapsed().as_secs_f64());
        }
        write_json(&self.root.join("manifest.json"), &self.manifest)
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(homcluster::Error::from)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}
