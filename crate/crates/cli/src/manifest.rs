use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::failure::CliResult;

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> CliResult<String> {
    Ok(hex(&Sha256::digest(fs::read(path)?)))
}

/// What produced a set of outputs. The hash covers everything except the
/// timestamp, so reruns with the same inputs and flags share it.
#[derive(Clone, Debug, Serialize)]
pub struct PipelineManifest {
    pub command: String,
    pub flags: Vec<String>,
    pub config: Option<PathBuf>,
    pub datasets: Vec<PathBuf>,
    pub models: Vec<PathBuf>,
    /// SHA-256 of every input file, in the order listed above.
    pub input_digests: Vec<String>,
    pub output_dir: PathBuf,
    pub seed: Option<u64>,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub created_unix: Option<u64>,
}

impl PipelineManifest {
    pub fn new(command: &str, flags: Vec<String>, output: &Path) -> Self {
        Self {
            command: command.to_string(),
            flags,
            config: None,
            datasets: Vec::new(),
            models: Vec::new(),
            input_digests: Vec::new(),
            output_dir: output.parent().map(Path::to_path_buf).unwrap_or_default(),
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix: None,
        }
    }

    pub fn with_config(mut self, path: &Path) -> CliResult<Self> {
        self.input_digests.push(file_digest(path)?);
        self.config = Some(path.to_path_buf());
        Ok(self)
    }

    pub fn with_dataset(mut self, path: &Path) -> CliResult<Self> {
        self.input_digests.push(file_digest(path)?);
        self.datasets.push(path.to_path_buf());
        Ok(self)
    }

    /// Model files are hashed; built-in model names are recorded as given.
    pub fn with_model(mut self, model: &str) -> CliResult<Self> {
        let path = Path::new(model);
        if path.is_file() {
            self.input_digests.push(file_digest(path)?);
        }
        self.models.push(path.to_path_buf());
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn hash(&self) -> String {
        let body = PipelineManifest {
            created_unix: None,
            ..self.clone()
        };
        let text = serde_json::to_vec(&body).expect("manifest serializes");
        hex(&Sha256::digest(text))
    }

    /// Writes `<output>.manifest.json` next to the primary output.
    pub fn write_beside(&self, output: &Path) -> CliResult<()> {
        #[derive(Serialize)]
        struct Stamped<'a> {
            hash: String,
            #[serde(flatten)]
            manifest: &'a PipelineManifest,
        }
        let stamped = PipelineManifest {
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .ok()
                .map(|d| d.as_secs()),
            ..self.clone()
        };
        let mut file = fs::File::create(sidecar(output, "manifest.json"))?;
        serde_json::to_writer_pretty(
            &mut file,
            &Stamped {
                hash: self.hash(),
                manifest: &stamped,
            },
        )?;
        writeln!(file)?;
        Ok(())
    }
}

/// `data.jsonl` -> `data.<suffix>`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}
