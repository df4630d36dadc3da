use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use parity_hmm::hmm::HmmSpec;
use parity_hmm::models::{build_model, ModelFile, ModelKind};
use parity_hmm::sim::{read_jsonl, ExperimentConfig, ShotRecord};
use serde::Serialize;

use crate::failure::{CliResult, Failure};

/// TOML unless the file ends in `.json`.
pub fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    let config: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text)?
    } else {
        toml::from_str(&text)?
    };
    config.validate()?;
    Ok(config)
}

pub fn load_records(path: &Path) -> CliResult<Vec<ShotRecord>> {
    let records = read_jsonl(BufReader::new(fs::File::open(path)?))?;
    if records.is_empty() {
        return Err(Failure::input(format!("{} holds no records", path.display())));
    }
    Ok(records)
}

/// A built-in model name, or a path to a saved model file.
pub fn load_model(model: &str) -> CliResult<HmmSpec<f64>> {
    if let Ok(kind) = model.parse::<ModelKind>() {
        return Ok(build_model(kind));
    }
    let path = Path::new(model);
    if !path.is_file() {
        return Err(Failure::input(format!(
            "`{model}` is neither a known model nor a model file"
        )));
    }
    Ok(ModelFile::from_json(&fs::read_to_string(path)?)?.to_spec()?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// CSV with a `# manifest <hash>` first line and optional `#` footer lines.
pub fn write_csv<T: Serialize>(
    path: Option<&Path>,
    manifest_hash: &str,
    rows: &[T],
    footer: &[String],
) -> CliResult<()> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut out = BufWriter::new(sink);
    writeln!(out, "# manifest {manifest_hash}")?;
    {
        let mut csv = csv::Writer::from_writer(&mut out);
        for row in rows {
            csv.serialize(row)?;
        }
        csv.flush()?;
    }
    for line in footer {
        writeln!(out, "# {line}")?;
    }
    out.flush()?;
    Ok(())
}
