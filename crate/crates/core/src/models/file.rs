use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::build::{build_model, ModelKind};
use crate::error::{Error, Result};
use crate::hmm::HmmSpec;
use crate::trainer::FitReport;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub value: f64,
    pub frozen: bool,
}

/// Portable parameter file. The matrices themselves are rebuilt from the
/// model name; the state labels pin the index mapping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub model_name: String,
    pub state_labels: Vec<String>,
    pub params: BTreeMap<String, ParamEntry>,
    pub prior: Vec<f64>,
}

impl ModelFile {
    pub fn from_spec(spec: &HmmSpec<f64>) -> Self {
        Self {
            model_name: spec.name().to_string(),
            state_labels: spec.state_labels().to_vec(),
            params: spec
                .params()
                .iter()
                .map(|p| {
                    let entry = ParamEntry {
                        value: p.value,
                        frozen: p.frozen,
                    };
                    (p.name.clone(), entry)
                })
                .collect(),
            prior: spec.prior().to_vec(),
        }
    }

    pub fn from_report(report: &FitReport) -> Result<Self> {
        let kind: ModelKind = report.model.parse()?;
        let mut spec = build_model(kind);
        report.apply_to(&mut spec)?;
        Ok(Self::from_spec(&spec))
    }

    /// Rebuilds the model and applies the stored values. Parameters missing
    /// from the file keep their defaults.
    pub fn to_spec(&self) -> Result<HmmSpec<f64>> {
        let kind: ModelKind = self.model_name.parse()?;
        let mut spec = build_model::<f64>(kind);
        if spec.state_labels() != self.state_labels.as_slice() {
            return Err(Error::InvalidModel(format!(
                "state labels in file do not match `{}`",
                self.model_name
            )));
        }
        for (name, entry) in &self.params {
            if entry.frozen {
                spec.freeze(name, entry.value)?;
            } else {
                spec.set_param(name, entry.value)?;
            }
        }
        spec.set_prior(self.prior.clone())?;
        spec.assemble()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
