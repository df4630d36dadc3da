use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hmm::HmmSpec;
use crate::models::{observations, unleaked_window, Role};
use crate::sim::ShotRecord;

/// `L_comp` of each record for `role`. Runs too short to yield an observation
/// score the prior unleaked probability.
pub fn lcomp_scores(records: &[ShotRecord], spec: &HmmSpec<f64>, role: Role) -> Result<Vec<f64>> {
    let model = spec.assemble()?;
    let prior_unleaked: f64 = model
        .prior
        .iter()
        .zip(&model.leaked_mask)
        .filter(|(_, &l)| !l)
        .map(|(p, _)| p)
        .sum();
    records
        .par_iter()
        .map(|r| {
            if model.n_outputs() != 2 {
                return Err(Error::InvalidModel("scores need a binary-output model".into()));
            }
            let span = r.protocol.syndrome_span().ok_or_else(|| {
                Error::ProtocolMismatch("records must come from zz or zzxx runs".into())
            })?;
            if role == Role::Data && r.m_a.len() < span {
                return Ok(prior_unleaked);
            }
            let obs = observations(role, r.protocol, &r.m_a)?;
            Ok(model
                .computational_likelihood(role, r.protocol, &obs)?
                .value)
        })
        .collect()
}

/// Whether the watched qubit leaked during the rounds `L_comp` covers.
pub fn tail_leaked(record: &ShotRecord, role: Role) -> bool {
    let k = unleaked_window(role, record.protocol);
    let m = record.rounds;
    (m.saturating_sub(k)..m).any(|i| match role {
        Role::Data => record.truth.data_leaked(i),
        Role::Ancilla => record.truth.anc[i],
    })
}
