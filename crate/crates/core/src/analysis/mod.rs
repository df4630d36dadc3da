//! Decoding, Bell-state correlators, decay fits and detector evaluation.

mod calibration;
mod curves;
mod decode;
mod fit;
mod postselect;
mod roc;
mod scores;

pub use calibration::{calibration, Calibration, CalibrationBin};
pub use curves::{curves, shot_correlators, subset_sem, CurvePoint};
pub use decode::{decode, Decision, DecodeStrategy};
pub use fit::{fit_decay, DecayFit};
pub use postselect::{
    gain_decomposition, postselect, GainSplit, Mitigation, PostselectReport, ThresholdReport,
};
pub use roc::{roc_from_scores, threshold_for_tpr, RocCurve, RocPoint};
pub use scores::{lcomp_scores, tail_leaked};

use crate::error::Result;
use crate::hmm::HmmSpec;
use crate::models::Role;
use crate::sim::ShotRecord;

/// ROC of `L_comp` for `role` against the simulator's leak labels.
pub fn roc(records: &[ShotRecord], spec: &HmmSpec<f64>, role: Role) -> Result<RocCurve> {
    let scores = lcomp_scores(records, spec, role)?;
    let labels: Vec<bool> = records.iter().map(|r| tail_leaked(r, role)).collect();
    roc_from_scores(&scores, &labels)
}
