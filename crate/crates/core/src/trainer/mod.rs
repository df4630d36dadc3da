//! Maximum-likelihood fitting of model rates over sets of observation records.
//!
//! Each restart runs a trust-region Newton method in logistic coordinates
//! `p = 1 / (1 + exp(-x))`, so every iterate stays inside `(0, 1)`. Steps
//! that produce an inadmissible matrix are treated as failed and shrink the
//! trust region.

mod steihaug;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hmm::HmmSpec;
use crate::scalar::pairwise_sum;

/// Settings for [`fit`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub restarts: usize,
    /// Records per likelihood evaluation in the early iterations.
    pub batch_size: usize,
    pub max_iters: usize,
    /// Tolerance on the projected gradient norm of the mean log-likelihood.
    pub tol: f64,
    pub seed: u64,
    /// Random restarts draw each rate log-uniformly in `[v / spread, v * spread]`.
    pub init_spread: f64,
    /// Uniform ranges that override `init_spread` for named parameters.
    pub init_ranges: BTreeMap<String, (f64, f64)>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: 15,
            batch_size: 15_000,
            max_iters: 200,
            tol: 1e-6,
            seed: 0,
            init_spread: 3.0,
            init_ranges: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamValue {
    pub name: String,
    pub value: f64,
    pub frozen: bool,
}

/// Outcome of one optimization run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartOutcome {
    pub index: usize,
    pub initial: Vec<f64>,
    pub params: Vec<f64>,
    /// Total log-likelihood over the full dataset; `None` if rejected.
    pub log_likelihood: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub rejected: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: String,
    pub params: Vec<ParamValue>,
    pub restarts: Vec<RestartOutcome>,
    pub rejected_restarts: usize,
    pub log_likelihood: f64,
    pub n_free: usize,
    pub aic: f64,
    pub gradient_norm: f64,
    pub n_records: usize,
    pub fingerprint: String,
}

impl FitReport {
    /// Copies the fitted values (and frozen flags) into `spec`.
    pub fn apply_to(&self, spec: &mut HmmSpec<f64>) -> Result<()> {
        for p in &self.params {
            if p.frozen {
                spec.freeze(&p.name, p.value)?;
            } else {
                spec.unfreeze(&p.name)?;
                spec.set_param(&p.name, p.value)?;
            }
        }
        Ok(())
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }
}

/// SHA-256 over record lengths and symbols, hex encoded.
pub fn dataset_fingerprint(dataset: &[Vec<usize>]) -> String {
    let mut hasher = Sha256::new();
    hasher.update((dataset.len() as u64).to_le_bytes());
    for record in dataset {
        hasher.update((record.len() as u64).to_le_bytes());
        for &o in record {
            hasher.update((o as u32).to_le_bytes());
        }
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Total log-likelihood, summed in a fixed pairwise order.
pub fn total_log_likelihood(spec: &HmmSpec<f64>, dataset: &[Vec<usize>]) -> Result<f64> {
    let refs: Vec<&[usize]> = dataset.iter().map(Vec::as_slice).collect();
    log_likelihood_of(spec, &refs)
}

/// Akaike criterion `2 n_free - 2 log L`; the caller supplies a fitted spec.
pub fn aic(spec: &HmmSpec<f64>, dataset: &[Vec<usize>]) -> Result<f64> {
    Ok(2.0 * spec.n_free() as f64 - 2.0 * total_log_likelihood(spec, dataset)?)
}

/// `A(b) - A(a)`: positive when model `a` is preferred.
pub fn compare_models(a: &FitReport, b: &FitReport) -> Result<f64> {
    if a.fingerprint != b.fingerprint {
        return Err(Error::FingerprintMismatch);
    }
    Ok(b.aic - a.aic)
}

fn log_likelihood_of(spec: &HmmSpec<f64>, records: &[&[usize]]) -> Result<f64> {
    let model = spec.assemble()?;
    let terms = records
        .par_iter()
        .map(|r| model.sequence_log_likelihood(r))
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&terms))
}

fn pairwise_vec_sum(items: &[Vec<f64>], width: usize) -> Vec<f64> {
    match items.len() {
        0 => vec![0.0; width],
        1 => items[0].clone(),
        n => {
            let mut left = pairwise_vec_sum(&items[..n / 2], width);
            let right = pairwise_vec_sum(&items[n / 2..], width);
            for (l, r) in left.iter_mut().zip(&right) {
                *l += r;
            }
            left
        }
    }
}

/// Mean log-likelihood, gradient and Hessian (row-major) over `records`.
fn mean_derivatives(
    spec: &HmmSpec<f64>,
    records: &[&[usize]],
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let model = spec.derivative_model()?;
    let n = model.n_free();
    let width = 1 + n + n * n;
    let packed = records
        .par_iter()
        .map(|r| {
            let d = model.evaluate(r, true)?;
            let mut v = Vec::with_capacity(width);
            v.push(d.log_likelihood);
            v.extend_from_slice(&d.gradient);
            for i in 0..n {
                for j in 0..n {
                    v.push(d.hessian[(i, j)]);
                }
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    let scale = 1.0 / records.len() as f64;
    let total: Vec<f64> = pairwise_vec_sum(&packed, width)
        .into_iter()
        .map(|x| x * scale)
        .collect();
    Ok((total[0], total[1..1 + n].to_vec(), total[1 + n..].to_vec()))
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

const EDGE: f64 = 1e-9;

/// Gradient norm with components pushing past the edge of `[0, 1]` removed.
fn projected_norm(p: &[f64], g: &[f64]) -> f64 {
    p.iter()
        .zip(g)
        .map(|(&p, &g)| {
            if (p < EDGE && g < 0.0) || (p > 1.0 - EDGE && g > 0.0) {
                0.0
            } else {
                g * g
            }
        })
        .sum::<f64>()
        .sqrt()
}

struct Run {
    params: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Index of the batch phase: random subsets until steps become small.
struct Batches<'a> {
    full: Vec<&'a [usize]>,
    size: usize,
    rng: ChaCha8Rng,
}

impl<'a> Batches<'a> {
    fn draw(&mut self) -> Vec<&'a [usize]> {
        let n = self.full.len();
        let mut idx: Vec<usize> = rand::seq::index::sample(&mut self.rng, n, self.size).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| self.full[i]).collect()
    }
}

fn optimize(
    template: &HmmSpec<f64>,
    start: &[f64],
    batches: &mut Batches<'_>,
    opts: &FitOptions,
) -> std::result::Result<Run, String> {
    let mut spec = template.clone();
    let n = start.len();
    let mut x: Vec<f64> = start.iter().map(|&p| logit(p)).collect();
    let mut radius = 1.0;
    let max_radius = 20.0;
    let mut batched = batches.size < batches.full.len();
    let mut iterations = 0;
    let mut p = start.to_vec();
    let p_of = |x: &[f64]| x.iter().map(|&v| sigmoid(v)).collect::<Vec<f64>>();

    while iterations < opts.max_iters {
        let records = if batched {
            batches.draw()
        } else {
            batches.full.clone()
        };
        spec.set_free_values(&p);
        let (f, g, h) = mean_derivatives(&spec, &records).map_err(|e| e.to_string())?;
        if projected_norm(&p, &g) <= opts.tol {
            if batched {
                batched = false;
                continue;
            }
            return Ok(Run {
                params: p,
                iterations,
                converged: true,
            });
        }
        iterations += 1;

        // Chain rule into logistic coordinates, negated for minimization.
        let d1: Vec<f64> = p.iter().map(|&s| s * (1.0 - s)).collect();
        let d2: Vec<f64> = p.iter().map(|&s| s * (1.0 - s) * (1.0 - 2.0 * s)).collect();
        let gx: Vec<f64> = (0..n).map(|i| -g[i] * d1[i]).collect();
        let mut hx = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hx[i * n + j] = -h[i * n + j] * d1[i] * d1[j];
            }
            hx[i * n + i] -= g[i] * d2[i];
        }

        let (step, predicted) = steihaug::solve(&gx, &hx, radius, 1e-10);
        let step_norm = step.iter().map(|s| s * s).sum::<f64>().sqrt();
        let trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
        let p_trial = p_of(&trial);
        spec.set_free_values(&p_trial);
        let rho = match log_likelihood_of(&spec, &records) {
            Ok(total) => {
                let actual = total / records.len() as f64 - f;
                if predicted <= 1e-14 * f.abs() {
                    if actual >= -1e-14 * f.abs() {
                        1.0
                    } else {
                        -1.0
                    }
                } else {
                    actual / predicted
                }
            }
            Err(_) => -1.0,
        };
        if rho < 0.25 {
            radius = 0.25 * step_norm.min(radius);
        } else if rho > 0.75 && step_norm >= 0.99 * radius {
            radius = (2.0 * radius).min(max_radius);
        }
        if rho > 1e-4 {
            x = trial;
            p = p_trial;
            if batched && step_norm < 1e-2 {
                batched = false;
            }
        }
        if radius < 1e-12 {
            if batched {
                batched = false;
                radius = 1e-3;
                continue;
            }
            return Err("trust region collapsed before convergence".into());
        }
    }
    Ok(Run {
        params: p,
        iterations,
        converged: false,
    })
}

fn initial_values(
    spec: &HmmSpec<f64>,
    restart: usize,
    opts: &FitOptions,
) -> std::result::Result<Vec<f64>, String> {
    let names: Vec<String> = spec
        .free_indices()
        .into_iter()
        .map(|i| spec.params()[i].name.clone())
        .collect();
    let base: Vec<f64> = spec
        .free_values()
        .into_iter()
        .map(|v| v.clamp(1e-6, 1.0 - 1e-6))
        .collect();
    if restart == 0 {
        return Ok(base);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(restart as u64);
    let spread = opts.init_spread.max(1.0);
    let mut trial = spec.clone();
    for _ in 0..1000 {
        let values: Vec<f64> = names
            .iter()
            .zip(&base)
            .map(|(name, &v)| match opts.init_ranges.get(name) {
                Some(&(lo, hi)) => rng.random_range(lo..=hi),
                None => {
                    let u: f64 = rng.random_range(-1.0..=1.0);
                    v * spread.powf(u)
                }
            })
            .map(|v| v.clamp(1e-6, 0.5))
            .collect();
        trial.set_free_values(&values);
        if trial.assemble().is_ok() {
            return Ok(values);
        }
    }
    Err("no admissible initialization drawn".into())
}

/// Maximizes the summed log-likelihood of `dataset` over the free rates of `spec`.
pub fn fit(spec: &HmmSpec<f64>, dataset: &[Vec<usize>], opts: &FitOptions) -> Result<FitReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    if spec.n_free() == 0 {
        return Err(Error::InvalidModel("no free parameters to fit".into()));
    }
    if opts.restarts == 0 {
        return Err(Error::InvalidConfig("restarts must be at least 1".into()));
    }
    let alphabet = spec.n_outputs();
    for record in dataset {
        if record.is_empty() {
            return Err(Error::EmptyInput("record"));
        }
        if let Some(&symbol) = record.iter().find(|&&o| o >= alphabet) {
            return Err(Error::UnknownSymbol { symbol, alphabet });
        }
    }
    let full: Vec<&[usize]> = dataset.iter().map(Vec::as_slice).collect();

    let mut outcomes = Vec::with_capacity(opts.restarts);
    for restart in 0..opts.restarts {
        let mut batch_rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed_ba7c);
        batch_rng.set_stream(restart as u64);
        let mut batches = Batches {
            full: full.clone(),
            size: opts.batch_size.clamp(1, full.len()),
            rng: batch_rng,
        };
        let initial = match initial_values(spec, restart, opts) {
            Ok(v) => v,
            Err(reason) => {
                outcomes.push(RestartOutcome {
                    index: restart,
                    initial: Vec::new(),
                    params: Vec::new(),
                    log_likelihood: None,
                    iterations: 0,
                    converged: false,
                    rejected: Some(reason),
                });
                continue;
            }
        };
        let result = optimize(spec, &initial, &mut batches, opts).and_then(|run| {
            let mut fitted = spec.clone();
            fitted.set_free_values(&run.params);
            let ll = log_likelihood_of(&fitted, &full).map_err(|e| e.to_string())?;
            if !ll.is_finite() {
                return Err("non-finite log-likelihood".into());
            }
            Ok((run, ll))
        });
        outcomes.push(match result {
            Ok((run, ll)) => RestartOutcome {
                index: restart,
                initial,
                params: run.params,
                log_likelihood: Some(ll),
                iterations: run.iterations,
                converged: run.converged,
                rejected: None,
            },
            Err(reason) => RestartOutcome {
                index: restart,
                initial: initial.clone(),
                params: initial,
                log_likelihood: None,
                iterations: 0,
                converged: false,
                rejected: Some(reason),
            },
        });
    }

    let best = outcomes
        .iter()
        .filter_map(|o| o.log_likelihood.map(|ll| (o, ll)))
        .fold(None::<(&RestartOutcome, f64)>, |acc, (o, ll)| match acc {
            Some((_, best)) if best >= ll => acc,
            _ => Some((o, ll)),
        });
    let Some((best, log_likelihood)) = best else {
        return Err(Error::AllRestartsRejected {
            restarts: opts.restarts,
        });
    };

    let mut fitted = spec.clone();
    fitted.set_free_values(&best.params);
    let gradient_norm = match mean_derivatives(&fitted, &full) {
        Ok((_, g, _)) => projected_norm(&best.params, &g),
        Err(_) => f64::NAN,
    };
    let n_free = fitted.n_free();
    Ok(FitReport {
        model: spec.name().to_string(),
        params: fitted
            .params()
            .iter()
            .map(|p| ParamValue {
                name: p.name.clone(),
                value: p.value,
                frozen: p.frozen,
            })
            .collect(),
        rejected_restarts: outcomes.iter().filter(|o| o.rejected.is_some()).count(),
        restarts: outcomes,
        log_likelihood,
        n_free,
        aic: 2.0 * n_free as f64 - 2.0 * log_likelihood,
        gradient_norm,
        n_records: dataset.len(),
        fingerprint: dataset_fingerprint(dataset),
    })
}
