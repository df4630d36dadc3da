use std::fs::File;
use std::io::{BufWriter, Write};

use parity_hmm::analysis::{
    self, calibration, fit_decay, lcomp_scores, postselect, roc_from_scores, tail_leaked,
    CurvePoint, Mitigation,
};
use parity_hmm::hmm::HmmSpec;
use parity_hmm::models::{observations, ModelFile, ModelKind, ProtocolTag, Role};
use parity_hmm::sim::{leakage_onset_toy, simulate_dataset, simulate_idling, write_jsonl, ShotRecord};
use parity_hmm::trainer::{compare_models, fit, FitOptions, FitReport};
use serde::Serialize;

use crate::failure::{CliResult, Failure};
use crate::io::{load_config, load_model, load_records, write_csv, write_json};
use crate::manifest::{sidecar, PipelineManifest};
use crate::{CompareArgs, CurvesArgs, EvaluateArgs, Evaluation, OnsetArgs, SimulateArgs, TrainArgs};

pub fn simulate(args: SimulateArgs, flags: Vec<String>) -> CliResult<()> {
    let mut config = load_config(&args.config)?;
    if let Some(shots) = args.shots {
        config.shots = shots;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;
    let manifest = PipelineManifest::new("simulate", flags, &args.out)
        .with_config(&args.config)?
        .with_seed(config.seed);
    let hash = manifest.hash();

    if config.protocol == ProtocolTag::IdlingDd {
        let curve = simulate_idling(&config)?;
        #[derive(Serialize)]
        struct Row {
            m: usize,
            xx: f64,
            yy: f64,
            zz: f64,
        }
        let rows: Vec<Row> = (0..curve.m.len())
            .map(|i| Row {
                m: curve.m[i],
                xx: curve.xx[i],
                yy: curve.yy[i],
                zz: curve.zz[i],
            })
            .collect();
        write_csv(Some(&args.out), &hash, &rows, &[])?;
        return manifest.write_beside(&args.out);
    }

    let (records, summary) = simulate_dataset(&config)?;
    let mut out = BufWriter::new(File::create(&args.out)?);
    write_jsonl(&mut out, &records)?;
    out.flush()?;

    #[derive(Serialize)]
    struct Summary<'a> {
        manifest: &'a str,
        #[serde(flatten)]
        summary: &'a parity_hmm::sim::DatasetSummary,
    }
    write_json(
        &sidecar(&args.out, "summary.json"),
        &Summary {
            manifest: &hash,
            summary: &summary,
        },
    )?;
    manifest.write_beside(&args.out)?;
    if let (Some(d), Some(a)) = (summary.data_leaked.last(), summary.anc_leaked.last()) {
        eprintln!(
            "{} records; leaked at round {}: data {:.2}%, ancilla {:.2}%",
            records.len(),
            summary.rounds,
            100.0 * d,
            100.0 * a
        );
    }
    Ok(())
}

fn model_kind(spec: &HmmSpec<f64>) -> CliResult<ModelKind> {
    Ok(spec.name().parse()?)
}

/// Observation streams for `role`, skipping runs too short to give one.
fn observation_set(records: &[ShotRecord], protocol: ProtocolTag, role: Role) -> CliResult<Vec<Vec<usize>>> {
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        if r.protocol != protocol {
            return Err(Failure::input(format!(
                "record protocol `{}` does not match the model's `{}`",
                r.protocol.as_str(),
                protocol.as_str()
            )));
        }
        if role == Role::Data && r.m_a.len() < protocol.syndrome_span().unwrap_or(1) {
            continue;
        }
        out.push(observations(role, r.protocol, &r.m_a)?);
    }
    if out.is_empty() {
        return Err(Failure::input("no record is long enough to yield an observation"));
    }
    Ok(out)
}

fn parse_fix(fix: &str) -> CliResult<(&str, f64)> {
    let (name, value) = fix
        .split_once('=')
        .ok_or_else(|| Failure::input(format!("`--fix {fix}`: expected NAME=VALUE")))?;
    let value = value
        .parse()
        .map_err(|_| Failure::input(format!("`--fix {fix}`: `{value}` is not a number")))?;
    Ok((name, value))
}

pub fn train(args: TrainArgs, flags: Vec<String>) -> CliResult<()> {
    let mut spec = load_model(&args.model)?;
    let kind = model_kind(&spec)?;
    for fix in &args.fixes {
        let (name, value) = parse_fix(fix)?;
        spec.freeze(name, value)?;
    }
    let records = load_records(&args.data)?;
    let data = observation_set(&records, kind.protocol(), kind.role())?;
    let opts = FitOptions {
        restarts: args.restarts,
        batch_size: args.batch_size.min(data.len()),
        max_iters: args.max_iters,
        seed: args.seed,
        ..FitOptions::default()
    };
    let report = fit(&spec, &data, &opts)?;
    report.apply_to(&mut spec)?;

    let manifest = PipelineManifest::new("train", flags, &args.out)
        .with_dataset(&args.data)?
        .with_model(&args.model)?
        .with_seed(args.seed);
    write_json(&args.out, &ModelFile::from_spec(&spec))?;
    #[derive(Serialize)]
    struct Diagnostics<'a> {
        manifest: String,
        #[serde(flatten)]
        report: &'a FitReport,
    }
    write_json(
        &sidecar(&args.out, "fit.json"),
        &Diagnostics {
            manifest: manifest.hash(),
            report: &report,
        },
    )?;
    manifest.write_beside(&args.out)?;
    eprintln!(
        "{}: log-likelihood {:.3}, AIC {:.3}, {} of {} restarts rejected",
        report.model,
        report.log_likelihood,
        report.aic,
        report.rejected_restarts,
        report.restarts.len()
    );
    Ok(())
}

/// `L_comp` of model-sampled runs with the same observation lengths as `records`.
fn model_sampled_scores(
    spec: &HmmSpec<f64>,
    records: &[ShotRecord],
    role: Role,
    seed: u64,
) -> CliResult<Vec<f64>> {
    let model = spec.assemble()?;
    let mut scores = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let len = observations(role, r.protocol, &r.m_a).map_or(0, |o| o.len());
        if len == 0 {
            continue;
        }
        let sample = model.sample_sequence(len, seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ i as u64);
        scores.push(model.computational_likelihood(role, r.protocol, &sample.observed)?.value);
    }
    Ok(scores)
}

pub fn evaluate(args: EvaluateArgs, flags: Vec<String>) -> CliResult<()> {
    let spec = load_model(&args.model)?;
    let role = args.role.unwrap_or(model_kind(&spec)?.role());
    let records = load_records(&args.data)?;
    let scores = lcomp_scores(&records, &spec, role)?;
    let out_path = args.out.clone().unwrap_or_default();
    let manifest = PipelineManifest::new("evaluate", flags, &out_path)
        .with_dataset(&args.data)?
        .with_model(&args.model)?
        .with_seed(args.seed);
    let hash = manifest.hash();
    let out = args.out.as_deref();

    match args.what {
        Evaluation::Lcomp => {
            #[derive(Serialize)]
            struct Row {
                index: usize,
                m: usize,
                lcomp: f64,
            }
            let rows: Vec<Row> = records
                .iter()
                .zip(&scores)
                .enumerate()
                .map(|(index, (r, &lcomp))| Row {
                    index,
                    m: r.rounds,
                    lcomp,
                })
                .collect();
            write_csv(out, &hash, &rows, &[])?;
        }
        Evaluation::Roc => {
            let labels: Vec<bool> = records.iter().map(|r| tail_leaked(r, role)).collect();
            let curve = roc_from_scores(&scores, &labels)?;
            let footer = [
                format!("auc {}", curve.auc),
                format!("positives {}", curve.positives),
                format!("negatives {}", curve.negatives),
            ];
            write_csv(out, &hash, &curve.points, &footer)?;
        }
        Evaluation::Calibration => {
            let unleaked: Vec<bool> = records.iter().map(|r| !tail_leaked(r, role)).collect();
            let reference = model_sampled_scores(&spec, &records, role, args.seed)?;
            let cal = calibration(&scores, Some(&unleaked), &reference, args.bins);
            #[derive(Serialize)]
            struct Row {
                bin_lo: f64,
                bin_hi: f64,
                n_exp: usize,
                n_model: usize,
                unleaked_frac: Option<f64>,
            }
            let rows: Vec<Row> = cal
                .bins
                .iter()
                .map(|b| Row {
                    bin_lo: b.lo,
                    bin_hi: b.hi,
                    n_exp: b.n_exp,
                    n_model: b.n_model,
                    unleaked_frac: b.unleaked_frac,
                })
                .collect();
            write_csv(out, &hash, &rows, &[format!("tv_distance {}", cal.tv_distance)])?;
        }
    }
    if let Some(path) = out {
        manifest.write_beside(path)?;
    }
    Ok(())
}

enum Cut {
    Tpr(f64),
    Threshold(f64),
}

/// `MODEL:ROLE:tpr=X` or `MODEL:ROLE:threshold=X`; MODEL may be a path.
fn parse_mitigation(text: &str) -> CliResult<(String, Role, Cut)> {
    let bad = || Failure::input(format!("`--mitigate {text}`: expected MODEL:ROLE:tpr=X"));
    let mut parts = text.rsplitn(3, ':');
    let (cut, role, model) = match (parts.next(), parts.next(), parts.next()) {
        (Some(c), Some(r), Some(m)) => (c, r, m),
        _ => return Err(bad()),
    };
    let (key, value) = cut.split_once('=').ok_or_else(bad)?;
    let value: f64 = value.parse().map_err(|_| bad())?;
    let cut = match key {
        "tpr" => Cut::Tpr(value),
        "threshold" => Cut::Threshold(value),
        _ => return Err(bad()),
    };
    Ok((model.to_string(), role.parse()?, cut))
}

#[derive(Serialize)]
struct CurveRow {
    m: usize,
    shots: usize,
    accepted: usize,
    xx: f64,
    yy: f64,
    zz: f64,
    #[serde(rename = "F")]
    fidelity: f64,
    f_post: f64,
    sem_xx: f64,
    sem_yy: f64,
    sem_zz: f64,
    #[serde(rename = "sem_F")]
    sem_fidelity: f64,
}

impl From<&CurvePoint> for CurveRow {
    fn from(p: &CurvePoint) -> Self {
        Self {
            m: p.m,
            shots: p.shots,
            accepted: p.accepted,
            xx: p.xx,
            yy: p.yy,
            zz: p.zz,
            fidelity: p.fidelity,
            f_post: p.f_post,
            sem_xx: p.sem_xx,
            sem_yy: p.sem_yy,
            sem_zz: p.sem_zz,
            sem_fidelity: p.sem_fidelity,
        }
    }
}

fn fit_line(name: &str, points: &[CurvePoint], value: impl Fn(&CurvePoint) -> (f64, f64)) -> CliResult<String> {
    let m: Vec<f64> = points.iter().map(|p| p.m as f64).collect();
    let (y, s): (Vec<f64>, Vec<f64>) = points.iter().map(value).unzip();
    let sigma = s.iter().all(|s| s.is_finite() && *s > 0.0).then_some(s.as_slice());
    let f = fit_decay(&m, &y, sigma)?;
    Ok(format!(
        "fit {name} a={} se_a={} upsilon={} se_upsilon={} b={} se_b={} identifiable={}",
        f.a, f.se_a, f.upsilon, f.se_upsilon, f.b, f.se_b, f.identifiable
    ))
}

pub fn curves(args: CurvesArgs, flags: Vec<String>) -> CliResult<()> {
    let records = load_records(&args.data)?;
    let mut manifest = PipelineManifest::new("curves", flags, &args.out.clone().unwrap_or_default())
        .with_dataset(&args.data)?;
    let requests = args
        .mitigations
        .iter()
        .map(|m| parse_mitigation(m))
        .collect::<CliResult<Vec<_>>>()?;
    let needs_tuning = requests.iter().any(|(_, _, c)| matches!(c, Cut::Tpr(_)));

    let (tuning, evaluation): (Vec<ShotRecord>, Vec<ShotRecord>) = match (&args.tune_data, needs_tuning) {
        (Some(path), true) => {
            manifest = manifest.with_dataset(path)?;
            (load_records(path)?, records)
        }
        (None, true) => {
            let (even, odd): (Vec<_>, Vec<_>) = records.into_iter().enumerate().partition(|(i, _)| i % 2 == 0);
            (
                even.into_iter().map(|(_, r)| r).collect(),
                odd.into_iter().map(|(_, r)| r).collect(),
            )
        }
        (_, false) => (Vec::new(), records),
    };
    if evaluation.is_empty() {
        return Err(Failure::input("no records left to evaluate after the tuning split"));
    }

    let mut mitigations = Vec::with_capacity(requests.len());
    for (model, role, cut) in requests {
        manifest = manifest.with_model(&model)?;
        let spec = load_model(&model)?;
        mitigations.push(match cut {
            Cut::Tpr(tpr) => Mitigation::tuned(spec, role, &tuning, tpr)?,
            Cut::Threshold(threshold) => Mitigation {
                spec,
                role,
                threshold,
            },
        });
    }
    let mut footer = Vec::new();
    let keep = if mitigations.is_empty() {
        None
    } else {
        let report = postselect(&evaluation, &mitigations)?;
        for t in &report.thresholds {
            footer.push(format!(
                "threshold {} {} {} rejected={}",
                t.model, t.role, t.threshold, t.rejected
            ));
        }
        footer.push(format!("mean_f_post {}", report.mean_f_post()));
        Some(report.keep)
    };
    let points = analysis::curves(&evaluation, args.strategy, keep.as_deref())?;
    if args.fit {
        footer.push(fit_line("zz", &points, |p| (p.zz, p.sem_zz))?);
        footer.push(fit_line("F", &points, |p| (p.fidelity, p.sem_fidelity))?);
    }
    let rows: Vec<CurveRow> = points.iter().map(CurveRow::from).collect();
    write_csv(args.out.as_deref(), &manifest.hash(), &rows, &footer)?;
    if let Some(path) = &args.out {
        manifest.write_beside(path)?;
    }
    Ok(())
}

pub fn compare(args: CompareArgs) -> CliResult<()> {
    let read = |p: &std::path::Path| -> CliResult<FitReport> {
        Ok(serde_json::from_reader(std::io::BufReader::new(File::open(p)?))?)
    };
    let (a, b) = (read(&args.a)?, read(&args.b)?);
    let delta = compare_models(&a, &b)?;
    println!("aic_a {} ({})", a.aic, a.model);
    println!("aic_b {} ({})", b.aic, b.model);
    println!("delta_aic {delta}");
    println!(
        "preferred {}",
        if delta > 0.0 {
            &a.model
        } else if delta < 0.0 {
            &b.model
        } else {
            "neither"
        }
    );
    Ok(())
}

pub fn onset_toy(args: OnsetArgs, flags: Vec<String>) -> CliResult<()> {
    let toy = leakage_onset_toy(args.p, args.n_a, args.p_leak, args.rounds, args.shots, args.seed)?;
    let manifest = PipelineManifest::new("onset-toy", flags, &args.out.clone().unwrap_or_default())
        .with_seed(args.seed);
    #[derive(Serialize)]
    struct Row {
        m: usize,
        mean_lcomp: f64,
        mean_log_odds: f64,
    }
    let rows: Vec<Row> = (0..toy.m.len())
        .map(|i| Row {
            m: toy.m[i],
            mean_lcomp: toy.mean_lcomp[i],
            mean_log_odds: toy.mean_log_odds[i],
        })
        .collect();
    let footer = [
        format!("fitted_slope {}", toy.fitted_slope),
        format!("lambda {}", toy.lambda),
        format!("lambda_published {}", toy.lambda_published),
        format!("amplitude {}", toy.amplitude),
    ];
    write_csv(args.out.as_deref(), &manifest.hash(), &rows, &footer)?;
    if let Some(path) = &args.out {
        manifest.write_beside(path)?;
    }
    Ok(())
}
