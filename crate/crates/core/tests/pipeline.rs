use parity_hmm::analysis::*;
use parity_hmm::models::*;
use parity_hmm::sim::*;
use parity_hmm::trainer::{fit, FitOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dataset(protocol: ProtocolTag, rounds: Vec<usize>, shots: usize, seed: u64) -> Vec<ShotRecord> {
    let mut config = ExperimentConfig::new(protocol, 1, shots, seed);
    config.rounds = Rounds::Many(rounds);
    simulate_dataset(&config).unwrap().0
}

#[test]
fn final_decoder_only_reads_the_tail() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (protocol, tail) in [(ProtocolTag::Zz, 2), (ProtocolTag::Zzxx, 3)] {
        for record in dataset(protocol, vec![6, 11], 20, 3) {
            let reference = decode(&record, DecodeStrategy::Final).unwrap();
            for _ in 0..20 {
                let mut fuzzed = record.clone();
                let n = fuzzed.m_a.len();
                for v in &mut fuzzed.m_a[..n - tail] {
                    *v = if rng.random_bool(0.5) { 1 } else { -1 };
                }
                assert_eq!(decode(&fuzzed, DecodeStrategy::Final).unwrap(), reference);
            }
        }
    }
}

#[test]
fn no_error_on_zz_is_the_pairwise_product_rule() {
    for record in dataset(ProtocolTag::Zz, vec![3, 7, 15], 200, 5) {
        let pairwise = record.m_a.windows(3).all(|w| w[0] * w[2] == 1);
        let d = decode(&record, DecodeStrategy::NoError).unwrap();
        assert_eq!(d.accepted, pairwise);
        let first = decode(&record, DecodeStrategy::First).unwrap();
        assert_eq!((d.flip_x, d.flip_z), (first.flip_x, first.flip_z));
    }
}

#[test]
fn f_post_is_monotone_in_threshold() {
    let records = dataset(ProtocolTag::Zz, vec![10, 20], 500, 7);
    let spec = build_model::<f64>(ModelKind::ZzD);
    let mut last = vec![1.0; 2];
    for threshold in [0.0, 0.5, 0.8, 0.9, 0.95, 0.97] {
        let mitigation = Mitigation {
            spec: spec.clone(),
            role: Role::Data,
            threshold,
        };
        let report = postselect(&records, &[mitigation]).unwrap();
        let f: Vec<f64> = report.f_post.iter().map(|&(_, f)| f).collect();
        if threshold == 0.0 {
            assert_eq!(f, vec![1.0, 1.0]);
        }
        assert!(f.iter().zip(&last).all(|(now, before)| now <= before));
        last = f;
    }
}

#[test]
fn simulated_rocs_are_monotone_staircases() {
    let records = dataset(ProtocolTag::Zz, vec![25], 3000, 9);
    for kind in [ModelKind::ZzD, ModelKind::ZzA, ModelKind::SimpleZzD] {
        let curve = roc(&records, &build_model(kind), kind.role()).unwrap();
        let first = curve.points.first().unwrap();
        let last = curve.points.last().unwrap();
        assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        assert!(curve
            .points
            .windows(2)
            .all(|w| w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr));
        assert!(curve.auc > 0.7, "{kind}: {}", curve.auc);
    }
}

#[test]
fn random_scores_give_chance_auc() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let scores: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
    let labels: Vec<bool> = (0..10_000).map(|_| rng.random_bool(0.3)).collect();
    let auc = roc_from_scores(&scores, &labels).unwrap().auc;
    assert!((auc - 0.5).abs() < 0.02, "{auc}");
}

#[test]
fn leak_free_data_fills_the_top_bin() {
    let spec = build_model::<f64>(ModelKind::ZzD);
    let mut config = ExperimentConfig::new(ProtocolTag::Zz, 15, 300, 2);
    let mut rates = config.rates();
    rates.data_leak = 0.0;
    rates.anc_leak = 0.0;
    config.rates = Some(rates);
    let (records, _) = simulate_dataset(&config).unwrap();
    let mut clean = spec.clone();
    clean.freeze("p_leak", 0.0).unwrap();
    let scores = lcomp_scores(&records, &clean, Role::Data).unwrap();
    let cal = calibration(&scores, None, &scores, 10);
    assert_eq!(cal.bins[9].n_exp, records.len());
    assert!(cal.bins[..9].iter().all(|b| b.n_exp == 0 && b.mean_lcomp.is_none()));
}

#[test]
fn model_histograms_overlay_simulated_ones() {
    let records = dataset(ProtocolTag::Zz, vec![25], 20_000, 12);
    for kind in [ModelKind::ZzD, ModelKind::ZzA] {
        let spec = build_model::<f64>(kind);
        let a = spec.assemble().unwrap();
        let scores = lcomp_scores(&records, &spec, kind.role()).unwrap();
        let len = observations(kind.role(), ProtocolTag::Zz, &records[0].m_a).unwrap().len();
        let model: Vec<f64> = (0..20_000)
            .map(|i| {
                let s = a.sample_sequence(len, 1000 + i);
                a.computational_likelihood(kind.role(), ProtocolTag::Zz, &s.observed)
                    .unwrap()
                    .value
            })
            .collect();
        let tv = calibration(&scores, None, &model, 20).tv_distance;
        assert!(tv < 0.05, "{kind}: {tv}");
    }
}

#[test]
fn leaky_zz_decays_and_no_error_stays_flat() {
    let rounds: Vec<usize> = (3..=25).step_by(2).collect();
    let records = dataset(ProtocolTag::Zz, rounds, 3000, 13);
    let final_curve = curves(&records, DecodeStrategy::Final, None).unwrap();
    let m: Vec<f64> = final_curve.iter().map(|p| p.m as f64).collect();
    let zz: Vec<f64> = final_curve.iter().map(|p| p.zz).collect();
    let sem: Vec<f64> = final_curve.iter().map(|p| p.sem_zz).collect();
    let fit = fit_decay(&m, &zz, Some(&sem)).unwrap();
    assert!(fit.identifiable && fit.a > 0.0 && fit.b < zz[0]);

    let strict = curves(&records, DecodeStrategy::NoError, None).unwrap();
    let mean = strict.iter().map(|p| p.zz).sum::<f64>() / strict.len() as f64;
    for p in &strict {
        assert!((p.zz - mean).abs() < 4.0 * p.sem_zz.max(1e-3), "M={} zz={}", p.m, p.zz);
    }
    assert!(strict.windows(2).all(|w| w[1].f_post <= w[0].f_post + 0.02));
}

#[test]
fn detailed_model_beats_simple_on_its_own_data() {
    let detailed = build_model::<f64>(ModelKind::ZzD);
    let a = detailed.assemble().unwrap();
    let data: Vec<Vec<usize>> = (0..1500).map(|i| a.sample_sequence(23, i).observed).collect();
    let opts = FitOptions {
        restarts: 2,
        ..FitOptions::default()
    };
    let rich = fit(&detailed, &data, &opts).unwrap();
    let simple = fit(&build_model(ModelKind::SimpleZzD), &data, &opts).unwrap();
    assert!(simple.aic - rich.aic > 0.0, "{} vs {}", simple.aic, rich.aic);
}
