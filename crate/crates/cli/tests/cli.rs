use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_parity-hmm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[test]
fn simulate_writes_requested_shots_deterministically() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "protocol = \"zz\"\nrounds = 8\nshots = 3\nseed = 4\n");
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    ok(&["simulate", "--config", s(&config), "--shots", "10", "--out", s(&a)]);
    ok(&["simulate", "--config", s(&config), "--shots", "10", "--out", s(&b), "--threads", "1"]);
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(dir.path().join("a.summary.json").is_file());

    let manifest = |p: &str| -> serde_json::Value {
        serde_json::from_str(&fs::read_to_string(dir.path().join(p)).unwrap()).unwrap()
    };
    let (ma, mb) = (manifest("a.manifest.json"), manifest("b.manifest.json"));
    assert_eq!(ma["command"], "simulate");
    assert_eq!(ma["seed"], 4);
    assert_eq!(ma["input_digests"], mb["input_digests"]);
}

#[test]
fn invalid_config_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "protocol = \"zz\"\nrounds = 5\nshots = 1\n[rates]\ndata_x = 1.5\nreadout_flip = -0.1\n",
    );
    let out = run(&["simulate", "--config", s(&config), "--out", s(&dir.path().join("x.jsonl"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("data_x") && err.contains("readout_flip"), "{err}");

    let out = run(&["train", "--model", "no_such_model", "--data", "x", "--out", "y"]);
    assert_eq!(out.status.code(), Some(2));
}

fn leaky_dataset(dir: &Path, protocol: &str, rounds: &str, shots: usize) -> PathBuf {
    let config = write_config(
        dir,
        &format!("protocol = \"{protocol}\"\nrounds = {rounds}\nshots = {shots}\nseed = 1\n"),
    );
    let data = dir.join(format!("{protocol}.jsonl"));
    ok(&["simulate", "--config", s(&config), "--out", s(&data)]);
    data
}

#[test]
fn train_freezes_fixed_parameters_and_echoes_init() {
    let dir = TempDir::new().unwrap();
    let data = leaky_dataset(dir.path(), "zz", "12", 50);
    let out = dir.path().join("zz_a.json");
    ok(&[
        "train", "--model", "zz_a", "--data", s(&data), "--restarts", "1", "--max-iters", "0",
        "--fix", "p_leak=0.0040", "--out", s(&out),
    ]);
    let model: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(model["model_name"], "zz_a");
    assert_eq!(model["params"]["p_leak"]["value"], 0.004);
    assert_eq!(model["params"]["p_leak"]["frozen"], true);
    assert_eq!(model["params"]["p_seep"]["value"], 0.101);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("zz_a.fit.json")).unwrap()).unwrap();
    assert_eq!(report["restarts"].as_array().unwrap().len(), 1);

    // A saved model file is accepted wherever a model name is.
    let csv = dir.path().join("lcomp.csv");
    ok(&["evaluate", "lcomp", "--model", s(&out), "--data", s(&data), "--out", s(&csv)]);
    assert_eq!(data_lines(&csv).len(), 51);
}

#[test]
fn evaluate_outputs() {
    let dir = TempDir::new().unwrap();
    let data = leaky_dataset(dir.path(), "zz", "25", 400);
    let roc = dir.path().join("roc.csv");
    ok(&["evaluate", "roc", "--model", "zz_d", "--data", s(&data), "--out", s(&roc)]);
    let text = fs::read_to_string(&roc).unwrap();
    assert!(text.starts_with("# manifest "));
    assert!(text.contains("\nthreshold,fpr,tpr\n"));
    assert!(text.contains("# auc "));
    let rows: Vec<(f64, f64)> = data_lines(&roc)[1..]
        .iter()
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (v[1], v[2])
        })
        .collect();
    assert!(rows.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1));

    let cal = dir.path().join("cal.csv");
    ok(&["evaluate", "calibration", "--model", "zz_d", "--data", s(&data), "--bins", "10", "--out", s(&cal)]);
    let lines = data_lines(&cal);
    assert_eq!(lines[0], "bin_lo,bin_hi,n_exp,n_model,unleaked_frac");
    assert_eq!(lines.len(), 11);
    assert!(fs::read_to_string(&cal).unwrap().contains("# tv_distance "));

    let single = dir.path().join("one.jsonl");
    let first = fs::read_to_string(&data).unwrap().lines().next().unwrap().to_string();
    fs::write(&single, first + "\n").unwrap();
    let out = ok(&["evaluate", "lcomp", "--model", "zz_a", "--data", s(&single)]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = stdout.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 2);
    let lcomp: f64 = rows[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!((0.0..=1.0).contains(&lcomp));
}

#[test]
fn noiseless_curves_are_flat_at_one() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "protocol = \"zz\"\nrounds = [3, 5, 8, 12]\nshots = 20\n[rates]\n\
         data_x = 0.0\ndata_y = 0.0\ndata_z = 0.0\nancilla_flip = [0.0, 0.0, 0.0, 0.0]\n\
         readout_flip = 0.0\ndata_leak = 0.0\ndata_seep = 0.0\nanc_leak = 0.0\nanc_seep = 0.0\n",
    );
    let data = dir.path().join("clean.jsonl");
    ok(&["simulate", "--config", s(&config), "--out", s(&data)]);
    for strategy in ["first", "final", "no_error"] {
        let out = ok(&["curves", "--data", s(&data), "--strategy", strategy]);
        let stdout = String::from_utf8(out.stdout).unwrap();
        let rows: Vec<&str> = stdout.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        assert_eq!(rows.len(), 4);
        for row in rows {
            let v: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
            assert_eq!(v[6], 1.0, "{strategy}: F in {row}");
            assert_eq!(v[7], 1.0, "{strategy}: f_post in {row}");
        }
    }
}

#[test]
fn mitigated_curves_report_thresholds_and_fits() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "protocol = \"zz\"\nrounds = [4, 8, 12, 16, 20, 25]\nshots = 600\nseed = 2\n");
    let data = dir.path().join("zz.jsonl");
    ok(&["simulate", "--config", s(&config), "--out", s(&data)]);
    let out_csv = dir.path().join("curves.csv");
    ok(&[
        "curves", "--data", s(&data), "--mitigate", "zz_d:data:tpr=0.7", "--mitigate",
        "zz_a:ancilla:tpr=0.7", "--fit", "--out", s(&out_csv),
    ]);
    let text = fs::read_to_string(&out_csv).unwrap();
    assert_eq!(text.matches("# threshold ").count(), 2);
    assert!(text.contains("# fit zz a="));
    assert!(text.contains("# fit F a="));
    let rows = data_lines(&out_csv);
    assert_eq!(rows[0], "m,shots,accepted,xx,yy,zz,F,f_post,sem_xx,sem_yy,sem_zz,sem_F");
    // Odd-indexed half of 600 shots per M is evaluated.
    assert!(rows[1..].iter().all(|r| r.split(',').nth(1) == Some("300")));

    let out = run(&["curves", "--data", s(&data), "--mitigate", "zz_d:data"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_requires_same_data() {
    let dir = TempDir::new().unwrap();
    let data = leaky_dataset(dir.path(), "zz", "10", 40);
    let other = {
        let config = write_config(dir.path(), "protocol = \"zz\"\nrounds = 10\nshots = 40\nseed = 9\n");
        let p = dir.path().join("other.jsonl");
        ok(&["simulate", "--config", s(&config), "--out", s(&p)]);
        p
    };
    let fit = |name: &str, data: &Path, extra: &[&str]| {
        let out = dir.path().join(format!("{name}.json"));
        let mut args = vec!["train", "--model", "simple_zz_d", "--data", s(data), "--restarts", "1", "--max-iters", "3", "--out", s(&out)];
        args.extend_from_slice(extra);
        ok(&args);
        dir.path().join(format!("{name}.fit.json"))
    };
    let full = fit("full", &data, &[]);
    let stripped = fit("stripped", &data, &["--fix", "p_leak=0", "--fix", "p_10=0"]);
    let foreign = fit("foreign", &other, &[]);
    let out = ok(&["compare", s(&full), s(&stripped)]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("delta_aic "));
    assert_eq!(run(&["compare", s(&full), s(&foreign)]).status.code(), Some(2));
}

#[test]
fn onset_toy_csv() {
    let out = ok(&["onset-toy", "--p", "0.05", "--n-a", "2", "--rounds", "6", "--shots", "100"]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("m,mean_lcomp,mean_log_odds"));
    assert!(stdout.contains("# lambda_published "));
    assert_eq!(run(&["onset-toy", "--p", "0.7"]).status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_three() {
    let dir = TempDir::new().unwrap();
    let data = leaky_dataset(dir.path(), "zz", "10", 20);
    // Certain leakage that never seeps forbids the +1 syndromes in the data.
    let out = run(&[
        "train", "--model", "simple_zz_d", "--data", s(&data), "--restarts", "1",
        "--fix", "p_leak=1", "--fix", "p_seep=0", "--fix", "p_10=0",
        "--out", s(&dir.path().join("m.json")),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
