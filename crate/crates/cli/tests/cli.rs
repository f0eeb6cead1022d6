//! End-to-end runs of the `dsc` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn dsc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsc"))
        .args(args)
        .args(["--log-level", "error"])
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// 60 examples in 3 dimensions; LIBSVM feature 1 (index 0) marks group A.
fn write_data(path: &Path) {
    let mut text = String::new();
    for i in 0..60u32 {
        let label = i % 2 == 0;
        let t = (i as f64 * 0.37).sin();
        let shift = if label { 0.5 } else { -0.5 };
        text.push_str(if label { "+1" } else { "-1" });
        if i % 3 == 0 {
            text.push_str(" 1:1");
        }
        text.push_str(&format!(" 2:{:.4} 3:{:.4}\n", shift + t, 0.3 * t - shift));
    }
    fs::write(path, text).unwrap();
}

fn setup() -> TempDir {
    let dir = TempDir::new().unwrap();
    write_data(&dir.path().join("train.svm"));
    fs::write(
        dir.path().join("run.toml"),
        r#"
[data]
train = "train.svm"
dim = 3
group_feature = 0

[[objective]]
metric = "error_rate"

[[constraint]]
metric = "coverage"
at_most = 0.4

[solver]
lambda = 0.05
iterations = 3
eps = 1e-3
seed = 7

[output]
dir = "out"
"#,
    )
    .unwrap();
    dir
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn train_writes_model_trace_and_report() {
    let dir = setup();
    let cfg = dir.path().join("run.toml");
    let out = dsc(&["train", "--config", path_str(&cfg)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["model.txt", "trace.csv", "report.txt"] {
        assert!(dir.path().join("out").join(f).is_file(), "missing {f}");
    }
    assert!(!out.stdout.is_empty());
}

#[test]
fn train_is_deterministic_for_a_fixed_seed() {
    let dir = setup();
    let cfg = dir.path().join("run.toml");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for o in [&a, &b] {
        assert_eq!(code(&dsc(&["train", "--config", path_str(&cfg), "--out", path_str(o)])), 0);
    }
    for f in ["model.txt", "trace.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn eval_reports_on_a_trained_model() {
    let dir = setup();
    let cfg = dir.path().join("run.toml");
    assert_eq!(code(&dsc(&["train", "--config", path_str(&cfg)])), 0);
    let model = dir.path().join("out/model.txt");
    let out = dsc(&["eval", "--config", path_str(&cfg), "--model", path_str(&model)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("command = eval"));
}

#[test]
fn eval_with_mismatched_dimension_exits_with_2() {
    let dir = setup();
    let cfg = dir.path().join("run.toml");
    let model = dir.path().join("small.txt");
    fs::write(&model, "dsc-model 1\ndim 2\nbias 0.0\nweights\n1.0\n-1.0\n").unwrap();
    let out = dsc(&["eval", "--config", path_str(&cfg), "--model", path_str(&model)]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_config_exits_with_2() {
    assert_eq!(code(&dsc(&["train"])), 2);
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("none.toml");
    assert_eq!(code(&dsc(&["train", "--config", path_str(&cfg)])), 5);
}

#[test]
fn audit_exit_codes() {
    let dir = setup();
    let cfg = dir.path().join("run.toml");
    assert_eq!(code(&dsc(&["train", "--config", path_str(&cfg)])), 0);
    let trace = dir.path().join("out/trace.csv");
    let ok = dsc(&["audit", "--trace", path_str(&trace)]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));

    // Raise the upper bound of the last saddle row that has a predecessor.
    let text = fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let header: Vec<&str> = lines[0].split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (lvl, it, up) = (col("level"), col("saddle_iter"), col("upper"));
    let idx = (1..lines.len())
        .rev()
        .find(|&i| {
            let f: Vec<&str> = lines[i].split(',').collect();
            f[lvl] == "saddle" && f[it].parse::<usize>().unwrap() > 0
        })
        .expect("saddle rows");
    let mut f: Vec<String> = lines[idx].split(',').map(String::from).collect();
    f[up] = format!("{:?}", f[up].parse::<f64>().unwrap() + 1.0);
    lines[idx] = f.join(",");
    let forged = dir.path().join("forged.csv");
    fs::write(&forged, lines.join("\n") + "\n").unwrap();
    assert_eq!(code(&dsc(&["audit", "--trace", path_str(&forged)])), 4);

    let garbage = dir.path().join("garbage.csv");
    fs::write(&garbage, "not,a,trace\n").unwrap();
    assert_eq!(code(&dsc(&["audit", "--trace", path_str(&garbage)])), 2);
}

#[test]
fn churn_experiment_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("churn.toml");
    fs::write(
        &cfg,
        r#"
[generator]
n1 = 200
n2 = 100
n3 = 100

[sweep]
taus = [0.1]
runs = 1
randomized_draws = 1000

[solver]
lambda = 0.01
iterations = 2
eps = 1e-2
"#,
    )
    .unwrap();
    let mut csvs = Vec::new();
    for name in ["a", "b"] {
        let o = dir.path().join(name);
        let out = dsc(&["experiment-churn", "--config", path_str(&cfg), "--out", path_str(&o)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        csvs.push(fs::read_to_string(o.join("churn.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert!(csvs[0].lines().count() > 1);
}
