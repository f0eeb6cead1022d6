//! `train` and `eval` pipelines: load data, build the problem, solve, and
//! write the model, trace and report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{audit_trace, generalization_report};
use crate::error::{Error, Result};
use crate::io::config::{MetricKind, MetricSpec, RunConfig};
use crate::io::libsvm::{parse_libsvm, LibsvmData};
use crate::io::model_file::ModelFile;
use crate::mm::{find_initial_point, majorize_minimize, MmResult};
use crate::model::{partition_labeled_data, ConstrainedProblem, DatasetCollection, LabeledExample, RateCombination};
use crate::rates::{all_rates, evaluate_with_rates, randomized_positive_rate, LinearClassifier, RateKind};

/// One labeled split, partitioned into role datasets.
#[derive(Debug, Clone)]
pub struct Split {
    pub name: &'static str,
    pub datasets: DatasetCollection,
    pub n: usize,
}

fn read_flags(path: &Path, n: usize, what: &str) -> Result<Vec<bool>> {
    let text = crate::io::read_text(path)?;
    let mut out = Vec::with_capacity(n);
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(match t {
            "1" | "+1" => true,
            "0" | "-1" => false,
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("invalid {what} flag {t:?}"),
                })
            }
        });
    }
    if out.len() != n {
        return Err(Error::config(format!(
            "{} has {} {what} entries for {n} examples",
            path.display(),
            out.len()
        )));
    }
    Ok(out)
}

fn labeled_split(
    cfg: &RunConfig,
    name: &'static str,
    data: &LibsvmData,
    dim: usize,
    group_file: Option<&PathBuf>,
    baseline_file: Option<&PathBuf>,
) -> Result<Split> {
    let n = data.len();
    if n == 0 {
        return Err(Error::config(format!("{name} split has no examples")));
    }
    let groups = match (cfg.data.group_feature, group_file) {
        (Some(j), _) => {
            if j >= dim {
                return Err(Error::config(format!("group feature {j} is outside dimension {dim}")));
            }
            let nonzero_is_a = cfg.data.group_a_when == crate::io::config::GroupWhen::Nonzero;
            Some(
                data.features
                    .iter()
                    .map(|x| (x.get(j) != 0.0) == nonzero_is_a)
                    .collect::<Vec<_>>(),
            )
        }
        (None, Some(p)) => Some(read_flags(p, n, "group")?),
        (None, None) => None,
    };
    let baseline = match (&cfg.data.baseline_model, baseline_file) {
        (Some(p), _) => {
            let m = ModelFile::read(p)?;
            if m.classifier.dim() != dim {
                return Err(Error::domain(format!(
                    "baseline model dimension {} does not match data dimension {dim}",
                    m.classifier.dim()
                )));
            }
            Some(data.features.iter().map(|x| m.classifier.predict(x)).collect::<Vec<_>>())
        }
        (None, Some(p)) => Some(read_flags(p, n, "baseline")?),
        (None, None) => None,
    };
    let examples: Vec<LabeledExample> = (0..n)
        .map(|i| LabeledExample {
            features: data.features[i].clone(),
            label: data.labels[i],
            group: groups.as_ref().map(|g| g[i]),
            baseline: baseline.as_ref().map(|b| b[i]),
        })
        .collect();
    Ok(Split {
        name,
        datasets: partition_labeled_data("", dim, &examples)?,
        n,
    })
}

/// Loads the train split and, when configured, the test split. `min_dim`
/// widens the feature space (e.g. to a model's dimension).
pub fn load_splits(cfg: &RunConfig, min_dim: usize) -> Result<Vec<Split>> {
    let train = parse_libsvm(&cfg.data.train, cfg.data.dim)?;
    let test = cfg.data.test.as_ref().map(|p| parse_libsvm(p, cfg.data.dim)).transpose()?;
    let dim = cfg
        .data
        .dim
        .unwrap_or_else(|| train.dim.max(test.as_ref().map_or(0, |t| t.dim)))
        .max(min_dim);
    let mut out = vec![labeled_split(
        cfg,
        "train",
        &train,
        dim,
        cfg.data.group_file.as_ref(),
        cfg.data.baseline_file.as_ref(),
    )?];
    if let Some(test) = &test {
        out.push(labeled_split(
            cfg,
            "test",
            test,
            dim,
            cfg.data.test_group_file.as_ref(),
            cfg.data.test_baseline_file.as_ref(),
        )?);
    }
    Ok(out)
}

pub fn objective_combination(cfg: &RunConfig, datasets: &DatasetCollection) -> Result<RateCombination> {
    let mut total = RateCombination::new();
    for term in &cfg.objective {
        total = total.plus(&term.combination(datasets)?.scaled(term.weight.unwrap_or(1.0)));
    }
    Ok(total)
}

pub fn build_problem(cfg: &RunConfig, train: &Split) -> Result<ConstrainedProblem> {
    let objective = objective_combination(cfg, &train.datasets)?;
    let constraints = cfg
        .constraints
        .iter()
        .map(|c| c.constraint(&train.datasets))
        .collect::<Result<Vec<_>>>()?;
    let lambda = cfg.solver.lambda.resolve(train.n)?;
    ConstrainedProblem::new(
        train.datasets.clone(),
        &objective,
        constraints,
        lambda,
        cfg.solver.multiplier_cap,
    )
}

/// Per-dataset `(s_p, s_n)` of the randomized rule from Monte-Carlo draws.
pub fn randomized_rates(
    datasets: &DatasetCollection,
    clf: &LinearClassifier,
    draws: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(f64, f64)>> {
    datasets
        .iter()
        .map(|d| randomized_positive_rate(d, clf, draws, rng).map(|p| (p, 1.0 - p)))
        .collect()
}

fn metric_value(spec: &MetricSpec, datasets: &DatasetCollection, rates: &[(f64, f64)]) -> Result<f64> {
    if spec.metric == MetricKind::Fairness {
        let (a, b) = spec.fairness_groups();
        let rate = |id: &str| {
            datasets
                .index_of(id)
                .map(|i| rates[i].0)
                .ok_or_else(|| Error::config(format!("partition `{id}` is missing or empty")))
        };
        // Reported as reference / protected, which the constraint caps at 1 / kappa.
        return Ok(rate(&b)? / rate(&a)?);
    }
    Ok(evaluate_with_rates(&spec.combination(datasets)?, datasets, rates))
}

/// Writes `<prefix>.<kind> = value` lines for every declared metric.
fn metric_lines(cfg: &RunConfig, split: &Split, clf: &LinearClassifier, out: &mut String) -> Result<()> {
    let d = &split.datasets;
    let mut kinds = vec![
        ("indicator", all_rates(d, clf, RateKind::Indicator)?),
        ("ramp", all_rates(d, clf, RateKind::Ramp)?),
    ];
    if cfg.eval.randomized_draws > 0 {
        let stream = if split.name == "train" { 1 } else { 2 };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.solver.seed ^ (stream << 32));
        kinds.push(("randomized", randomized_rates(d, clf, cfg.eval.randomized_draws, &mut rng)?));
    }
    let declared = cfg
        .objective
        .iter()
        .enumerate()
        .map(|(i, s)| (format!("objective.{i}"), s))
        .chain(cfg.constraints.iter().enumerate().map(|(i, s)| (format!("constraint.{i}"), s)));
    for (key, spec) in declared {
        for (kind, rates) in &kinds {
            match metric_value(spec, d, rates) {
                Ok(v) => writeln!(out, "{key}.{}.{kind} = {v:?}", spec.label()),
                Err(e) => writeln!(out, "{key}.{}.{kind} = unavailable ({e})", spec.label()),
            }
            .expect("write to string");
        }
        if let Some(b) = spec.at_most {
            writeln!(out, "{key}.{}.at_most = {b:?}", spec.label()).expect("write to string");
        }
        if let Some(b) = spec.at_least {
            writeln!(out, "{key}.{}.at_least = {b:?}", spec.label()).expect("write to string");
        }
        if let Some(k) = spec.kappa {
            writeln!(out, "{key}.{}.kappa = {k:?}", spec.label()).expect("write to string");
        }
    }
    Ok(())
}

fn evaluation_sections(cfg: &RunConfig, splits: &[Split], clf: &LinearClassifier, out: &mut String) -> Result<()> {
    for s in splits {
        writeln!(out, "\n[{}]\nexamples = {}", s.name, s.n).expect("write to string");
        if cfg.eval.randomized_draws > 0 {
            writeln!(out, "randomized_draws = {}\nrandomized_seed = {}", cfg.eval.randomized_draws, cfg.solver.seed)
                .expect("write to string");
        }
        metric_lines(cfg, s, clf, out)?;
    }
    Ok(())
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub result: MmResult,
    pub model_path: PathBuf,
    pub trace_path: PathBuf,
    pub report_path: PathBuf,
    pub report: String,
}

/// Trains per the config and writes model, trace and report under `output.dir`.
pub fn run_train(cfg: &RunConfig) -> Result<TrainOutcome> {
    let start = Instant::now();
    let splits = load_splits(cfg, 0)?;
    let problem = build_problem(cfg, &splits[0])?;
    let options = cfg.solver.mm_options()?;
    let init = find_initial_point(&problem, options.saddle.svm.bias_mode, options.feas_tol)?;
    let result = majorize_minimize(&problem, &init, &options)?;
    let solve_seconds = start.elapsed().as_secs_f64();

    let model = ModelFile::new(result.classifier.clone())
        .with_meta("seed", cfg.solver.seed)
        .with_meta("lambda", format!("{:?}", problem.lambda()))
        .with_meta("iterations", result.iterates.len() - 1)
        .with_meta("bias", if options.saddle.svm.bias_mode == crate::svm::BiasMode::None { "none" } else { "free" });
    let dir = &cfg.output.dir;
    let model_path = dir.join(&cfg.output.model);
    let trace_path = dir.join(&cfg.output.trace);
    let report_path = dir.join(&cfg.output.report);
    model.write(&model_path)?;
    crate::io::write_text(&trace_path, &result.trace.to_csv())?;

    let mut report = String::new();
    writeln!(
        report,
        "[run]\ncommand = train\nseed = {}\nlambda = {:?}\nconstraints = {}\ndim = {}",
        cfg.solver.seed,
        problem.lambda(),
        problem.num_constraints(),
        problem.dim()
    )
    .expect("write to string");
    evaluation_sections(cfg, &splits, &result.classifier, &mut report)?;
    report.push_str("\n[mm]\n");
    for (t, it) in result.iterates.iter().enumerate() {
        writeln!(
            report,
            "iterate.{t} = objective {:?} max_violation {:?} step {:?}",
            it.objective, it.max_violation, it.step
        )
        .expect("write to string");
    }
    let c = &result.trace.counters;
    writeln!(
        report,
        "svm_calls = {}\nsdca_calls = {}\nsdca_epochs = {}\nlp_pivots = {}",
        c.svm_calls, c.sdca_calls, c.sdca_epochs, c.lp_pivots
    )
    .expect("write to string");
    writeln!(report, "\n[generalization]\n{}", generalization_report(&problem, cfg.eval.delta)?)
        .expect("write to string");
    writeln!(report, "[audit]\n{}", audit_trace(&result.trace)).expect("write to string");
    writeln!(report, "[timing]\nsolve_seconds = {solve_seconds:.3}").expect("write to string");
    crate::io::write_text(&report_path, &report)?;
    Ok(TrainOutcome {
        result,
        model_path,
        trace_path,
        report_path,
        report,
    })
}

/// Evaluates a saved model on the config's splits and returns the report.
pub fn run_eval(cfg: &RunConfig, model_path: &Path) -> Result<String> {
    let model = ModelFile::read(model_path)?;
    let dim = model.classifier.dim();
    let splits = load_splits(cfg, dim)?;
    if splits[0].datasets.iter().any(|d| d.dim() != dim) {
        return Err(Error::domain(format!(
            "model dimension {dim} is smaller than the data dimension"
        )));
    }
    let mut report = format!("[run]\ncommand = eval\nmodel = {}\ndim = {dim}\n", model_path.display());
    evaluation_sections(cfg, &splits, &model.classifier, &mut report)?;
    Ok(report)
}
