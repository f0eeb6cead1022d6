//! Adult fairness sweep.
//!
//! Group A is male (the configured feature is nonzero), group B female. The
//! constrained model minimizes the error rate subject to
//! `s_p(female) >= kappa * s_p(male)`. Rows are written for the constrained
//! model at each `kappa`, the unconstrained SVM, and the mean-difference
//! baseline at each `c`. The reported ratio is `s_p(male) / s_p(female)`.
//!
//! ```toml
//! [data]
//! train = "data/a9a"
//! test = "data/a9a.t"
//! dim = 123
//! group_feature = 72
//!
//! [sweep]
//! kappas = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
//! zafar_c = [0.0, 0.01, 0.1, 1.0, 1e6]
//! runs = 3
//! randomized_draws = 100000
//! threads = 0
//!
//! [solver]           # same keys as `train`; bias defaults to "none" here
//!
//! [output]
//! dir = "out"
//! csv = "adult.csv"
//! ```

use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use super::{positive_rate, run_parallel, value, write_rows, ExperimentOutput, SplitRates};
use crate::baselines::{train_unconstrained_svm, train_zafar_baseline, zafar_mean_difference};
use crate::error::{Error, Result};
use crate::io::config::{parse_toml, resolve_path, BiasName, SolverConfig};
use crate::io::libsvm::parse_libsvm;
use crate::mm::{find_initial_point, majorize_minimize};
use crate::model::{
    build_fairness_constraint, build_metric, partition_labeled_data, roles, ConstrainedProblem, DatasetCollection,
    LabeledExample, Metric, RateCombination,
};
use crate::rates::LinearClassifier;
use crate::trace::SolverTrace;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AdultData {
    pub train: PathBuf,
    pub test: PathBuf,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_group_feature")]
    pub group_feature: usize,
}

fn default_dim() -> usize {
    123
}

/// 0-based a9a column for "sex = Male".
fn default_group_feature() -> usize {
    72
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct AdultSweep {
    pub kappas: Vec<f64>,
    pub zafar_c: Vec<f64>,
    pub runs: usize,
    pub randomized_draws: usize,
    pub threads: usize,
}

impl Default for AdultSweep {
    fn default() -> Self {
        AdultSweep {
            kappas: vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            zafar_c: vec![0.0, 0.01, 0.1, 1.0, 1e6],
            runs: 3,
            randomized_draws: 100_000,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AdultConfig {
    pub data: AdultData,
    #[serde(default)]
    pub sweep: AdultSweep,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_output")]
    pub output: ExperimentOutput,
}

fn default_output() -> ExperimentOutput {
    ExperimentOutput::named("adult.csv")
}

impl AdultConfig {
    pub fn from_toml(text: &str, base: &Path, source: &Path) -> Result<Self> {
        let mut cfg: AdultConfig = parse_toml(text, source)?;
        let raw: toml::Table = parse_toml(text, source)?;
        let bias_given = raw
            .get("solver")
            .and_then(|s| s.as_table())
            .is_some_and(|s| s.contains_key("bias"));
        if !bias_given {
            cfg.solver.bias = BiasName::None;
        }
        resolve_path(base, &mut cfg.data.train);
        resolve_path(base, &mut cfg.data.test);
        cfg.output.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::io::read_text(path)?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new("")), path)
    }

    pub fn validate(&self) -> Result<()> {
        for p in [&self.data.train, &self.data.test] {
            if !p.is_file() {
                return Err(Error::config(format!(
                    "input file {} does not exist (see scripts/make_a9a.py)",
                    p.display()
                )));
            }
        }
        if self.data.group_feature >= self.data.dim {
            return Err(Error::config("group_feature lies outside the dimension"));
        }
        if self.sweep.kappas.iter().any(|&k| !(k > 0.0 && k <= 1.0)) {
            return Err(Error::config("every kappa must lie in (0, 1]"));
        }
        if self.sweep.zafar_c.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
            return Err(Error::config("every zafar c must be finite and nonnegative"));
        }
        if self.sweep.runs == 0 {
            return Err(Error::config("sweep.runs must be at least 1"));
        }
        self.solver.validate()
    }
}

/// Train and test partitions with the male/female split.
#[derive(Debug, Clone)]
pub struct AdultSplits {
    pub train: DatasetCollection,
    pub test: DatasetCollection,
    pub n_train: usize,
}

fn partitioned(path: &Path, dim: usize, group_feature: usize) -> Result<(DatasetCollection, usize)> {
    let data = parse_libsvm(path, Some(dim))?;
    let examples: Vec<LabeledExample> = data
        .features
        .iter()
        .zip(&data.labels)
        .map(|(x, &label)| LabeledExample {
            group: Some(x.get(group_feature) != 0.0),
            features: x.clone(),
            label,
            baseline: None,
        })
        .collect();
    Ok((partition_labeled_data("", dim, &examples)?, data.len()))
}

/// Loads both splits and checks that male positives outnumber female
/// positives by roughly the expected factor (guards a wrong column index).
pub fn load_adult(cfg: &AdultConfig) -> Result<AdultSplits> {
    let (train, n_train) = partitioned(&cfg.data.train, cfg.data.dim, cfg.data.group_feature)?;
    let (test, _) = partitioned(&cfg.data.test, cfg.data.dim, cfg.data.group_feature)?;
    let ratio = train.size(roles::GROUP_A_POS)? as f64 / train.size(roles::GROUP_B_POS)?.max(1) as f64;
    info!(
        "adult: {} train examples, male {} / female {}, positive ratio {ratio:.2}",
        n_train,
        train.size(roles::GROUP_A)?,
        train.size(roles::GROUP_B)?
    );
    if !(3.0..=12.0).contains(&ratio) {
        return Err(Error::config(format!(
            "male/female positive ratio {ratio:.2} is implausible; check group_feature"
        )));
    }
    Ok(AdultSplits { train, test, n_train })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdultMethod {
    Unconstrained,
    Constrained { kappa: f64 },
    Zafar { c: f64 },
}

impl AdultMethod {
    pub fn name(self) -> &'static str {
        match self {
            AdultMethod::Unconstrained => "unconstrained_svm",
            AdultMethod::Constrained { .. } => "constrained",
            AdultMethod::Zafar { .. } => "zafar",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdultJob {
    pub method: AdultMethod,
    pub run: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AdultRow {
    pub method: &'static str,
    pub kappa: Option<f64>,
    pub c: Option<f64>,
    pub run: usize,
    pub seed: u64,
    pub train_error: f64,
    pub test_error: f64,
    pub train_ratio: f64,
    pub test_ratio: f64,
    pub train_error_randomized: f64,
    pub test_error_randomized: f64,
    pub train_ratio_randomized: f64,
    pub test_ratio_randomized: f64,
    /// `s_p(female) - kappa * s_p(male)` under the randomized rule (constrained rows).
    pub train_fairness_slack_randomized: Option<f64>,
    /// `<w, x_bar>` (mean-difference rows).
    pub covariance: Option<f64>,
}

pub fn jobs(cfg: &AdultConfig) -> Vec<AdultJob> {
    let mut methods = vec![AdultMethod::Unconstrained];
    methods.extend(cfg.sweep.kappas.iter().map(|&kappa| AdultMethod::Constrained { kappa }));
    methods.extend(cfg.sweep.zafar_c.iter().map(|&c| AdultMethod::Zafar { c }));
    let mut out = Vec::new();
    for run in 0..cfg.sweep.runs {
        for &method in &methods {
            out.push(AdultJob {
                method,
                run,
                seed: cfg.solver.seed.wrapping_add(run as u64),
            });
        }
    }
    out
}

fn error_rate(datasets: &DatasetCollection) -> Result<RateCombination> {
    build_metric(
        &Metric::ErrorRate {
            positives: roles::POS.into(),
            negatives: roles::NEG.into(),
        },
        datasets,
    )
}

#[derive(Debug, Clone)]
pub struct AdultFit {
    pub classifier: LinearClassifier,
    /// `<w, x_bar>` (mean-difference rows).
    pub covariance: Option<f64>,
    pub trace: SolverTrace,
}

/// Trains one sweep point.
pub fn train_job(cfg: &AdultConfig, data: &AdultSplits, job: &AdultJob) -> Result<AdultFit> {
    let objective = error_rate(&data.train)?;
    let lambda = cfg.solver.lambda.resolve(data.n_train)?;
    let mut solver = cfg.solver.clone();
    solver.seed = job.seed;
    let mm = solver.mm_options()?;
    match job.method {
        AdultMethod::Unconstrained => {
            let s = train_unconstrained_svm(data.train.clone(), &objective, lambda, &mm.saddle, job.seed)?;
            Ok(AdultFit {
                classifier: s.classifier,
                covariance: None,
                trace: s.trace,
            })
        }
        AdultMethod::Constrained { kappa } => {
            let c = build_fairness_constraint(roles::GROUP_B, roles::GROUP_A, kappa, &data.train)?;
            let problem =
                ConstrainedProblem::new(data.train.clone(), &objective, vec![c], lambda, solver.multiplier_cap)?;
            let init = find_initial_point(&problem, mm.saddle.svm.bias_mode, mm.feas_tol)?;
            let r = majorize_minimize(&problem, &init, &mm)?;
            Ok(AdultFit {
                classifier: r.classifier,
                covariance: None,
                trace: r.trace,
            })
        }
        AdultMethod::Zafar { c } => {
            let male = data.train.get(roles::GROUP_A).ok_or_else(|| Error::config("no male examples"))?;
            let female = data.train.get(roles::GROUP_B).ok_or_else(|| Error::config("no female examples"))?;
            let x_bar = zafar_mean_difference(male, female)?;
            let s = train_zafar_baseline(
                &data.train,
                &objective,
                lambda,
                c,
                &x_bar,
                solver.multiplier_cap,
                &mm.saddle,
                job.seed,
            )?;
            Ok(AdultFit {
                classifier: s.hinge.classifier,
                covariance: Some(s.covariance),
                trace: s.hinge.trace,
            })
        }
    }
}

fn ratio(datasets: &DatasetCollection, rates: &[(f64, f64)]) -> Result<f64> {
    Ok(positive_rate(datasets, rates, roles::GROUP_A)? / positive_rate(datasets, rates, roles::GROUP_B)?)
}

pub fn evaluate_job(
    cfg: &AdultConfig,
    data: &AdultSplits,
    job: &AdultJob,
    clf: &LinearClassifier,
    covariance: Option<f64>,
) -> Result<AdultRow> {
    let draws = cfg.sweep.randomized_draws;
    let train = SplitRates::compute(&data.train, clf, draws, job.seed, 1)?;
    let test = SplitRates::compute(&data.test, clf, draws, job.seed, 2)?;
    let err_train = error_rate(&data.train)?;
    let err_test = error_rate(&data.test)?;
    let (kappa, c) = match job.method {
        AdultMethod::Unconstrained => (None, None),
        AdultMethod::Constrained { kappa } => (Some(kappa), None),
        AdultMethod::Zafar { c } => (None, Some(c)),
    };
    let slack = match kappa {
        Some(k) => Some(
            positive_rate(&data.train, &train.randomized, roles::GROUP_B)?
                - k * positive_rate(&data.train, &train.randomized, roles::GROUP_A)?,
        ),
        None => None,
    };
    Ok(AdultRow {
        method: job.method.name(),
        kappa,
        c,
        run: job.run,
        seed: job.seed,
        train_error: value(&err_train, &data.train, &train.deterministic),
        test_error: value(&err_test, &data.test, &test.deterministic),
        train_ratio: ratio(&data.train, &train.deterministic)?,
        test_ratio: ratio(&data.test, &test.deterministic)?,
        train_error_randomized: value(&err_train, &data.train, &train.randomized),
        test_error_randomized: value(&err_test, &data.test, &test.randomized),
        train_ratio_randomized: ratio(&data.train, &train.randomized)?,
        test_ratio_randomized: ratio(&data.test, &test.randomized)?,
        train_fairness_slack_randomized: slack,
        covariance,
    })
}

/// Runs the sweep, writes the CSV and returns its rows in sweep order.
pub fn run_experiment_adult(cfg: &AdultConfig) -> Result<Vec<AdultRow>> {
    let data = load_adult(cfg)?;
    let jobs = jobs(cfg);
    let rows = run_parallel(&jobs, cfg.sweep.threads, |job| {
        let fit = train_job(cfg, &data, job)?;
        let row = evaluate_job(cfg, &data, job, &fit.classifier, fit.covariance)?;
        info!(
            "adult {} kappa={:?} c={:?} run={}: test error {:.4}, test ratio {:.3}",
            row.method, row.kappa, row.c, row.run, row.test_error, row.test_ratio
        );
        Ok(row)
    })?;
    write_rows(&cfg.output.csv_path(), &rows)?;
    Ok(rows)
}
