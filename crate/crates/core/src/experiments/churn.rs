//! Synthetic churn sweep.
//!
//! Generator (2-d, all draws from one ChaCha8 stream per run):
//! - labels: `y = +1` with probability `pos_rate`;
//! - features: `x ~ N(mu_y, sigma^2 I)` with `mu_+ = (1, 1)`, `mu_- = (-1, -0.5)`;
//! - D1 (actively sampled, biased): balanced labels and `sigma = 1.5`;
//! - D2 (labeled) and D3 (unlabeled): i.i.d. with `pos_rate = 0.3`, `sigma = 1`;
//! - every dataset is split `1 - test_fraction` / `test_fraction` into train / test;
//! - deployed model: `w = (1, -0.75)`, `b = -0.25` (deliberately off the Bayes direction).
//!
//! Objective: (errors on D1 + false positives on D2) / (|D1| + |D2|).
//! Constraints: recall on D2 at least the deployed model's recall, and churn
//! on D3 against the deployed model at most `tau`. MM starts from a scaled
//! copy of the deployed model with a shifted bias (see [`initial_point`]).
//!
//! Rows: the thresholded SVM (unconstrained on D1 + D2, bias shifted to meet
//! the recall constraint), the recall-only model, and the constrained model
//! at each `tau`, for each run.
//!
//! ```toml
//! [generator]
//! n1 = 3000
//! n2 = 1500
//! n3 = 1500
//! test_fraction = 0.2
//!
//! [sweep]
//! taus = [0.02, 0.05, 0.1, 0.2, 0.3, 1.0]
//! runs = 5
//! randomized_draws = 100000
//! threads = 0
//!
//! [solver]          # same keys as `train`; lambda defaults to 1e-3 here
//!
//! [output]
//! dir = "out"
//! csv = "churn.csv"
//! ```

use std::path::Path;

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{run_parallel, value, write_rows, ExperimentOutput, SplitRates};
use crate::baselines::{threshold_for_constraint, train_unconstrained_svm};
use crate::error::{Error, InfeasibilityReport, Result};
use crate::io::config::{parse_toml, LambdaSpec, SolverConfig};
use crate::mm::{majorize_minimize, ramp_status};
use crate::model::{build_metric, ConstrainedProblem, Dataset, DatasetCollection, Metric, RateCombination, RateConstraint};
use crate::rates::{evaluate_combination, LinearClassifier, RateKind};
use crate::sparse::SparseVector;
use crate::trace::SolverTrace;

pub const D1_POS: &str = "d1_pos";
pub const D1_NEG: &str = "d1_neg";
pub const D2_POS: &str = "d2_pos";
pub const D2_NEG: &str = "d2_neg";
/// D3 examples the deployed model predicts positive / negative.
pub const D3_BASE_POS: &str = "d3_base_pos";
pub const D3_BASE_NEG: &str = "d3_base_neg";

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ChurnGenerator {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub test_fraction: f64,
}

impl Default for ChurnGenerator {
    fn default() -> Self {
        ChurnGenerator {
            n1: 3000,
            n2: 1500,
            n3: 1500,
            test_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ChurnSweep {
    pub taus: Vec<f64>,
    pub runs: usize,
    pub randomized_draws: usize,
    pub threads: usize,
}

impl Default for ChurnSweep {
    fn default() -> Self {
        ChurnSweep {
            taus: vec![0.02, 0.05, 0.1, 0.2, 0.3, 1.0],
            runs: 5,
            randomized_draws: 100_000,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChurnConfig {
    #[serde(default)]
    pub generator: ChurnGenerator,
    #[serde(default)]
    pub sweep: ChurnSweep,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_output")]
    pub output: ExperimentOutput,
}

fn default_output() -> ExperimentOutput {
    ExperimentOutput::named("churn.csv")
}

impl Default for ChurnConfig {
    fn default() -> Self {
        ChurnConfig {
            generator: ChurnGenerator::default(),
            sweep: ChurnSweep::default(),
            solver: SolverConfig {
                lambda: LambdaSpec::Value(1e-3),
                ..SolverConfig::default()
            },
            output: default_output(),
        }
    }
}

impl ChurnConfig {
    pub fn from_toml(text: &str, base: &Path, source: &Path) -> Result<Self> {
        let mut cfg: ChurnConfig = parse_toml(text, source)?;
        let raw: toml::Table = parse_toml(text, source)?;
        let lambda_given = raw
            .get("solver")
            .and_then(|s| s.as_table())
            .is_some_and(|s| s.contains_key("lambda"));
        if !lambda_given {
            cfg.solver.lambda = LambdaSpec::Value(1e-3);
        }
        cfg.output.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::io::read_text(path)?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new("")), path)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.generator;
        if !(g.test_fraction > 0.0 && g.test_fraction < 1.0) {
            return Err(Error::config("generator.test_fraction must lie in (0, 1)"));
        }
        if [g.n1, g.n2, g.n3].iter().any(|&n| ((n as f64) * g.test_fraction) < 10.0) {
            return Err(Error::config("each generated dataset needs at least 10 test examples"));
        }
        if self.sweep.taus.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::config("every tau must lie in (0, 1]"));
        }
        if self.sweep.runs == 0 {
            return Err(Error::config("sweep.runs must be at least 1"));
        }
        self.solver.validate()
    }
}

pub fn deployed_model() -> LinearClassifier {
    LinearClassifier::new(vec![1.0, -0.75], -0.25).expect("finite weights")
}

fn sample(rng: &mut ChaCha8Rng, n: usize, pos_rate: f64, sigma: f64) -> Vec<(SparseVector, bool)> {
    (0..n)
        .map(|_| {
            let y = rng.random::<f64>() < pos_rate;
            let mu = if y { [1.0, 1.0] } else { [-1.0, -0.5] };
            let x: Vec<f64> = mu
                .iter()
                .map(|m| m + sigma * rng.sample::<f64, _>(StandardNormal))
                .collect();
            (SparseVector::from_dense(&x), y)
        })
        .collect()
}

fn insert(c: &mut DatasetCollection, id: &str, xs: Vec<SparseVector>) -> Result<()> {
    if xs.is_empty() {
        c.insert_empty(id);
        Ok(())
    } else {
        c.insert(Dataset::new(id, 2, xs)?)
    }
}

fn split_collection(
    d1: &[(SparseVector, bool)],
    d2: &[(SparseVector, bool)],
    d3: &[(SparseVector, bool)],
    deployed: &LinearClassifier,
) -> Result<DatasetCollection> {
    let by = |xs: &[(SparseVector, bool)], f: &dyn Fn(&(SparseVector, bool)) -> bool| {
        xs.iter().filter(|e| f(e)).map(|e| e.0.clone()).collect::<Vec<_>>()
    };
    let mut c = DatasetCollection::new();
    insert(&mut c, D1_POS, by(d1, &|e| e.1))?;
    insert(&mut c, D1_NEG, by(d1, &|e| !e.1))?;
    insert(&mut c, D2_POS, by(d2, &|e| e.1))?;
    insert(&mut c, D2_NEG, by(d2, &|e| !e.1))?;
    insert(&mut c, D3_BASE_POS, by(d3, &|e| deployed.predict(&e.0)))?;
    insert(&mut c, D3_BASE_NEG, by(d3, &|e| !deployed.predict(&e.0)))?;
    Ok(c)
}

/// One generated instance.
#[derive(Debug, Clone)]
pub struct ChurnData {
    pub train: DatasetCollection,
    pub test: DatasetCollection,
    pub deployed: LinearClassifier,
    /// Deployed model's recall on the D2 train split (the recall target).
    pub deployed_recall: f64,
}

pub fn generate(g: &ChurnGenerator, seed: u64) -> Result<ChurnData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d1 = sample(&mut rng, g.n1, 0.5, 1.5);
    let d2 = sample(&mut rng, g.n2, 0.3, 1.0);
    let d3 = sample(&mut rng, g.n3, 0.3, 1.0);
    let cut = |n: usize| n - (n as f64 * g.test_fraction).round() as usize;
    let deployed = deployed_model();
    let train = split_collection(&d1[..cut(g.n1)], &d2[..cut(g.n2)], &d3[..cut(g.n3)], &deployed)?;
    let test = split_collection(&d1[cut(g.n1)..], &d2[cut(g.n2)..], &d3[cut(g.n3)..], &deployed)?;
    let d2_pos = train.get(D2_POS).ok_or_else(|| Error::config("no positive D2 examples"))?;
    let hits = d2_pos.examples().iter().filter(|x| deployed.predict(x)).count();
    Ok(ChurnData {
        deployed_recall: hits as f64 / d2_pos.len() as f64,
        train,
        test,
        deployed,
    })
}

pub fn objective(datasets: &DatasetCollection) -> Result<RateCombination> {
    let errors = build_metric(
        &Metric::Errors {
            positives: D1_POS.into(),
            negatives: D1_NEG.into(),
        },
        datasets,
    )?;
    let fp = build_metric(&Metric::FalsePositives { negatives: D2_NEG.into() }, datasets)?;
    let n = (datasets.size(D1_POS)? + datasets.size(D1_NEG)? + datasets.size(D2_POS)? + datasets.size(D2_NEG)?) as f64;
    Ok(errors.plus(&fp).scaled(1.0 / n))
}

/// Error rate on D1 and D2 together.
pub fn union_error(datasets: &DatasetCollection) -> Result<RateCombination> {
    let errors = |p: &str, n: &str| {
        build_metric(
            &Metric::Errors {
                positives: p.into(),
                negatives: n.into(),
            },
            datasets,
        )
    };
    let n = (datasets.size(D1_POS)? + datasets.size(D1_NEG)? + datasets.size(D2_POS)? + datasets.size(D2_NEG)?) as f64;
    Ok(errors(D1_POS, D1_NEG)?.plus(&errors(D2_POS, D2_NEG)?).scaled(1.0 / n))
}

pub fn recall(datasets: &DatasetCollection) -> Result<RateCombination> {
    build_metric(&Metric::Recall { positives: D2_POS.into() }, datasets)
}

pub fn churn(datasets: &DatasetCollection) -> Result<RateCombination> {
    build_metric(
        &Metric::ChurnRate {
            baseline_pos: vec![D3_BASE_POS.into()],
            baseline_neg: vec![D3_BASE_NEG.into()],
        },
        datasets,
    )
}

pub fn recall_constraint(data: &ChurnData) -> Result<RateConstraint> {
    RateConstraint::lower(&recall(&data.train)?, data.deployed_recall, &data.train)
}

pub fn churn_constraint(data: &ChurnData, tau: f64) -> Result<RateConstraint> {
    RateConstraint::upper(&churn(&data.train)?, tau, &data.train)
}

/// A ramp-feasible start along the deployed direction.
///
/// For scales `s = 1, 2, 4, ...` the bias is bisected to the largest value
/// whose ramp recall meets the target (ramp recall falls as the bias grows);
/// the first scale at which every ramp constraint then holds within
/// `feas_tol / 2` is returned.
pub fn initial_point(data: &ChurnData, problem: &ConstrainedProblem, feas_tol: f64) -> Result<LinearClassifier> {
    let recall_combo = recall(&data.train)?;
    let ramp_recall = |clf: &LinearClassifier| evaluate_combination(&recall_combo, &data.train, clf, RateKind::Ramp);
    let reach = data
        .train
        .iter()
        .flat_map(|d| d.examples().iter().map(|x| x.dot(data.deployed.weights()).abs()))
        .fold(0.0, f64::max);
    let mut scale = 1.0;
    let mut worst = (0, f64::INFINITY);
    for _ in 0..40 {
        let w: Vec<f64> = data.deployed.weights().iter().map(|v| v * scale).collect();
        let at = |b: f64| LinearClassifier::new(w.clone(), b);
        let mut hi = data.deployed.bias() * scale;
        if ramp_recall(&at(hi)?)? < data.deployed_recall {
            let mut lo = hi - scale * reach - 1.0;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if ramp_recall(&at(mid)?)? >= data.deployed_recall {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi = lo;
        }
        let clf = at(hi)?;
        let (_, violations) = ramp_status(problem, &clf)?;
        let (j, v) = violations
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |a, (i, v)| if v > a.1 { (i, v) } else { a });
        if v <= 0.5 * feas_tol {
            return Ok(clf);
        }
        if v < worst.1 {
            worst = (j, v);
        }
        scale *= 2.0;
    }
    Err(Error::Infeasible(InfeasibilityReport {
        constraint: worst.0,
        violation: worst.1,
        detail: "no scaled deployed model satisfies the ramp constraints".into(),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChurnMethod {
    Thresholded,
    RecallOnly,
    Constrained { tau: f64 },
}

impl ChurnMethod {
    pub fn name(self) -> &'static str {
        match self {
            ChurnMethod::Thresholded => "thresholded_svm",
            ChurnMethod::RecallOnly => "recall_only",
            ChurnMethod::Constrained { .. } => "constrained",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChurnJob {
    pub method: ChurnMethod,
    pub run: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ChurnRow {
    pub method: &'static str,
    pub tau: Option<f64>,
    pub run: usize,
    pub seed: u64,
    pub deployed_recall: f64,
    pub train_churn: f64,
    pub test_churn: f64,
    pub train_churn_randomized: f64,
    pub test_churn_randomized: f64,
    pub train_churn_ramp: f64,
    pub train_error: f64,
    pub test_error: f64,
    pub train_error_randomized: f64,
    pub test_error_randomized: f64,
    pub train_recall: f64,
    pub test_recall: f64,
    pub train_recall_randomized: f64,
    /// Churn multiplier at the last MM step (constrained rows).
    pub churn_multiplier: Option<f64>,
    /// Final ramp objective with regularizer (MM rows).
    pub objective: Option<f64>,
}

pub fn jobs(cfg: &ChurnConfig) -> Vec<ChurnJob> {
    let mut methods = vec![ChurnMethod::Thresholded, ChurnMethod::RecallOnly];
    methods.extend(cfg.sweep.taus.iter().map(|&tau| ChurnMethod::Constrained { tau }));
    let mut out = Vec::new();
    for run in 0..cfg.sweep.runs {
        for &method in &methods {
            out.push(ChurnJob {
                method,
                run,
                seed: cfg.solver.seed.wrapping_add(run as u64),
            });
        }
    }
    out
}

/// Trained classifier plus (churn multiplier, ramp objective) for MM rows.
pub struct ChurnFit {
    pub classifier: LinearClassifier,
    pub churn_multiplier: Option<f64>,
    pub objective: Option<f64>,
    pub trace: SolverTrace,
}

pub fn train_job(cfg: &ChurnConfig, data: &ChurnData, job: &ChurnJob) -> Result<ChurnFit> {
    let n = data.train.total_examples();
    let lambda = cfg.solver.lambda.resolve(n)?;
    let mut solver = cfg.solver.clone();
    solver.seed = job.seed;
    let mm = solver.mm_options()?;
    let mut constraints = vec![recall_constraint(data)?];
    match job.method {
        ChurnMethod::Thresholded => {
            let svm = train_unconstrained_svm(data.train.clone(), &union_error(&data.train)?, lambda, &mm.saddle, job.seed)?;
            let clf = threshold_for_constraint(&svm.classifier, &constraints[0], &data.train)?;
            return Ok(ChurnFit {
                classifier: clf,
                churn_multiplier: None,
                objective: None,
                trace: svm.trace,
            });
        }
        ChurnMethod::RecallOnly => {}
        ChurnMethod::Constrained { tau } => constraints.push(churn_constraint(data, tau)?),
    }
    let problem = ConstrainedProblem::new(
        data.train.clone(),
        &objective(&data.train)?,
        constraints,
        lambda,
        solver.multiplier_cap,
    )?;
    let result = majorize_minimize(&problem, &initial_point(data, &problem, mm.feas_tol)?, &mm)?;
    let last = result.iterates.last().expect("MM returns at least the initial iterate");
    Ok(ChurnFit {
        churn_multiplier: last.multipliers.get(1).copied(),
        objective: Some(last.objective),
        classifier: result.classifier,
        trace: result.trace,
    })
}

pub fn evaluate_job(cfg: &ChurnConfig, data: &ChurnData, job: &ChurnJob, fit: &ChurnFit) -> Result<ChurnRow> {
    let draws = cfg.sweep.randomized_draws;
    let clf = &fit.classifier;
    let train = SplitRates::compute(&data.train, clf, draws, job.seed, 1)?;
    let test = SplitRates::compute(&data.test, clf, draws, job.seed, 2)?;
    let (tr, te) = (&data.train, &data.test);
    Ok(ChurnRow {
        method: job.method.name(),
        tau: match job.method {
            ChurnMethod::Constrained { tau } => Some(tau),
            _ => None,
        },
        run: job.run,
        seed: job.seed,
        deployed_recall: data.deployed_recall,
        train_churn: value(&churn(tr)?, tr, &train.deterministic),
        test_churn: value(&churn(te)?, te, &test.deterministic),
        train_churn_randomized: value(&churn(tr)?, tr, &train.randomized),
        test_churn_randomized: value(&churn(te)?, te, &test.randomized),
        train_churn_ramp: value(&churn(tr)?, tr, &train.ramp),
        train_error: value(&union_error(tr)?, tr, &train.deterministic),
        test_error: value(&union_error(te)?, te, &test.deterministic),
        train_error_randomized: value(&union_error(tr)?, tr, &train.randomized),
        test_error_randomized: value(&union_error(te)?, te, &test.randomized),
        train_recall: value(&recall(tr)?, tr, &train.deterministic),
        test_recall: value(&recall(te)?, te, &test.deterministic),
        train_recall_randomized: value(&recall(tr)?, tr, &train.randomized),
        churn_multiplier: fit.churn_multiplier,
        objective: fit.objective,
    })
}

/// Runs the sweep, writes the CSV and returns its rows in sweep order.
pub fn run_experiment_churn(cfg: &ChurnConfig) -> Result<Vec<ChurnRow>> {
    let datasets = (0..cfg.sweep.runs)
        .map(|run| generate(&cfg.generator, cfg.solver.seed.wrapping_add(run as u64)))
        .collect::<Result<Vec<_>>>()?;
    let jobs = jobs(cfg);
    let rows = run_parallel(&jobs, cfg.sweep.threads, |job| {
        let data = &datasets[job.run];
        let fit = train_job(cfg, data, job)?;
        let row = evaluate_job(cfg, data, job, &fit)?;
        info!(
            "churn {} tau={:?} run={}: train churn {:.4} (randomized {:.4}), test error {:.4}",
            row.method, row.tau, row.run, row.train_churn, row.train_churn_randomized, row.test_error
        );
        Ok(row)
    })?;
    write_rows(&cfg.output.csv_path(), &rows)?;
    Ok(rows)
}
