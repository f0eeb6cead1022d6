//! Sweep harnesses: Adult fairness and a synthetic churn scenario.
//!
//! Sweep points run on a rayon pool; rows are collected in sweep order, so
//! the CSV depends only on the config.

pub mod adult;
pub mod churn;

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::config::resolve_path;
use crate::model::{DatasetCollection, RateCombination};
use crate::rates::{all_rates, evaluate_with_rates, LinearClassifier, RateKind};
use crate::run::randomized_rates;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentOutput {
    pub dir: PathBuf,
    pub csv: String,
}

impl Default for ExperimentOutput {
    fn default() -> Self {
        ExperimentOutput::named("results.csv")
    }
}

impl ExperimentOutput {
    fn named(csv: &str) -> Self {
        ExperimentOutput {
            dir: PathBuf::from("out"),
            csv: csv.into(),
        }
    }

    pub fn csv_path(&self) -> PathBuf {
        self.dir.join(&self.csv)
    }

    fn resolve(&mut self, base: &Path) {
        resolve_path(base, &mut self.dir);
    }
}

/// Deterministic and Monte-Carlo randomized rates of one classifier on one split.
#[derive(Debug, Clone)]
pub struct SplitRates {
    pub deterministic: Vec<(f64, f64)>,
    pub randomized: Vec<(f64, f64)>,
    pub ramp: Vec<(f64, f64)>,
}

impl SplitRates {
    /// `stream` selects an independent ChaCha stream under `seed`.
    pub fn compute(
        datasets: &DatasetCollection,
        clf: &LinearClassifier,
        draws: usize,
        seed: u64,
        stream: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(SplitRates {
            deterministic: all_rates(datasets, clf, RateKind::Indicator)?,
            randomized: randomized_rates(datasets, clf, draws.max(1), &mut rng)?,
            ramp: all_rates(datasets, clf, RateKind::Ramp)?,
        })
    }
}

pub(crate) fn positive_rate(datasets: &DatasetCollection, rates: &[(f64, f64)], id: &str) -> Result<f64> {
    datasets
        .index_of(id)
        .map(|i| rates[i].0)
        .ok_or_else(|| Error::config(format!("partition `{id}` is missing or empty")))
}

pub(crate) fn value(combo: &RateCombination, datasets: &DatasetCollection, rates: &[(f64, f64)]) -> f64 {
    evaluate_with_rates(combo, datasets, rates)
}

pub(crate) fn write_rows<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    crate::io::write_text(path, &String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Runs `f` over `jobs` on `threads` workers (0 = rayon default), keeping job order.
pub(crate) fn run_parallel<J, R, F>(jobs: &[J], threads: usize, f: F) -> Result<Vec<R>>
where
    J: Sync,
    R: Send,
    F: Fn(&J) -> Result<R> + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| jobs.par_iter().map(&f).collect())
}
