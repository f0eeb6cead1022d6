//! Run configuration (TOML).
//!
//! ```toml
//! [data]
//! train = "train.svm"          # labeled LIBSVM file
//! test = "test.svm"            # optional
//! dim = 123                    # optional; default is the largest index seen
//! group_feature = 72           # optional 0-based index; nonzero => group A
//! group_a_when = "nonzero"     # or "zero"
//! group_file = "groups.txt"    # alternative: one 0/1 per line (1 => group A)
//! test_group_file = "..."
//! baseline_file = "base.txt"   # baseline predictions, one +1/-1 per line
//! test_baseline_file = "..."
//! baseline_model = "old.model" # alternative: predictions of a saved model
//!
//! [[objective]]                # one or more weighted metrics
//! metric = "error_rate"
//! weight = 1.0
//!
//! [[constraint]]               # zero or more
//! metric = "coverage"
//! dataset = "all"
//! at_most = 0.3
//!
//! [[constraint]]
//! metric = "fairness"          # s_p(protected) >= kappa * s_p(reference)
//! protected = "group_b"        # defaults: protected group_a, reference group_b
//! kappa = 0.8
//!
//! [solver]
//! lambda = 0.01                # or "1/n"
//! multiplier_cap = 1e6
//! iterations = 5
//! eps = 1e-3
//! chooser = "max"              # or "centroid" (one constraint only)
//! bias_chooser = "min"         # or "centroid"
//! bias = "free"                # or "none"
//! seed = 0
//!
//! [output]
//! dir = "out"
//!
//! [eval]
//! randomized_draws = 100000    # 0 disables Monte-Carlo metrics
//! delta = 0.05
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{
    build_fairness_constraint, build_metric, roles, ChurnCells, DatasetCollection, Metric, RateCombination,
    RateConstraint,
};
use crate::mm::MmOptions;
use crate::saddle::{CutChooser, SaddleOptions};
use crate::svm::{BiasChooser, BiasMode, SdcaOptions, SvmOptions};

/// Deserializes TOML, reporting errors with the offending line.
pub fn parse_toml<T: DeserializeOwned>(text: &str, source: &Path) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Parse {
        path: source.to_path_buf(),
        line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
        message: e.message().to_string(),
    })
}

/// Joins `path` onto `base` when it is relative.
pub fn resolve_path(base: &Path, path: &mut PathBuf) {
    if path.is_relative() {
        *path = base.join(&*path);
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    #[serde(default)]
    pub objective: Vec<MetricSpec>,
    #[serde(default, rename = "constraint")]
    pub constraints: Vec<MetricSpec>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum GroupWhen {
    #[default]
    Nonzero,
    Zero,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub train: PathBuf,
    pub test: Option<PathBuf>,
    pub dim: Option<usize>,
    pub group_feature: Option<usize>,
    #[serde(default)]
    pub group_a_when: GroupWhen,
    pub group_file: Option<PathBuf>,
    pub test_group_file: Option<PathBuf>,
    pub baseline_file: Option<PathBuf>,
    pub test_baseline_file: Option<PathBuf>,
    pub baseline_model: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Coverage,
    TruePositives,
    TrueNegatives,
    FalsePositives,
    FalseNegatives,
    Errors,
    ErrorRate,
    Recall,
    Changes,
    ChurnRate,
    Wins,
    Losses,
    Fairness,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Coverage => "coverage",
            MetricKind::TruePositives => "true_positives",
            MetricKind::TrueNegatives => "true_negatives",
            MetricKind::FalsePositives => "false_positives",
            MetricKind::FalseNegatives => "false_negatives",
            MetricKind::Errors => "errors",
            MetricKind::ErrorRate => "error_rate",
            MetricKind::Recall => "recall",
            MetricKind::Changes => "changes",
            MetricKind::ChurnRate => "churn_rate",
            MetricKind::Wins => "wins",
            MetricKind::Losses => "losses",
            MetricKind::Fairness => "fairness",
        }
    }
}

/// One metric declaration, used both for objective terms and constraints.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub metric: MetricKind,
    /// Target partition for `coverage` (default `all`).
    pub dataset: Option<String>,
    /// Objective weight (default 1).
    pub weight: Option<f64>,
    pub at_most: Option<f64>,
    pub at_least: Option<f64>,
    /// Fairness ratio bound.
    pub kappa: Option<f64>,
    /// Fairness numerator partition (default `group_a`).
    pub protected: Option<String>,
    /// Fairness denominator partition (default `group_b`).
    pub reference: Option<String>,
}

impl MetricSpec {
    pub fn new(metric: MetricKind) -> Self {
        MetricSpec {
            metric,
            dataset: None,
            weight: None,
            at_most: None,
            at_least: None,
            kappa: None,
            protected: None,
            reference: None,
        }
    }

    pub fn label(&self) -> String {
        match (&self.dataset, self.metric) {
            (Some(d), _) => format!("{}({d})", self.metric.as_str()),
            (None, MetricKind::Fairness) => {
                let (a, b) = self.fairness_groups();
                format!("fairness({b}/{a})")
            }
            (None, m) => m.as_str().to_string(),
        }
    }

    fn cells() -> ChurnCells {
        ChurnCells {
            pos_pos: roles::POS_POS.into(),
            pos_neg: roles::POS_NEG.into(),
            neg_pos: roles::NEG_POS.into(),
            neg_neg: roles::NEG_NEG.into(),
        }
    }

    /// The metric as a rate combination. Fairness has no single value and
    /// yields its protected-group positive rate.
    pub fn to_metric(&self) -> Metric {
        let pos = || roles::POS.to_string();
        let neg = || roles::NEG.to_string();
        match self.metric {
            MetricKind::Coverage => Metric::Coverage {
                dataset: self.dataset.clone().unwrap_or_else(|| roles::ALL.into()),
            },
            MetricKind::TruePositives => Metric::TruePositives { positives: pos() },
            MetricKind::TrueNegatives => Metric::TrueNegatives { negatives: neg() },
            MetricKind::FalsePositives => Metric::FalsePositives { negatives: neg() },
            MetricKind::FalseNegatives => Metric::FalseNegatives { positives: pos() },
            MetricKind::Errors => Metric::Errors {
                positives: pos(),
                negatives: neg(),
            },
            MetricKind::ErrorRate => Metric::ErrorRate {
                positives: pos(),
                negatives: neg(),
            },
            MetricKind::Recall => Metric::Recall { positives: pos() },
            MetricKind::Changes => Metric::changes_from_cells(&Self::cells()),
            MetricKind::ChurnRate => {
                let c = Self::cells();
                Metric::ChurnRate {
                    baseline_pos: vec![c.pos_pos, c.neg_pos],
                    baseline_neg: vec![c.pos_neg, c.neg_neg],
                }
            }
            MetricKind::Wins => Metric::Wins(Self::cells()),
            MetricKind::Losses => Metric::Losses(Self::cells()),
            MetricKind::Fairness => Metric::Coverage {
                dataset: self.protected.clone().unwrap_or_else(|| roles::GROUP_A.into()),
            },
        }
    }

    pub fn fairness_groups(&self) -> (String, String) {
        (
            self.protected.clone().unwrap_or_else(|| roles::GROUP_A.into()),
            self.reference.clone().unwrap_or_else(|| roles::GROUP_B.into()),
        )
    }

    pub fn combination(&self, datasets: &DatasetCollection) -> Result<RateCombination> {
        build_metric(&self.to_metric(), datasets)
    }

    pub fn constraint(&self, datasets: &DatasetCollection) -> Result<RateConstraint> {
        if self.metric == MetricKind::Fairness {
            let kappa = self
                .kappa
                .ok_or_else(|| Error::config("fairness constraint needs `kappa`"))?;
            let (a, b) = self.fairness_groups();
            return build_fairness_constraint(&a, &b, kappa, datasets);
        }
        let combo = self.combination(datasets)?;
        match (self.at_most, self.at_least) {
            (Some(u), None) => RateConstraint::upper(&combo, u, datasets),
            (None, Some(l)) => RateConstraint::lower(&combo, l, datasets),
            _ => Err(Error::config(format!(
                "constraint `{}` needs exactly one of `at_most` / `at_least`",
                self.label()
            ))),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum LambdaSpec {
    Value(f64),
    /// Only `"1/n"` is accepted: one over the number of training examples.
    Expr(String),
}

impl LambdaSpec {
    pub fn resolve(&self, n: usize) -> Result<f64> {
        match self {
            LambdaSpec::Value(v) => Ok(*v),
            LambdaSpec::Expr(s) if s.trim() == "1/n" => {
                if n == 0 {
                    return Err(Error::config("lambda = \"1/n\" with no training examples"));
                }
                Ok(1.0 / n as f64)
            }
            LambdaSpec::Expr(s) => Err(Error::config(format!("unsupported lambda expression {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ChooserName {
    Max,
    Min,
    Centroid,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum BiasName {
    Free,
    None,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub lambda: LambdaSpec,
    pub multiplier_cap: f64,
    pub iterations: usize,
    pub eps: f64,
    pub chooser: ChooserName,
    pub bias_chooser: ChooserName,
    pub bias: BiasName,
    pub seed: u64,
    pub feas_tol: f64,
    pub early_stop: bool,
    pub max_saddle_iters: usize,
    pub max_bias_iters: usize,
    pub max_sdca_epochs: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: LambdaSpec::Expr("1/n".into()),
            multiplier_cap: 1e6,
            iterations: 5,
            eps: 1e-3,
            chooser: ChooserName::Max,
            bias_chooser: ChooserName::Min,
            bias: BiasName::Free,
            seed: 0,
            feas_tol: 1e-6,
            early_stop: false,
            max_saddle_iters: 1000,
            max_bias_iters: 500,
            max_sdca_epochs: 2000,
        }
    }
}

impl SolverConfig {
    pub fn cut_chooser(&self) -> Result<CutChooser> {
        match self.chooser {
            ChooserName::Max => Ok(CutChooser::Max),
            ChooserName::Centroid => Ok(CutChooser::Centroid),
            ChooserName::Min => Err(Error::config("`chooser` must be \"max\" or \"centroid\"")),
        }
    }

    pub fn bias_cut_chooser(&self) -> Result<BiasChooser> {
        match self.bias_chooser {
            ChooserName::Min => Ok(BiasChooser::Min),
            ChooserName::Centroid => Ok(BiasChooser::Centroid),
            ChooserName::Max => Err(Error::config("`bias_chooser` must be \"min\" or \"centroid\"")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !(self.feas_tol >= 0.0) || !(self.multiplier_cap > 0.0) || self.iterations == 0 {
            return Err(Error::config("solver needs eps > 0, feas_tol >= 0, multiplier_cap > 0, iterations >= 1"));
        }
        self.cut_chooser()?;
        self.bias_cut_chooser()?;
        Ok(())
    }

    pub fn saddle_options(&self) -> Result<SaddleOptions> {
        Ok(SaddleOptions {
            eps: self.eps,
            chooser: self.cut_chooser()?,
            max_iters: self.max_saddle_iters,
            svm: SvmOptions {
                bias_mode: self.bias_mode(),
                bias_chooser: self.bias_cut_chooser()?,
                max_bias_iters: self.max_bias_iters,
                sdca: SdcaOptions {
                    max_epochs: self.max_sdca_epochs,
                },
            },
        })
    }

    pub fn mm_options(&self) -> Result<MmOptions> {
        Ok(MmOptions {
            iterations: self.iterations,
            early_stop: self.early_stop,
            feas_tol: self.feas_tol,
            seed: self.seed,
            saddle: self.saddle_options()?,
        })
    }

    pub fn bias_mode(&self) -> BiasMode {
        match self.bias {
            BiasName::Free => BiasMode::Free,
            BiasName::None => BiasMode::None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub model: String,
    pub trace: String,
    pub report: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            model: "model.txt".into(),
            trace: "trace.csv".into(),
            report: "report.txt".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub randomized_draws: usize,
    pub delta: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            randomized_draws: 0,
            delta: 0.05,
        }
    }
}

impl RunConfig {
    /// Parses TOML text, resolving relative paths against `base`.
    pub fn from_toml(text: &str, base: &Path, source: &Path) -> Result<Self> {
        let mut cfg: RunConfig = parse_toml(text, source)?;
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = super::read_text(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_toml(&text, base, path)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| resolve_path(base, p);
        let d = &mut self.data;
        fix(&mut d.train);
        for p in [
            &mut d.test,
            &mut d.group_file,
            &mut d.test_group_file,
            &mut d.baseline_file,
            &mut d.test_baseline_file,
            &mut d.baseline_model,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        fix(&mut self.output.dir);
    }

    /// Input files referenced by the config.
    pub fn input_files(&self) -> Vec<&Path> {
        let d = &self.data;
        let mut out = vec![d.train.as_path()];
        out.extend(
            [
                &d.test,
                &d.group_file,
                &d.test_group_file,
                &d.baseline_file,
                &d.test_baseline_file,
                &d.baseline_model,
            ]
            .into_iter()
            .flatten()
            .map(PathBuf::as_path),
        );
        out
    }

    pub fn validate(&self) -> Result<()> {
        for p in self.input_files() {
            if !p.is_file() {
                return Err(Error::config(format!("input file {} does not exist", p.display())));
            }
        }
        if self.objective.is_empty() {
            return Err(Error::config("at least one [[objective]] term is required"));
        }
        if self.data.group_feature.is_some() && self.data.group_file.is_some() {
            return Err(Error::config("give either `group_feature` or `group_file`, not both"));
        }
        if self.data.baseline_file.is_some() && self.data.baseline_model.is_some() {
            return Err(Error::config("give either `baseline_file` or `baseline_model`, not both"));
        }
        for o in &self.objective {
            if o.metric == MetricKind::Fairness {
                return Err(Error::config("fairness is a constraint, not an objective term"));
            }
            if o.at_most.is_some() || o.at_least.is_some() || o.kappa.is_some() {
                return Err(Error::config("objective terms take no bounds"));
            }
        }
        for c in &self.constraints {
            let bounds = usize::from(c.at_most.is_some()) + usize::from(c.at_least.is_some());
            match c.metric {
                MetricKind::Fairness if c.kappa.is_none() || bounds != 0 => {
                    return Err(Error::config("fairness constraints take `kappa` and no other bound"));
                }
                MetricKind::Fairness => {}
                _ if bounds != 1 || c.kappa.is_some() => {
                    return Err(Error::config(format!(
                        "constraint `{}` needs exactly one of `at_most` / `at_least`",
                        c.label()
                    )));
                }
                _ => {}
            }
        }
        self.solver.validate()?;
        if !(self.eval.delta > 0.0 && self.eval.delta < 1.0) {
            return Err(Error::config("eval.delta must lie in (0, 1)"));
        }
        Ok(())
    }
}
