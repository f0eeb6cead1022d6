//! Datasets, rate combinations, constraints and the metric cookbook.
//!
//! Every goal is expressed through the positive rate `s_p(D)` and negative
//! rate `s_n(D)` of a classifier on an unlabeled dataset `D`. A labeled
//! dataset enters the model only after being split into unlabeled parts
//! (positives, negatives, groups, agreement cells with a baseline model).

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::sparse::SparseVector;

/// An unlabeled bag of sparse examples of a fixed dimension.
#[derive(Debug, Clone)]
pub struct Dataset {
    id: String,
    dim: usize,
    examples: Vec<SparseVector>,
    uses_bias: bool,
}

impl Dataset {
    pub fn new(id: impl Into<String>, dim: usize, examples: Vec<SparseVector>) -> Result<Self> {
        let id = id.into();
        if examples.is_empty() {
            return Err(Error::domain(format!("dataset `{id}` is empty")));
        }
        if let Some(bad) = examples.iter().find(|x| x.min_dimension() > dim) {
            return Err(Error::domain(format!(
                "dataset `{id}` has feature index {} outside dimension {dim}",
                bad.min_dimension() - 1
            )));
        }
        Ok(Dataset {
            id,
            dim,
            examples,
            uses_bias: true,
        })
    }

    /// Marks the dataset as bias-free: its margins are `<w, x>` rather than
    /// `<w, x> - b`. Used for pseudo-datasets that encode linear constraints
    /// on `w` alone.
    pub fn without_bias(mut self) -> Self {
        self.uses_bias = false;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn examples(&self) -> &[SparseVector] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn uses_bias(&self) -> bool {
        self.uses_bias
    }

    /// Largest Euclidean norm of any example.
    pub fn max_norm(&self) -> f64 {
        self.examples
            .iter()
            .map(|x| x.squared_norm().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Named datasets, in insertion order. Ids of partitions that turned out
/// empty are remembered so that count metrics can treat them as size zero.
#[derive(Debug, Clone, Default)]
pub struct DatasetCollection {
    datasets: IndexMap<String, Dataset>,
    empty: BTreeSet<String>,
}

impl DatasetCollection {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, dataset: Dataset) -> Result<()> {
        if self.datasets.contains_key(dataset.id()) || self.empty.contains(dataset.id()) {
            return Err(Error::config(format!("duplicate dataset id `{}`", dataset.id())));
        }
        self.datasets.insert(dataset.id.clone(), dataset);
        Ok(())
    }

    pub fn insert_empty(&mut self, id: impl Into<String>) {
        self.empty.insert(id.into());
    }

    pub fn get(&self, id: &str) -> Option<&Dataset> {
        self.datasets.get(id)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.datasets.get_index_of(id)
    }

    pub fn by_index(&self, index: usize) -> &Dataset {
        &self.datasets[index]
    }

    /// Size of a known dataset; empty partitions report zero.
    pub fn size(&self, id: &str) -> Result<usize> {
        if let Some(d) = self.datasets.get(id) {
            Ok(d.len())
        } else if self.empty.contains(id) {
            Ok(0)
        } else {
            Err(Error::config(format!("unknown dataset `{id}`")))
        }
    }

    pub fn contains(&self, id: &str) -> bool {
        self.datasets.contains_key(id) || self.empty.contains(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Dataset> {
        self.datasets.values()
    }

    pub fn len(&self) -> usize {
        self.datasets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.datasets.is_empty()
    }

    /// Total number of examples across datasets, counting repeats.
    pub fn total_examples(&self) -> usize {
        self.iter().map(Dataset::len).sum()
    }

    pub fn max_norm(&self) -> f64 {
        self.iter().map(Dataset::max_norm).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn flip(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTerm {
    pub dataset: String,
    pub polarity: Polarity,
    pub coefficient: f64,
}

/// `sum_i c_i * rate_i + constant`.
///
/// Coefficients may be negative while a combination is being assembled;
/// [`RateCombination::canonicalize`] rewrites it into the nonnegative form
/// the solver requires.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RateCombination {
    terms: Vec<RateTerm>,
    constant: f64,
}

impl RateCombination {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn positive(dataset: impl Into<String>, coefficient: f64) -> Self {
        Self::new().with_term(dataset, Polarity::Positive, coefficient)
    }

    pub fn negative(dataset: impl Into<String>, coefficient: f64) -> Self {
        Self::new().with_term(dataset, Polarity::Negative, coefficient)
    }

    pub fn with_term(mut self, dataset: impl Into<String>, polarity: Polarity, coefficient: f64) -> Self {
        self.terms.push(RateTerm {
            dataset: dataset.into(),
            polarity,
            coefficient,
        });
        self
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant += constant;
        self
    }

    pub fn terms(&self) -> &[RateTerm] {
        &self.terms
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn scaled(&self, factor: f64) -> Self {
        RateCombination {
            terms: self
                .terms
                .iter()
                .map(|t| RateTerm {
                    coefficient: t.coefficient * factor,
                    ..t.clone()
                })
                .collect(),
            constant: self.constant * factor,
        }
    }

    pub fn plus(&self, other: &RateCombination) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        RateCombination {
            terms,
            constant: self.constant + other.constant,
        }
    }

    pub fn minus(&self, other: &RateCombination) -> Self {
        self.plus(&other.scaled(-1.0))
    }

    /// Rewrites into a nonnegative combination with at most one term per
    /// dataset, using `s_p + s_n = 1`. Zero-coefficient terms are dropped.
    pub fn canonicalize(&self, datasets: &DatasetCollection) -> Result<Self> {
        // dataset -> (net positive coefficient, net negative coefficient)
        let mut net: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
        let mut order: Vec<&str> = Vec::new();
        for term in &self.terms {
            if !datasets.contains(&term.dataset) {
                return Err(Error::config(format!("unknown dataset `{}`", term.dataset)));
            }
            if !term.coefficient.is_finite() {
                return Err(Error::config(format!(
                    "non-finite coefficient on dataset `{}`",
                    term.dataset
                )));
            }
            let entry = net.entry(term.dataset.as_str()).or_insert_with(|| {
                order.push(term.dataset.as_str());
                (0.0, 0.0)
            });
            match term.polarity {
                Polarity::Positive => entry.0 += term.coefficient,
                Polarity::Negative => entry.1 += term.coefficient,
            }
        }
        let mut out = RateCombination {
            terms: Vec::new(),
            constant: self.constant,
        };
        for id in order {
            let (cp, cn) = net[id];
            // cp*s_p + cn*s_n == (cp - cn)*s_p + cn == (cn - cp)*s_n + cp
            let (polarity, coefficient, shift) = if cp >= cn {
                (Polarity::Positive, cp - cn, cn)
            } else {
                (Polarity::Negative, cn - cp, cp)
            };
            out.constant += shift;
            if coefficient != 0.0 && datasets.size(id)? > 0 {
                out.terms.push(RateTerm {
                    dataset: id.to_string(),
                    polarity,
                    coefficient,
                });
            }
        }
        Ok(out)
    }

    pub fn is_canonical(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.terms
            .iter()
            .all(|t| t.coefficient >= 0.0 && seen.insert((t.dataset.as_str(), t.polarity)))
    }

    /// Value given a rate lookup `rate(dataset, polarity)`.
    pub fn evaluate_with<F>(&self, mut rate: F) -> Result<f64>
    where
        F: FnMut(&str, Polarity) -> Result<f64>,
    {
        let mut total = self.constant;
        for term in &self.terms {
            total += term.coefficient * rate(&term.dataset, term.polarity)?;
        }
        Ok(total)
    }
}

/// `lhs <= bound`, with `lhs` canonical and its constant folded into `bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateConstraint {
    lhs: RateCombination,
    bound: f64,
}

impl RateConstraint {
    pub fn upper(lhs: &RateCombination, bound: f64, datasets: &DatasetCollection) -> Result<Self> {
        if !bound.is_finite() {
            return Err(Error::config("constraint bound must be finite"));
        }
        let mut lhs = lhs.canonicalize(datasets)?;
        let bound = bound - lhs.constant;
        lhs.constant = 0.0;
        Ok(RateConstraint { lhs, bound })
    }

    pub fn lower(lhs: &RateCombination, bound: f64, datasets: &DatasetCollection) -> Result<Self> {
        Self::upper(&lhs.scaled(-1.0), -bound, datasets)
    }

    pub fn lhs(&self) -> &RateCombination {
        &self.lhs
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// `lhs - bound`; positive means violated.
    pub fn violation_with<F>(&self, rate: F) -> Result<f64>
    where
        F: FnMut(&str, Polarity) -> Result<f64>,
    {
        Ok(self.lhs.evaluate_with(rate)? - self.bound)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    AtLeast,
    AtMost,
}

/// The four agreement cells of a labeled dataset against a baseline model.
/// Naming is `<label><baseline prediction>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChurnCells {
    pub pos_pos: String,
    pub pos_neg: String,
    pub neg_pos: String,
    pub neg_neg: String,
}

/// Metrics expressible as linear combinations of rates.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Coverage { dataset: String },
    TruePositives { positives: String },
    TrueNegatives { negatives: String },
    FalsePositives { negatives: String },
    FalseNegatives { positives: String },
    Errors { positives: String, negatives: String },
    ErrorRate { positives: String, negatives: String },
    Recall { positives: String },
    /// Number of prediction flips relative to a baseline, given the
    /// datasets on which the baseline predicted positive and negative.
    Changes { baseline_pos: Vec<String>, baseline_neg: Vec<String> },
    ChurnRate { baseline_pos: Vec<String>, baseline_neg: Vec<String> },
    /// Baseline wrong, new model right.
    Wins(ChurnCells),
    /// Baseline right, new model wrong.
    Losses(ChurnCells),
}

impl Metric {
    /// Changes over labeled cells, ignoring the labels.
    pub fn changes_from_cells(cells: &ChurnCells) -> Metric {
        Metric::Changes {
            baseline_pos: vec![cells.pos_pos.clone(), cells.neg_pos.clone()],
            baseline_neg: vec![cells.pos_neg.clone(), cells.neg_neg.clone()],
        }
    }
}

fn nonempty_size(datasets: &DatasetCollection, id: &str) -> Result<f64> {
    match datasets.size(id)? {
        0 => Err(Error::config(format!("metric needs nonempty partition `{id}`"))),
        n => Ok(n as f64),
    }
}

fn counted(datasets: &DatasetCollection, id: &str, polarity: Polarity) -> Result<RateCombination> {
    let n = datasets.size(id)? as f64;
    Ok(RateCombination::new().with_term(id, polarity, n))
}

/// Translates a metric into its rate combination (canonicalized).
pub fn build_metric(metric: &Metric, datasets: &DatasetCollection) -> Result<RateCombination> {
    use Polarity::{Negative, Positive};
    let raw = match metric {
        Metric::Coverage { dataset } => {
            nonempty_size(datasets, dataset)?;
            RateCombination::positive(dataset, 1.0)
        }
        Metric::TruePositives { positives } => counted(datasets, positives, Positive)?,
        Metric::TrueNegatives { negatives } => counted(datasets, negatives, Negative)?,
        Metric::FalsePositives { negatives } => counted(datasets, negatives, Positive)?,
        Metric::FalseNegatives { positives } => counted(datasets, positives, Negative)?,
        Metric::Errors {
            positives,
            negatives,
        } => counted(datasets, positives, Negative)?.plus(&counted(datasets, negatives, Positive)?),
        Metric::ErrorRate {
            positives,
            negatives,
        } => {
            let total = datasets.size(positives)? + datasets.size(negatives)?;
            if total == 0 {
                return Err(Error::config("error rate needs at least one labeled example"));
            }
            build_metric(
                &Metric::Errors {
                    positives: positives.clone(),
                    negatives: negatives.clone(),
                },
                datasets,
            )?
            .scaled(1.0 / total as f64)
        }
        Metric::Recall { positives } => {
            nonempty_size(datasets, positives)?;
            RateCombination::positive(positives, 1.0)
        }
        Metric::Changes {
            baseline_pos,
            baseline_neg,
        } => {
            let mut combo = RateCombination::new();
            for id in baseline_pos {
                combo = combo.plus(&counted(datasets, id, Negative)?);
            }
            for id in baseline_neg {
                combo = combo.plus(&counted(datasets, id, Positive)?);
            }
            combo
        }
        Metric::ChurnRate {
            baseline_pos,
            baseline_neg,
        } => {
            let mut total = 0;
            for id in baseline_pos.iter().chain(baseline_neg) {
                total += datasets.size(id)?;
            }
            if total == 0 {
                return Err(Error::config("churn rate needs at least one example"));
            }
            build_metric(
                &Metric::Changes {
                    baseline_pos: baseline_pos.clone(),
                    baseline_neg: baseline_neg.clone(),
                },
                datasets,
            )?
            .scaled(1.0 / total as f64)
        }
        Metric::Wins(cells) => counted(datasets, &cells.pos_neg, Positive)?
            .plus(&counted(datasets, &cells.neg_pos, Negative)?),
        Metric::Losses(cells) => counted(datasets, &cells.pos_pos, Negative)?
            .plus(&counted(datasets, &cells.neg_neg, Positive)?),
    };
    raw.canonicalize(datasets)
}

/// `numerator {>=,<=} ratio_bound * denominator`, multiplied through so no
/// division is ever evaluated.
pub fn build_ratio_constraint(
    numerator: &RateCombination,
    denominator: &RateCombination,
    ratio_bound: f64,
    direction: Direction,
    datasets: &DatasetCollection,
) -> Result<RateConstraint> {
    if denominator.terms().iter().any(|t| t.coefficient < 0.0) {
        return Err(Error::config("ratio denominator must have nonnegative coefficients"));
    }
    let scaled = denominator.scaled(ratio_bound);
    let lhs = match direction {
        Direction::AtLeast => scaled.minus(numerator),
        Direction::AtMost => numerator.minus(&scaled),
    };
    RateConstraint::upper(&lhs, 0.0, datasets)
}

/// `s_p(a) >= kappa * s_p(b)`.
pub fn build_fairness_constraint(
    a: &str,
    b: &str,
    kappa: f64,
    datasets: &DatasetCollection,
) -> Result<RateConstraint> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::config(format!("fairness kappa must lie in (0, 1], got {kappa}")));
    }
    nonempty_size(datasets, a)?;
    nonempty_size(datasets, b)?;
    let lhs = RateCombination::positive(b, kappa).minus(&RateCombination::positive(a, 1.0));
    RateConstraint::upper(&lhs, 0.0, datasets)
}

/// Partition role names produced by [`partition_labeled_data`].
pub mod roles {
    pub const ALL: &str = "all";
    pub const POS: &str = "pos";
    pub const NEG: &str = "neg";
    pub const GROUP_A: &str = "group_a";
    pub const GROUP_B: &str = "group_b";
    pub const GROUP_A_POS: &str = "group_a_pos";
    pub const GROUP_B_POS: &str = "group_b_pos";
    pub const POS_POS: &str = "pos_pos";
    pub const POS_NEG: &str = "pos_neg";
    pub const NEG_POS: &str = "neg_pos";
    pub const NEG_NEG: &str = "neg_neg";
}

/// One labeled example before partitioning.
#[derive(Debug, Clone)]
pub struct LabeledExample {
    pub features: SparseVector,
    /// `true` for label +1.
    pub label: bool,
    /// `Some(true)` for group A, `Some(false)` for group B.
    pub group: Option<bool>,
    /// Baseline model prediction, `true` for +1.
    pub baseline: Option<bool>,
}

/// Splits labeled data into unlabeled datasets named `<prefix><role>`.
///
/// Always emits `all`, `pos`, `neg`. Group membership adds `group_a`,
/// `group_b`, `group_a_pos`, `group_b_pos`; baseline predictions add the
/// four agreement cells. Group and baseline information must be present on
/// every example or on none. Empty partitions are recorded as known-empty.
pub fn partition_labeled_data(
    prefix: &str,
    dim: usize,
    examples: &[LabeledExample],
) -> Result<DatasetCollection> {
    if examples.is_empty() {
        return Err(Error::config("no labeled examples to partition"));
    }
    let has_group = examples[0].group.is_some();
    let has_baseline = examples[0].baseline.is_some();
    if examples
        .iter()
        .any(|e| e.group.is_some() != has_group || e.baseline.is_some() != has_baseline)
    {
        return Err(Error::config(
            "group / baseline annotations must be present on all examples or none",
        ));
    }

    let mut parts: IndexMap<&'static str, Vec<SparseVector>> = IndexMap::new();
    let mut roles_in_use = vec![roles::ALL, roles::POS, roles::NEG];
    if has_group {
        roles_in_use.extend([roles::GROUP_A, roles::GROUP_B, roles::GROUP_A_POS, roles::GROUP_B_POS]);
    }
    if has_baseline {
        roles_in_use.extend([roles::POS_POS, roles::POS_NEG, roles::NEG_POS, roles::NEG_NEG]);
    }
    for role in &roles_in_use {
        parts.insert(role, Vec::new());
    }
    for ex in examples {
        let x = &ex.features;
        parts[roles::ALL].push(x.clone());
        parts[if ex.label { roles::POS } else { roles::NEG }].push(x.clone());
        if let Some(in_a) = ex.group {
            parts[if in_a { roles::GROUP_A } else { roles::GROUP_B }].push(x.clone());
            if ex.label {
                parts[if in_a { roles::GROUP_A_POS } else { roles::GROUP_B_POS }].push(x.clone());
            }
        }
        if let Some(base) = ex.baseline {
            let cell = match (ex.label, base) {
                (true, true) => roles::POS_POS,
                (true, false) => roles::POS_NEG,
                (false, true) => roles::NEG_POS,
                (false, false) => roles::NEG_NEG,
            };
            parts[cell].push(x.clone());
        }
    }
    let mut out = DatasetCollection::new();
    for (role, xs) in parts {
        let id = format!("{prefix}{role}");
        if xs.is_empty() {
            out.insert_empty(id);
        } else {
            out.insert(Dataset::new(id, dim, xs)?)?;
        }
    }
    Ok(out)
}

/// Splits unlabeled data by a baseline's predictions into
/// `<prefix>base_pos` / `<prefix>base_neg`.
pub fn partition_by_baseline(
    prefix: &str,
    dim: usize,
    examples: &[SparseVector],
    baseline: &[bool],
) -> Result<DatasetCollection> {
    if examples.len() != baseline.len() {
        return Err(Error::config("baseline prediction count does not match examples"));
    }
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for (x, &b) in examples.iter().zip(baseline) {
        if b { pos.push(x.clone()) } else { neg.push(x.clone()) }
    }
    let mut out = DatasetCollection::new();
    for (role, xs) in [("base_pos", pos), ("base_neg", neg)] {
        let id = format!("{prefix}{role}");
        if xs.is_empty() {
            out.insert_empty(id);
        } else {
            out.insert(Dataset::new(id, dim, xs)?)?;
        }
    }
    Ok(out)
}

/// Problem 1 data: objective, upper-bound constraints, regularization and
/// the multiplier cap.
#[derive(Debug, Clone)]
pub struct ConstrainedProblem {
    datasets: DatasetCollection,
    objective: RateCombination,
    constraints: Vec<RateConstraint>,
    lambda: f64,
    multiplier_cap: f64,
    dim: usize,
}

impl ConstrainedProblem {
    pub fn new(
        datasets: DatasetCollection,
        objective: &RateCombination,
        constraints: Vec<RateConstraint>,
        lambda: f64,
        multiplier_cap: f64,
    ) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::config(format!("lambda must be positive, got {lambda}")));
        }
        if !(multiplier_cap > 0.0 && multiplier_cap.is_finite()) {
            return Err(Error::config(format!(
                "multiplier cap must be positive, got {multiplier_cap}"
            )));
        }
        if datasets.is_empty() {
            return Err(Error::config("problem has no datasets"));
        }
        let dim = datasets.iter().map(Dataset::dim).max().unwrap_or(0);
        if datasets.iter().any(|d| d.dim() != dim) {
            return Err(Error::config("datasets disagree on feature dimension"));
        }
        let objective = objective.canonicalize(&datasets)?;
        for c in &constraints {
            if !c.lhs().is_canonical() || c.lhs().constant() != 0.0 {
                return Err(Error::config("constraint is not in canonical form"));
            }
            for t in c.lhs().terms() {
                if datasets.get(&t.dataset).is_none() {
                    return Err(Error::config(format!("unknown dataset `{}`", t.dataset)));
                }
            }
        }
        // Unreferenced datasets would only add zero-weight examples to the SVM.
        let referenced = |id: &str| {
            objective.terms().iter().any(|t| t.dataset == id)
                || constraints.iter().any(|c| c.lhs().terms().iter().any(|t| t.dataset == id))
        };
        let mut kept = DatasetCollection::new();
        for d in datasets.iter().filter(|d| referenced(d.id())) {
            kept.insert(d.clone())?;
        }
        if kept.is_empty() {
            return Err(Error::config("objective and constraints reference no nonempty dataset"));
        }
        Ok(ConstrainedProblem {
            datasets: kept,
            objective,
            constraints,
            lambda,
            multiplier_cap,
            dim,
        })
    }

    pub fn datasets(&self) -> &DatasetCollection {
        &self.datasets
    }

    pub fn objective(&self) -> &RateCombination {
        &self.objective
    }

    pub fn constraints(&self) -> &[RateConstraint] {
        &self.constraints
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn multiplier_cap(&self) -> f64 {
        self.multiplier_cap
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.datasets.clone(),
            &self.objective,
            self.constraints.clone(),
            lambda,
            self.multiplier_cap,
        )
    }

    /// Per-dataset coefficient table: `(alpha_i, beta_i)` for the objective
    /// and `(alpha_ji, beta_ji)` for each constraint, indexed like the
    /// dataset collection.
    pub fn coefficient_table(&self) -> CoefficientTable {
        let k = self.datasets.len();
        let mut objective = vec![(0.0, 0.0); k];
        fill(&self.datasets, &self.objective, &mut objective);
        let constraints = self
            .constraints
            .iter()
            .map(|c| {
                let mut row = vec![(0.0, 0.0); k];
                fill(&self.datasets, c.lhs(), &mut row);
                row
            })
            .collect();
        CoefficientTable {
            objective,
            constraints,
            bounds: self.constraints.iter().map(RateConstraint::bound).collect(),
        }
    }
}

fn fill(datasets: &DatasetCollection, combo: &RateCombination, row: &mut [(f64, f64)]) {
    for t in combo.terms() {
        let i = datasets.index_of(&t.dataset).expect("validated dataset id");
        match t.polarity {
            Polarity::Positive => row[i].0 += t.coefficient,
            Polarity::Negative => row[i].1 += t.coefficient,
        }
    }
}

/// Dense per-dataset view of the problem's coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    /// `(alpha_i, beta_i)` per dataset.
    pub objective: Vec<(f64, f64)>,
    /// `constraints[j][i] = (alpha_ji, beta_ji)`.
    pub constraints: Vec<Vec<(f64, f64)>>,
    /// Upper bounds `gamma_j`.
    pub bounds: Vec<f64>,
}

impl CoefficientTable {
    /// Combined positive/negative weights of dataset `i` under multipliers `v`.
    pub fn combined(&self, i: usize, v: &[f64]) -> (f64, f64) {
        let (mut a, mut b) = self.objective[i];
        for (row, &vj) in self.constraints.iter().zip(v) {
            a += vj * row[i].0;
            b += vj * row[i].1;
        }
        (a, b)
    }
}
