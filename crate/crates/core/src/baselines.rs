//! Comparison methods: the plain hinge SVM, bias thresholding to meet a
//! single rate constraint, and the mean-difference (covariance) constrained
//! SVM.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ConstrainedProblem, Dataset, DatasetCollection, Polarity, RateCombination, RateConstraint};
use crate::rates::LinearClassifier;
use crate::saddle::{solve_saddle, SaddleOptions, SaddleResult};
use crate::sparse::SparseVector;
use crate::subproblem::ConvexSubproblem;
use crate::svm::DualState;
use crate::trace::SolverTrace;

/// A convex solve anchored at the zero classifier, where every rate bound
/// is its hinge.
#[derive(Debug, Clone)]
pub struct HingeSolution {
    pub classifier: LinearClassifier,
    /// Hinge objective plus `lambda/2 |w|^2` at the classifier (canonical constant excluded).
    pub objective: f64,
    pub saddle: SaddleResult,
    pub trace: SolverTrace,
}

/// Solves `problem` with every ramp replaced by its hinge.
pub fn solve_hinge_problem(problem: &ConstrainedProblem, options: &SaddleOptions, seed: u64) -> Result<HingeSolution> {
    let sub = ConvexSubproblem::new(problem, LinearClassifier::zeros(problem.dim()))?;
    let mut state = DualState::zeros(problem.datasets().total_examples(), problem.dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = SolverTrace::new();
    let saddle = solve_saddle(&sub, options, &mut state, &mut rng, &mut trace)?;
    let objective = sub.psi_parts(&saddle.classifier).base;
    Ok(HingeSolution {
        classifier: saddle.classifier.clone(),
        objective,
        saddle,
        trace,
    })
}

/// Standard SVM: the objective's rates replaced by hinges, no constraints.
pub fn train_unconstrained_svm(
    datasets: DatasetCollection,
    objective: &RateCombination,
    lambda: f64,
    options: &SaddleOptions,
    seed: u64,
) -> Result<HingeSolution> {
    let problem = ConstrainedProblem::new(datasets, objective, Vec::new(), lambda, 1.0)?;
    solve_hinge_problem(&problem, options, seed)
}

/// Values of the indicator LHS as a function of the bias.
struct ThresholdScan {
    /// `(coefficient, polarity, sorted scores <w, x>)` per bias-using term.
    terms: Vec<(f64, Polarity, Vec<f64>)>,
    constant: f64,
}

impl ThresholdScan {
    fn new(clf: &LinearClassifier, lhs: &RateCombination, datasets: &DatasetCollection) -> Result<Self> {
        let mut terms = Vec::new();
        let mut constant = 0.0;
        for t in lhs.terms() {
            let d = datasets
                .get(&t.dataset)
                .ok_or_else(|| Error::config(format!("unknown dataset `{}`", t.dataset)))?;
            if d.is_empty() {
                return Err(Error::domain(format!("dataset `{}` is empty", d.id())));
            }
            if d.dim() != clf.dim() {
                return Err(Error::domain("classifier and dataset dimensions differ"));
            }
            if d.uses_bias() {
                let mut scores: Vec<f64> = d.examples().iter().map(|x| x.dot(clf.weights())).collect();
                scores.sort_by(f64::total_cmp);
                terms.push((t.coefficient, t.polarity, scores));
            } else {
                let pos = d.examples().iter().filter(|x| clf.margin_in(d, x) > 0.0).count() as f64 / d.len() as f64;
                constant += t.coefficient
                    * match t.polarity {
                        Polarity::Positive => pos,
                        Polarity::Negative => 1.0 - pos,
                    };
            }
        }
        Ok(ThresholdScan { terms, constant })
    }

    /// LHS at bias `b`; an example is positive iff its score exceeds `b`.
    fn lhs(&self, b: f64) -> f64 {
        let mut total = self.constant;
        for (c, pol, scores) in &self.terms {
            let positives = scores.len() - scores.partition_point(|&s| s <= b);
            let p = positives as f64 / scores.len() as f64;
            total += c * match pol {
                Polarity::Positive => p,
                Polarity::Negative => 1.0 - p,
            };
        }
        total
    }
}

/// Replaces the bias of `clf` so that the constraint holds under the
/// deterministic rule, moving `b` as little as possible.
///
/// The constraint must involve a single rate polarity so that it is
/// monotone in `b`. The scan is exact: only scores and their immediate
/// floating-point predecessors can be optimal.
pub fn threshold_for_constraint(
    clf: &LinearClassifier,
    constraint: &RateConstraint,
    datasets: &DatasetCollection,
) -> Result<LinearClassifier> {
    let lhs = constraint.lhs();
    let polarity = match lhs.terms().first() {
        None => {
            return if 0.0 <= constraint.bound() {
                Ok(clf.clone())
            } else {
                Err(Error::domain("constraint has no rate terms and its bound is negative"))
            }
        }
        Some(t) => t.polarity,
    };
    if lhs.terms().iter().any(|t| t.polarity != polarity || t.coefficient < 0.0) {
        return Err(Error::config(
            "thresholding needs a constraint on a single rate polarity with nonnegative coefficients",
        ));
    }
    let scan = ThresholdScan::new(clf, lhs, datasets)?;
    let bound = constraint.bound();
    let feasible = |b: f64| scan.lhs(b) <= bound + 1e-12 * (1.0 + bound.abs());
    let b0 = clf.bias();
    if feasible(b0) {
        return Ok(clf.clone());
    }
    let mut scores: Vec<f64> = scan.terms.iter().flat_map(|t| t.2.iter().copied()).collect();
    scores.sort_by(f64::total_cmp);
    scores.dedup();
    let (all_pos, all_neg) = match scores.first() {
        Some(&lo) => (scan.lhs(lo.next_down()), scan.lhs(*scores.last().unwrap())),
        None => (scan.lhs(b0), scan.lhs(b0)),
    };
    let range_err = || {
        Error::domain(format!(
            "no bias satisfies the constraint: left-hand side ranges over [{}, {}], bound {bound}",
            all_pos.min(all_neg),
            all_pos.max(all_neg)
        ))
    };
    let b = match polarity {
        // nonincreasing in b: smallest feasible score above b0
        Polarity::Positive => {
            let start = scores.partition_point(|&s| s <= b0);
            let cands = &scores[start..];
            let k = cands.partition_point(|&s| !feasible(s));
            *cands.get(k).ok_or_else(range_err)?
        }
        // nondecreasing in b: largest feasible predecessor below b0
        Polarity::Negative => {
            let cands: Vec<f64> = scores.iter().map(|s| s.next_down()).filter(|&s| s < b0).collect();
            let k = cands.partition_point(|&s| feasible(s));
            if k == 0 {
                return Err(range_err());
            }
            cands[k - 1]
        }
    };
    Ok(clf.with_bias(b))
}

/// `mean(a) - mean(b)`, accumulated densely and returned sparse.
pub fn zafar_mean_difference(a: &Dataset, b: &Dataset) -> Result<SparseVector> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("mean difference needs two nonempty datasets"));
    }
    if a.dim() != b.dim() {
        return Err(Error::domain("datasets disagree on feature dimension"));
    }
    let mut acc = vec![0.0; a.dim()];
    for x in a.examples() {
        x.axpy(1.0 / a.len() as f64, &mut acc);
    }
    for x in b.examples() {
        x.axpy(-1.0 / b.len() as f64, &mut acc);
    }
    Ok(SparseVector::from_dense(&acc))
}

/// Id of the pseudo-dataset that carries the mean difference.
pub const ZAFAR_DATASET: &str = "zafar_mean_difference";

#[derive(Debug, Clone)]
pub struct ZafarSolution {
    pub hinge: HingeSolution,
    /// `<w, x_bar>` at the returned classifier.
    pub covariance: f64,
}

/// Hinge SVM subject to `|<w, x_bar>| <= c`.
///
/// The pseudo-dataset `{x_bar / 2}` ignores the bias. Anchored at zero,
/// `2 r_p = max(0, 1 + <w, x_bar>)` and `2 r_n = max(0, 1 - <w, x_bar>)`,
/// so bounding both by `c + 1` is exactly the two-sided constraint.
pub fn train_zafar_baseline(
    datasets: &DatasetCollection,
    objective: &RateCombination,
    lambda: f64,
    c: f64,
    x_bar: &SparseVector,
    multiplier_cap: f64,
    options: &SaddleOptions,
    seed: u64,
) -> Result<ZafarSolution> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::config(format!("covariance bound must be finite and nonnegative, got {c}")));
    }
    let dim = datasets.iter().map(Dataset::dim).max().unwrap_or(0);
    let mut all = datasets.clone();
    all.insert(Dataset::new(ZAFAR_DATASET, dim, vec![x_bar.scaled(0.5)])?.without_bias())?;
    let constraints = vec![
        RateConstraint::upper(&RateCombination::positive(ZAFAR_DATASET, 2.0), c + 1.0, &all)?,
        RateConstraint::upper(&RateCombination::negative(ZAFAR_DATASET, 2.0), c + 1.0, &all)?,
    ];
    let problem = ConstrainedProblem::new(all, objective, constraints, lambda, multiplier_cap)?;
    let hinge = solve_hinge_problem(&problem, options, seed)?;
    let covariance = x_bar.dot(hinge.classifier.weights());
    Ok(ZafarSolution { hinge, covariance })
}
