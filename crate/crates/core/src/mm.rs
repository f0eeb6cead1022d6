//! Majorization-minimization over the ramp-relaxed problem: each step
//! replaces every ramp by its hinge/constant bound anchored at the current
//! iterate and solves the resulting convex problem.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::envelope::{self, Line};
use crate::error::{Error, InfeasibilityReport, Result};
use crate::model::{ConstrainedProblem, Polarity};
use crate::rates::{all_rates, evaluate_with_rates, LinearClassifier, RateKind};
use crate::saddle::{solve_saddle, SaddleOptions, Selection};
use crate::subproblem::ConvexSubproblem;
use crate::svm::{BiasMode, DualState};
use crate::trace::{Level, SolverTrace, TraceRow};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmOptions {
    /// Number of MM iterations `T`.
    pub iterations: usize,
    /// Stop once successive ramp objectives differ by less than `eps / 10`.
    pub early_stop: bool,
    pub feas_tol: f64,
    pub seed: u64,
    pub saddle: SaddleOptions,
}

impl Default for MmOptions {
    fn default() -> Self {
        MmOptions {
            iterations: 5,
            early_stop: false,
            feas_tol: 1e-6,
            seed: 0,
            saddle: SaddleOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmIterate {
    pub classifier: LinearClassifier,
    /// Ramp objective including `lambda/2 |w|^2`, without the canonical constant.
    pub objective: f64,
    /// Largest ramp constraint violation (negative when strictly feasible).
    pub max_violation: f64,
    /// Step fraction kept by the feasibility restoration (1 = full step).
    pub step: f64,
    pub multipliers: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmResult {
    pub classifier: LinearClassifier,
    pub iterates: Vec<MmIterate>,
    pub trace: SolverTrace,
}

/// Ramp objective (regularizer included, canonical constant excluded) and
/// per-constraint violations.
pub fn ramp_status(problem: &ConstrainedProblem, clf: &LinearClassifier) -> Result<(f64, Vec<f64>)> {
    let rates = all_rates(problem.datasets(), clf, RateKind::Ramp)?;
    let objective = evaluate_with_rates(problem.objective(), problem.datasets(), &rates) - problem.objective().constant()
        + 0.5 * problem.lambda() * clf.squared_norm();
    let violations = problem
        .constraints()
        .iter()
        .map(|c| evaluate_with_rates(c.lhs(), problem.datasets(), &rates) - c.bound())
        .collect();
    Ok((objective, violations))
}

fn max_violation(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn worst(v: &[f64]) -> (usize, f64) {
    v.iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, (i, x)| if x > a.1 { (i, x) } else { a })
}

/// Largest `theta in [0, 1]` such that the point `anchor + theta (candidate - anchor)`
/// keeps every bound constraint within `max(gamma_j, anchor value)` and the
/// bound objective within `eps` of the anchor's. Both conditions are convex
/// in `theta`, so the admissible set is an interval starting at 0.
fn restore(
    sub: &ConvexSubproblem<'_>,
    candidate: &LinearClassifier,
    eps: f64,
) -> (LinearClassifier, f64) {
    let anchor = sub.anchor();
    let base = sub.psi_parts(anchor);
    let limits: Vec<f64> = base.slopes.iter().map(|s| s.max(0.0)).collect();
    let objective_limit = base.base + eps;
    let ok = |clf: &LinearClassifier| {
        let p = sub.psi_parts(clf);
        p.base <= objective_limit && p.slopes.iter().zip(&limits).all(|(s, l)| s <= l)
    };
    if ok(candidate) {
        return (candidate.clone(), 1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(&anchor.lerp(candidate, mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (anchor.lerp(candidate, lo), lo)
}

pub fn majorize_minimize(problem: &ConstrainedProblem, init: &LinearClassifier, options: &MmOptions) -> Result<MmResult> {
    if options.iterations == 0 {
        return Err(Error::config("MM needs at least one iteration"));
    }
    let eps = options.saddle.eps;
    let mm_tol = eps + 1e-9;
    let mut trace = SolverTrace::new();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);

    let (objective, violations) = ramp_status(problem, init)?;
    let (j, worst_violation) = worst(&violations);
    if worst_violation > options.feas_tol {
        return Err(Error::Infeasible(InfeasibilityReport {
            constraint: j,
            violation: worst_violation,
            detail: "initial point violates a ramp constraint".into(),
        }));
    }
    let mut iterates = vec![MmIterate {
        classifier: init.clone(),
        objective,
        max_violation: max_violation(&violations),
        step: 1.0,
        multipliers: vec![0.0; problem.num_constraints()],
    }];
    push_mm_row(&mut trace, &iterates[0], problem.num_constraints());

    let mut state = DualState::zeros(problem.datasets().total_examples(), problem.dim());
    for t in 1..=options.iterations {
        trace.position.mm_iter = t;
        let anchor = iterates.last().unwrap().classifier.clone();
        let sub = ConvexSubproblem::new(problem, anchor)?;
        let saddle = match solve_saddle(&sub, &options.saddle, &mut state, &mut rng, &mut trace) {
            Ok(s) => s,
            Err(Error::Solver { message, .. }) => {
                return Err(Error::solver(
                    format!("MM iteration {t}: {message}"),
                    Some(iterates.last().unwrap().classifier.clone()),
                ));
            }
            Err(e) => return Err(e),
        };
        let (classifier, step) = restore(&sub, &saddle.classifier, eps);
        if step < 1.0 {
            log::debug!("MM iteration {t}: restoration kept {step:.6} of the step");
        }
        let (objective, violations) = ramp_status(problem, &classifier)?;
        let prev = iterates.last().unwrap().objective;
        if objective > prev + mm_tol {
            log::warn!("MM iteration {t}: ramp objective rose from {prev} to {objective}");
        }
        if saddle.selection == Selection::Averaged {
            log::debug!("MM iteration {t}: using the averaged saddle iterate");
        }
        let it = MmIterate {
            classifier,
            objective,
            max_violation: max_violation(&violations),
            step,
            multipliers: saddle.multipliers,
        };
        push_mm_row(&mut trace, &it, problem.num_constraints());
        iterates.push(it);
        if options.early_stop && (prev - objective).abs() < eps / 10.0 {
            break;
        }
    }
    Ok(MmResult {
        classifier: iterates.last().unwrap().classifier.clone(),
        iterates,
        trace,
    })
}

fn push_mm_row(trace: &mut SolverTrace, it: &MmIterate, m: usize) {
    let mut row = TraceRow::new(Level::Mm);
    row.m = m;
    row.cut_value = it.objective;
    row.violation = it.max_violation;
    row.eps = it.step;
    row.point = it.multipliers.clone();
    trace.push(row);
}

/// A zero-weight starting point whose bias is chosen to satisfy the ramp
/// constraints.
///
/// With `w = 0` every bias-using dataset has positive ramp rate
/// `p = ramp(-b)` and every bias-free one has rate 1/2, so each constraint
/// is affine in `p`. The feasible `p` closest to 1/2 is taken; when none
/// exists, the `p` minimizing the worst violation is reported.
pub fn find_initial_point(problem: &ConstrainedProblem, bias: BiasMode, feas_tol: f64) -> Result<LinearClassifier> {
    let zero = LinearClassifier::zeros(problem.dim());
    if problem.num_constraints() == 0 {
        return Ok(zero);
    }
    if bias == BiasMode::None {
        let (_, violations) = ramp_status(problem, &zero)?;
        let (j, v) = worst(&violations);
        if v > feas_tol {
            return Err(Error::Infeasible(InfeasibilityReport {
                constraint: j,
                violation: v,
                detail: "the zero classifier violates this constraint and the bias is fixed".into(),
            }));
        }
        return Ok(zero);
    }
    let datasets = problem.datasets();
    // violation_j(p) = slope_j * p + intercept_j
    let lines: Vec<Line> = problem
        .constraints()
        .iter()
        .map(|c| {
            let (mut slope, mut intercept) = (0.0, -c.bound());
            for t in c.lhs().terms() {
                let d = datasets.get(&t.dataset).expect("validated dataset id");
                if d.uses_bias() {
                    match t.polarity {
                        Polarity::Positive => slope += t.coefficient,
                        Polarity::Negative => {
                            slope -= t.coefficient;
                            intercept += t.coefficient;
                        }
                    }
                } else {
                    intercept += 0.5 * t.coefficient;
                }
            }
            Line { slope, intercept }
        })
        .collect();

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for l in &lines {
        // slope * p + intercept <= 0
        if l.slope > 0.0 {
            hi = hi.min(-l.intercept / l.slope);
        } else if l.slope < 0.0 {
            lo = lo.max(-l.intercept / l.slope);
        } else if l.intercept > 0.0 {
            lo = f64::INFINITY;
        }
    }
    let p = if lo <= hi {
        0.5_f64.clamp(lo, hi)
    } else {
        envelope::argmin(&envelope::upper_envelope(&lines, 0.0, 1.0)).0
    };
    let clf = zero.with_bias(0.5 - p);
    let (_, violations) = ramp_status(problem, &clf)?;
    let (j, v) = worst(&violations);
    if v > feas_tol {
        return Err(Error::Infeasible(InfeasibilityReport {
            constraint: j,
            violation: v,
            detail: format!("no bias makes the zero-weight classifier feasible (best b = {})", 0.5 - p),
        }));
    }
    Ok(clf)
}
