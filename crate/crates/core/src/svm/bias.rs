//! Cutting-plane minimization over the unregularized bias.
//!
//! Each SDCA solve at `b_s` yields a dual point whose value is affine in
//! `b`, so it gives a global lower line `l'_s + g'_s (b - b_s)` on
//! `min_w Psi(w, b, v)`. The maximum of those lines is the envelope `h'`.

use rand_chacha::ChaCha8Rng;

use crate::envelope::{self, Line, Vertices};
use crate::error::{Error, Result};
use crate::rates::LinearClassifier;
use crate::subproblem::ConvexSubproblem;
use crate::trace::{Level, SolverTrace, TraceRow};

use super::sdca::{sdca_optimize, DualState, SdcaOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasMode {
    /// `b` is optimized.
    Free,
    /// `b` is fixed at zero.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasChooser {
    Min,
    Centroid,
}

impl BiasChooser {
    pub fn as_str(self) -> &'static str {
        match self {
            BiasChooser::Min => "min",
            BiasChooser::Centroid => "centroid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmOptions {
    pub bias_mode: BiasMode,
    pub bias_chooser: BiasChooser,
    pub max_bias_iters: usize,
    pub sdca: SdcaOptions,
}

impl Default for SvmOptions {
    fn default() -> Self {
        SvmOptions {
            bias_mode: BiasMode::Free,
            bias_chooser: BiasChooser::Min,
            max_bias_iters: 500,
            sdca: SdcaOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasCut {
    pub b: f64,
    pub lower: f64,
    pub slope: f64,
    pub upper: f64,
}

/// Cuts over the interval `[lo, hi]`. Cut 0 is the initial flat lower
/// bound together with the initial upper bound `u'_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasCutStore {
    pub lo: f64,
    pub hi: f64,
    pub cuts: Vec<BiasCut>,
}

impl BiasCutStore {
    pub fn new(lo: f64, hi: f64, l0: f64, u0: f64) -> Self {
        BiasCutStore {
            lo,
            hi,
            cuts: vec![BiasCut {
                b: 0.0,
                lower: l0,
                slope: 0.0,
                upper: u0,
            }],
        }
    }

    pub fn envelope(&self) -> Vertices {
        let lines: Vec<Line> = self.cuts.iter().map(|c| Line::through(c.b, c.lower, c.slope)).collect();
        envelope::upper_envelope(&lines, self.lo, self.hi)
    }

    /// `L'_t = min_B h'_t`
    pub fn lower_bound(&self) -> f64 {
        envelope::argmin(&self.envelope()).1
    }

    /// `U'_t = min_s u'_s`
    pub fn upper_bound(&self) -> f64 {
        self.cuts.iter().map(|c| c.upper).fold(f64::INFINITY, f64::min)
    }
}

/// Minimizer of the envelope and half the current gap.
pub fn bias_cut_chooser_min(store: &BiasCutStore) -> (f64, f64) {
    let (b, lower) = envelope::argmin(&store.envelope());
    (b, (store.upper_bound() - lower) / 2.0)
}

/// Centroid of `{(b, z) : h'(b) <= z <= U'}`; returns `(b_t, eps'_t, area)`.
/// A degenerate region falls back to the interval midpoint and `fallback_eps`.
pub fn bias_cut_chooser_centroid(store: &BiasCutStore, fallback_eps: f64) -> (f64, f64, f64) {
    let upper = store.upper_bound();
    let region = envelope::region_below(&store.envelope(), upper);
    if region.area > 0.0 && region.cx.is_finite() {
        (region.cx, (upper - region.cz) / 2.0, region.area)
    } else {
        (0.5 * (store.lo + store.hi), fallback_eps, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmSolution {
    pub classifier: LinearClassifier,
    /// Certified lower bound on `min_{w,b} Psi(w, b, v)`.
    pub lower: f64,
    /// `Psi` at the returned classifier.
    pub upper: f64,
    pub iterations: usize,
}

/// Approximately minimizes `Psi(., ., v)` over `w` and `b` to within `eps`,
/// returning the classifier and a lower bound `l` with `upper - l <= eps`.
/// `u0_tilde` must upper-bound the minimum.
#[allow(clippy::too_many_arguments)]
pub fn svm_optimize(
    sub: &ConvexSubproblem<'_>,
    v: &[f64],
    u0_tilde: f64,
    eps: f64,
    options: &SvmOptions,
    state: &mut DualState,
    rng: &mut ChaCha8Rng,
    trace: &mut SolverTrace,
) -> Result<SvmSolution> {
    if !(eps > 0.0) {
        return Err(Error::config(format!("SVM tolerance must be positive, got {eps}")));
    }
    let coeffs = sub.coefficients(v);
    let constant = coeffs.constant(v);
    state.clamp_to(sub, &coeffs);
    trace.counters.svm_calls += 1;

    let mut sdca_at = |b: f64, gap: f64, state: &mut DualState, trace: &mut SolverTrace| -> Result<(f64, f64)> {
        let report = sdca_optimize(sub, &coeffs, b, gap, state, &options.sdca, rng)?;
        trace.counters.sdca_calls += 1;
        trace.counters.sdca_epochs += report.epochs;
        let mut row = TraceRow::new(Level::Sdca);
        row.m = sub.m();
        row.epochs = report.epochs;
        row.target_eps = gap;
        row.lower = report.dual + constant;
        row.upper = report.primal + constant;
        row.point = vec![b];
        row.calls = report.epochs;
        trace.push(row);
        Ok((report.primal + constant, report.dual + constant))
    };

    if options.bias_mode == BiasMode::None {
        trace.position.bias_iter = 1;
        let (upper, lower) = sdca_at(0.0, eps, state, trace)?;
        return Ok(SvmSolution {
            classifier: LinearClassifier::new(state.w.clone(), 0.0)?,
            lower,
            upper,
            iterations: 1,
        });
    }

    let radius = sub.bias_radius(v);
    let l0 = constant;
    let u0 = match options.bias_chooser {
        BiasChooser::Centroid => 2.0 * u0_tilde - l0,
        BiasChooser::Min => u0_tilde,
    };
    let mut store = BiasCutStore::new(-radius, radius, l0, u0);
    let mut best: Option<(f64, LinearClassifier)> = None;
    for t in 1.. {
        trace.position.bias_iter = t;
        let lower = store.lower_bound();
        let upper = store.upper_bound();
        let mut row = TraceRow::new(Level::Bias);
        row.m = sub.m();
        row.chooser = options.bias_chooser.as_str().into();
        row.target_eps = eps;
        row.lower = lower;
        row.upper = upper;
        if let Some((best_upper, clf)) = &best {
            // U' may still be the initial u'_0, which has no iterate behind it
            if *best_upper - lower <= eps {
                trace.push(row);
                return Ok(SvmSolution {
                    classifier: clf.clone(),
                    lower,
                    upper: *best_upper,
                    iterations: t - 1,
                });
            }
        }
        if t > options.max_bias_iters {
            trace.push(row);
            return Err(Error::solver(
                format!("bias search exceeded {} iterations (gap {:.3e})", options.max_bias_iters, upper - lower),
                best.map(|b| b.1),
            ));
        }
        let (b, eps_t, area) = match options.bias_chooser {
            BiasChooser::Min => {
                let (b, e) = bias_cut_chooser_min(&store);
                (b, e, f64::NAN)
            }
            BiasChooser::Centroid => bias_cut_chooser_centroid(&store, eps / 2.0),
        };
        // the gap may already be closed by cut 0 alone; still need an iterate
        let eps_t = if eps_t > 0.0 { eps_t } else { eps / 2.0 };
        let (u, l) = sdca_at(b, eps_t / 2.0, state, trace)?;
        let slope = state.bias_slope(sub);
        row.eps = eps_t;
        row.point = vec![b];
        row.cut_value = u;
        row.cut_lower = l;
        row.area = area;
        row.calls = 1;
        trace.push(row);
        store.cuts.push(BiasCut {
            b,
            lower: l,
            slope,
            upper: u,
        });
        if best.as_ref().is_none_or(|(bu, _)| u < *bu) {
            best = Some((u, LinearClassifier::new(state.w.clone(), b)?));
        }
    }
    unreachable!()
}
