//! Cutting-plane maximization of the dual function
//! `F(v) = min_{w,b} Psi(w, b, v)` over the multiplier box `[0, V]^m`.
//!
//! Every SVM solve at `v_t` returns a classifier whose `Psi` is affine in
//! `v`; that affine function upper-bounds `F` everywhere and is the cut.
//! The SVM's certified lower bound `l_t` feeds the running lower bound.

use rand_chacha::ChaCha8Rng;

use crate::envelope::{self, Line};
use crate::error::{Error, Result};
use crate::lp;
use crate::rates::LinearClassifier;
use crate::subproblem::{ConvexSubproblem, PsiParts};
use crate::svm::{svm_optimize, DualState, SvmOptions};
use crate::trace::{Level, SolverTrace, TraceRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutChooser {
    /// Maximizer of the envelope, `eps_t = (U_t - L_t) / 2`.
    Max,
    /// Centroid of the hypograph above `L_t`; one constraint only.
    Centroid,
}

impl CutChooser {
    pub fn as_str(self) -> &'static str {
        match self {
            CutChooser::Max => "max",
            CutChooser::Centroid => "centroid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleOptions {
    pub eps: f64,
    pub chooser: CutChooser,
    pub max_iters: usize,
    pub svm: SvmOptions,
}

impl Default for SaddleOptions {
    fn default() -> Self {
        SaddleOptions {
            eps: 1e-3,
            chooser: CutChooser::Max,
            max_iters: 1000,
            svm: SvmOptions::default(),
        }
    }
}

/// `h(v) <= value + <gradient, v - point>` with a certified `lower <= F(point)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub point: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub lower: f64,
    pub classifier: LinearClassifier,
    /// Exact `Psi(classifier, .)`; differs from the cut only for cut 0.
    pub parts: PsiParts,
}

impl Cut {
    pub fn line_value(&self, v: &[f64]) -> f64 {
        self.value
            + self
                .gradient
                .iter()
                .zip(v.iter().zip(&self.point))
                .map(|(g, (a, b))| g * (a - b))
                .sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutStore {
    pub cap: f64,
    pub cuts: Vec<Cut>,
}

impl CutStore {
    pub fn m(&self) -> usize {
        self.cuts[0].point.len()
    }

    /// `L_t = max_s l_s`; lowest index wins ties.
    pub fn lower_bound(&self) -> (usize, f64) {
        let mut best = (0, self.cuts[0].lower);
        for (i, c) in self.cuts.iter().enumerate().skip(1) {
            if c.lower > best.1 {
                best = (i, c.lower);
            }
        }
        best
    }

    /// `h_t(v) = min_s (u_s + <g_s, v - v_s>)`
    pub fn envelope_value(&self, v: &[f64]) -> f64 {
        self.cuts.iter().map(|c| c.line_value(v)).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeMax {
    pub upper: f64,
    pub point: Vec<f64>,
    /// LP dual weight of each cut; they sum to one.
    pub weights: Vec<f64>,
    pub pivots: usize,
}

/// `U_t = max_{v in [0,V]^m} h_t(v)` by linear programming over `(v, z)`.
pub fn envelope_max(store: &CutStore) -> Result<EnvelopeMax> {
    let m = store.m();
    // shift z so that z' = z - z_low >= 0 and the slack basis is feasible
    let offsets: Vec<f64> = store
        .cuts
        .iter()
        .map(|c| c.value - c.gradient.iter().zip(&c.point).map(|(g, p)| g * p).sum::<f64>())
        .collect();
    let z_low = offsets.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    let mut a = Vec::with_capacity(store.cuts.len() + m);
    let mut b = Vec::with_capacity(store.cuts.len() + m);
    for (c, off) in store.cuts.iter().zip(&offsets) {
        let mut row: Vec<f64> = c.gradient.iter().map(|g| -g).collect();
        row.push(1.0);
        a.push(row);
        b.push(off - z_low);
    }
    for j in 0..m {
        let mut row = vec![0.0; m + 1];
        row[j] = 1.0;
        a.push(row);
        b.push(store.cap);
    }
    let mut c = vec![0.0; m + 1];
    c[m] = 1.0;
    let sol = lp::maximize(&c, &a, &b)?;
    let point: Vec<f64> = sol.x[..m].iter().map(|v| v.clamp(0.0, store.cap)).collect();
    let mut weights: Vec<f64> = sol.duals[..store.cuts.len()].to_vec();
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter_mut().for_each(|w| *w /= total);
    }
    Ok(EnvelopeMax {
        upper: sol.x[m] + z_low,
        point,
        weights,
        pivots: sol.pivots,
    })
}

/// Envelope maximizer and half the gap.
pub fn cut_chooser_max(store: &CutStore) -> Result<(Vec<f64>, f64)> {
    let em = envelope_max(store)?;
    let (_, lower) = store.lower_bound();
    Ok((em.point, (em.upper - lower) / 2.0))
}

/// Vertices of `h_t` over `[0, V]` for a single multiplier.
pub fn envelope_1d(store: &CutStore) -> envelope::Vertices {
    let lines: Vec<Line> = store
        .cuts
        .iter()
        .map(|c| Line::through(c.point[0], c.value, c.gradient[0]))
        .collect();
    envelope::lower_envelope(&lines, 0.0, store.cap)
}

/// Area of `{(v, z) : L <= z <= h(v)}` for a single multiplier.
pub fn hypograph_area(store: &CutStore, level: f64) -> f64 {
    envelope::region_above(&envelope_1d(store), level).area
}

/// Centroid `(v_t, z_t)` of `{(v, z) : L_t <= z <= h_t(v)}` and
/// `eps_t = (z_t - L_t) / 2`, returned with the region's area.
pub fn cut_chooser_centroid_1d(store: &CutStore) -> Result<(Vec<f64>, f64, f64)> {
    if store.m() != 1 {
        return Err(Error::config(format!(
            "the centroid cut chooser supports exactly one constraint, got {}",
            store.m()
        )));
    }
    let (_, lower) = store.lower_bound();
    let region = envelope::region_above(&envelope_1d(store), lower);
    if !(region.area > 0.0) {
        return Err(Error::solver("centroid region is empty", None));
    }
    Ok((vec![region.cx], (region.cz - lower) / 2.0, region.area))
}

/// `Psi(w, b, v; w', b')`
pub fn dual_psi(clf: &LinearClassifier, v: &[f64], sub: &ConvexSubproblem<'_>) -> f64 {
    sub.psi(clf, v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// The iterate with the largest lower bound, as returned by the plain method.
    MaxLower,
    /// LP-dual-weighted average of the cut classifiers.
    Averaged,
    /// Unconstrained problem: a single SVM solve.
    Direct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleResult {
    pub classifier: LinearClassifier,
    pub multipliers: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    pub selection: Selection,
    /// Constraints whose multiplier sits at the cap `V`.
    pub capped: Vec<bool>,
}

/// Weighted average of cut classifiers.
fn average(store: &CutStore, weights: &[f64]) -> Result<LinearClassifier> {
    let dim = store.cuts[0].classifier.dim();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    for (c, &mu) in store.cuts.iter().zip(weights) {
        if mu > 0.0 {
            for (acc, x) in w.iter_mut().zip(c.classifier.weights()) {
                *acc += mu * x;
            }
            b += mu * c.classifier.bias();
        }
    }
    LinearClassifier::new(w, b)
}

/// Solves the convex subproblem to within `options.eps` on the dual.
pub fn solve_saddle(
    sub: &ConvexSubproblem<'_>,
    options: &SaddleOptions,
    state: &mut DualState,
    rng: &mut ChaCha8Rng,
    trace: &mut SolverTrace,
) -> Result<SaddleResult> {
    let m = sub.m();
    let cap = sub.problem().multiplier_cap();
    if !(options.eps > 0.0) {
        return Err(Error::config(format!("tolerance must be positive, got {}", options.eps)));
    }
    if options.chooser == CutChooser::Centroid && m > 1 {
        return Err(Error::config(format!(
            "the centroid cut chooser supports exactly one constraint, got {m}"
        )));
    }
    let anchor_parts = sub.psi_parts(sub.anchor());

    if m == 0 {
        trace.position.saddle_iter = 0;
        let svm = svm_optimize(sub, &[], anchor_parts.base, options.eps, &options.svm, state, rng, trace)?;
        return Ok(SaddleResult {
            classifier: svm.classifier,
            multipliers: Vec::new(),
            lower: svm.lower,
            upper: svm.upper,
            iterations: 1,
            selection: Selection::Direct,
            capped: Vec::new(),
        });
    }

    let zeros = vec![0.0; m];
    let u0 = anchor_parts.base + anchor_parts.slopes.iter().map(|g| cap * g.max(0.0)).sum::<f64>();
    let l0 = sub.coefficients(&zeros).offset;
    let mut store = CutStore {
        cap,
        cuts: vec![Cut {
            point: zeros.clone(),
            value: u0,
            gradient: zeros,
            lower: l0,
            classifier: sub.anchor().clone(),
            parts: anchor_parts,
        }],
    };

    for t in 1.. {
        trace.position.saddle_iter = t;
        trace.position.bias_iter = 0;
        let em = envelope_max(&store)?;
        trace.counters.lp_pivots += em.pivots;
        let (best_idx, lower) = store.lower_bound();
        let upper = em.upper;
        let mut row = TraceRow::new(Level::Saddle);
        row.m = m;
        row.chooser = options.chooser.as_str().into();
        row.target_eps = options.eps;
        row.lower = lower;
        row.upper = upper;
        if m == 1 {
            row.area = hypograph_area(&store, lower);
        }

        if upper - lower <= options.eps {
            trace.push(row);
            return select(&store, &em, best_idx, lower, upper, t - 1);
        }
        if t > options.max_iters {
            trace.push(row);
            let best = average(&store, &em.weights).ok();
            return Err(Error::solver(
                format!(
                    "multiplier search exceeded {} iterations (gap {:.3e})",
                    options.max_iters,
                    upper - lower
                ),
                best,
            ));
        }

        let (v, eps_t) = match options.chooser {
            CutChooser::Max => {
                let (_, lower) = store.lower_bound();
                (em.point.clone(), (upper - lower) / 2.0)
            }
            CutChooser::Centroid => {
                let (v, e, _) = cut_chooser_centroid_1d(&store)?;
                (v, e)
            }
        };
        let h_v = store.envelope_value(&v);
        let svm = svm_optimize(sub, &v, h_v, eps_t, &options.svm, state, rng, trace)?;
        let parts = sub.psi_parts(&svm.classifier);
        let value = parts.at(&v);
        row.eps = eps_t;
        row.point = v.clone();
        row.cut_value = value;
        row.cut_lower = svm.lower;
        row.calls = svm.iterations;
        trace.push(row);
        store.cuts.push(Cut {
            point: v,
            value,
            gradient: parts.slopes.clone(),
            lower: svm.lower,
            classifier: svm.classifier,
            parts,
        });
    }
    unreachable!()
}

fn select(
    store: &CutStore,
    em: &EnvelopeMax,
    best_idx: usize,
    lower: f64,
    upper: f64,
    iterations: usize,
) -> Result<SaddleResult> {
    let cap = store.cap;
    let best = &store.cuts[best_idx];
    let scale = 1.0 + upper.abs();
    let feasible = best.parts.slopes.iter().all(|&g| g <= 1e-12);
    let (classifier, multipliers, selection) = if feasible && best.parts.base <= upper + 1e-12 * scale {
        (best.classifier.clone(), best.point.clone(), Selection::MaxLower)
    } else {
        (average(store, &em.weights)?, em.point.clone(), Selection::Averaged)
    };
    let capped: Vec<bool> = multipliers.iter().map(|&v| v >= cap * (1.0 - 1e-9)).collect();
    if capped.iter().any(|&c| c) {
        log::warn!("multiplier cap V = {cap} is binding; a constraint may be infeasible or nearly so");
    }
    Ok(SaddleResult {
        classifier,
        multipliers,
        lower,
        upper,
        iterations,
        selection,
        capped,
    })
}
