//! Stochastic dual coordinate ascent for the pooled weighted hinge SVM at a
//! fixed bias:
//!
//! ```text
//! P(w)  = (1/n) sum l_x(<w,x> - b_x) + (lambda/2)|w|^2
//! D(xi) = (1/n) sum (-l*_x(xi_x) - xi_x b_x) - (lambda/2)|w(xi)|^2
//! w(xi) = -(1/(lambda n)) sum xi_x x,     -a_minus <= xi_x <= a_plus
//! ```
//!
//! where `b_x` is `b` for ordinary examples and 0 for bias-free ones.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::pairwise_sum;
use crate::subproblem::{per_example_loss, ConvexSubproblem, ExampleCoefficients};

/// Fenchel conjugate of `per_example_loss`, valid on `[-a_minus, a_plus]`.
pub fn conjugate(xi: f64, a_plus: f64, a_minus: f64) -> f64 {
    0.5 * (xi - a_plus + a_minus).abs() - 0.5 * (a_plus + a_minus)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub xi: Vec<f64>,
    pub w: Vec<f64>,
}

impl DualState {
    pub fn zeros(n: usize, dim: usize) -> Self {
        DualState {
            xi: vec![0.0; n],
            w: vec![0.0; dim],
        }
    }

    /// Projects `xi` into the boxes of `coeffs`, rebuilding `w` if anything moved.
    pub fn clamp_to(&mut self, sub: &ConvexSubproblem<'_>, coeffs: &ExampleCoefficients) {
        let mut moved = false;
        for (i, xi) in self.xi.iter_mut().enumerate() {
            let c = xi.clamp(-coeffs.a_minus[i], coeffs.a_plus[i]);
            if c != *xi {
                *xi = c;
                moved = true;
            }
        }
        if moved {
            self.w = self.recomputed_w(sub);
        }
    }

    /// `w(xi)` computed from scratch.
    pub fn recomputed_w(&self, sub: &ConvexSubproblem<'_>) -> Vec<f64> {
        let mut w = vec![0.0; sub.dim()];
        let scale = -1.0 / (sub.lambda() * sub.n() as f64);
        for (e, &xi) in sub.examples().iter().zip(&self.xi) {
            if xi != 0.0 {
                e.x.axpy(scale * xi, &mut w);
            }
        }
        w
    }

    /// `-(1/n) sum xi_x` over examples that use the bias: `dD/db`.
    pub fn bias_slope(&self, sub: &ConvexSubproblem<'_>) -> f64 {
        let vals: Vec<f64> = sub
            .examples()
            .iter()
            .zip(&self.xi)
            .filter(|(e, _)| e.uses_bias)
            .map(|(_, &xi)| xi)
            .collect();
        -pairwise_sum(&vals) / sub.n() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdcaOptions {
    pub max_epochs: usize,
}

impl Default for SdcaOptions {
    fn default() -> Self {
        SdcaOptions { max_epochs: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdcaReport {
    pub primal: f64,
    pub dual: f64,
    pub epochs: usize,
}

/// `(P(w), D(xi))` for the current state at bias `b`.
pub fn objectives(sub: &ConvexSubproblem<'_>, coeffs: &ExampleCoefficients, b: f64, state: &DualState) -> (f64, f64) {
    let n = sub.n() as f64;
    let mut losses = Vec::with_capacity(sub.n());
    let mut duals = Vec::with_capacity(sub.n());
    for (i, e) in sub.examples().iter().enumerate() {
        let (ap, am) = (coeffs.a_plus[i], coeffs.a_minus[i]);
        let bx = if e.uses_bias { b } else { 0.0 };
        if ap != 0.0 || am != 0.0 {
            losses.push(per_example_loss(e.x.dot(&state.w) - bx, ap, am));
        }
        let xi = state.xi[i];
        if xi != 0.0 || ap != 0.0 || am != 0.0 {
            duals.push(-conjugate(xi, ap, am) - xi * bx);
        }
    }
    let reg = 0.5 * sub.lambda() * state.w.iter().map(|v| v * v).sum::<f64>();
    (pairwise_sum(&losses) / n + reg, pairwise_sum(&duals) / n - reg)
}

/// Runs epochs (a fresh random permutation each) until the duality gap is
/// at most `eps_gap`. The gap is checked before the first epoch and after
/// every epoch.
pub fn sdca_optimize(
    sub: &ConvexSubproblem<'_>,
    coeffs: &ExampleCoefficients,
    b: f64,
    eps_gap: f64,
    state: &mut DualState,
    options: &SdcaOptions,
    rng: &mut ChaCha8Rng,
) -> Result<SdcaReport> {
    if !(eps_gap > 0.0) {
        return Err(Error::config(format!("SDCA gap tolerance must be positive, got {eps_gap}")));
    }
    let n = sub.n();
    let lambda_n = sub.lambda() * n as f64;
    let active: Vec<usize> = (0..n)
        .filter(|&i| coeffs.a_plus[i] != 0.0 || coeffs.a_minus[i] != 0.0)
        .collect();
    let mut order = active.clone();
    let mut epochs = 0;
    let mut current = objectives(sub, coeffs, b, state);
    let (mut next_jump, mut jump_wait) = (1, 1);
    loop {
        let (primal, dual) = current;
        let scale = 1.0 + primal.abs() + dual.abs();
        if primal - dual < -1e-9 * scale {
            return Err(Error::solver(
                format!("weak duality violated: primal {primal} < dual {dual}"),
                None,
            ));
        }
        if primal - dual <= eps_gap.max(1e-14 * scale) {
            return Ok(SdcaReport { primal, dual, epochs });
        }
        if epochs >= options.max_epochs {
            return Err(Error::solver(
                format!(
                    "SDCA reached {} epochs with gap {:.3e} > {:.3e}",
                    epochs,
                    primal - dual,
                    eps_gap
                ),
                None,
            ));
        }
        let xi_start: Vec<f64> = active.iter().map(|&i| state.xi[i]).collect();
        let w_start = state.w.clone();
        order.shuffle(rng);
        for &i in &order {
            let e = &sub.examples()[i];
            let (ap, am) = (coeffs.a_plus[i], coeffs.a_minus[i]);
            let bx = if e.uses_bias { b } else { 0.0 };
            let z = e.x.dot(&state.w) - bx;
            let xi0 = state.xi[i];
            let q = e.squared_norm / (2.0 * lambda_n);
            let kink = ap - am;
            let gain = |t: f64| -conjugate(t, ap, am) + (t - xi0) * z - q * (t - xi0) * (t - xi0);
            let mut best = xi0;
            let mut best_gain = gain(xi0);
            let mut consider = |t: f64| {
                let g = gain(t);
                if g > best_gain {
                    best = t;
                    best_gain = g;
                }
            };
            if q > 0.0 {
                consider((xi0 + (z + 0.5) / (2.0 * q)).clamp(-am, kink));
                consider((xi0 + (z - 0.5) / (2.0 * q)).clamp(kink, ap));
            }
            consider(-am);
            consider(kink);
            consider(ap);
            let delta = best - xi0;
            if delta != 0.0 {
                state.xi[i] = best;
                e.x.axpy(-delta / lambda_n, &mut state.w);
            }
        }
        current = objectives(sub, coeffs, b, state);
        epochs += 1;
        // An extra evaluation is only worth it when the epoch made little
        // progress; rejected jumps back off exponentially.
        let stalled = current.0 - current.1 > 0.5 * (primal - dual);
        if stalled && epochs >= next_jump {
            let mut jumped = state.clone();
            let mut accepted = false;
            if extrapolate(sub, coeffs, b, &active, &xi_start, &w_start, &mut jumped) {
                let candidate = objectives(sub, coeffs, b, &jumped);
                if candidate.0 - candidate.1 < current.0 - current.1 {
                    *state = jumped;
                    current = candidate;
                    accepted = true;
                }
            }
            jump_wait = if accepted { 1 } else { 2 * jump_wait };
            next_jump = epochs + jump_wait;
        }
    }
}

/// Exact dual line search along the displacement of the last epoch; the
/// caller keeps the result only if it shrinks the duality gap.
///
/// Coordinate steps zigzag slowly when examples are collinear; the dual is
/// concave piecewise quadratic along any line, so its maximizer over the box
/// is found by walking the kinks in order.
fn extrapolate(
    sub: &ConvexSubproblem<'_>,
    coeffs: &ExampleCoefficients,
    b: f64,
    active: &[usize],
    xi_start: &[f64],
    w_start: &[f64],
    state: &mut DualState,
) -> bool {
    let lambda_n = sub.lambda() * sub.n() as f64;
    let dw: Vec<f64> = state.w.iter().zip(w_start).map(|(a, b)| a - b).collect();
    let curvature = lambda_n * dw.iter().map(|v| v * v).sum::<f64>();
    let mut slope = -lambda_n * state.w.iter().zip(&dw).map(|(a, b)| a * b).sum::<f64>();
    let mut s_max = f64::INFINITY;
    let mut kinks = Vec::new();
    let mut moved = false;
    for (k, &i) in active.iter().enumerate() {
        let xi = state.xi[i];
        let d = xi - xi_start[k];
        if d == 0.0 {
            continue;
        }
        moved = true;
        let (ap, am) = (coeffs.a_plus[i], coeffs.a_minus[i]);
        let kink = ap - am;
        let bx = if sub.examples()[i].uses_bias { b } else { 0.0 };
        let below = xi < kink || (xi == kink && d < 0.0);
        slope += d * (if below { 0.5 } else { -0.5 } - bx);
        s_max = s_max.min(if d > 0.0 { (ap - xi) / d } else { (-am - xi) / d });
        let at = (kink - xi) / d;
        if at > 0.0 {
            kinks.push((at, d.abs()));
        }
    }
    if !moved || !(s_max > 0.0) || slope <= 0.0 {
        return false;
    }
    kinks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut step = s_max;
    let mut prev = 0.0;
    for (at, drop) in kinks.into_iter().chain(std::iter::once((s_max, 0.0))) {
        let at = at.min(s_max);
        if slope - curvature * at <= 0.0 {
            step = if curvature > 0.0 { (slope / curvature).clamp(prev, at) } else { prev };
            break;
        }
        if at >= s_max {
            break;
        }
        slope -= drop;
        prev = at;
    }
    if !(step > 0.0 && step.is_finite()) {
        return false;
    }
    let mut clamped = false;
    for (k, &i) in active.iter().enumerate() {
        let d = state.xi[i] - xi_start[k];
        if d != 0.0 {
            let (ap, am) = (coeffs.a_plus[i], coeffs.a_minus[i]);
            let raw = state.xi[i] + step * d;
            state.xi[i] = raw.clamp(-am, ap);
            clamped |= state.xi[i] != raw;
        }
    }
    if clamped {
        state.w = state.recomputed_w(sub);
    } else {
        for (w, d) in state.w.iter_mut().zip(&dw) {
            *w += step * d;
        }
    }
    true
}
