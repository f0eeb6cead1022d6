//! Generalization diagnostics and trace audits.
//!
//! The formulas bound the gap between training and expected rates of the
//! randomized classifier. They assume the returned solution minimizes `|b|`
//! among optima, which the solvers do not enforce, so treat the numbers as
//! an upper-bound heuristic.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::ConstrainedProblem;
use crate::trace::{Level, SolverTrace, TraceRow};

/// `B = sum_i (alpha_i + beta_i + V sum_j (alpha_ji + beta_ji))`.
pub fn coefficient_sum_b(problem: &ConstrainedProblem) -> f64 {
    let table = problem.coefficient_table();
    let cap = problem.multiplier_cap();
    let objective: f64 = table.objective.iter().map(|(a, b)| a + b).sum();
    let constraints: f64 = table
        .constraints
        .iter()
        .flat_map(|row| row.iter().map(|(a, b)| a + b))
        .sum();
    objective + cap * constraints
}

/// `1/(2 sqrt n) + 2 X^2 B / (lambda sqrt n)`.
pub fn rademacher_bound(problem: &ConstrainedProblem, x_max: f64, n: usize) -> Result<f64> {
    rademacher_from_parts(coefficient_sum_b(problem), x_max, problem.lambda(), n)
}

pub fn rademacher_from_parts(b: f64, x_max: f64, lambda: f64, n: usize) -> Result<f64> {
    if !(x_max > 0.0) || n == 0 {
        return Err(Error::domain(format!("need X > 0 and n > 0, got X = {x_max}, n = {n}")));
    }
    let sqrt_n = (n as f64).sqrt();
    Ok(0.5 / sqrt_n + 2.0 * x_max * x_max * b / (lambda * sqrt_n))
}

/// `E = 1 + 4 X^2 B / lambda + sqrt(8 ln(4k / delta))`.
pub fn generalization_e(problem: &ConstrainedProblem, x_max: f64, delta: f64, k: usize) -> Result<f64> {
    e_from_parts(coefficient_sum_b(problem), x_max, problem.lambda(), delta, k)
}

pub fn e_from_parts(b: f64, x_max: f64, lambda: f64, delta: f64, k: usize) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    if k == 0 {
        return Err(Error::domain("need at least one dataset"));
    }
    Ok(1.0 + 4.0 * x_max * x_max * b / lambda + (8.0 * (4.0 * k as f64 / delta).ln()).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizationReport {
    pub x_max: f64,
    pub b_coeff: f64,
    pub rademacher_bound: f64,
    pub e_constant: f64,
    pub delta: f64,
    /// `E / sqrt(n_i)` per nonempty dataset.
    pub slacks: Vec<(String, f64)>,
    /// `E sum_i (alpha_ji + beta_ji) / sqrt(n_i)` per constraint.
    pub constraint_slacks: Vec<f64>,
}

/// Diagnostics with `X` taken from the training data and `n` the pooled size.
pub fn generalization_report(problem: &ConstrainedProblem, delta: f64) -> Result<GeneralizationReport> {
    let datasets = problem.datasets();
    let x_max = datasets.max_norm().max(f64::MIN_POSITIVE);
    let b_coeff = coefficient_sum_b(problem);
    let rademacher = rademacher_from_parts(b_coeff, x_max, problem.lambda(), datasets.total_examples())?;
    let e = e_from_parts(b_coeff, x_max, problem.lambda(), delta, datasets.len())?;
    let slacks = datasets
        .iter()
        .map(|d| (d.id().to_string(), e / (d.len() as f64).sqrt()))
        .collect::<Vec<_>>();
    let table = problem.coefficient_table();
    let constraint_slacks = table
        .constraints
        .iter()
        .map(|row| {
            row.iter()
                .zip(&slacks)
                .map(|((a, b), (_, s))| (a + b) * s)
                .sum()
        })
        .collect();
    Ok(GeneralizationReport {
        x_max,
        b_coeff,
        rademacher_bound: rademacher,
        e_constant: e,
        delta,
        slacks,
        constraint_slacks,
    })
}

impl fmt::Display for GeneralizationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "x_max = {:?}", self.x_max)?;
        writeln!(f, "b_coeff = {:?}", self.b_coeff)?;
        writeln!(f, "rademacher_bound = {:?}", self.rademacher_bound)?;
        writeln!(f, "e_constant = {:?}", self.e_constant)?;
        writeln!(f, "delta = {:?}", self.delta)?;
        for (id, s) in &self.slacks {
            writeln!(f, "slack.{id} = {s:?}")?;
        }
        for (j, s) in self.constraint_slacks.iter().enumerate() {
            writeln!(f, "constraint_slack.{j} = {s:?}")?;
        }
        Ok(())
    }
}

/// Relative slack allowed in the audited inequalities.
pub const AUDIT_TOL: f64 = 1e-9;

pub const CHECK_SADDLE_FLOOR: &str = "multiplier centroid eps floor";
pub const CHECK_BIAS_FLOOR: &str = "bias centroid eps floor";
pub const CHECK_AREA: &str = "hypograph area shrink";

#[derive(Debug, Clone, PartialEq)]
pub struct AuditFailure {
    pub level: Level,
    pub mm_iter: usize,
    pub saddle_iter: usize,
    pub bias_iter: usize,
    pub check: &'static str,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub checks: usize,
    pub failures: Vec<AuditFailure>,
    pub mm_rows: usize,
    pub saddle_rows: usize,
    pub bias_rows: usize,
    pub sdca_calls: usize,
    pub sdca_epochs: usize,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Turns a failed audit into a solver error listing the first failures.
    pub fn ensure(&self) -> Result<()> {
        if self.passed() {
            return Ok(());
        }
        let listed: Vec<String> = self.failures.iter().take(5).map(|f| f.to_string()).collect();
        Err(Error::solver(
            format!("trace audit failed {} check(s): {}", self.failures.len(), listed.join("; ")),
            None,
        ))
    }
}

impl fmt::Display for AuditFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} at mm {} saddle {} bias {}: {} ({})",
            self.level.as_str(),
            self.mm_iter,
            self.saddle_iter,
            self.bias_iter,
            self.check,
            self.detail
        )
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "status = {}", if self.passed() { "pass" } else { "fail" })?;
        writeln!(f, "checks = {}", self.checks)?;
        writeln!(f, "mm_rows = {}", self.mm_rows)?;
        writeln!(f, "saddle_rows = {}", self.saddle_rows)?;
        writeln!(f, "bias_rows = {}", self.bias_rows)?;
        writeln!(f, "sdca_calls = {}", self.sdca_calls)?;
        writeln!(f, "sdca_epochs = {}", self.sdca_epochs)?;
        for fail in &self.failures {
            writeln!(f, "failure = {fail}")?;
        }
        Ok(())
    }
}

struct Auditor {
    report: AuditReport,
}

impl Auditor {
    fn check(&mut self, row: &TraceRow, ok: bool, check: &'static str, detail: impl FnOnce() -> String) {
        self.report.checks += 1;
        if !ok {
            self.report.failures.push(AuditFailure {
                level: row.level,
                mm_iter: row.mm_iter,
                saddle_iter: row.saddle_iter,
                bias_iter: row.bias_iter,
                check,
                detail: detail(),
            });
        }
    }

    /// `a <= b` up to the relative audit tolerance.
    fn le(a: f64, b: f64) -> bool {
        a <= b + AUDIT_TOL * (1.0 + a.abs().max(b.abs()))
    }

    /// Checks one cutting-plane loop (rows in order).
    fn cutting_plane(
        &mut self,
        rows: &[&TraceRow],
        floor_check: &'static str,
        floor_divisor: impl Fn(&TraceRow) -> f64,
        area_shrink: bool,
    ) {
        let shrink = 1.0 - 1.0 / (2.0 * std::f64::consts::E);
        for (i, r) in rows.iter().enumerate() {
            self.check(r, Self::le(r.lower, r.upper), "lower <= upper", || {
                format!("L = {:?}, U = {:?}", r.lower, r.upper)
            });
            if i > 0 {
                let p = rows[i - 1];
                self.check(r, Self::le(p.lower, r.lower), "lower bound nondecreasing", || {
                    format!("{:?} -> {:?}", p.lower, r.lower)
                });
                self.check(r, Self::le(r.upper, p.upper), "upper bound nonincreasing", || {
                    format!("{:?} -> {:?}", p.upper, r.upper)
                });
            }
            if r.is_final() {
                self.check(r, Self::le(r.upper - r.lower, r.target_eps), "terminated within tolerance", || {
                    format!("gap {:?} > eps {:?}", r.upper - r.lower, r.target_eps)
                });
                continue;
            }
            self.check(r, Self::le(r.cut_value - r.cut_lower, r.eps), "inner solve within eps_t", || {
                format!("u - l = {:?} > eps_t {:?}", r.cut_value - r.cut_lower, r.eps)
            });
            if r.chooser == "centroid" && r.area > 0.0 {
                let d = floor_divisor(r);
                self.check(r, Self::le((r.upper - r.lower) / d, r.eps), floor_check, || {
                    format!("eps_t = {:?} < (U - L)/{d:.6} = {:?}", r.eps, (r.upper - r.lower) / d)
                });
                self.check(r, Self::le(r.target_eps / d, r.eps), floor_check, || {
                    format!("eps_t = {:?} < eps/{d:.6} = {:?}", r.eps, r.target_eps / d)
                });
                if area_shrink {
                    if let Some(next) = rows.get(i + 1) {
                        if next.area.is_finite() {
                            self.check(next, Self::le(next.area, shrink * r.area), CHECK_AREA, || {
                                format!("{:?} -> {:?}, ratio {:?}", r.area, next.area, next.area / r.area)
                            });
                        }
                    }
                }
            }
        }
    }
}

/// Verifies the cutting-plane inequalities recorded in a trace.
///
/// Per saddle solve (keyed by MM iteration) and per bias solve (keyed by MM
/// and saddle iteration): `L <= U`, `L` nondecreasing, `U` nonincreasing,
/// inner solves within their `eps_t`, final gap within the target, and for
/// centroid choosers the floors `eps_t >= (U - L) / (2e(m+1))` (multipliers)
/// and `eps'_t >= (U' - L') / 2e` (bias). With one constraint and the
/// centroid chooser the hypograph area must shrink by `1 - 1/(2e)` per step.
/// SDCA rows must certify a gap in `[0, target]`.
pub fn audit_trace(trace: &SolverTrace) -> AuditReport {
    let mut a = Auditor {
        report: AuditReport::default(),
    };
    let mut saddle: BTreeMap<usize, Vec<&TraceRow>> = BTreeMap::new();
    let mut bias: BTreeMap<(usize, usize), Vec<&TraceRow>> = BTreeMap::new();
    for r in &trace.rows {
        match r.level {
            Level::Mm => a.report.mm_rows += 1,
            Level::Saddle => {
                a.report.saddle_rows += 1;
                saddle.entry(r.mm_iter).or_default().push(r);
            }
            Level::Bias => {
                a.report.bias_rows += 1;
                bias.entry((r.mm_iter, r.saddle_iter)).or_default().push(r);
            }
            Level::Sdca => {
                a.report.sdca_calls += 1;
                a.report.sdca_epochs += r.epochs;
                let gap = r.upper - r.lower;
                a.check(r, Auditor::le(0.0, gap) && Auditor::le(gap, r.target_eps), "SDCA gap certificate", || {
                    format!("gap {gap:?}, target {:?}", r.target_eps)
                });
            }
        }
    }
    let e = std::f64::consts::E;
    for rows in saddle.values() {
        a.cutting_plane(rows, CHECK_SADDLE_FLOOR, |r| 2.0 * e * (r.m as f64 + 1.0), true);
    }
    for rows in bias.values() {
        a.cutting_plane(rows, CHECK_BIAS_FLOOR, |_| 2.0 * e, false);
    }
    a.report
}
