//! Acceptance criteria AC1-AC11, run in order by a harness-free test binary
//! that prints one PASS/FAIL line per criterion.
//!
//! Criteria that cannot hold as stated are listed in [`KNOWN_UNATTAINABLE`];
//! they still print FAIL, and the binary only fails on an unexpected FAIL.

mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use common::*;
use dsc_core::analysis::{
    audit_trace, e_from_parts, generalization_e, AuditFailure, CHECK_AREA, CHECK_BIAS_FLOOR, CHECK_SADDLE_FLOOR,
};
use dsc_core::baselines::{train_unconstrained_svm, train_zafar_baseline, zafar_mean_difference};
use dsc_core::experiments::adult::{self, AdultConfig, AdultMethod};
use dsc_core::experiments::churn::{self, ChurnConfig, ChurnJob, ChurnMethod};
use dsc_core::io::config::RunConfig;
use dsc_core::mm::majorize_minimize;
use dsc_core::model::{build_metric, partition_labeled_data, roles, LabeledExample, Metric};
use dsc_core::rates::{bound_negative, bound_positive, bound_rates, ramp, ramp_rates};
use dsc_core::run::run_train;
use dsc_core::saddle::{solve_saddle, CutChooser, SaddleOptions};
use dsc_core::subproblem::{per_example_loss, ConvexSubproblem};
use dsc_core::svm::{objectives, sdca_optimize, BiasChooser, DualState, SdcaOptions};
use dsc_core::trace::{Level, SolverTrace};
use dsc_core::{ConstrainedProblem, LinearClassifier, RateCombination, SparseVector};
use rand::Rng;

// Tolerances and sizes, as specified per criterion.
const AC1_FIXTURES: u64 = 5;
const AC1_GRID_STEP: f64 = 0.005;
const AC1_TOL: f64 = 1e-3;
const AC1_EPS: f64 = 1e-4;
const AC1_LAMBDA: f64 = 0.1;
const AC1_BUDGET: Duration = Duration::from_secs(10);

const AC2_V_STEP: f64 = 1e-3;
const AC2_TOL: f64 = 5e-3;
const AC2_HINGE_TOL: f64 = 1e-3;
const AC2_EPS: f64 = 1e-4;
const AC2_BUDGET: Duration = Duration::from_secs(60);

const AC3_PROBLEMS: usize = 20;
const AC3_FEAS_TOL: f64 = 1e-6;
const AC3_EPS: f64 = 1e-3;

const AC4_GRID: [f64; 7] = [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5];
const AC4_INSTANCES: u64 = 50;
const AC4_TOL: f64 = 1e-12;

const AC5_INSTANCES: u64 = 30;
const AC5_GAP: f64 = 1e-6;
const AC5_W_TOL: f64 = 1e-9;
/// Rounding allowance on the sign of a gap that is zero in exact arithmetic.
const AC5_GAP_ROUNDING: f64 = 1e-12;

const AC7_TAUS: [f64; 3] = [0.05, 0.1, 0.2];
const AC7_TOL: f64 = 0.02;
const AC7_DRAWS: usize = 100_000;
const AC7_RUNS: usize = 2;
const AC7_BUDGET: Duration = Duration::from_secs(300);

const AC8_KAPPAS: [f64; 3] = [0.6, 0.8, 1.0];
const AC8_RUNS: usize = 3;
const AC8_RATIO_TOL: f64 = 0.02;
const AC8_ERROR_GAP: f64 = 0.05;
const AC8_DRAWS: usize = 100_000;
const AC8_BUDGET: Duration = Duration::from_secs(30 * 60);

const AC9_CS: [f64; 3] = [0.0, 0.01, 1e6];
const AC9_TOL: f64 = 1e-3;
const AC9_EPS: f64 = 1e-4;

const AC10_E: f64 = 13.0;
const AC10_DRAWS: u64 = 100;

/// Criteria expected to FAIL, with the reason recorded in the project notes.
/// AC6: the bias-level centroid floor `eps' >= (U' - L')/2e` is not a valid
/// bound; one-dimensional centroids only guarantee `(U' - L')/6`.
const KNOWN_UNATTAINABLE: &[&str] = &["AC6"];

/// Largest `(U' - L') / eps'` the bias centroid can produce.
const BIAS_CENTROID_RATIO: f64 = 6.0;

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: &'static str, pass: bool, detail: String) -> Outcome {
    println!("{id} {}: {detail}", if pass { "PASS" } else { "FAIL" });
    Outcome { id, pass, detail }
}

/// Every trace produced by the suite, for AC6.
#[derive(Default)]
struct Traces(Vec<(String, SolverTrace)>);

impl Traces {
    fn add(&mut self, name: impl Into<String>, t: SolverTrace) {
        self.0.push((name.into(), t));
    }
}

fn ac1(traces: &mut Traces) -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..AC1_FIXTURES {
        let fx = OneD::random(seed);
        let problem = fx.error_rate_problem(AC1_LAMBDA);
        let mut o = mm_options(seed, AC1_EPS);
        o.iterations = 1;
        let r = majorize_minimize(&problem, &LinearClassifier::zeros(1), &o).unwrap();
        let got = fx.hinge_objective(AC1_LAMBDA, r.classifier.weights()[0], r.classifier.bias());
        let (best, _, _) = grid_min_2d(AC1_GRID_STEP, |w, b| fx.hinge_objective(AC1_LAMBDA, w, b));
        worst = worst.max((got - best).abs());
        traces.add(format!("ac1 fixture {seed}"), r.trace);
    }
    let elapsed = start.elapsed();
    outcome(
        "AC1",
        worst <= AC1_TOL && elapsed < AC1_BUDGET,
        format!("max |objective - grid| = {worst:.3e} (tol {AC1_TOL:e}), {elapsed:.2?} (budget {AC1_BUDGET:?})"),
    )
}

fn saddle_options(chooser: CutChooser, bias_chooser: BiasChooser, eps: f64) -> SaddleOptions {
    let mut o = SaddleOptions::default();
    o.eps = eps;
    o.chooser = chooser;
    o.svm.bias_chooser = bias_chooser;
    o
}

fn ac2(traces: &mut Traces) -> Outcome {
    let start = Instant::now();
    let mut worst_dual: f64 = 0.0;
    let mut worst_hinge = f64::NEG_INFINITY;
    for (i, fx) in TwoPoint::FIXTURES.iter().enumerate() {
        let (oracle, _) = fx.dual_max(AC2_V_STEP);
        let problem = fx.problem();
        for (chooser, bias_chooser) in [
            (CutChooser::Max, BiasChooser::Min),
            (CutChooser::Centroid, BiasChooser::Centroid),
        ] {
            let sub = ConvexSubproblem::new(&problem, LinearClassifier::zeros(1)).unwrap();
            let mut state = DualState::zeros(2, 1);
            let mut trace = SolverTrace::new();
            let r = solve_saddle(
                &sub,
                &saddle_options(chooser, bias_chooser, AC2_EPS),
                &mut state,
                &mut rng(i as u64),
                &mut trace,
            )
            .unwrap();
            worst_dual = worst_dual.max((r.lower - oracle).abs());
            let c = &r.classifier;
            worst_hinge = worst_hinge.max(fx.hinge_coverage(c.weights()[0], c.bias()) - fx.bound);
            traces.add(format!("ac2 fixture {i} {}", chooser.as_str()), trace);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        "AC2",
        worst_dual <= AC2_TOL && worst_hinge <= AC2_HINGE_TOL && elapsed < AC2_BUDGET,
        format!(
            "max |L - max_v dual| = {worst_dual:.3e} (tol {AC2_TOL:e}), max hinge violation {worst_hinge:.3e} \
             (tol {AC2_HINGE_TOL:e}), {elapsed:.2?}"
        ),
    )
}

fn ac3(traces: &mut Traces) -> Outcome {
    let mm_tol = AC3_EPS + 1e-9;
    let mut worst_rise = f64::NEG_INFINITY;
    let mut worst_violation = f64::NEG_INFINITY;
    let mut problems = Vec::new();
    for (seed, rp, init) in feasible_random_problems(100, AC3_PROBLEMS, 2) {
        let mut o = mm_options(seed, AC3_EPS);
        if rp.m == 1 && seed % 2 == 0 {
            o.saddle.chooser = CutChooser::Centroid;
            o.saddle.svm.bias_chooser = BiasChooser::Centroid;
        }
        let r = majorize_minimize(&rp.problem, &init, &o).unwrap();
        for pair in r.iterates.windows(2) {
            worst_rise = worst_rise.max(pair[1].objective - pair[0].objective);
        }
        for it in &r.iterates {
            worst_violation = worst_violation.max(it.max_violation);
        }
        problems.push(format!("{seed}:d{}k{}m{}", rp.d, rp.k, rp.m));
        traces.add(format!("ac3 seed {seed}"), r.trace);
    }
    outcome(
        "AC3",
        worst_rise <= mm_tol && worst_violation <= AC3_FEAS_TOL,
        format!(
            "{} problems, max objective rise {worst_rise:.3e} (tol {mm_tol:e}), max ramp violation \
             {worst_violation:.3e} (tol {AC3_FEAS_TOL:e})",
            problems.len()
        ),
    )
}

fn ac4() -> Outcome {
    let mut below = 0;
    let mut anchor_gap: f64 = 0.0;
    for &z in &AC4_GRID {
        for &za in &AC4_GRID {
            if bound_positive(z, za) < ramp(z) || bound_negative(z, za) < ramp(-z) {
                below += 1;
            }
            if z == za {
                anchor_gap = anchor_gap
                    .max((bound_positive(z, z) - ramp(z)).abs())
                    .max((bound_negative(z, z) - ramp(-z)).abs());
            }
        }
    }
    let mut rate_gap: f64 = 0.0;
    for seed in 0..AC4_INSTANCES {
        let mut r = rng(1000 + seed);
        let dim = r.random_range(1..=6);
        let n = r.random_range(1..=30);
        let d = dataset("d", dim, &random_points(&mut r, n, dim));
        let w: Vec<f64> = (0..dim).map(|_| r.random_range(-3.0..3.0)).collect();
        let clf = LinearClassifier::new(w, r.random_range(-1.0..1.0)).unwrap();
        let (bp, bn) = bound_rates(&d, &clf, &clf).unwrap();
        let (rp, rn) = ramp_rates(&d, &clf).unwrap();
        rate_gap = rate_gap.max((bp - rp).abs()).max((bn - rn).abs());
    }
    outcome(
        "AC4",
        below == 0 && anchor_gap == 0.0 && rate_gap <= AC4_TOL,
        format!(
            "{} grid points below the ramp, anchor gap {anchor_gap:e}, max |r_check - r| at anchor \
             {rate_gap:.3e} (tol {AC4_TOL:e})",
            below
        ),
    )
}

fn ac5() -> Outcome {
    let mut worst_gap = f64::NEG_INFINITY;
    let mut min_gap = f64::INFINITY;
    let mut worst_w: f64 = 0.0;
    let mut worst_primal: f64 = 0.0;
    for seed in 0..AC5_INSTANCES {
        let mut r = rng(2000 + seed);
        let dim = r.random_range(1..=10);
        let k = r.random_range(1..=3);
        let mut sets = Vec::new();
        let mut left = 50;
        for i in 0..k {
            let n = r.random_range(1..=(left - (k - 1 - i)).min(20));
            left -= n;
            sets.push(dataset(&format!("d{i}"), dim, &random_points(&mut r, n, dim)));
        }
        let ds = collection(sets);
        let mut obj = RateCombination::new();
        let mut lhs = RateCombination::new();
        for i in 0..k {
            obj = obj.with_term(format!("d{i}"), polarity(&mut r), r.random_range(0.1..1.0));
            lhs = lhs.with_term(format!("d{i}"), polarity(&mut r), r.random_range(0.0..1.0));
        }
        let c = dsc_core::RateConstraint::upper(&lhs, 0.5, &ds).unwrap();
        let lambda = r.random_range(0.01..1.0);
        let problem = ConstrainedProblem::new(ds, &obj, vec![c], lambda, 10.0).unwrap();
        let anchor_w: Vec<f64> = (0..dim).map(|_| r.random_range(-2.0..2.0)).collect();
        let anchor = LinearClassifier::new(anchor_w, r.random_range(-0.5..0.5)).unwrap();
        let sub = ConvexSubproblem::new(&problem, anchor).unwrap();
        let v = [r.random_range(0.0..10.0)];
        let coeffs = sub.coefficients(&v);
        let b = r.random_range(-1.0..1.0);
        let mut state = DualState::zeros(sub.n(), dim);
        let opts = SdcaOptions { max_epochs: 100_000 };
        sdca_optimize(&sub, &coeffs, b, AC5_GAP, &mut state, &opts, &mut rng(seed)).unwrap();
        let (p, d) = objectives(&sub, &coeffs, b, &state);
        worst_gap = worst_gap.max(p - d);
        min_gap = min_gap.min(p - d);
        let recomputed = state.recomputed_w(&sub);
        for (a, b) in recomputed.iter().zip(&state.w) {
            worst_w = worst_w.max((a - b).abs());
        }
        // Primal recomputed directly from the pooled hinge form.
        let mut loss = 0.0;
        for (i, e) in sub.examples().iter().enumerate() {
            let bx = if e.uses_bias { b } else { 0.0 };
            loss += per_example_loss(e.x.dot(&recomputed) - bx, coeffs.a_plus[i], coeffs.a_minus[i]);
        }
        let primal = loss / sub.n() as f64 + 0.5 * lambda * recomputed.iter().map(|x| x * x).sum::<f64>();
        worst_primal = worst_primal.max((primal - p).abs());
    }
    outcome(
        "AC5",
        min_gap >= -AC5_GAP_ROUNDING && worst_gap <= AC5_GAP && worst_w <= AC5_W_TOL && worst_primal <= AC5_W_TOL,
        format!(
            "gap in [{min_gap:.3e}, {worst_gap:.3e}] (bounds [-{AC5_GAP_ROUNDING:e}, {AC5_GAP:e}]), max |w(xi) - w| = {worst_w:.3e}, \
             primal recompute diff {worst_primal:.3e} (tol {AC5_W_TOL:e})"
        ),
    )
}

fn polarity(r: &mut impl Rng) -> dsc_core::Polarity {
    if r.random_bool(0.5) {
        dsc_core::Polarity::Positive
    } else {
        dsc_core::Polarity::Negative
    }
}

/// Floor and area ratios recomputed from centroid rows of one trace level.
#[derive(Default)]
struct CentroidStats {
    rows: usize,
    max_ratio: f64,
    area_steps: usize,
    max_area_ratio: f64,
}

fn centroid_stats(traces: &Traces, level: Level) -> CentroidStats {
    let mut s = CentroidStats::default();
    for (_, t) in &traces.0 {
        let mut loops: BTreeMap<(usize, usize), Vec<_>> = BTreeMap::new();
        for r in t.rows_at(level) {
            let key = if level == Level::Bias { (r.mm_iter, r.saddle_iter) } else { (r.mm_iter, 0) };
            loops.entry(key).or_default().push(r);
        }
        for rows in loops.values() {
            for (i, r) in rows.iter().enumerate() {
                if r.chooser != "centroid" || !(r.area > 0.0) || r.is_final() {
                    continue;
                }
                s.rows += 1;
                let m = if level == Level::Bias { 0 } else { r.m };
                s.max_ratio = s.max_ratio.max((r.upper - r.lower) / r.eps / (m as f64 + 1.0));
                if level == Level::Saddle {
                    if let Some(next) = rows.get(i + 1).filter(|n| n.area.is_finite()) {
                        s.area_steps += 1;
                        s.max_area_ratio = s.max_area_ratio.max(next.area / r.area);
                    }
                }
            }
        }
    }
    s
}

fn ac6(traces: &Traces) -> Outcome {
    let mut by_check: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut runs = 0;
    let mut first: Option<(String, AuditFailure)> = None;
    for (name, t) in &traces.0 {
        runs += 1;
        let report = audit_trace(t);
        for f in report.failures {
            *by_check.entry(f.check).or_default() += 1;
            if first.is_none() {
                first = Some((name.clone(), f));
            }
        }
    }
    let saddle = centroid_stats(traces, Level::Saddle);
    let bias = centroid_stats(traces, Level::Bias);
    let two_e = 2.0 * std::f64::consts::E;
    let detail = format!(
        "{runs} traces; failures by check {by_check:?}; multiplier centroid rows {} with max (U-L)/((m+1) eps_t) \
         = {:.4} (limit 2e = {two_e:.4}); area steps {} with max ratio {:.4} (limit {:.4}); bias centroid rows {} \
         with max (U'-L')/eps'_t = {:.4} (stated limit 2e, attainable limit {BIAS_CENTROID_RATIO}){}",
        saddle.rows,
        saddle.max_ratio,
        saddle.area_steps,
        saddle.max_area_ratio,
        1.0 - 1.0 / two_e,
        bias.rows,
        bias.max_ratio,
        first.map(|(n, f)| format!("; first failure in {n}: {f}")).unwrap_or_default(),
    );
    let out = outcome("AC6", by_check.is_empty(), detail);
    // Whatever the verdict, everything except the bias floor must hold and
    // the bias ratio must respect the attainable bound.
    let unexpected: Vec<_> = by_check.keys().filter(|c| **c != CHECK_BIAS_FLOOR).collect();
    assert!(unexpected.is_empty(), "unexpected audit failures: {unexpected:?}");
    assert!(!by_check.contains_key(CHECK_SADDLE_FLOOR) && !by_check.contains_key(CHECK_AREA));
    assert!(saddle.rows > 0 && saddle.area_steps > 0, "the suite must exercise the multiplier centroid");
    assert!(bias.rows > 0, "the suite must exercise the bias centroid");
    assert!(bias.max_ratio <= BIAS_CENTROID_RATIO * (1.0 + 1e-9), "bias centroid ratio {}", bias.max_ratio);
    out
}

fn ac7(traces: &mut Traces) -> Outcome {
    let start = Instant::now();
    let mut cfg = ChurnConfig::default();
    cfg.sweep.taus = AC7_TAUS.to_vec();
    cfg.sweep.runs = AC7_RUNS;
    cfg.sweep.randomized_draws = AC7_DRAWS;
    let mut worst: f64 = 0.0;
    let mut active = 0;
    let mut inactive = 0;
    for run in 0..AC7_RUNS {
        let seed = cfg.solver.seed + run as u64;
        let data = churn::generate(&cfg.generator, seed).unwrap();
        let job = |method| ChurnJob { method, run, seed };
        let base_job = job(ChurnMethod::RecallOnly);
        let base_fit = churn::train_job(&cfg, &data, &base_job).unwrap();
        let base = churn::evaluate_job(&cfg, &data, &base_job, &base_fit).unwrap();
        traces.add(format!("ac7 run {run} recall_only"), base_fit.trace);
        for &tau in &AC7_TAUS {
            let j = job(ChurnMethod::Constrained { tau });
            let fit = churn::train_job(&cfg, &data, &j).unwrap();
            let row = churn::evaluate_job(&cfg, &data, &j, &fit).unwrap();
            traces.add(format!("ac7 run {run} tau {tau}"), fit.trace);
            // Active: dropping the churn constraint would violate it.
            if base.train_churn_randomized > tau {
                active += 1;
                worst = worst.max((row.train_churn_randomized - tau).abs());
            } else {
                inactive += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        "AC7",
        active > 0 && worst <= AC7_TOL && elapsed < AC7_BUDGET,
        format!(
            "{active} active / {inactive} inactive points, max |randomized churn - tau| = {worst:.4} \
             (tol {AC7_TOL}), {elapsed:.1?} (budget {AC7_BUDGET:?})"
        ),
    )
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn ac8(traces: &mut Traces) -> Outcome {
    let dir = data_dir();
    if !dir.join("a9a").is_file() || !dir.join("a9a.t").is_file() {
        return outcome(
            "AC8",
            false,
            format!("{} has no a9a / a9a.t; generate them with scripts/make_a9a.py", dir.display()),
        );
    }
    let start = Instant::now();
    let text = format!(
        "[data]\ntrain = \"a9a\"\ntest = \"a9a.t\"\n[sweep]\nkappas = {AC8_KAPPAS:?}\nzafar_c = []\nruns = {AC8_RUNS}\n\
         randomized_draws = {AC8_DRAWS}\n[solver]\nlambda = \"1/n\"\nbias = \"none\"\n"
    );
    let cfg = AdultConfig::from_toml(&text, &dir, &dir.join("acceptance.toml")).unwrap();
    let data = adult::load_adult(&cfg).unwrap();
    let mut err: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut test_ratio: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut worst_fair = f64::NEG_INFINITY;
    for job in adult::jobs(&cfg) {
        let fit = adult::train_job(&cfg, &data, &job).unwrap();
        let row = adult::evaluate_job(&cfg, &data, &job, &fit.classifier, fit.covariance).unwrap();
        traces.add(format!("ac8 {} {:?} run {}", row.method, row.kappa, row.run), fit.trace);
        let key = match job.method {
            AdultMethod::Constrained { kappa } => {
                // Ratio is male/female; the constraint asks female/male >= kappa.
                worst_fair = worst_fair.max(kappa - 1.0 / row.train_ratio_randomized);
                format!("{kappa}")
            }
            _ => "svm".to_string(),
        };
        err.entry(key.clone()).or_default().push(row.test_error);
        test_ratio.entry(key).or_default().push(row.test_ratio);
    }
    let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    // Increasing 1/kappa means decreasing kappa.
    let ratios: Vec<f64> = AC8_KAPPAS.iter().rev().map(|k| mean(&test_ratio[&format!("{k}")])).collect();
    let monotone = ratios.windows(2).all(|p| p[1] >= p[0]);
    let gap = mean(&err["0.6"]) - mean(&err["svm"]);
    let elapsed = start.elapsed();
    outcome(
        "AC8",
        worst_fair <= AC8_RATIO_TOL && monotone && gap <= AC8_ERROR_GAP && elapsed < AC8_BUDGET,
        format!(
            "(a) max kappa - randomized train F/M = {worst_fair:.4} (tol {AC8_RATIO_TOL}); (b) mean test M/F \
             for 1/kappa ascending {ratios:.3?} monotone={monotone}; (c) test error gap at 0.6 = {gap:.4} \
             (tol {AC8_ERROR_GAP}); {elapsed:.0?}"
        ),
    )
}

fn ac9(traces: &mut Traces) -> Outcome {
    let mut r = rng(9);
    let dim = 6;
    let examples: Vec<LabeledExample> = (0..300)
        .map(|_| {
            let group = r.random_bool(0.5);
            let mut x: Vec<f64> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
            x[0] = if group { 1.0 } else { 0.0 };
            let score = x[1] + 0.5 * x[2] + if group { 0.4 } else { -0.4 } + r.random_range(-0.5..0.5);
            LabeledExample {
                features: SparseVector::from_dense(&x),
                label: score > 0.0,
                group: Some(group),
                baseline: None,
            }
        })
        .collect();
    let ds = partition_labeled_data("", dim, &examples).unwrap();
    let obj = build_metric(
        &Metric::ErrorRate {
            positives: roles::POS.into(),
            negatives: roles::NEG.into(),
        },
        &ds,
    )
    .unwrap();
    let x_bar = zafar_mean_difference(ds.get(roles::GROUP_A).unwrap(), ds.get(roles::GROUP_B).unwrap()).unwrap();
    let lambda = 0.01;
    let opts = saddle_options(CutChooser::Max, BiasChooser::Min, AC9_EPS);
    let svm = train_unconstrained_svm(ds.clone(), &obj, lambda, &opts, 0).unwrap();
    traces.add("ac9 svm", svm.trace.clone());
    let mut worst_cov = f64::NEG_INFINITY;
    let mut covs = Vec::new();
    let mut objective_gap = f64::NAN;
    for &c in &AC9_CS {
        let z = train_zafar_baseline(&ds, &obj, lambda, c, &x_bar, 1e6, &opts, 0).unwrap();
        worst_cov = worst_cov.max(z.covariance.abs() - c);
        covs.push(z.covariance);
        if c == 1e6 {
            objective_gap = (z.hinge.objective - svm.objective).abs();
        }
        traces.add(format!("ac9 c {c}"), z.hinge.trace);
    }
    let unconstrained_cov = x_bar.dot(svm.classifier.weights());
    outcome(
        "AC9",
        worst_cov <= AC9_TOL && objective_gap <= AC9_TOL,
        format!(
            "<w, x_bar> = {covs:?} for c = {AC9_CS:?} (unconstrained {unconstrained_cov:.3e}), max excess \
             {worst_cov:.3e}; |objective(c=1e6) - svm| = {objective_gap:.3e} (tol {AC9_TOL:e})"
        ),
    )
}

fn ac10() -> Outcome {
    // ln(4k/delta) = 8 with k = 1, so E = 1 + 4 + sqrt(64).
    let delta = 4.0 * (-8.0f64).exp();
    let from_parts = e_from_parts(1.0, 1.0, 1.0, delta, 1).unwrap();
    let ds = collection(vec![dataset("d", 1, &[vec![1.0], vec![-1.0]])]);
    let p = ConstrainedProblem::new(ds, &RateCombination::positive("d", 1.0), vec![], 1.0, 1.0).unwrap();
    let from_problem = generalization_e(&p, 1.0, delta, 1).unwrap();
    let exact = (from_parts - AC10_E).abs() <= 1e-12 && (from_problem - AC10_E).abs() <= 1e-12;

    let mut bad = 0;
    for seed in 0..AC10_DRAWS {
        let mut r = rng(3000 + seed);
        let rp = random_problem(seed, 2);
        let p = &rp.problem;
        let x = r.random_range(0.1..3.0);
        let delta = r.random_range(0.001..0.5);
        let k = p.datasets().len();
        let e = generalization_e(p, x, delta, k).unwrap();
        let smaller = p.with_lambda(p.lambda() * r.random_range(0.1..0.99)).unwrap();
        if !(generalization_e(&smaller, x, delta, k).unwrap() > e) {
            bad += 1;
        }
        let bigger_cap = ConstrainedProblem::new(
            p.datasets().clone(),
            p.objective(),
            p.constraints().to_vec(),
            p.lambda(),
            p.multiplier_cap() * r.random_range(1.5..10.0),
        )
        .unwrap();
        let e_cap = generalization_e(&bigger_cap, x, delta, k).unwrap();
        let strict = !p.constraints().is_empty();
        if e_cap < e || (strict && !(e_cap > e)) {
            bad += 1;
        }
    }
    outcome(
        "AC10",
        exact && bad == 0,
        format!("E = {from_parts:?} / {from_problem:?} (expected {AC10_E}), {bad} monotonicity violations in {AC10_DRAWS} draws"),
    )
}

fn ac11() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("train.svm"), libsvm_text(11, 60, 4)).unwrap();
    let text = "[data]\ntrain = \"train.svm\"\ngroup_feature = 0\n\n[[objective]]\nmetric = \"error_rate\"\n\n\
                [[constraint]]\nmetric = \"coverage\"\ndataset = \"all\"\nat_most = 0.4\n\n[solver]\nlambda = 0.05\n\
                iterations = 3\nseed = 7\n\n[eval]\nrandomized_draws = 1000\n";
    let path = dir.path().join("run.toml");
    std::fs::write(&path, text).unwrap();
    let mut files = Vec::new();
    for out in ["a", "b"] {
        let mut cfg = RunConfig::load(&path).unwrap();
        cfg.output.dir = dir.path().join(out);
        let o = run_train(&cfg).unwrap();
        files.push((std::fs::read(&o.model_path).unwrap(), std::fs::read(&o.trace_path).unwrap()));
    }
    let same_model = files[0].0 == files[1].0;
    let same_trace = files[0].1 == files[1].1;
    outcome(
        "AC11",
        same_model && same_trace,
        format!(
            "model identical: {same_model} ({} bytes), trace identical: {same_trace} ({} bytes)",
            files[0].0.len(),
            files[0].1.len()
        ),
    )
}

/// Runs without the libtest harness so the per-criterion lines are always
/// printed; exits nonzero on any failure outside `KNOWN_UNATTAINABLE`.
fn main() {
    let mut traces = Traces::default();
    let mut outcomes = vec![
        ac1(&mut traces),
        ac2(&mut traces),
        ac3(&mut traces),
        ac4(),
        ac5(),
    ];
    let later = [ac7(&mut traces), ac8(&mut traces), ac9(&mut traces)];
    outcomes.push(ac6(&traces));
    outcomes.extend(later);
    outcomes.push(ac10());
    outcomes.push(ac11());
    outcomes.sort_by_key(|o| o.id[2..].parse::<u32>().unwrap());

    println!("---- summary ----");
    for o in &outcomes {
        println!("{} {}", o.id, if o.pass { "PASS" } else { "FAIL" });
    }
    let unexpected: Vec<(&str, &str)> = outcomes
        .iter()
        .filter(|o| !o.pass && !KNOWN_UNATTAINABLE.contains(&o.id))
        .map(|o| (o.id, o.detail.as_str()))
        .collect();
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:#?}");
        std::process::exit(1);
    }
    println!("acceptance: all failures are known-unattainable ({})", KNOWN_UNATTAINABLE.join(", "));
}
