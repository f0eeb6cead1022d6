//! Fixtures and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use dsc_core::mm::{find_initial_point, MmOptions};
use dsc_core::model::{build_metric, Metric};
use dsc_core::svm::BiasMode;
use dsc_core::{ConstrainedProblem, Dataset, DatasetCollection, Polarity, RateCombination, RateConstraint, SparseVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dataset(id: &str, dim: usize, points: &[Vec<f64>]) -> Dataset {
    let xs = points.iter().map(|p| SparseVector::from_dense(p)).collect();
    Dataset::new(id, dim, xs).unwrap()
}

pub fn collection(sets: Vec<Dataset>) -> DatasetCollection {
    let mut c = DatasetCollection::new();
    for d in sets {
        c.insert(d).unwrap();
    }
    c
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

/// 1-d labeled sample with both classes present.
pub struct OneD {
    pub pos: Vec<f64>,
    pub neg: Vec<f64>,
}

impl OneD {
    pub fn random(seed: u64) -> Self {
        let mut r = rng(seed);
        let n = r.random_range(3..=10);
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for i in 0..n {
            let x = r.random_range(-1.0..1.0);
            if i % 2 == 0 {
                pos.push(x);
            } else {
                neg.push(x);
            }
        }
        OneD { pos, neg }
    }

    pub fn n(&self) -> usize {
        self.pos.len() + self.neg.len()
    }

    pub fn datasets(&self) -> DatasetCollection {
        let wrap = |v: &[f64]| v.iter().map(|&x| vec![x]).collect::<Vec<_>>();
        collection(vec![dataset("pos", 1, &wrap(&self.pos)), dataset("neg", 1, &wrap(&self.neg))])
    }

    pub fn error_rate_problem(&self, lambda: f64) -> ConstrainedProblem {
        let ds = self.datasets();
        let obj = build_metric(
            &Metric::ErrorRate {
                positives: "pos".into(),
                negatives: "neg".into(),
            },
            &ds,
        )
        .unwrap();
        ConstrainedProblem::new(ds, &obj, vec![], lambda, 1e6).unwrap()
    }

    /// Hinge-relaxed error rate plus `lambda/2 w^2` at margin `w x - b`.
    pub fn hinge_objective(&self, lambda: f64, w: f64, b: f64) -> f64 {
        let mut s = 0.0;
        for &x in &self.pos {
            s += (0.5 - (w * x - b)).max(0.0);
        }
        for &x in &self.neg {
            s += (0.5 + (w * x - b)).max(0.0);
        }
        s / self.n() as f64 + 0.5 * lambda * w * w
    }
}

/// Minimum of `f` over the grid `[-5, 5]^2` with spacing `step`.
pub fn grid_min_2d(step: f64, f: impl Fn(f64, f64) -> f64) -> (f64, f64, f64) {
    let k = (10.0 / step).round() as usize;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=k {
        let w = -5.0 + step * i as f64;
        for j in 0..=k {
            let b = -5.0 + step * j as f64;
            let v = f(w, b);
            if v < best.0 {
                best = (v, w, b);
            }
        }
    }
    best
}

/// Minimum of a convex function on `[lo, hi]` by ternary search.
pub fn ternary_min(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    f(0.5 * (lo + hi))
}

/// Two labeled points (`x_pos`, `x_neg`) with the error-rate objective and
/// the coverage constraint `s_p(all) <= bound` on 1-d inputs.
#[derive(Debug, Clone, Copy)]
pub struct TwoPoint {
    pub x_pos: f64,
    pub x_neg: f64,
    pub bound: f64,
    pub lambda: f64,
    pub cap: f64,
}

impl TwoPoint {
    pub const FIXTURES: [TwoPoint; 3] = [
        TwoPoint { x_pos: 1.0, x_neg: -1.0, bound: 0.3, lambda: 0.1, cap: 5.0 },
        TwoPoint { x_pos: 0.5, x_neg: -0.8, bound: 0.4, lambda: 0.2, cap: 5.0 },
        TwoPoint { x_pos: 0.9, x_neg: 0.2, bound: 0.25, lambda: 0.05, cap: 5.0 },
    ];

    /// `s_n(pos)/2 + s_p(neg)/2` subject to `s_p(pos)/2 + s_p(neg)/2 <= bound`.
    pub fn problem(&self) -> ConstrainedProblem {
        let ds = collection(vec![
            dataset("pos", 1, &[vec![self.x_pos]]),
            dataset("neg", 1, &[vec![self.x_neg]]),
        ]);
        let obj = RateCombination::negative("pos", 0.5).with_term("neg", Polarity::Positive, 0.5);
        let cover = RateCombination::positive("pos", 0.5).with_term("neg", Polarity::Positive, 0.5);
        let c = RateConstraint::upper(&cover, self.bound, &ds).unwrap();
        ConstrainedProblem::new(ds, &obj, vec![c], self.lambda, self.cap).unwrap()
    }

    pub fn hinge_coverage(&self, w: f64, b: f64) -> f64 {
        0.5 * (0.5 + w * self.x_pos - b).max(0.0) + 0.5 * (0.5 + w * self.x_neg - b).max(0.0)
    }

    /// Lagrangian with every rate replaced by its hinge (anchor at zero).
    pub fn lagrangian(&self, w: f64, b: f64, v: f64) -> f64 {
        let zp = w * self.x_pos - b;
        let zn = w * self.x_neg - b;
        let obj = 0.5 * (0.5 - zp).max(0.0) + 0.5 * (0.5 + zn).max(0.0);
        obj + 0.5 * self.lambda * w * w + v * (self.hinge_coverage(w, b) - self.bound)
    }

    /// `min_{w,b}` of the Lagrangian: exact in `b` (the minimum of a convex
    /// piecewise-linear function sits at a kink), ternary search in `w`.
    pub fn dual(&self, v: f64) -> f64 {
        ternary_min(-50.0, 50.0, |w| {
            [self.x_pos, self.x_neg]
                .iter()
                .flat_map(|&x| [w * x - 0.5, w * x + 0.5])
                .map(|b| self.lagrangian(w, b, v))
                .fold(f64::INFINITY, f64::min)
        })
    }

    /// `max_v dual(v)` over `[0, cap]` on a grid of spacing `step`.
    pub fn dual_max(&self, step: f64) -> (f64, f64) {
        let k = (self.cap / step).round() as usize;
        (0..=k)
            .map(|i| {
                let v = step * i as f64;
                (self.dual(v), v)
            })
            .fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a })
    }
}

/// Random problem with `d <= 5`, `k <= 3` datasets and `m <= 2` single-rate
/// upper-bound constraints. `None` when no feasible starting point exists.
pub struct RandomProblem {
    pub problem: ConstrainedProblem,
    pub d: usize,
    pub k: usize,
    pub m: usize,
}

pub fn random_problem(seed: u64, max_m: usize) -> RandomProblem {
    let mut r = rng(seed);
    let d = r.random_range(1..=5);
    let k = r.random_range(1..=3);
    let m = r.random_range(0..=max_m);
    let mut sets = Vec::new();
    for i in 0..k {
        let n = r.random_range(3..=15);
        sets.push(dataset(&format!("d{i}"), d, &random_points(&mut r, n, d)));
    }
    let ds = collection(sets);
    let mut obj = RateCombination::new();
    for i in 0..k {
        let pol = if r.random_bool(0.5) { Polarity::Positive } else { Polarity::Negative };
        obj = obj.with_term(format!("d{i}"), pol, r.random_range(0.1..1.0));
    }
    let mut cons = Vec::new();
    for _ in 0..m {
        let i = r.random_range(0..k);
        let pol = if r.random_bool(0.5) { Polarity::Positive } else { Polarity::Negative };
        let lhs = RateCombination::new().with_term(format!("d{i}"), pol, 1.0);
        cons.push(RateConstraint::upper(&lhs, r.random_range(0.3..0.8), &ds).unwrap());
    }
    let lambda = r.random_range(0.01..1.0);
    RandomProblem {
        problem: ConstrainedProblem::new(ds, &obj, cons, lambda, 1e3).unwrap(),
        d,
        k,
        m,
    }
}

/// The first `count` random problems (from `start`) that admit a feasible
/// starting point, with that point and their seed.
pub fn feasible_random_problems(
    start: u64,
    count: usize,
    max_m: usize,
) -> Vec<(u64, RandomProblem, dsc_core::LinearClassifier)> {
    let mut out = Vec::new();
    let mut seed = start;
    while out.len() < count {
        let p = random_problem(seed, max_m);
        if let Ok(init) = find_initial_point(&p.problem, BiasMode::Free, 1e-6) {
            out.push((seed, p, init));
        }
        seed += 1;
    }
    out
}

pub fn mm_options(seed: u64, eps: f64) -> MmOptions {
    let mut o = MmOptions::default();
    o.seed = seed;
    o.saddle.eps = eps;
    o
}

/// Small labeled LIBSVM text: two Gaussian-ish blobs in `dim` dimensions,
/// first feature carries the group (1 = group A).
pub fn libsvm_text(seed: u64, n: usize, dim: usize) -> String {
    let mut r = rng(seed);
    let mut out = String::new();
    for i in 0..n {
        let label = i % 2 == 0;
        let group = r.random_bool(0.5);
        out.push_str(if label { "+1" } else { "-1" });
        if group {
            out.push_str(" 1:1");
        }
        for j in 1..dim {
            let shift = if label { 0.6 } else { -0.6 };
            let v: f64 = shift + r.random_range(-1.0..1.0);
            out.push_str(&format!(" {}:{:.4}", j + 1, v));
        }
        out.push('\n');
    }
    out
}
