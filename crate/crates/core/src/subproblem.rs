//! The convex subproblem anchored at `(w', b')`: hinge/constant upper bounds
//! on every rate, its Lagrangian `Psi`, and the equivalent weighted SVM over
//! all examples of all datasets pooled together.

use crate::error::{Error, Result};
use crate::model::{CoefficientTable, ConstrainedProblem};
use crate::rates::{bound_negative, bound_positive, LinearClassifier};
use crate::sparse::{pairwise_sum, SparseVector};

#[derive(Debug, Clone)]
pub struct ExampleRef<'p> {
    pub x: &'p SparseVector,
    pub dataset: usize,
    pub uses_bias: bool,
    pub squared_norm: f64,
    pub anchor_margin: f64,
}

impl ExampleRef<'_> {
    pub fn margin(&self, w: &[f64], b: f64) -> f64 {
        let z = self.x.dot(w);
        if self.uses_bias { z - b } else { z }
    }
}

/// Per-example hinge weights of the pooled SVM, with the constants that
/// make its objective equal `Psi` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleCoefficients {
    pub a_plus: Vec<f64>,
    pub a_minus: Vec<f64>,
    /// Constraint bounds after absorbing the constant-branch rates.
    pub gamma_tilde: Vec<f64>,
    /// Objective contribution of the constant branches.
    pub offset: f64,
}

impl ExampleCoefficients {
    /// `offset - sum_j v_j gamma~_j`: the part of `Psi` that depends on neither `w` nor `b`.
    pub fn constant(&self, v: &[f64]) -> f64 {
        self.offset - v.iter().zip(&self.gamma_tilde).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// `a_plus * max{0, 1/2 + z} + a_minus * max{0, 1/2 - z}`
pub fn per_example_loss(z: f64, a_plus: f64, a_minus: f64) -> f64 {
    a_plus * (0.5 + z).max(0.0) + a_minus * (0.5 - z).max(0.0)
}

/// `Psi` split into its multiplier-free part and per-constraint slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiParts {
    /// Bound objective plus `lambda/2 |w|^2`.
    pub base: f64,
    /// `bound LHS_j - gamma_j`, the gradient of `Psi` in `v`.
    pub slopes: Vec<f64>,
}

impl PsiParts {
    pub fn at(&self, v: &[f64]) -> f64 {
        self.base + self.slopes.iter().zip(v).map(|(g, v)| g * v).sum::<f64>()
    }
}

#[derive(Debug, Clone)]
pub struct ConvexSubproblem<'p> {
    problem: &'p ConstrainedProblem,
    anchor: LinearClassifier,
    table: CoefficientTable,
    examples: Vec<ExampleRef<'p>>,
    starts: Vec<usize>,
    above: Vec<usize>,
    below: Vec<usize>,
    x_max: f64,
}

impl<'p> ConvexSubproblem<'p> {
    pub fn new(problem: &'p ConstrainedProblem, anchor: LinearClassifier) -> Result<Self> {
        if anchor.dim() != problem.dim() {
            return Err(Error::domain(format!(
                "anchor dimension {} does not match problem dimension {}",
                anchor.dim(),
                problem.dim()
            )));
        }
        let mut examples = Vec::with_capacity(problem.datasets().total_examples());
        let mut starts = Vec::with_capacity(problem.datasets().len() + 1);
        let (mut above, mut below) = (Vec::new(), Vec::new());
        for (i, d) in problem.datasets().iter().enumerate() {
            starts.push(examples.len());
            let (mut hi, mut lo) = (0, 0);
            for x in d.examples() {
                let anchor_margin = anchor.margin_in(d, x);
                hi += usize::from(anchor_margin > 0.5);
                lo += usize::from(anchor_margin < -0.5);
                examples.push(ExampleRef {
                    x,
                    dataset: i,
                    uses_bias: d.uses_bias(),
                    squared_norm: x.squared_norm(),
                    anchor_margin,
                });
            }
            above.push(hi);
            below.push(lo);
        }
        starts.push(examples.len());
        let x_max = examples.iter().map(|e| e.squared_norm).fold(0.0, f64::max).sqrt();
        Ok(ConvexSubproblem {
            table: problem.coefficient_table(),
            problem,
            anchor,
            examples,
            starts,
            above,
            below,
            x_max,
        })
    }

    pub fn problem(&self) -> &'p ConstrainedProblem {
        self.problem
    }

    pub fn anchor(&self) -> &LinearClassifier {
        &self.anchor
    }

    pub fn table(&self) -> &CoefficientTable {
        &self.table
    }

    pub fn examples(&self) -> &[ExampleRef<'p>] {
        &self.examples
    }

    /// Total pooled example count `n`.
    pub fn n(&self) -> usize {
        self.examples.len()
    }

    pub fn m(&self) -> usize {
        self.problem.num_constraints()
    }

    pub fn lambda(&self) -> f64 {
        self.problem.lambda()
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    fn dataset_size(&self, i: usize) -> usize {
        self.starts[i + 1] - self.starts[i]
    }

    /// Anchored bound rates `(ř_p, ř_n)` per dataset.
    pub fn bound_rates(&self, clf: &LinearClassifier) -> Vec<(f64, f64)> {
        let (w, b) = (clf.weights(), clf.bias());
        let mut pos = Vec::with_capacity(self.n());
        let mut neg = Vec::with_capacity(self.n());
        for e in &self.examples {
            let z = e.margin(w, b);
            pos.push(bound_positive(z, e.anchor_margin));
            neg.push(bound_negative(z, e.anchor_margin));
        }
        (0..self.starts.len() - 1)
            .map(|i| {
                let r = self.starts[i]..self.starts[i + 1];
                let len = r.len() as f64;
                (pairwise_sum(&pos[r.clone()]) / len, pairwise_sum(&neg[r]) / len)
            })
            .collect()
    }

    /// `Psi(clf, .)` as an affine function of the multipliers.
    pub fn psi_parts(&self, clf: &LinearClassifier) -> PsiParts {
        let rates = self.bound_rates(clf);
        let dot = |row: &[(f64, f64)]| -> f64 {
            row.iter().zip(&rates).map(|(c, r)| c.0 * r.0 + c.1 * r.1).sum()
        };
        let base = dot(&self.table.objective) + 0.5 * self.lambda() * clf.squared_norm();
        let slopes = self
            .table
            .constraints
            .iter()
            .zip(&self.table.bounds)
            .map(|(row, gamma)| dot(row) - gamma)
            .collect();
        PsiParts { base, slopes }
    }

    /// `Psi(w, b, v; w', b')`
    pub fn psi(&self, clf: &LinearClassifier, v: &[f64]) -> f64 {
        self.psi_parts(clf).at(v)
    }

    pub fn coefficients(&self, v: &[f64]) -> ExampleCoefficients {
        let n = self.n() as f64;
        let k = self.starts.len() - 1;
        let mut a_plus = Vec::with_capacity(self.n());
        let mut a_minus = Vec::with_capacity(self.n());
        let mut offset = 0.0;
        for i in 0..k {
            let (alpha, beta) = self.table.combined(i, v);
            let size = self.dataset_size(i) as f64;
            let scale = n / size;
            for e in &self.examples[self.starts[i]..self.starts[i + 1]] {
                a_plus.push(if e.anchor_margin <= 0.5 { scale * alpha } else { 0.0 });
                a_minus.push(if e.anchor_margin >= -0.5 { scale * beta } else { 0.0 });
            }
            let (ao, bo) = self.table.objective[i];
            offset += (ao * self.above[i] as f64 + bo * self.below[i] as f64) / size;
        }
        let gamma_tilde = self
            .table
            .constraints
            .iter()
            .zip(&self.table.bounds)
            .map(|(row, gamma)| {
                gamma
                    - (0..k)
                        .map(|i| {
                            (row[i].0 * self.above[i] as f64 + row[i].1 * self.below[i] as f64)
                                / self.dataset_size(i) as f64
                        })
                        .sum::<f64>()
            })
            .collect();
        ExampleCoefficients {
            a_plus,
            a_minus,
            gamma_tilde,
            offset,
        }
    }

    /// `Psi` recomputed from the pooled SVM form.
    pub fn psi_from_coefficients(&self, coeffs: &ExampleCoefficients, clf: &LinearClassifier, v: &[f64]) -> f64 {
        let (w, b) = (clf.weights(), clf.bias());
        let losses: Vec<f64> = self
            .examples
            .iter()
            .enumerate()
            .map(|(idx, e)| per_example_loss(e.margin(w, b), coeffs.a_plus[idx], coeffs.a_minus[idx]))
            .collect();
        pairwise_sum(&losses) / self.n() as f64 + 0.5 * self.lambda() * clf.squared_norm() + coeffs.constant(v)
    }

    /// Largest per-example dual box width, `max_i (n/|D_i|)(A_i + B_i)`.
    pub fn lipschitz_constant(&self, v: &[f64]) -> f64 {
        let n = self.n() as f64;
        (0..self.starts.len() - 1)
            .map(|i| {
                let (a, b) = self.table.combined(i, v);
                n / self.dataset_size(i) as f64 * (a + b)
            })
            .fold(0.0, f64::max)
    }

    /// Half-width of a bias interval guaranteed to contain a minimizing `b`:
    /// `1/2 + X^2 B(v) / lambda`, where `B(v)` sums the combined coefficients.
    pub fn bias_radius(&self, v: &[f64]) -> f64 {
        let b: f64 = (0..self.starts.len() - 1)
            .map(|i| {
                let (a, b) = self.table.combined(i, v);
                a + b
            })
            .sum();
        0.5 + self.x_max * self.x_max * b / self.lambda()
    }
}
