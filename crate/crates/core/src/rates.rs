//! Indicator, ramp and anchored hinge rates.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Dataset, DatasetCollection, Polarity, RateCombination};
use crate::sparse::{pairwise_sum, SparseVector};

/// `f(x) = <w, x> - b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    w: Vec<f64>,
    b: f64,
}

impl LinearClassifier {
    pub fn new(w: Vec<f64>, b: f64) -> Result<Self> {
        if !b.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("classifier has non-finite entries"));
        }
        Ok(LinearClassifier { w, b })
    }

    pub fn zeros(dim: usize) -> Self {
        LinearClassifier {
            w: vec![0.0; dim],
            b: 0.0,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn bias(&self) -> f64 {
        self.b
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn with_bias(&self, b: f64) -> Self {
        LinearClassifier { w: self.w.clone(), b }
    }

    pub fn margin(&self, x: &SparseVector) -> f64 {
        x.dot(&self.w) - self.b
    }

    /// Margin of an example from `dataset`, honouring bias-free datasets.
    pub fn margin_in(&self, dataset: &Dataset, x: &SparseVector) -> f64 {
        if dataset.uses_bias() {
            x.dot(&self.w) - self.b
        } else {
            x.dot(&self.w)
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.w.iter().map(|v| v * v).sum()
    }

    /// `(1 - t) * self + t * other`.
    pub fn lerp(&self, other: &LinearClassifier, t: f64) -> LinearClassifier {
        LinearClassifier {
            w: self
                .w
                .iter()
                .zip(&other.w)
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect(),
            b: (1.0 - t) * self.b + t * other.b,
        }
    }

    /// Deterministic rule: positive iff the margin is strictly positive.
    pub fn predict(&self, x: &SparseVector) -> bool {
        self.margin(x) > 0.0
    }
}

/// Which rate function to evaluate.
#[derive(Debug, Clone, Copy)]
pub enum RateKind<'a> {
    Indicator,
    Ramp,
    /// Hinge/constant upper bound, tight at the anchor.
    Bound(&'a LinearClassifier),
}

/// `max{0, min{1, 1/2 + z}}`
pub fn ramp(z: f64) -> f64 {
    (0.5 + z).clamp(0.0, 1.0)
}

/// Upper bound on `ramp(z)` anchored at `z_anchor`: the hinge
/// `max{0, 1/2 + z}` when `z_anchor <= 1/2`, otherwise the constant 1.
pub fn bound_positive(z: f64, z_anchor: f64) -> f64 {
    if z_anchor <= 0.5 {
        (0.5 + z).max(0.0)
    } else {
        1.0
    }
}

/// Mirror of [`bound_positive`] for the negative rate.
pub fn bound_negative(z: f64, z_anchor: f64) -> f64 {
    bound_positive(-z, -z_anchor)
}

fn check_dim(dataset: &Dataset, clf: &LinearClassifier) -> Result<()> {
    if dataset.dim() != clf.dim() {
        return Err(Error::domain(format!(
            "classifier dimension {} does not match dataset `{}` dimension {}",
            clf.dim(),
            dataset.id(),
            dataset.dim()
        )));
    }
    if dataset.is_empty() {
        return Err(Error::domain(format!("dataset `{}` is empty", dataset.id())));
    }
    Ok(())
}

fn mean_of<F: Fn(&SparseVector) -> f64>(dataset: &Dataset, f: F) -> f64 {
    let vals: Vec<f64> = dataset.examples().iter().map(f).collect();
    pairwise_sum(&vals) / vals.len() as f64
}

/// `(s_p, s_n)` under the deterministic rule.
pub fn indicator_rates(dataset: &Dataset, clf: &LinearClassifier) -> Result<(f64, f64)> {
    check_dim(dataset, clf)?;
    let positives = dataset
        .examples()
        .iter()
        .filter(|x| clf.margin_in(dataset, x) > 0.0)
        .count();
    let n = dataset.len();
    Ok((positives as f64 / n as f64, (n - positives) as f64 / n as f64))
}

/// `(r_p, r_n)`: expected rates of the randomized rule.
pub fn ramp_rates(dataset: &Dataset, clf: &LinearClassifier) -> Result<(f64, f64)> {
    check_dim(dataset, clf)?;
    let rp = mean_of(dataset, |x| ramp(clf.margin_in(dataset, x)));
    let rn = mean_of(dataset, |x| ramp(-clf.margin_in(dataset, x)));
    Ok((rp, rn))
}

/// Anchored upper bounds `(ř_p, ř_n)` on the ramp rates.
pub fn bound_rates(dataset: &Dataset, clf: &LinearClassifier, anchor: &LinearClassifier) -> Result<(f64, f64)> {
    check_dim(dataset, clf)?;
    check_dim(dataset, anchor)?;
    let rp = mean_of(dataset, |x| {
        bound_positive(clf.margin_in(dataset, x), anchor.margin_in(dataset, x))
    });
    let rn = mean_of(dataset, |x| {
        bound_negative(clf.margin_in(dataset, x), anchor.margin_in(dataset, x))
    });
    Ok((rp, rn))
}

pub fn rates(dataset: &Dataset, clf: &LinearClassifier, kind: RateKind<'_>) -> Result<(f64, f64)> {
    match kind {
        RateKind::Indicator => indicator_rates(dataset, clf),
        RateKind::Ramp => ramp_rates(dataset, clf),
        RateKind::Bound(anchor) => bound_rates(dataset, clf, anchor),
    }
}

/// Rates of every dataset in the collection, in collection order.
pub fn all_rates(datasets: &DatasetCollection, clf: &LinearClassifier, kind: RateKind<'_>) -> Result<Vec<(f64, f64)>> {
    datasets.iter().map(|d| rates(d, clf, kind)).collect()
}

/// `sum coefficient * rate + constant`.
pub fn evaluate_combination(
    combo: &RateCombination,
    datasets: &DatasetCollection,
    clf: &LinearClassifier,
    kind: RateKind<'_>,
) -> Result<f64> {
    combo.evaluate_with(|id, polarity| {
        let dataset = datasets
            .get(id)
            .ok_or_else(|| Error::config(format!("unknown or empty dataset `{id}`")))?;
        let (p, n) = rates(dataset, clf, kind)?;
        Ok(match polarity {
            Polarity::Positive => p,
            Polarity::Negative => n,
        })
    })
}

/// Same as [`evaluate_combination`] but reusing precomputed per-dataset rates.
pub fn evaluate_with_rates(combo: &RateCombination, datasets: &DatasetCollection, rates: &[(f64, f64)]) -> f64 {
    let mut total = combo.constant();
    for t in combo.terms() {
        let i = datasets.index_of(&t.dataset).expect("validated dataset id");
        total += t.coefficient
            * match t.polarity {
                Polarity::Positive => rates[i].0,
                Polarity::Negative => rates[i].1,
            };
    }
    total
}

/// Randomized rule: positive iff `u < ramp(margin)`, for `u` uniform in `[0, 1)`.
pub fn randomized_predict(x: &SparseVector, clf: &LinearClassifier, u: f64) -> bool {
    u < ramp(clf.margin(x))
}

/// Monte-Carlo positive rate of the randomized rule, cycling over the
/// dataset until at least `min_draws` predictions have been made.
pub fn randomized_positive_rate<R: Rng>(
    dataset: &Dataset,
    clf: &LinearClassifier,
    min_draws: usize,
    rng: &mut R,
) -> Result<f64> {
    check_dim(dataset, clf)?;
    let passes = min_draws.div_ceil(dataset.len()).max(1);
    let mut positives = 0usize;
    for _ in 0..passes {
        for x in dataset.examples() {
            if rng.random::<f64>() < ramp(clf.margin_in(dataset, x)) {
                positives += 1;
            }
        }
    }
    Ok(positives as f64 / (passes * dataset.len()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line(id: &str, pts: &[f64]) -> Dataset {
        Dataset::new(id, 1, pts.iter().map(|&p| SparseVector::from_dense(&[p])).collect()).unwrap()
    }

    fn clf(w: f64, b: f64) -> LinearClassifier {
        LinearClassifier::new(vec![w], b).unwrap()
    }

    #[test]
    fn ramp_values() {
        assert_eq!(ramp(0.0), 0.5);
        assert_eq!(ramp(0.7), 1.0);
        assert_eq!(ramp(-0.6), 0.0);
    }

    #[test]
    fn indicator_examples() {
        let d = line("D", &[1.0, -1.0]);
        assert_eq!(indicator_rates(&d, &clf(1.0, 0.0)).unwrap(), (0.5, 0.5));
        assert_eq!(indicator_rates(&d, &clf(0.0, 0.0)).unwrap(), (0.0, 1.0));
        assert_eq!(indicator_rates(&line("D", &[2.0]), &clf(1.0, 1.0)).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn ramp_examples() {
        assert_eq!(ramp_rates(&line("D", &[0.0]), &clf(1.0, 0.0)).unwrap(), (0.5, 0.5));
        assert_eq!(ramp_rates(&line("D", &[0.2, -0.2]), &clf(1.0, 0.0)).unwrap(), (0.5, 0.5));
        assert_eq!(ramp_rates(&line("D", &[1.0]), &clf(1.0, 0.0)).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn bound_examples() {
        assert_eq!(bound_positive(0.0, 0.0), 0.5);
        assert_eq!(bound_positive(-3.0, 1.0), 1.0);
        assert_eq!(bound_positive(2.0, 0.0), 2.5);
        // boundary takes the hinge branch
        assert_eq!(bound_positive(-3.0, 0.5), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let d = line("D", &[1.0]);
        assert!(matches!(
            indicator_rates(&d, &LinearClassifier::zeros(2)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn coverage_evaluation() {
        let mut ds = DatasetCollection::new();
        ds.insert(line("D", &[1.0, -1.0])).unwrap();
        let cov = RateCombination::positive("D", 1.0);
        let c = clf(1.0, 0.0);
        assert_eq!(evaluate_combination(&cov, &ds, &c, RateKind::Indicator).unwrap(), 0.5);
        assert_eq!(evaluate_combination(&cov, &ds, &c, RateKind::Ramp).unwrap(), 0.5);
    }

    #[test]
    fn randomized_extremes() {
        let x = SparseVector::from_dense(&[1.0]);
        assert!(randomized_predict(&x, &clf(5.0, 0.0), 0.999_999));
        assert!(!randomized_predict(&x, &clf(-5.0, 0.0), 0.0));
    }

    #[test]
    fn randomized_mean_at_half() {
        let d = line("D", &[0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let rate = randomized_positive_rate(&d, &clf(1.0, 0.0), n, &mut rng).unwrap();
        assert!((rate - 0.5).abs() <= 3.0 * 0.5 / (n as f64).sqrt());
    }
}
