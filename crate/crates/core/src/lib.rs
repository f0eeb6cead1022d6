//! Linear binary classifiers trained under dataset rate constraints.
//!
//! Rates (coverage, recall, churn, fairness ratios and so on) are relaxed
//! through a ramp loss, then minimized by majorization-minimization over
//! convex hinge subproblems. Each subproblem is solved as a saddle point:
//! a cutting plane over the Lagrange multipliers wraps a weighted SVM, which
//! is itself a cutting plane over the bias around an SDCA solver for `w`.

pub mod analysis;
pub mod baselines;
pub mod envelope;
pub mod error;
pub mod experiments;
pub mod io;
pub mod lp;
pub mod mm;
pub mod model;
pub mod rates;
pub mod run;
pub mod saddle;
pub mod sparse;
pub mod subproblem;
pub mod svm;
pub mod trace;

pub use error::{Error, Result};
pub use model::{ConstrainedProblem, Dataset, DatasetCollection, Polarity, RateCombination, RateConstraint};
pub use rates::{LinearClassifier, RateKind};
pub use sparse::SparseVector;
