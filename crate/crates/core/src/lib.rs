//! Exact dyadic analysis on [0,1): step functions, the Walsh–Paley system,
//! flat-spectrum interval blocks, recursive interval and polynomial
//! approximants, a layered weight builder, and a greedy sign-selection
//! approximator for weighted Lp targets.

pub mod bent;
pub mod blockseq;
pub mod budget;
pub mod error;
pub mod flat;
pub mod interval;
pub mod interval_approx;
pub mod norm;
pub mod region;
pub mod report;
pub mod scalar;
pub mod stepfn;
pub mod walsh;

pub use budget::Budget;
pub use error::{Error, Result};
pub use interval::{DyadicInterval, IntervalSet};
pub use scalar::{Dyadic, Rational};
pub use stepfn::StepFunction;
