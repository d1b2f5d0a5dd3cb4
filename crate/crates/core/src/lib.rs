//! Conditional equivalence testing (CET).
//!
//! CET runs a standard two-sided test first and, only when that test fails
//! to reject, follows up with an equivalence test (TOST). Every analysis ends
//! in one of three verdicts: positive, negative or inconclusive.
//!
//! The crate is organised as:
//!
//! - [`distributions`]: normal, Student t and noncentral t kernels plus
//!   chi-squared sampling.
//! - [`cet`]: the decision procedures, margins, LEAD and equivalence curves.
//! - [`oc`]: operating characteristics, probability of success and
//!   sample-size search.
//! - [`bayes`]: the JZS Bayes factor used for comparison.
//! - [`sim`]: the seeded simulation harness.

pub mod bayes;
pub mod cet;
pub mod distributions;
mod error;
pub mod oc;
mod quadrature;
pub mod sim;

pub use crate::bayes::{
    bf_decision, bf_test, jzs_bf01, jzs_bf01_with, posterior_h0, BfConvention, BfResult,
};
pub use crate::cet::{
    cet_general, cet_two_sample, classify_region, equivalence_curve, lead_margin, summarize,
    Alphas, CetOutcome, Decision, Interval, Margin, SummaryStats,
};
pub use crate::distributions::{Df, Ncp};
pub use crate::error::{Error, Result};
pub use crate::oc::{DesignPoint, McConfig, McEstimate, OperatingChars, SampleSize};
pub use crate::sim::{run_grid, CellResult, SimGrid};
