//! JZS Bayes factor for the two-sample t statistic.
//!
//! `B01` is the evidence for "no difference" over a Cauchy-scaled alternative,
//! written as a one-dimensional integral over the prior variance `g`.

use serde::{Deserialize, Serialize};

use crate::cet::Decision;
use crate::error::{Error, Result};
use crate::quadrature::integrate;

const REL_TOL: f64 = 1e-10;
const MAX_SEGMENTS: usize = 4000;

/// Which degrees-of-freedom term enters the marginal likelihoods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BfConvention {
    /// `n* - 1` with exponent `-n*/2`, where `n* = n1 n2 / (n1 + n2)`.
    #[default]
    Printed,
    /// `nu = n1 + n2 - 2` with exponent `-(nu + 1)/2`.
    DegreesOfFreedom,
}

impl BfConvention {
    fn terms(self, n1: u64, n2: u64) -> Result<(f64, f64, f64)> {
        if n1 < 2 || n2 < 2 {
            return Err(Error::Input(format!(
                "each group needs at least 2 observations, got n1 = {n1}, n2 = {n2}"
            )));
        }
        let (a, b) = (n1 as f64, n2 as f64);
        let n_eff = a * b / (a + b);
        match self {
            BfConvention::Printed => {
                if n_eff <= 1.0 {
                    return Err(Error::Domain(format!(
                        "effective sample size n1 n2 / (n1 + n2) = {n_eff} must exceed 1"
                    )));
                }
                Ok((n_eff, n_eff - 1.0, 0.5 * n_eff))
            }
            BfConvention::DegreesOfFreedom => {
                let nu = a + b - 2.0;
                Ok((n_eff, nu, 0.5 * (nu + 1.0)))
            }
        }
    }
}

/// `B01` under the default convention.
pub fn jzs_bf01(t: f64, n1: u64, n2: u64) -> Result<f64> {
    jzs_bf01_with(t, n1, n2, BfConvention::Printed)
}

/// `B01` under an explicit convention.
pub fn jzs_bf01_with(t: f64, n1: u64, n2: u64, convention: BfConvention) -> Result<f64> {
    ln_bf01(t, n1, n2, convention).map(f64::exp)
}

/// Natural log of `B01`.
pub fn ln_bf01(t: f64, n1: u64, n2: u64, convention: BfConvention) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::Input(format!("t statistic must be finite, got {t}")));
    }
    let (n_eff, dof, power) = convention.terms(n1, n2)?;
    let t2 = t * t;
    let ln_null = -power * (t2 / dof).ln_1p();
    let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();

    // Log integrand over g, divided by the null likelihood.
    let ln_f = |g: f64| -> f64 {
        let spread = n_eff * g;
        -0.5 * spread.ln_1p()
            - power * (t2 / ((1.0 + spread) * dof)).ln_1p()
            - half_ln_2pi
            - 1.5 * g.ln()
            - 0.5 / g
            - ln_null
    };

    // Locate the peak on a log grid so the integrand can be rescaled.
    let peak = (-400..=400)
        .map(|k| ln_f((k as f64 * 0.1).exp()))
        .fold(f64::NEG_INFINITY, f64::max);

    // g = u / (1 - u) maps (0, inf) onto (0, 1).
    let integrand = |u: f64| -> f64 {
        let g = u / (1.0 - u);
        let jac = 1.0 / ((1.0 - u) * (1.0 - u));
        let v = (ln_f(g) - peak).exp() * jac;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let r = integrate(integrand, 0.0, 1.0, REL_TOL, MAX_SEGMENTS)?;
    if r.value <= 0.0 {
        return Err(Error::Quadrature {
            estimate: r.value,
            error_estimate: r.error,
            intervals: 0,
        });
    }
    Ok(-(peak + r.value.ln()))
}

/// Verdict from a Bayes factor: negative when `b01 >= threshold`, positive
/// when `b01 <= 1/threshold`, inconclusive in between.
pub fn bf_decision(b01: f64, threshold: f64) -> Result<Decision> {
    if !(threshold.is_finite() && threshold > 1.0) {
        return Err(Error::Input(format!(
            "threshold must exceed 1, got {threshold}"
        )));
    }
    if !(b01.is_finite() && b01 >= 0.0) {
        return Err(Error::Input(format!(
            "Bayes factor must be non-negative, got {b01}"
        )));
    }
    Ok(if b01 >= threshold {
        Decision::Negative
    } else if b01 <= 1.0 / threshold {
        Decision::Positive
    } else {
        Decision::Inconclusive
    })
}

/// Posterior probability of "no difference" given prior odds `Pr(H0)/Pr(H1)`.
pub fn posterior_h0(b01: f64, prior_odds: f64) -> Result<f64> {
    if !(prior_odds.is_finite() && prior_odds > 0.0) {
        return Err(Error::Input(format!(
            "prior odds must be positive, got {prior_odds}"
        )));
    }
    if b01.is_nan() || b01 < 0.0 {
        return Err(Error::Input(format!(
            "Bayes factor must be non-negative, got {b01}"
        )));
    }
    if b01.is_infinite() {
        return Ok(1.0);
    }
    let post = b01 * prior_odds;
    Ok(post / (1.0 + post))
}

/// Full Bayes factor report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BfResult {
    pub b01: f64,
    pub posterior_h0: f64,
    pub decision: Decision,
    pub threshold: f64,
}

pub fn bf_test(
    t: f64,
    n1: u64,
    n2: u64,
    threshold: f64,
    prior_odds: f64,
    convention: BfConvention,
) -> Result<BfResult> {
    let b01 = jzs_bf01_with(t, n1, n2, convention)?;
    Ok(BfResult {
        b01,
        posterior_h0: posterior_h0(b01, prior_odds)?,
        decision: bf_decision(b01, threshold)?,
        threshold,
    })
}
