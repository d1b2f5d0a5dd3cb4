//! Conditional equivalence testing decision procedures.
//!
//! [`cet_two_sample`] runs the five-step procedure for two independent
//! normal samples with a common variance: a two-sided t test, and when that
//! fails to reject, two one-sided tests (TOST) against a symmetric margin.
//! [`cet_general`] is the confidence-interval form that works for any
//! estimate with a standard error. [`classify_region`] answers the same
//! question directly from the sufficient statistics `(mu_hat_d, s_star)`.

use serde::{Deserialize, Serialize};

use crate::distributions::{normal_quantile, std_normal_cdf, t_cdf, t_quantile, Df};
use crate::error::{Error, Result};

/// Three-way verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    /// The null value is rejected: a statistically significant difference.
    Positive,
    /// Equivalence within the margin is established.
    Negative,
    /// Neither test succeeded.
    Inconclusive,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Positive => "positive",
            Decision::Negative => "negative",
            Decision::Inconclusive => "inconclusive",
        }
    }
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Closed interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        Interval { lower, upper }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// True when `self` lies inside `other`, endpoints included.
    pub fn is_within(&self, other: &Interval) -> bool {
        other.lower <= self.lower && self.upper <= other.upper
    }
}

/// Sufficient statistics of a two-sample dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n1: u64,
    pub n2: u64,
    pub xbar1: f64,
    pub xbar2: f64,
    /// Pooled standard deviation.
    pub s_p: f64,
}

impl SummaryStats {
    pub fn new(n1: u64, n2: u64, xbar1: f64, xbar2: f64, s_p: f64) -> Result<Self> {
        if n1 < 2 || n2 < 2 {
            return Err(Error::Input(format!(
                "each group needs at least 2 observations, got n1 = {n1}, n2 = {n2}"
            )));
        }
        if !(s_p.is_finite() && s_p >= 0.0) {
            return Err(Error::Input(format!(
                "pooled standard deviation must be finite and nonnegative, got {s_p}"
            )));
        }
        if !(xbar1.is_finite() && xbar2.is_finite()) {
            return Err(Error::Input("group means must be finite".into()));
        }
        Ok(SummaryStats {
            n1,
            n2,
            xbar1,
            xbar2,
            s_p,
        })
    }

    /// Builds statistics from a mean difference and `s_star` directly.
    /// The group means are set to `(mu_hat_d, 0)`.
    pub fn from_estimate(n1: u64, n2: u64, mu_hat_d: f64, s_star: f64) -> Result<Self> {
        let scale = (1.0 / n1 as f64 + 1.0 / n2 as f64).sqrt();
        SummaryStats::new(n1, n2, mu_hat_d, 0.0, s_star / scale)
    }

    pub fn n(&self) -> u64 {
        self.n1 + self.n2
    }

    pub fn df(&self) -> Df {
        Df::new((self.n() - 2) as f64).expect("n1, n2 >= 2")
    }

    pub fn mu_hat_d(&self) -> f64 {
        self.xbar1 - self.xbar2
    }

    /// Standard error of the mean difference, `s_p * sqrt(1/n1 + 1/n2)`.
    pub fn s_star(&self) -> f64 {
        self.s_p * (1.0 / self.n1 as f64 + 1.0 / self.n2 as f64).sqrt()
    }

    /// Both samples had zero variance.
    pub fn is_degenerate(&self) -> bool {
        self.s_p == 0.0
    }
}

/// Equivalence margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Margin {
    /// `[-delta, delta]` around the null value.
    RawSymmetric { delta: f64 },
    /// Arbitrary `[lower, upper]` that must contain the null value.
    General { lower: f64, upper: f64 },
    /// `delta = q * s_p`, resolved against the observed pooled SD.
    Standardized { q: f64 },
}

impl Margin {
    pub fn raw(delta: f64) -> Result<Self> {
        if delta.is_finite() && delta > 0.0 {
            Ok(Margin::RawSymmetric { delta })
        } else {
            Err(Error::Input(format!(
                "margin delta must be positive, got {delta}"
            )))
        }
    }

    pub fn general(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_finite() && upper.is_finite() && lower < upper {
            Ok(Margin::General { lower, upper })
        } else {
            Err(Error::Input(format!(
                "margin needs lower < upper, got [{lower}, {upper}]"
            )))
        }
    }

    /// The interval `[theta0 - delta, theta0 + delta]`.
    pub fn symmetric_around(theta0: f64, delta: f64) -> Result<Self> {
        Margin::raw(delta)?;
        Margin::general(theta0 - delta, theta0 + delta)
    }

    pub fn standardized(q: f64) -> Result<Self> {
        if q.is_finite() && q > 0.0 {
            Ok(Margin::Standardized { q })
        } else {
            Err(Error::Input(format!(
                "standardized margin q must be positive, got {q}"
            )))
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Margin::RawSymmetric { delta } => Margin::raw(delta).map(|_| ()),
            Margin::General { lower, upper } => Margin::general(lower, upper).map(|_| ()),
            Margin::Standardized { q } => Margin::standardized(q).map(|_| ()),
        }
    }

    /// Half-width of a margin centred at zero, given the pooled SD for
    /// standardized margins. Asymmetric general margins are rejected.
    pub fn resolve_symmetric(&self, s_p: f64) -> Result<f64> {
        self.validate()?;
        match *self {
            Margin::RawSymmetric { delta } => Ok(delta),
            Margin::Standardized { q } => Ok(q * s_p),
            Margin::General { lower, upper } => {
                let delta = 0.5 * (upper - lower);
                if (lower + upper).abs() <= 1e-12 * delta {
                    Ok(delta)
                } else {
                    Err(Error::Input(format!(
                        "two-sample procedure needs a margin symmetric around 0, got [{lower}, {upper}]; \
                         use cet_general for asymmetric margins"
                    )))
                }
            }
        }
    }
}

/// Type I and type E error levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alphas {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl Alphas {
    pub fn new(alpha1: f64, alpha2: f64) -> Result<Self> {
        for (name, a) in [("alpha1", alpha1), ("alpha2", alpha2)] {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::Input(format!("{name} must lie in (0, 1), got {a}")));
            }
        }
        Ok(Alphas { alpha1, alpha2 })
    }

    pub fn validate(&self) -> Result<()> {
        Alphas::new(self.alpha1, self.alpha2).map(|_| ())
    }

    /// `(t*_{alpha1/2}, t*_{alpha2})`.
    pub fn critical_values(&self, df: Df) -> Result<(f64, f64)> {
        self.validate()?;
        Ok((
            t_quantile(1.0 - 0.5 * self.alpha1, df)?,
            t_quantile(1.0 - self.alpha2, df)?,
        ))
    }
}

impl Default for Alphas {
    fn default() -> Self {
        Alphas {
            alpha1: 0.05,
            alpha2: 0.10,
        }
    }
}

/// Full result of a CET analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CetOutcome {
    pub decision: Decision,
    /// Two-sided p-value of the difference test.
    pub p1: f64,
    /// TOST p-value; marginal, so reported for every decision.
    pub p2: f64,
    /// `p1` for positive results, `1 - p2` otherwise.
    pub p_cet: f64,
    /// `(1 - alpha1)` confidence interval.
    pub ci_wide: Interval,
    /// `(1 - 2 alpha2)` confidence interval.
    pub ci_narrow: Interval,
    /// Half-width of the margin actually used.
    pub resolved_delta: f64,
}

/// Computes `SummaryStats` from two raw samples.
pub fn summarize(sample1: &[f64], sample2: &[f64]) -> Result<SummaryStats> {
    if sample1.len() < 2 || sample2.len() < 2 {
        return Err(Error::Input(format!(
            "each sample needs at least 2 values, got {} and {}",
            sample1.len(),
            sample2.len()
        )));
    }
    if sample1.iter().chain(sample2).any(|v| !v.is_finite()) {
        return Err(Error::Input(
            "samples must contain only finite values".into(),
        ));
    }
    let (m1, ss1) = mean_and_ss(sample1);
    let (m2, ss2) = mean_and_ss(sample2);
    let n1 = sample1.len() as u64;
    let n2 = sample2.len() as u64;
    let s_p = ((ss1 + ss2) / (n1 + n2 - 2) as f64).sqrt();
    SummaryStats::new(n1, n2, m1, m2, s_p)
}

// Mean and sum of squared deviations (two-pass).
fn mean_and_ss(xs: &[f64]) -> (f64, f64) {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss)
}

// Difference test, then equivalence test, on the t scale. Shared by every
// two-sample entry point so they agree to the last bit.
fn decide(mu_hat_d: f64, s_star: f64, delta: f64, t1: f64, t2: f64) -> Decision {
    let t = mu_hat_d / s_star;
    if t.abs() > t1 {
        return Decision::Positive;
    }
    let t_lower = (mu_hat_d + delta) / s_star;
    let t_upper = (mu_hat_d - delta) / s_star;
    if t_lower > t2 && t_upper < -t2 {
        Decision::Negative
    } else {
        Decision::Inconclusive
    }
}

/// Two-sample CET with a symmetric margin.
pub fn cet_two_sample(
    stats: &SummaryStats,
    margin: &Margin,
    alphas: &Alphas,
) -> Result<CetOutcome> {
    if stats.is_degenerate() {
        return Err(Error::Degenerate {
            mu_hat_d: stats.mu_hat_d(),
        });
    }
    let delta = margin.resolve_symmetric(stats.s_p)?;
    let df = stats.df();
    let (t1, t2) = alphas.critical_values(df)?;
    let mu = stats.mu_hat_d();
    let se = stats.s_star();

    let t = mu / se;
    let p1 = 2.0 * t_cdf(-t.abs(), df);
    let t_lower = (mu + delta) / se;
    let t_upper = (mu - delta) / se;
    let p2 = t_cdf(-t_lower, df).max(t_cdf(t_upper, df));

    let decision = decide(mu, se, delta, t1, t2);
    Ok(CetOutcome {
        decision,
        p1,
        p2,
        p_cet: if decision == Decision::Positive {
            p1
        } else {
            1.0 - p2
        },
        ci_wide: Interval::new(mu - t1 * se, mu + t1 * se),
        ci_narrow: Interval::new(mu - t2 * se, mu + t2 * se),
        resolved_delta: delta,
    })
}

type QuantileFn = Box<dyn Fn(f64) -> Result<f64>>;
type CdfFn = Box<dyn Fn(f64) -> f64>;

/// Confidence-interval form of CET for an arbitrary estimate.
///
/// `df = None` uses normal quantiles. A `RawSymmetric` margin is centred at
/// `theta0`; a `General` margin is used as given and must contain `theta0`.
pub fn cet_general(
    theta_hat: f64,
    se: f64,
    df: Option<Df>,
    theta0: f64,
    margin: &Margin,
    alphas: &Alphas,
) -> Result<CetOutcome> {
    if !(se.is_finite() && se > 0.0) {
        return Err(Error::Input(format!(
            "standard error must be positive, got {se}"
        )));
    }
    if !(theta_hat.is_finite() && theta0.is_finite()) {
        return Err(Error::Input(
            "estimate and null value must be finite".into(),
        ));
    }
    alphas.validate()?;
    margin.validate()?;
    let bounds = match *margin {
        Margin::RawSymmetric { delta } => Interval::new(theta0 - delta, theta0 + delta),
        Margin::General { lower, upper } => Interval::new(lower, upper),
        Margin::Standardized { .. } => {
            return Err(Error::Input(
                "standardized margins need a pooled SD; use cet_two_sample".into(),
            ))
        }
    };
    if !(bounds.lower < theta0 && theta0 < bounds.upper) {
        return Err(Error::Input(format!(
            "margin [{}, {}] must contain the null value {theta0}",
            bounds.lower, bounds.upper
        )));
    }

    let (quantile, cdf): (QuantileFn, CdfFn) = match df {
        Some(df) => (
            Box::new(move |p| t_quantile(p, df)),
            Box::new(move |x| t_cdf(x, df)),
        ),
        None => (Box::new(normal_quantile), Box::new(std_normal_cdf)),
    };
    let q1 = quantile(1.0 - 0.5 * alphas.alpha1)?;
    let q2 = quantile(1.0 - alphas.alpha2)?;

    let ci_wide = Interval::new(theta_hat - q1 * se, theta_hat + q1 * se);
    let ci_narrow = Interval::new(theta_hat - q2 * se, theta_hat + q2 * se);

    let p1 = 2.0 * cdf(-((theta_hat - theta0) / se).abs());
    let p2 = cdf(-(theta_hat - bounds.lower) / se).max(cdf((theta_hat - bounds.upper) / se));

    let decision = if !ci_wide.contains(theta0) {
        Decision::Positive
    } else if ci_narrow.is_within(&bounds) {
        Decision::Negative
    } else {
        Decision::Inconclusive
    };
    Ok(CetOutcome {
        decision,
        p1,
        p2,
        p_cet: if decision == Decision::Positive {
            p1
        } else {
            1.0 - p2
        },
        ci_wide,
        ci_narrow,
        resolved_delta: 0.5 * (bounds.upper - bounds.lower),
    })
}

/// Verdict for the point `(mu_hat_d, s_star)` of the two-sample plane with
/// `n1 + n2 - 2` degrees of freedom.
pub fn classify_region(
    mu_hat_d: f64,
    s_star: f64,
    delta: f64,
    df: Df,
    alphas: &Alphas,
) -> Result<Decision> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::Input(format!("delta must be positive, got {delta}")));
    }
    if !(s_star.is_finite() && s_star > 0.0) {
        return Err(Error::Input(format!(
            "s_star must be positive, got {s_star}"
        )));
    }
    let (t1, t2) = alphas.critical_values(df)?;
    Ok(classify_with_critical(mu_hat_d, s_star, delta, t1, t2))
}

/// Same as [`classify_region`] with precomputed critical values, for hot loops.
pub fn classify_with_critical(
    mu_hat_d: f64,
    s_star: f64,
    delta: f64,
    t1: f64,
    t2: f64,
) -> Decision {
    decide(mu_hat_d, s_star, delta, t1, t2)
}

/// Corners of the negative region in the `(mu_hat_d, s_star)` plane, in the
/// order bottom, left, top, right.
pub fn diamond_corners(delta: f64, df: Df, alphas: &Alphas) -> Result<[(f64, f64); 4]> {
    let (t1, t2) = alphas.critical_values(df)?;
    let side_x = delta / (t2 / t1 + 1.0);
    let side_y = delta / (t1 + t2);
    Ok([
        (0.0, 0.0),
        (-side_x, side_y),
        (0.0, delta / t2),
        (side_x, side_y),
    ])
}

/// Least equivalent allowable difference: the margin at which the
/// `(1 - 2 alpha2)` interval just touches `[-delta, delta]`. Any strictly
/// larger margin gives a negative result whenever the difference test does
/// not reject.
pub fn lead_margin(stats: &SummaryStats, alpha2: f64) -> Result<f64> {
    if stats.is_degenerate() {
        return Err(Error::Degenerate {
            mu_hat_d: stats.mu_hat_d(),
        });
    }
    if !(alpha2 > 0.0 && alpha2 < 1.0) {
        return Err(Error::Input(format!(
            "alpha2 must lie in (0, 1), got {alpha2}"
        )));
    }
    let t2 = t_quantile(1.0 - alpha2, stats.df())?;
    let mu = stats.mu_hat_d();
    let half = t2 * stats.s_star();
    Ok((mu - half).abs().max((mu + half).abs()))
}

/// TOST p-value as a function of the margin half-width.
pub fn equivalence_curve(stats: &SummaryStats, delta_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if stats.is_degenerate() {
        return Err(Error::Degenerate {
            mu_hat_d: stats.mu_hat_d(),
        });
    }
    if delta_grid.is_empty() {
        return Err(Error::Input("delta grid is empty".into()));
    }
    let df = stats.df();
    let mu = stats.mu_hat_d();
    let se = stats.s_star();
    delta_grid
        .iter()
        .map(|&delta| {
            if !(delta.is_finite() && delta > 0.0) {
                return Err(Error::Input(format!(
                    "grid values must be positive, got {delta}"
                )));
            }
            let p2 = t_cdf(-(mu + delta) / se, df).max(t_cdf((mu - delta) / se, df));
            Ok((delta, p2))
        })
        .collect()
}
