//! Probability kernels used by the CET formulas.
//!
//! Only what the procedures need: the normal CDF, the central and noncentral
//! Student t CDFs, t and normal quantiles, and seeded chi-squared / normal
//! sampling. The regularized incomplete beta and `ln_gamma` come from
//! `statrs`, `erfc` from `libm`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::integrate;

/// Degrees of freedom. Real valued so that non-integer df can be supported.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Df(f64);

impl Df {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Df(value))
        } else {
            Err(Error::Domain(format!(
                "degrees of freedom must be positive and finite, got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Noncentrality parameter of the noncentral t distribution.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Ncp(f64);

impl Ncp {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() {
            Ok(Ncp(value))
        } else {
            Err(Error::Domain(format!(
                "noncentrality parameter must be finite, got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Generator used for every Monte Carlo computation in the crate.
pub type McRng = ChaCha8Rng;

/// Builds the generator for `stream` under a master `seed`.
///
/// Distinct streams are statistically independent, so grid cells can each
/// own a generator and produce identical results in any execution order.
pub fn stream_rng(seed: u64, stream: u64) -> McRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub fn normal_cdf(x: f64, mean: f64, sd: f64) -> Result<f64> {
    if !(sd.is_finite() && sd > 0.0) {
        return Err(Error::Domain(format!(
            "standard deviation must be positive, got {sd}"
        )));
    }
    Ok(std_normal_cdf((x - mean) / sd))
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> Result<f64> {
    check_probability(p)?;
    Ok(invert_cdf(p, std_normal_cdf, std_normal_pdf))
}

/// Central Student t CDF.
pub fn t_cdf(x: f64, df: Df) -> f64 {
    let nu = df.value();
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    let t2 = x * x;
    if t2 < nu {
        // Near the centre: the small-argument form avoids cancellation.
        let half = 0.5 * beta_reg(0.5, 0.5 * nu, t2 / (nu + t2));
        if x >= 0.0 {
            0.5 + half
        } else {
            0.5 - half
        }
    } else {
        let tail = 0.5 * beta_reg(0.5 * nu, 0.5, nu / (nu + t2));
        if x >= 0.0 {
            1.0 - tail
        } else {
            tail
        }
    }
}

fn t_pdf(x: f64, df: Df) -> f64 {
    let nu = df.value();
    let log_norm = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln();
    (log_norm - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()).exp()
}

/// Quantile of the central t distribution, by safeguarded Newton iteration on
/// [`t_cdf`].
pub fn t_quantile(p: f64, df: Df) -> Result<f64> {
    check_probability(p)?;
    Ok(invert_cdf(p, |x| t_cdf(x, df), |x| t_pdf(x, df)))
}

/// Noncentral t CDF.
///
/// When `x` and the noncentrality share a sign, uses the Poisson mixture of
/// incomplete beta functions, summed outward from the Poisson mode so that
/// large noncentralities do not underflow the leading weights. Every term is
/// then positive. When the signs differ the wanted tail is far from the bulk
/// and the mixture would cancel, so the chi-squared mixture of normal CDFs is
/// integrated instead.
pub fn noncentral_t_cdf(x: f64, df: Df, ncp: Ncp) -> f64 {
    let delta = ncp.value();
    let nu = df.value();
    if delta == 0.0 {
        return t_cdf(x, df);
    }
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    if x == 0.0 {
        return std_normal_cdf(-delta);
    }
    let value = match (x > 0.0, delta > 0.0) {
        (true, true) => std_normal_cdf(-delta) + 0.5 * nct_series(x, nu, delta, false),
        // F(x; d) = 1 - F(-x; -d), and the complement series keeps positive terms.
        (false, false) => 0.5 * nct_series(-x, nu, -delta, true),
        (false, true) => nct_far_tail(-x, nu, delta),
        (true, false) => 1.0 - nct_far_tail(x, nu, -delta),
    };
    value.clamp(0.0, 1.0)
}

const NCT_TAIL_TOL: f64 = 1e-15;
const NCT_MAX_TERMS: u64 = 200_000;

// Poisson-weighted beta mixture for t > 0, delta > 0. Plain, it returns
// 2 (F - Phi(-delta)); with `complement` the betas are replaced by their
// complements and it returns 2 (1 - F).
fn nct_series(t: f64, nu: f64, delta: f64, complement: bool) -> f64 {
    let denom = t * t + nu;
    let x = t * t / denom;
    let y = nu / denom;
    let b = 0.5 * nu;
    let lambda = 0.5 * delta * delta;
    let ln_lambda = lambda.ln();
    let q_scale = delta / SQRT_2;

    let ibeta = |a: f64| {
        if complement {
            beta_reg(b, a, y)
        } else {
            beta_reg(a, b, x)
        }
    };
    let poisson = |j: f64| (-lambda + j * ln_lambda - ln_gamma(j + 1.0)).exp();
    let q_weight = |j: f64| (-lambda + j * ln_lambda - ln_gamma(j + 1.5)).exp();
    let term = |j: f64| poisson(j) * ibeta(j + 0.5) + q_scale * q_weight(j) * ibeta(j + 1.0);
    let weight = |j: f64| poisson(j) + q_scale * q_weight(j);

    let mode = lambda.floor();
    let mut sum = term(mode);

    // Forward from the mode.
    let mut j = mode + 1.0;
    while j - mode < NCT_MAX_TERMS as f64 {
        sum += term(j);
        let ratio = lambda / (j + 1.0);
        if ratio < 1.0
            && weight(j) * ratio / (1.0 - ratio) < NCT_TAIL_TOL * sum.max(f64::MIN_POSITIVE)
        {
            break;
        }
        j += 1.0;
    }

    // Backward towards zero.
    let mut j = mode - 1.0;
    while j >= 0.0 {
        sum += term(j);
        let ratio = j / lambda;
        if ratio < 1.0
            && weight(j) * ratio / (1.0 - ratio) < NCT_TAIL_TOL * sum.max(f64::MIN_POSITIVE)
        {
            break;
        }
        j -= 1.0;
    }
    sum
}

// F(-t; nu, delta) for t > 0, delta > 0, as E[Phi(-t sqrt(V / nu) - delta)]
// with V chi-squared. Integrated over s = ln V, where the integrand is smooth.
fn nct_far_tail(t: f64, nu: f64, delta: f64) -> f64 {
    let half = 0.5 * nu;
    let ln_norm = half * std::f64::consts::LN_2 + ln_gamma(half);
    let f = |s: f64| {
        let v = s.exp();
        let tail = std_normal_cdf(-t * (v / nu).sqrt() - delta);
        tail * (half * s - 0.5 * v - ln_norm).exp()
    };
    // Outside this window the density is below 1e-300.
    let lo = -(700.0 / half) - 1.0;
    let hi = (2.0 * nu + 1500.0).ln();
    match integrate(f, lo, hi, 1e-13, 4000) {
        Ok(r) => r.value,
        Err(Error::Quadrature { estimate, .. }) => estimate,
        Err(_) => f64::NAN,
    }
}

/// One chi-squared draw with `df` degrees of freedom.
pub fn chi2_sample<R: Rng + ?Sized>(df: Df, rng: &mut R) -> f64 {
    ChiSquared::new(df.value())
        .expect("Df is validated positive")
        .sample(rng)
}

/// One standard normal draw.
pub fn std_normal_sample<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "probability must lie strictly inside (0, 1), got {p}"
        )))
    }
}

// Inverts a continuous, strictly increasing CDF. Newton steps are accepted
// only while they stay inside the current bracket; otherwise bisect.
fn invert_cdf(p: f64, cdf: impl Fn(f64) -> f64, pdf: impl Fn(f64) -> f64) -> f64 {
    let mut lo = -1.0;
    let mut hi = 1.0;
    while cdf(lo) > p {
        hi = lo;
        lo *= 2.0;
    }
    while cdf(hi) < p {
        lo = hi;
        hi *= 2.0;
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..300 {
        let err = cdf(x) - p;
        if err == 0.0 {
            return x;
        }
        if err < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let density = pdf(x);
        let newton = x - err / density;
        let next = if density > 0.0 && newton >= lo && newton <= hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs() {
            return next;
        }
        x = next;
    }
    x
}
