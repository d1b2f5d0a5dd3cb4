//! Operating characteristics of two-sample CET.
//!
//! `Pr(positive)` is the ordinary two-sided power and is computed exactly
//! from the noncentral t distribution. `Pr(negative)` integrates the normal
//! law of the mean difference over the negative region, conditional on the
//! pooled SD, and averages over chi-squared draws of the pooled SD.
//! `Pr(inconclusive)` is the complement.

use rand_distr::{ChiSquared, Distribution};
use serde::{Deserialize, Serialize};

use crate::cet::{classify_with_critical, Alphas, Decision, Margin};
use crate::distributions::{
    noncentral_t_cdf, std_normal_cdf, std_normal_sample, stream_rng, t_quantile, Df, McRng, Ncp,
};
use crate::error::{Error, Result};

pub const DEFAULT_DRAWS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 20_171_017;
pub const DEFAULT_MAX_N: u64 = 1_000_000;

/// True parameters and design of a two-sample study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub mu_d: f64,
    pub sigma: f64,
    pub n1: u64,
    pub n2: u64,
    pub margin: Margin,
    pub alphas: Alphas,
}

impl DesignPoint {
    pub fn new(
        mu_d: f64,
        sigma: f64,
        n1: u64,
        n2: u64,
        margin: Margin,
        alphas: Alphas,
    ) -> Result<Self> {
        let dp = DesignPoint {
            mu_d,
            sigma,
            n1,
            n2,
            margin,
            alphas,
        };
        dp.validate()?;
        Ok(dp)
    }

    /// Balanced design with `n` total observations; odd `n` is rounded up.
    pub fn balanced(mu_d: f64, sigma: f64, n: u64, margin: Margin, alphas: Alphas) -> Result<Self> {
        let half = n.div_ceil(2);
        DesignPoint::new(mu_d, sigma, half, half, margin, alphas)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu_d.is_finite() {
            return Err(Error::Input(format!(
                "mu_d must be finite, got {}",
                self.mu_d
            )));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::Input(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.n1 < 2 || self.n2 < 2 {
            return Err(Error::Input(format!(
                "each group needs at least 2 observations, got n1 = {}, n2 = {}",
                self.n1, self.n2
            )));
        }
        self.margin.validate()?;
        self.alphas.validate()
    }

    pub fn n(&self) -> u64 {
        self.n1 + self.n2
    }

    pub fn df(&self) -> Df {
        Df::new((self.n() - 2) as f64).expect("n1, n2 >= 2")
    }

    /// `sqrt(1/n1 + 1/n2)`.
    pub fn scale(&self) -> f64 {
        (1.0 / self.n1 as f64 + 1.0 / self.n2 as f64).sqrt()
    }

    /// Standard deviation of the estimated mean difference.
    pub fn sigma_star(&self) -> f64 {
        self.sigma * self.scale()
    }

    fn with_mu(&self, mu_d: f64) -> Self {
        DesignPoint { mu_d, ..*self }
    }
}

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub draws: u64,
    pub seed: u64,
}

impl McConfig {
    pub fn new(draws: u64, seed: u64) -> Result<Self> {
        if draws == 0 {
            return Err(Error::Input("Monte Carlo draws must be at least 1".into()));
        }
        Ok(McConfig { draws, seed })
    }
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            draws: DEFAULT_DRAWS,
            seed: DEFAULT_SEED,
        }
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

impl McEstimate {
    pub fn exact(value: f64) -> Self {
        McEstimate {
            estimate: value,
            stderr: 0.0,
        }
    }
}

/// Probabilities of the three verdicts at one design point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingChars {
    pub pr_positive: f64,
    pub pr_negative: f64,
    pub pr_inconclusive: f64,
    /// Standard error of the Monte Carlo components; 0 when exact.
    pub mc_stderr: f64,
}

/// Whether each verdict can occur at all under a standardized margin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feasibility {
    pub negative_possible: bool,
    pub inconclusive_possible: bool,
}

/// Two-sided power of the difference test (exact).
pub fn pr_positive(dp: &DesignPoint) -> Result<f64> {
    dp.validate()?;
    let df = dp.df();
    let crit = t_quantile(1.0 - 0.5 * dp.alphas.alpha1, df)?;
    if dp.mu_d == 0.0 {
        return Ok(dp.alphas.alpha1);
    }
    let ncp = Ncp::new(dp.mu_d / dp.sigma_star())?;
    let upper = 1.0 - noncentral_t_cdf(crit, df, ncp);
    let lower = noncentral_t_cdf(-crit, df, ncp);
    Ok((upper + lower).clamp(0.0, 1.0))
}

// Running mean / variance (Welford).
#[derive(Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn estimate(&self) -> McEstimate {
        let stderr = if self.count > 1 {
            (self.m2 / (self.count - 1) as f64 / self.count as f64).sqrt()
        } else {
            0.0
        };
        McEstimate {
            estimate: self.mean,
            stderr,
        }
    }
}

// Pr(lower < mu_hat < upper) where mu_hat ~ N(mu_d, sigma_star), with the
// interval given by the negative region at pooled-SD draw `s_p`.
fn negative_slice(mu_d: f64, sigma_star: f64, lower: f64, upper: f64) -> f64 {
    if upper <= lower {
        return 0.0;
    }
    std_normal_cdf((upper - mu_d) / sigma_star) - std_normal_cdf((lower - mu_d) / sigma_star)
}

fn pooled_sd_sampler(dp: &DesignPoint) -> impl FnMut(&mut McRng) -> f64 {
    let df = dp.df().value();
    let chi2 = ChiSquared::new(df).expect("df >= 2");
    let sigma = dp.sigma;
    move |rng| sigma * (chi2.sample(rng) / df).sqrt()
}

/// Monte Carlo `Pr(negative)` for a raw margin.
///
/// For each chi-squared draw the pooled SD is fixed and the mean difference
/// is integrated exactly over the slice of the negative region, bounded by
/// `h1 = max(lower + s t2, -s t1)` and `h2 = min(upper - s t2, s t1)`.
/// General margins are accepted when they contain 0.
pub fn pr_negative_mc(dp: &DesignPoint, mc: &McConfig) -> Result<McEstimate> {
    dp.validate()?;
    let (lower, upper) = match dp.margin {
        Margin::RawSymmetric { delta } => (-delta, delta),
        Margin::General { lower, upper } if lower < 0.0 && upper > 0.0 => (lower, upper),
        Margin::General { lower, upper } => {
            return Err(Error::Input(format!(
                "margin [{lower}, {upper}] must contain 0"
            )))
        }
        Margin::Standardized { .. } => {
            return Err(Error::Input(
                "standardized margins are handled by pr_negative_standardized".into(),
            ))
        }
    };
    let (t1, t2) = dp.alphas.critical_values(dp.df())?;
    let scale = dp.scale();
    let sigma_star = dp.sigma_star();
    let mut draw_sp = pooled_sd_sampler(dp);
    let mut rng = stream_rng(mc.seed, 0);
    let mut acc = Moments::default();
    for _ in 0..mc.draws {
        let s = draw_sp(&mut rng) * scale;
        let h1 = (lower + s * t2).max(-s * t1);
        let h2 = (upper - s * t2).min(s * t1);
        acc.push(negative_slice(dp.mu_d, sigma_star, h1, h2));
    }
    Ok(acc.estimate())
}

/// Monte Carlo `Pr(negative)` when the margin is `q * s_p`.
///
/// The margin moves with each pooled-SD draw. Exactly zero whenever
/// [`feasibility`] rules a negative result out. `dp.margin` is ignored.
pub fn pr_negative_standardized(q: f64, dp: &DesignPoint, mc: &McConfig) -> Result<McEstimate> {
    dp.validate()?;
    Margin::standardized(q)?;
    if !feasibility(q, dp.n1, dp.n2, &dp.alphas)?.negative_possible {
        return Ok(McEstimate::exact(0.0));
    }
    let (t1, t2) = dp.alphas.critical_values(dp.df())?;
    let scale = dp.scale();
    let sigma_star = dp.sigma_star();
    let mut draw_sp = pooled_sd_sampler(dp);
    let mut rng = stream_rng(mc.seed, 0);
    let mut acc = Moments::default();
    for _ in 0..mc.draws {
        let sp = draw_sp(&mut rng);
        let s = sp * scale;
        let delta = q * sp;
        let h1 = (-delta + s * t2).max(-s * t1);
        let h2 = (delta - s * t2).min(s * t1);
        acc.push(negative_slice(dp.mu_d, sigma_star, h1, h2));
    }
    Ok(acc.estimate())
}

/// `Pr(negative)` for any margin kind.
pub fn pr_negative(dp: &DesignPoint, mc: &McConfig) -> Result<McEstimate> {
    match dp.margin {
        Margin::Standardized { q } => pr_negative_standardized(q, dp, mc),
        _ => pr_negative_mc(dp, mc),
    }
}

/// Evaluates the two feasibility inequalities of a standardized margin:
/// negative requires `q > t2 * sqrt(1/n1 + 1/n2)`, inconclusive requires
/// `q / sqrt(1/n1 + 1/n2) < t1 + t2`.
pub fn feasibility(q: f64, n1: u64, n2: u64, alphas: &Alphas) -> Result<Feasibility> {
    if n1 < 2 || n2 < 2 {
        return Err(Error::Input(
            "each group needs at least 2 observations".into(),
        ));
    }
    let df = Df::new((n1 + n2 - 2) as f64)?;
    let (t1, t2) = alphas.critical_values(df)?;
    let scale = (1.0 / n1 as f64 + 1.0 / n2 as f64).sqrt();
    Ok(Feasibility {
        negative_possible: q > t2 * scale,
        inconclusive_possible: q / scale < t1 + t2,
    })
}

/// `1 - Pr(positive) - Pr(negative)`, clipped to `[0, 1]`.
pub fn pr_inconclusive(dp: &DesignPoint, mc: &McConfig) -> Result<McEstimate> {
    let oc = operating_chars(dp, mc)?;
    Ok(McEstimate {
        estimate: oc.pr_inconclusive,
        stderr: oc.mc_stderr,
    })
}

/// All three probabilities at one design point.
pub fn operating_chars(dp: &DesignPoint, mc: &McConfig) -> Result<OperatingChars> {
    let positive = pr_positive(dp)?;
    let negative = pr_negative(dp, mc)?;
    Ok(OperatingChars {
        pr_positive: positive,
        pr_negative: negative.estimate,
        pr_inconclusive: (1.0 - positive - negative.estimate).clamp(0.0, 1.0),
        mc_stderr: negative.stderr,
    })
}

/// Probability that a study reaches a conclusive verdict, averaging the
/// alternative `mu_d = mu_tilde` and the null `mu_d = 0` with equal weight.
pub fn pr_success(
    mu_tilde: f64,
    sigma_tilde: f64,
    n1: u64,
    n2: u64,
    margin: Margin,
    alphas: Alphas,
    mc: &McConfig,
) -> Result<McEstimate> {
    pr_success_weighted(mu_tilde, sigma_tilde, n1, n2, margin, alphas, mc, 0.5)
}

/// [`pr_success`] with prior probability `weight_alt` on the alternative.
#[allow(clippy::too_many_arguments)]
pub fn pr_success_weighted(
    mu_tilde: f64,
    sigma_tilde: f64,
    n1: u64,
    n2: u64,
    margin: Margin,
    alphas: Alphas,
    mc: &McConfig,
    weight_alt: f64,
) -> Result<McEstimate> {
    if !(0.0..=1.0).contains(&weight_alt) {
        return Err(Error::Input(format!(
            "prior weight must lie in [0, 1], got {weight_alt}"
        )));
    }
    let alt = DesignPoint::new(mu_tilde, sigma_tilde, n1, n2, margin, alphas)?;
    let inc_alt = pr_inconclusive(&alt, mc)?;
    let inc_null = pr_inconclusive(&alt.with_mu(0.0), mc)?;
    let estimate = 1.0 - weight_alt * inc_alt.estimate - (1.0 - weight_alt) * inc_null.estimate;
    let stderr = ((weight_alt * inc_alt.stderr).powi(2)
        + ((1.0 - weight_alt) * inc_null.stderr).powi(2))
    .sqrt();
    Ok(McEstimate { estimate, stderr })
}

/// Outcome of a sample-size search. `n` is the total of a balanced design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSize {
    pub n: u64,
    pub achieved: f64,
    pub achieved_stderr: f64,
    /// Criterion value at `n - 2`, if `n > 4`.
    pub below: Option<f64>,
    /// False when the criterion was seen to decrease with `n` during the search.
    pub monotone: bool,
    /// Monte Carlo draws per evaluation (0 for exact criteria).
    pub draws: u64,
}

const MIN_N: u64 = 4;

fn even_ceil(n: u64) -> u64 {
    n + n % 2
}

// Bracket by doubling, then bisect over even totals.
fn search_even(
    target: f64,
    max_n: u64,
    mut eval: impl FnMut(u64) -> Result<McEstimate>,
) -> Result<(u64, McEstimate, bool)> {
    let max_n = even_ceil(max_n.max(MIN_N));
    let mut monotone = true;
    let mut lo: Option<u64> = None;
    let mut hi = MIN_N;
    let mut hi_val = eval(hi)?;
    let mut best = (hi, hi_val.estimate);
    while hi_val.estimate < target {
        if hi == max_n {
            return Err(Error::SearchFailed {
                target,
                max_n,
                best_n: best.0,
                best_value: best.1,
            });
        }
        lo = Some(hi);
        let prev = hi_val;
        hi = (hi * 2).min(max_n);
        hi_val = eval(hi)?;
        if hi_val.estimate < prev.estimate - 3.0 * (prev.stderr + hi_val.stderr) {
            monotone = false;
        }
        if hi_val.estimate > best.1 {
            best = (hi, hi_val.estimate);
        }
    }
    if let Some(mut lo) = lo {
        while hi - lo > 2 {
            let mid = even_ceil(lo + (hi - lo) / 2);
            let mid = if mid == hi { hi - 2 } else { mid };
            let v = eval(mid)?;
            if v.estimate >= target {
                hi = mid;
                hi_val = v;
            } else {
                lo = mid;
            }
        }
    }
    Ok((hi, hi_val, monotone))
}

/// Smallest even total `n` (balanced arms) whose power reaches `target`.
pub fn sample_size_for_power(
    target: f64,
    mu_tilde: f64,
    sigma_tilde: f64,
    alphas: Alphas,
    max_n: u64,
) -> Result<SampleSize> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Input(format!(
            "target must lie in (0, 1), got {target}"
        )));
    }
    if mu_tilde == 0.0 {
        return Err(Error::Input(
            "anticipated effect is 0: power never exceeds alpha1, no sample size reaches the target"
                .into(),
        ));
    }
    // The margin plays no role in power.
    let margin = Margin::RawSymmetric { delta: 1.0 };
    let power = |n: u64| -> Result<McEstimate> {
        let dp = DesignPoint::balanced(mu_tilde, sigma_tilde, n, margin, alphas)?;
        pr_positive(&dp).map(McEstimate::exact)
    };
    let (n, achieved, _) = search_even(target, max_n, power)?;
    let below = if n > MIN_N {
        Some(power(n - 2)?.estimate)
    } else {
        None
    };
    Ok(SampleSize {
        n,
        achieved: achieved.estimate,
        achieved_stderr: 0.0,
        below,
        monotone: below.is_none_or(|b| b < target),
        draws: 0,
    })
}

/// Smallest even total `n` whose probability of success reaches `target`.
///
/// Every candidate uses the same seed (common random numbers). When the
/// standard error at the answer is too large to resolve the target to within
/// 0.005 (three standard errors), the search is repeated with twice the
/// draws. If the criterion dips below the target just under the bracketed
/// answer, the answer is walked down and `monotone` is reported false.
pub fn sample_size_for_success(
    target: f64,
    mu_tilde: f64,
    sigma_tilde: f64,
    margin: Margin,
    alphas: Alphas,
    mc: &McConfig,
    max_n: u64,
) -> Result<SampleSize> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Input(format!(
            "target must lie in (0, 1), got {target}"
        )));
    }
    let mut mc = *mc;
    loop {
        let success = |n: u64| -> Result<McEstimate> {
            let half = n / 2;
            pr_success(mu_tilde, sigma_tilde, half, half, margin, alphas, &mc)
        };
        let (mut n, mut achieved, mut monotone) = search_even(target, max_n, success)?;
        let mut below = None;
        while n > MIN_N {
            let v = success(n - 2)?;
            if v.estimate >= target {
                monotone = false;
                n -= 2;
                achieved = v;
            } else {
                below = Some(v.estimate);
                break;
            }
        }
        if 3.0 * achieved.stderr < 0.005 || mc.draws >= 1 << 26 {
            return Ok(SampleSize {
                n,
                achieved: achieved.estimate,
                achieved_stderr: achieved.stderr,
                below,
                monotone,
                draws: mc.draws,
            });
        }
        mc.draws *= 2;
    }
}

/// One Monte Carlo draw of the sufficient statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateDraw {
    pub mu_hat_d: f64,
    pub s_p: f64,
    pub s_star: f64,
}

/// Joint draws of `(mu_hat_d, s_p)` from their sampling distributions.
pub fn draw_estimates(dp: &DesignPoint, mc: &McConfig) -> Result<Vec<EstimateDraw>> {
    dp.validate()?;
    let mut out = Vec::with_capacity(mc.draws as usize);
    for_each_draw(dp, mc, |d| out.push(d));
    Ok(out)
}

fn for_each_draw(dp: &DesignPoint, mc: &McConfig, mut f: impl FnMut(EstimateDraw)) {
    let mut draw_sp = pooled_sd_sampler(dp);
    let mut rng = stream_rng(mc.seed, 1);
    let sigma_star = dp.sigma_star();
    let scale = dp.scale();
    for _ in 0..mc.draws {
        let mu_hat_d = dp.mu_d + sigma_star * std_normal_sample(&mut rng);
        let s_p = draw_sp(&mut rng);
        f(EstimateDraw {
            mu_hat_d,
            s_p,
            s_star: s_p * scale,
        });
    }
}

/// Verdict frequencies from joint draws classified point by point in the
/// `(mu_hat_d, s_star)` plane. Uses the same draws as [`draw_estimates`].
pub fn region_frequencies(dp: &DesignPoint, mc: &McConfig) -> Result<OperatingChars> {
    dp.validate()?;
    let (t1, t2) = dp.alphas.critical_values(dp.df())?;
    let margin = dp.margin;
    // Validates symmetric margins up front.
    margin.resolve_symmetric(1.0)?;
    let mut counts = [0u64; 3];
    for_each_draw(dp, mc, |d| {
        let delta = margin.resolve_symmetric(d.s_p).expect("validated");
        let idx = match classify_with_critical(d.mu_hat_d, d.s_star, delta, t1, t2) {
            Decision::Positive => 0,
            Decision::Negative => 1,
            Decision::Inconclusive => 2,
        };
        counts[idx] += 1;
    });
    let m = mc.draws as f64;
    let pr_negative = counts[1] as f64 / m;
    Ok(OperatingChars {
        pr_positive: counts[0] as f64 / m,
        pr_negative,
        pr_inconclusive: counts[2] as f64 / m,
        mc_stderr: (pr_negative * (1.0 - pr_negative) / m).sqrt(),
    })
}
