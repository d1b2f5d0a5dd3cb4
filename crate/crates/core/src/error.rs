use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a distribution or formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed or inconsistent caller input.
    #[error("invalid input: {0}")]
    Input(String),

    /// Both samples have zero variance, so every t statistic is undefined.
    #[error(
        "degenerate data: pooled standard deviation is zero (mean difference {mu_hat_d}); \
         the t-based procedure is undefined, compare the exact values directly"
    )]
    Degenerate { mu_hat_d: f64 },

    #[error(
        "quadrature did not converge: estimate {estimate:e}, error estimate {error_estimate:e} \
         after {intervals} subintervals"
    )]
    Quadrature {
        estimate: f64,
        error_estimate: f64,
        intervals: usize,
    },

    #[error(
        "sample-size search failed: target {target} not reached for n <= {max_n} \
         (best {best_value:.6} at n = {best_n})"
    )]
    SearchFailed {
        target: f64,
        max_n: u64,
        best_n: u64,
        best_value: f64,
    },
}
