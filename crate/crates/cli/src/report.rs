//! JSON and CSV output schemas. Every output carries `schema_version`.
//!
//! Floats are written in shortest round-trip form, so values read back
//! compare equal to the ones computed.

use cet_core::{
    Alphas, BfConvention, BfResult, CetOutcome, Decision, OperatingChars, SampleSize, SummaryStats,
};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub schema_version: u32,
    pub decision: Decision,
    pub p1: f64,
    /// Hidden (null) for positive verdicts unless requested.
    pub p2: Option<f64>,
    pub p_cet: f64,
    pub ci_wide: [f64; 2],
    pub ci_narrow: [f64; 2],
    pub delta_resolved: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub n1: u64,
    pub n2: u64,
    pub mu_hat_d: f64,
    pub s_p: f64,
}

impl VerdictReport {
    pub fn new(stats: &SummaryStats, alphas: &Alphas, out: &CetOutcome, show_p2: bool) -> Self {
        let p2 = (show_p2 || out.decision != Decision::Positive).then_some(out.p2);
        VerdictReport {
            schema_version: SCHEMA_VERSION,
            decision: out.decision,
            p1: out.p1,
            p2,
            p_cet: out.p_cet,
            ci_wide: [out.ci_wide.lower, out.ci_wide.upper],
            ci_narrow: [out.ci_narrow.lower, out.ci_narrow.upper],
            delta_resolved: out.resolved_delta,
            alpha1: alphas.alpha1,
            alpha2: alphas.alpha2,
            n1: stats.n1,
            n2: stats.n2,
            mu_hat_d: stats.mu_hat_d(),
            s_p: stats.s_p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcReport {
    pub schema_version: u32,
    #[serde(flatten)]
    pub chars: OperatingChars,
    pub sigma_star: f64,
    pub draws: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeReport {
    pub schema_version: u32,
    pub criterion: String,
    pub target: f64,
    pub n1: u64,
    pub n2: u64,
    #[serde(flatten)]
    pub result: SampleSize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BfReport {
    pub schema_version: u32,
    pub t: f64,
    pub n1: u64,
    pub n2: u64,
    pub prior_odds: f64,
    pub convention: BfConvention,
    #[serde(flatten)]
    pub result: BfResult,
}

/// One CSV row of `simulate`: a cell and a method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub schema_version: u32,
    pub mu_d: f64,
    pub n: u64,
    pub method: String,
    pub reps: u64,
    pub pr_positive: f64,
    pub pr_negative: f64,
    pub pr_inconclusive: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub schema_version: u32,
    pub cells: usize,
    pub reps: u64,
    pub seed: u64,
    /// Largest CET positive frequency over cells with `mu_d = 0`.
    pub cet_type1_max: Option<f64>,
    pub bf_type1_max: Option<f64>,
    /// Whether the Bayes factor never gave more positives than CET.
    pub bf_positive_never_exceeds_cet: bool,
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRow {
    pub schema_version: u32,
    pub mu_hat_d: f64,
    pub s_star: f64,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub schema_version: u32,
    pub n1: u64,
    pub n2: u64,
    pub delta: f64,
    pub t1: f64,
    pub t2: f64,
    /// Bottom, left, top and right corners of the negative region.
    pub corners: [[f64; 2]; 4],
    pub points: usize,
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub schema_version: u32,
    pub mu_d: f64,
    pub p_nhst: f64,
    pub p_cet: f64,
    pub decision: Decision,
}
