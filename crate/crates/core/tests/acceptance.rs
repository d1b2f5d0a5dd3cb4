//! Acceptance criteria 1 to 11. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use cet_core::bayes::jzs_bf01;
use cet_core::cet::{cet_general, cet_two_sample, classify_region, summarize};
use cet_core::distributions::{noncentral_t_cdf, std_normal_sample, stream_rng, t_cdf, t_quantile};
use cet_core::oc::{
    pr_inconclusive, pr_negative_mc, pr_negative_standardized, pr_positive, pr_success,
    sample_size_for_power, sample_size_for_success, DEFAULT_MAX_N,
};
use cet_core::sim::{draw_dataset, run_grid, SimGrid};
use cet_core::{Alphas, Decision, DesignPoint, Df, Margin, McConfig, Ncp, SummaryStats};
use rand::Rng;
use rayon::prelude::*;

struct Check {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: impl Into<String>) -> Check {
    Check {
        ok,
        detail: detail.into(),
    }
}

fn raw(delta: f64) -> Margin {
    Margin::raw(delta).unwrap()
}

fn alphas(a1: f64, a2: f64) -> Alphas {
    Alphas::new(a1, a2).unwrap()
}

fn c1() -> Check {
    let mut worst: f64 = 0.0;
    for n in [20, 90, 160, 1000] {
        let dp = DesignPoint::balanced(0.0, 1.0, n, raw(0.5), Alphas::default()).unwrap();
        worst = worst.max((pr_positive(&dp).unwrap() - 0.05).abs());
    }
    check(
        worst <= 1e-9,
        format!("max |pr_positive - 0.05| = {worst:.2e}"),
    )
}

fn c2() -> Check {
    let dp = DesignPoint::new(0.205, 1.0, 500, 500, raw(0.1025), Alphas::default()).unwrap();
    let p = pr_positive(&dp).unwrap();
    check((p - 0.90).abs() <= 0.005, format!("power = {p:.5}"))
}

fn c3() -> Check {
    let a = Alphas::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for (mu, var, want, tol) in [
        (0.205, 1.0, 1000, 2),
        (0.123, 1.25, 3476, 4),
        (0.33, 0.75, 288, 2),
    ] {
        let r = sample_size_for_power(0.9, mu, f64::sqrt(var), a, DEFAULT_MAX_N).unwrap();
        let hit = r.n.abs_diff(want) <= tol;
        ok &= hit;
        parts.push(format!(
            "power n = {} (want {want} +/- {tol}) {}",
            r.n,
            if hit { "ok" } else { "MISS" }
        ));
    }
    let mc = McConfig::new(200_000, cet_core::oc::DEFAULT_SEED).unwrap();
    for (mu, var, want, tol) in [(0.123, 1.25, 1770, 20), (0.33, 0.75, 638, 10)] {
        let r = sample_size_for_success(0.61, mu, f64::sqrt(var), raw(0.1025), a, &mc, 100_000)
            .unwrap();
        let hit = r.n.abs_diff(want) <= tol;
        ok &= hit;
        parts.push(format!(
            "success n = {} (want {want} +/- {tol}) {}",
            r.n,
            if hit { "ok" } else { "MISS" }
        ));
    }
    check(ok, parts.join("; "))
}

fn c4() -> Check {
    let mc = McConfig::new(200_000, cet_core::oc::DEFAULT_SEED).unwrap();
    let s = pr_success(0.205, 1.0, 500, 500, raw(0.1025), Alphas::default(), &mc).unwrap();
    check(
        (s.estimate - 0.61).abs() <= 0.01,
        format!("pr_success = {:.4} (se {:.1e})", s.estimate, s.stderr),
    )
}

fn c5() -> Check {
    let a = Alphas::default();
    let mc = McConfig::new(100_000, 5).unwrap();
    let q = 0.5;
    let margin = Margin::standardized(q).unwrap();
    let mut nonzero_small = Vec::new();
    for n in (4..=26).step_by(2) {
        let dp = DesignPoint::balanced(0.0, 1.0, n, margin, a).unwrap();
        if pr_negative_standardized(q, &dp, &mc).unwrap().estimate != 0.0 {
            nonzero_small.push(n);
        }
    }
    let dp = DesignPoint::balanced(0.0, 1.0, 28, margin, a).unwrap();
    let at28 = pr_negative_standardized(q, &dp, &mc).unwrap().estimate;
    check(
        nonzero_small.is_empty() && at28 > 0.0,
        format!("nonzero at n <= 26: {nonzero_small:?}; n = 28: {at28:.3e}"),
    )
}

fn c6() -> Check {
    let mc = McConfig::new(200_000, 6).unwrap();
    let inc = |a2: f64| {
        let dp = DesignPoint::new(0.0, 1.0, 80, 80, raw(0.5), alphas(0.05, a2)).unwrap();
        pr_inconclusive(&dp, &mc).unwrap().estimate
    };
    let (weak, strict) = (inc(0.10), inc(0.05));
    // Publication happens unless the study is inconclusive.
    let (pub_weak, pub_strict) = (1.0 - weak, 1.0 - strict);
    let at_least_one = 1.0 - 0.95f64.powi(20);
    let ok = (weak - 0.02).abs() <= 0.005
        && (strict - 0.08).abs() <= 0.005
        && (pub_weak - 0.98).abs() <= 0.005
        && (pub_strict - 0.92).abs() <= 0.005
        && (at_least_one - 0.6415).abs() < 5e-5;
    check(
        ok,
        format!(
            "inconclusive {weak:.4} / {strict:.4}; published {pub_weak:.4} / {pub_strict:.4}; \
             twenty studies {at_least_one:.4}"
        ),
    )
}

fn c7() -> Check {
    let bf = |n: u64| {
        let half = n / 2;
        let t = 0.25 / f64::sqrt(2.0 / half as f64);
        jzs_bf01(t, half, half).unwrap()
    };
    let inside = |b: f64| b > 1.0 / 3.0 && b < 3.0;
    let escapes: Vec<u64> = (114..=494).step_by(2).filter(|&n| !inside(bf(n))).collect();
    let (b110, b500) = (bf(110), bf(500));
    check(
        escapes.is_empty() && !inside(b110) && !inside(b500),
        format!(
            "outside band in [114, 494]: {escapes:?}; b01(110) = {b110:.4}, b01(500) = {b500:.4}"
        ),
    )
}

fn c8() -> Check {
    let grid = SimGrid {
        mu_d_values: vec![0.0, 0.25, 0.67],
        n_values: vec![30, 110, 1000],
        reps: 2000,
        ..SimGrid::default()
    };
    let cells = run_grid(&grid).unwrap();
    let type1: Vec<f64> = cells
        .iter()
        .filter(|c| c.mu_d == 0.0)
        .map(|c| c.cet.pr_positive)
        .collect();
    let a = type1.iter().all(|p| (p - 0.05).abs() <= 0.015);
    let bf110 = cells
        .iter()
        .find(|c| c.mu_d == 0.0 && c.n == 110)
        .map(|c| c.bf.pr_positive)
        .unwrap();
    let b = bf110 <= 0.02;
    let c = cells.iter().all(|c| c.bf.pr_positive <= c.cet.pr_positive);
    check(
        a && b && c,
        format!(
            "(a) CET type I {type1:?} {}; (b) BF type I at n = 110: {bf110} {}; (c) BF <= CET positive everywhere: {c}",
            if a { "ok" } else { "MISS" },
            if b { "ok" } else { "MISS" }
        ),
    )
}

fn c9() -> Check {
    let reps = 100_000u64;
    let mc = McConfig::new(200_000, 9).unwrap();
    let a = Alphas::default();
    let margin = raw(0.5);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (i, &mu) in [0.0, 0.15, 0.3].iter().enumerate() {
        for (j, &n) in [40u64, 90, 200].iter().enumerate() {
            let dp = DesignPoint::balanced(mu, 1.0, n, margin, a).unwrap();
            let est = pr_negative_mc(&dp, &mc).unwrap();
            let half = n / 2;
            let negatives: u64 = (0..16u64)
                .into_par_iter()
                .map(|chunk| {
                    let mut rng = stream_rng(900 + (3 * i + j) as u64, chunk);
                    let mut hits = 0;
                    for _ in 0..reps / 16 {
                        let (x1, x2) = draw_dataset(&mut rng, mu, 1.0, half, half);
                        let s = summarize(&x1, &x2).unwrap();
                        if cet_two_sample(&s, &margin, &a).unwrap().decision == Decision::Negative {
                            hits += 1;
                        }
                    }
                    hits
                })
                .sum();
            let freq = negatives as f64 / reps as f64;
            let se = (freq * (1.0 - freq) / reps as f64 + est.stderr * est.stderr).sqrt();
            let z = if se > 0.0 {
                (freq - est.estimate).abs() / se
            } else {
                0.0
            };
            worst = worst.max(z);
            ok &= (freq - est.estimate).abs() <= 3.0 * se;
        }
    }
    check(ok, format!("max |difference| / combined se = {worst:.2}"))
}

// (label, mu_hat_d, s_star) at n1 = n2 = 45, margin 0.5.
const TAXONOMY: [(char, f64, f64); 13] = [
    ('a', 0.9, 0.15),
    ('b', 0.3, 0.1),
    ('c', -0.25, 0.08),
    ('d', 0.6, 0.25),
    ('e', 0.0, 0.1),
    ('f', 0.25, 0.13),
    ('g', -0.1, 0.2),
    ('h', 0.0, 0.45),
    ('i', 0.1, 0.35),
    ('j', -0.3, 0.3),
    ('k', 0.3, 0.2),
    ('l', 0.55, 0.3),
    ('m', -0.2, 0.8),
];

fn taxonomy_label(c: char) -> Decision {
    match c {
        'a'..='d' => Decision::Positive,
        'e'..='g' => Decision::Negative,
        _ => Decision::Inconclusive,
    }
}

fn c10() -> Check {
    let a = Alphas::default();
    let margin = raw(0.5);
    let df = Df::new(88.0).unwrap();
    let mut wrong = Vec::new();
    for (label, mu, s) in TAXONOMY {
        let stats = SummaryStats::from_estimate(45, 45, mu, s).unwrap();
        let two = cet_two_sample(&stats, &margin, &a).unwrap().decision;
        let gen = cet_general(mu, s, Some(df), 0.0, &margin, &a)
            .unwrap()
            .decision;
        if two != taxonomy_label(label) || gen != taxonomy_label(label) {
            wrong.push(label);
        }
    }
    check(wrong.is_empty(), format!("mislabelled fixtures: {wrong:?}"))
}

fn c11() -> Check {
    let mut rng = stream_rng(11, 0);
    let mut violations = Vec::new();
    let a = Alphas::default();

    // classify_region agrees with cet_two_sample; exactly one verdict.
    let mut region = 0;
    for _ in 0..10_000 {
        let n1 = rng.random_range(2..200u64);
        let n2 = rng.random_range(2..200u64);
        let mu = rng.random_range(-2.0..2.0);
        let s = rng.random_range(1e-3..1.0);
        let delta = rng.random_range(1e-3..2.0);
        let stats = SummaryStats::from_estimate(n1, n2, mu, s).unwrap();
        let out = cet_two_sample(&stats, &raw(delta), &a).unwrap();
        let df = Df::new((n1 + n2 - 2) as f64).unwrap();
        if classify_region(mu, s, delta, df, &a).unwrap() != out.decision {
            region += 1;
        }
    }
    violations.push(("classify_region", region));

    // Invariances on raw data.
    let mut invariance = 0;
    for _ in 0..1_000 {
        let n1 = rng.random_range(3..40usize);
        let n2 = rng.random_range(3..40usize);
        let x1: Vec<f64> = (0..n1).map(|_| std_normal_sample(&mut rng) + 0.3).collect();
        let x2: Vec<f64> = (0..n2).map(|_| std_normal_sample(&mut rng)).collect();
        let delta = rng.random_range(0.05..1.5);
        let base = cet_two_sample(&summarize(&x1, &x2).unwrap(), &raw(delta), &a).unwrap();
        let k = rng.random_range(0.5..4.0);
        let c = rng.random_range(-10.0..10.0);
        let scaled = |v: &[f64]| v.iter().map(|x| k * x).collect::<Vec<_>>();
        let shifted = |v: &[f64]| v.iter().map(|x| x + c).collect::<Vec<_>>();
        let sc = cet_two_sample(
            &summarize(&scaled(&x1), &scaled(&x2)).unwrap(),
            &raw(k * delta),
            &a,
        )
        .unwrap();
        let sh = cet_two_sample(
            &summarize(&shifted(&x1), &shifted(&x2)).unwrap(),
            &raw(delta),
            &a,
        )
        .unwrap();
        let sw = cet_two_sample(&summarize(&x2, &x1).unwrap(), &raw(delta), &a).unwrap();
        let close = |p: f64, q: f64| (p - q).abs() <= 1e-9;
        let near_boundary = |p: f64, lim: f64| (p - lim).abs() < 1e-9;
        if near_boundary(base.p1, a.alpha1) || near_boundary(base.p2, a.alpha2) {
            continue;
        }
        for other in [&sc, &sh, &sw] {
            if other.decision != base.decision
                || !close(other.p1, base.p1)
                || !close(other.p2, base.p2)
            {
                invariance += 1;
            }
        }
    }
    violations.push(("invariances", invariance));

    // CDF monotonicity and symmetry.
    let mut cdf = 0;
    for _ in 0..10_000 {
        let df = Df::new(rng.random_range(0.5..500.0)).unwrap();
        let x: f64 = rng.random_range(-10.0..10.0);
        let dx: f64 = rng.random_range(0.0..1.0);
        if t_cdf(x, df) > t_cdf(x + dx, df) || (t_cdf(x, df) + t_cdf(-x, df) - 1.0).abs() > 1e-12 {
            cdf += 1;
        }
        let ncp = Ncp::new(rng.random_range(-5.0..5.0)).unwrap();
        if noncentral_t_cdf(x, df, ncp) > noncentral_t_cdf(x + dx, df, ncp) {
            cdf += 1;
        }
        let p = rng.random_range(1e-6..1.0 - 1e-6);
        if (t_quantile(p, df).unwrap() + t_quantile(1.0 - p, df).unwrap()).abs()
            > 1e-7 * t_quantile(p, df).unwrap().abs().max(1.0)
        {
            cdf += 1;
        }
    }
    violations.push(("cdf", cdf));

    // Seed determinism.
    let dp = DesignPoint::balanced(0.1, 1.0, 60, raw(0.4), a).unwrap();
    let mc = McConfig::new(20_000, 42).unwrap();
    let determinism =
        usize::from(pr_negative_mc(&dp, &mc).unwrap() != pr_negative_mc(&dp, &mc).unwrap());
    violations.push(("determinism", determinism));

    let total: usize = violations.iter().map(|v| v.1).sum();
    check(total == 0, format!("violations {violations:?}"))
}

type Criterion = (u32, &'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (1, "type I calibration", c1),
        (2, "power anchor", c2),
        (3, "sample sizes", c3),
        (4, "assurance anchor", c4),
        (5, "standardized-margin feasibility", c5),
        (6, "policy arithmetic", c6),
        (7, "JZS band", c7),
        (8, "simulation reproduction", c8),
        (9, "oracle equivalence", c9),
        (10, "verdict taxonomy", c10),
        (11, "property suites", c11),
    ];
    let filter: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let r = run();
        let status = if r.ok { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:>2} {status} [{name}] {} ({:.1}s)",
            r.detail,
            start.elapsed().as_secs_f64()
        );
        if !r.ok {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
