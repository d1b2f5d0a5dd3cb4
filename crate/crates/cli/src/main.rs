//! `cet`: conditional equivalence testing from the command line.
//!
//! `cet test` exits 0, 1 or 2 for a positive, negative or inconclusive
//! verdict so that scripts can branch on it. Any error exits 3 or higher.

mod data;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cet_core::bayes::{bf_test, BfConvention};
use cet_core::cet::{cet_two_sample, classify_with_critical, diamond_corners, summarize};
use cet_core::oc::{
    operating_chars, sample_size_for_power, sample_size_for_success, DEFAULT_DRAWS, DEFAULT_MAX_N,
    DEFAULT_SEED,
};
use cet_core::sim::{pvalue_scatter, run_grid, ScatterConfig, SimGrid};
use cet_core::{Alphas, Decision, DesignPoint, Df, Margin, McConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::data::DataFile;
use crate::report::*;

const EXIT_USAGE: u8 = 3;
const EXIT_FAILURE: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "cet", version, about = "Conditional equivalence testing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run CET on a `group,value` CSV file. Exit code 0/1/2 = positive/negative/inconclusive.
    Test(TestArgs),
    /// Probabilities of each verdict for a design.
    Oc(OcArgs),
    /// Smallest balanced total n reaching a power or success target.
    Samplesize(SampleSizeArgs),
    /// JZS Bayes factor B01 from a t statistic or a data file.
    Bf(BfArgs),
    /// Simulate CET and the Bayes factor over a grid of designs.
    Simulate(SimulateArgs),
    /// Classify a grid of (mu_hat_d, s_star) points.
    Region(RegionArgs),
    /// NHST and CET p-values for effects drawn uniformly at random.
    Scatter(ScatterArgs),
}

#[derive(Debug, Args)]
struct AlphaArgs {
    /// Level of the difference test.
    #[arg(long, default_value_t = 0.05, conflicts_with = "strict")]
    alpha1: f64,
    /// Level of the equivalence test.
    #[arg(long, default_value_t = 0.10, conflicts_with = "strict")]
    alpha2: f64,
    /// Stricter thresholds: alpha1 = 0.01, alpha2 = 0.05.
    #[arg(long)]
    strict: bool,
}

impl AlphaArgs {
    fn alphas(&self) -> Result<Alphas> {
        let (a1, a2) = if self.strict {
            (0.01, 0.05)
        } else {
            (self.alpha1, self.alpha2)
        };
        Ok(Alphas::new(a1, a2)?)
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct MarginArgs {
    /// Raw margin: equivalence means |mu_d| < delta.
    #[arg(long)]
    delta: Option<f64>,
    /// Standardized margin: delta = q * s_p.
    #[arg(long)]
    q: Option<f64>,
}

impl MarginArgs {
    fn margin(&self) -> Result<Margin> {
        Ok(match (self.delta, self.q) {
            (Some(d), None) => Margin::raw(d)?,
            (None, Some(q)) => Margin::standardized(q)?,
            _ => bail!("give exactly one of --delta and --q"),
        })
    }
}

#[derive(Debug, Args)]
struct McArgs {
    /// Monte Carlo draws.
    #[arg(long, default_value_t = DEFAULT_DRAWS)]
    draws: u64,
    /// Master seed.
    #[arg(long, env = "CET_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
}

impl McArgs {
    fn config(&self) -> Result<McConfig> {
        Ok(McConfig::new(self.draws, self.seed)?)
    }
}

#[derive(Debug, Args)]
struct TestArgs {
    /// CSV file with header `group,value`.
    data: PathBuf,
    #[command(flatten)]
    margin: MarginArgs,
    #[command(flatten)]
    alphas: AlphaArgs,
    /// Report p2 for positive verdicts too.
    #[arg(long)]
    show_p2: bool,
}

#[derive(Debug, Args)]
struct OcArgs {
    #[arg(long, allow_hyphen_values = true)]
    mu_d: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    n1: u64,
    #[arg(long)]
    n2: u64,
    #[command(flatten)]
    margin: MarginArgs,
    #[command(flatten)]
    alphas: AlphaArgs,
    #[command(flatten)]
    mc: McArgs,
}

#[derive(Debug, Args)]
#[group(id = "criterion", required = true, multiple = false)]
struct Target {
    /// Target power.
    #[arg(long)]
    power: Option<f64>,
    /// Target probability of success.
    #[arg(long)]
    success: Option<f64>,
}

#[derive(Debug, Args)]
struct SampleSizeArgs {
    #[command(flatten)]
    target: Target,
    #[arg(long, allow_hyphen_values = true)]
    mu_d: f64,
    #[arg(long)]
    sigma: f64,
    /// Margin, required with --success.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, conflicts_with = "delta")]
    q: Option<f64>,
    #[command(flatten)]
    alphas: AlphaArgs,
    #[command(flatten)]
    mc: McArgs,
    /// Give up beyond this total sample size.
    #[arg(long, default_value_t = DEFAULT_MAX_N)]
    max_n: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Convention {
    Printed,
    Dof,
}

impl From<Convention> for BfConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Printed => BfConvention::Printed,
            Convention::Dof => BfConvention::DegreesOfFreedom,
        }
    }
}

#[derive(Debug, Args)]
struct BfArgs {
    /// CSV file with header `group,value`; alternative to --t/--n1/--n2.
    #[arg(conflicts_with_all = ["t", "n1", "n2"], required_unless_present = "t")]
    data: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true, requires_all = ["n1", "n2"])]
    t: Option<f64>,
    #[arg(long)]
    n1: Option<u64>,
    #[arg(long)]
    n2: Option<u64>,
    #[arg(long, default_value_t = 3.0)]
    threshold: f64,
    /// Prior odds Pr(H0) / Pr(H1).
    #[arg(long, default_value_t = 1.0)]
    prior_odds: f64,
    #[arg(long, value_enum, default_value_t = Convention::Printed)]
    convention: Convention,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// JSON grid; the built-in grid is used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; without it the CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the number of datasets per cell.
    #[arg(long)]
    reps: Option<u64>,
    /// Override the grid seed.
    #[arg(long, env = "CET_SEED")]
    seed: Option<u64>,
    /// Print the effective grid as JSON and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Debug, Args)]
struct RegionArgs {
    /// Balanced total sample size; alternative to --n1/--n2.
    #[arg(long, conflicts_with_all = ["n1", "n2"], required_unless_present_all = ["n1", "n2"])]
    n: Option<u64>,
    #[arg(long, requires = "n2")]
    n1: Option<u64>,
    #[arg(long, requires = "n1")]
    n2: Option<u64>,
    #[arg(long)]
    delta: f64,
    #[command(flatten)]
    alphas: AlphaArgs,
    /// Spacing of the grid along both axes.
    #[arg(long, default_value_t = 0.01)]
    grid_step: f64,
    /// Largest |mu_hat_d|; defaults to 2 delta.
    #[arg(long)]
    mu_max: Option<f64>,
    /// Largest s_star; defaults to 1.5 delta / t2.
    #[arg(long)]
    s_max: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScatterArgs {
    /// Balanced total sample size.
    #[arg(long, default_value_t = 90)]
    n: u64,
    #[arg(long, default_value_t = 10_000)]
    reps: u64,
    #[arg(long, allow_hyphen_values = true, default_value_t = -2.0)]
    mu_low: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 2.0)]
    mu_high: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[command(flatten)]
    margin: MarginArgs,
    #[command(flatten)]
    alphas: AlphaArgs,
    #[arg(long, env = "CET_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn print_json(value: &impl Serialize) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, value)?;
    writeln!(stdout)?;
    Ok(())
}

fn write_csv<T: Serialize>(out: Option<&Path>, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(path) => Box::new(
            std::fs::File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))?,
        ),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn verdict_code(d: Decision) -> u8 {
    match d {
        Decision::Positive => 0,
        Decision::Negative => 1,
        Decision::Inconclusive => 2,
    }
}

fn cmd_test(args: &TestArgs) -> Result<u8> {
    let data = DataFile::read(&args.data)?;
    let stats = summarize(&data.group1, &data.group2)?;
    let alphas = args.alphas.alphas()?;
    let out = cet_two_sample(&stats, &args.margin.margin()?, &alphas)?;
    print_json(&VerdictReport::new(&stats, &alphas, &out, args.show_p2))?;
    Ok(verdict_code(out.decision))
}

fn cmd_oc(args: &OcArgs) -> Result<u8> {
    let dp = DesignPoint::new(
        args.mu_d,
        args.sigma,
        args.n1,
        args.n2,
        args.margin.margin()?,
        args.alphas.alphas()?,
    )?;
    let mc = args.mc.config()?;
    print_json(&OcReport {
        schema_version: SCHEMA_VERSION,
        chars: operating_chars(&dp, &mc)?,
        sigma_star: dp.sigma_star(),
        draws: mc.draws,
        seed: mc.seed,
    })?;
    Ok(0)
}

fn cmd_samplesize(args: &SampleSizeArgs) -> Result<u8> {
    let alphas = args.alphas.alphas()?;
    let (criterion, target, result) = match (args.target.power, args.target.success) {
        (Some(p), None) => (
            "power",
            p,
            sample_size_for_power(p, args.mu_d, args.sigma, alphas, args.max_n)?,
        ),
        (None, Some(s)) => {
            let margin = match (args.delta, args.q) {
                (Some(d), None) => Margin::raw(d)?,
                (None, Some(q)) => Margin::standardized(q)?,
                _ => bail!("--success needs exactly one of --delta and --q"),
            };
            let r = sample_size_for_success(
                s,
                args.mu_d,
                args.sigma,
                margin,
                alphas,
                &args.mc.config()?,
                args.max_n,
            )?;
            ("success", s, r)
        }
        _ => bail!("give exactly one of --power and --success"),
    };
    print_json(&SampleSizeReport {
        schema_version: SCHEMA_VERSION,
        criterion: criterion.into(),
        target,
        n1: result.n / 2,
        n2: result.n / 2,
        result,
    })?;
    Ok(0)
}

fn cmd_bf(args: &BfArgs) -> Result<u8> {
    let (t, n1, n2) = match (&args.data, args.t) {
        (Some(path), None) => {
            let data = DataFile::read(path)?;
            let stats = summarize(&data.group1, &data.group2)?;
            if stats.is_degenerate() {
                bail!("pooled standard deviation is 0; the t statistic is undefined");
            }
            (stats.mu_hat_d() / stats.s_star(), stats.n1, stats.n2)
        }
        (None, Some(t)) => match (args.n1, args.n2) {
            (Some(n1), Some(n2)) => (t, n1, n2),
            _ => bail!("--t needs --n1 and --n2"),
        },
        _ => bail!("give a data file or --t with --n1 and --n2"),
    };
    let convention = BfConvention::from(args.convention);
    let result = bf_test(t, n1, n2, args.threshold, args.prior_odds, convention)?;
    print_json(&BfReport {
        schema_version: SCHEMA_VERSION,
        t,
        n1,
        n2,
        prior_odds: args.prior_odds,
        convention,
        result,
    })?;
    Ok(0)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<u8> {
    let mut grid = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            serde_json::from_str::<SimGrid>(&text)
                .with_context(|| format!("invalid grid in {}", path.display()))?
        }
        None => SimGrid::default(),
    };
    if let Some(reps) = args.reps {
        grid.reps = reps;
    }
    if let Some(seed) = args.seed {
        grid.seed = seed;
    }
    if args.print_config {
        print_json(&grid)?;
        return Ok(0);
    }
    let cells = run_grid(&grid)?;
    let rows = cells.iter().flat_map(|c| {
        [("cet", c.cet), ("bf", c.bf)].map(|(method, f)| SimRow {
            schema_version: SCHEMA_VERSION,
            mu_d: c.mu_d,
            n: c.n,
            method: method.into(),
            reps: c.reps,
            pr_positive: f.pr_positive,
            pr_negative: f.pr_negative,
            pr_inconclusive: f.pr_inconclusive,
        })
    });
    write_csv(args.out.as_deref(), rows)?;
    if let Some(out) = &args.out {
        let null_cells = || cells.iter().filter(|c| c.mu_d == 0.0);
        print_json(&SimSummary {
            schema_version: SCHEMA_VERSION,
            cells: cells.len(),
            reps: grid.reps,
            seed: grid.seed,
            cet_type1_max: null_cells().map(|c| c.cet.pr_positive).reduce(f64::max),
            bf_type1_max: null_cells().map(|c| c.bf.pr_positive).reduce(f64::max),
            bf_positive_never_exceeds_cet: cells
                .iter()
                .all(|c| c.bf.pr_positive <= c.cet.pr_positive),
            out: Some(out.display().to_string()),
        })?;
    }
    Ok(0)
}

fn cmd_region(args: &RegionArgs) -> Result<u8> {
    let (n1, n2) = match (args.n, args.n1, args.n2) {
        (Some(n), None, None) => {
            if n < 4 || n % 2 != 0 {
                bail!("--n must be even and at least 4, got {n}");
            }
            (n / 2, n / 2)
        }
        (None, Some(a), Some(b)) => (a, b),
        _ => bail!("give --n or both --n1 and --n2"),
    };
    if n1 < 2 || n2 < 2 {
        bail!("each group needs at least 2 observations");
    }
    if !(args.delta.is_finite() && args.delta > 0.0) {
        bail!("--delta must be positive");
    }
    if !(args.grid_step.is_finite() && args.grid_step > 0.0) {
        bail!("--grid-step must be positive");
    }
    let alphas = args.alphas.alphas()?;
    let df = Df::new((n1 + n2 - 2) as f64)?;
    let (t1, t2) = alphas.critical_values(df)?;
    let mu_max = args.mu_max.unwrap_or(2.0 * args.delta);
    let s_max = args.s_max.unwrap_or(1.5 * args.delta / t2);
    let mu_steps = (mu_max / args.grid_step).floor() as i64;
    let s_steps = (s_max / args.grid_step).floor() as i64;
    if mu_steps.saturating_mul(2).saturating_mul(s_steps) > 50_000_000 {
        bail!("grid too large; increase --grid-step");
    }
    let step = args.grid_step;
    let delta = args.delta;
    let rows: Vec<RegionRow> = (1..=s_steps)
        .flat_map(|j| {
            (-mu_steps..=mu_steps).map(move |i| {
                let (mu, s) = (i as f64 * step, j as f64 * step);
                RegionRow {
                    schema_version: SCHEMA_VERSION,
                    mu_hat_d: mu,
                    s_star: s,
                    decision: classify_with_critical(mu, s, delta, t1, t2),
                }
            })
        })
        .collect();
    let summary = RegionSummary {
        schema_version: SCHEMA_VERSION,
        n1,
        n2,
        delta,
        t1,
        t2,
        corners: diamond_corners(delta, df, &alphas)?.map(|(x, y)| [x, y]),
        points: rows.len(),
        out: args.out.as_ref().map(|p| p.display().to_string()),
    };
    write_csv(args.out.as_deref(), rows)?;
    if args.out.is_some() {
        print_json(&summary)?;
    }
    Ok(0)
}

fn cmd_scatter(args: &ScatterArgs) -> Result<u8> {
    let cfg = ScatterConfig {
        n: args.n,
        reps: args.reps,
        mu_d_low: args.mu_low,
        mu_d_high: args.mu_high,
        sigma: args.sigma,
        margin: args.margin.margin()?,
        alphas: args.alphas.alphas()?,
        seed: args.seed,
    };
    let rows = pvalue_scatter(&cfg)?.into_iter().map(|r| ScatterRow {
        schema_version: SCHEMA_VERSION,
        mu_d: r.mu_d,
        p_nhst: r.p_nhst,
        p_cet: r.p_cet,
        decision: r.decision,
    });
    write_csv(args.out.as_deref(), rows)?;
    Ok(0)
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Oc(a) => cmd_oc(a),
        Command::Samplesize(a) => cmd_samplesize(a),
        Command::Bf(a) => cmd_bf(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Region(a) => cmd_region(a),
        Command::Scatter(a) => cmd_scatter(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not errors; clap's own exit code 2 would
            // collide with the inconclusive verdict.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.downcast_ref::<cet_core::Error>().is_some_and(|c| {
                matches!(
                    c,
                    cet_core::Error::Input(_)
                        | cet_core::Error::Domain(_)
                        | cet_core::Error::Degenerate { .. }
                )
            });
            ExitCode::from(if usage { EXIT_USAGE } else { EXIT_FAILURE })
        }
    }
}
