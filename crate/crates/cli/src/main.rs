//! `disloc`: band structure, gap states and dislocation sweeps for 1-D
//! periodic Dirac operators, from piecewise-constant potential data.

mod checks;
mod experiments;
mod output;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use disloc_core::dislocation::{locate_states, track_states, StepControl};
use disloc_core::spectrum::{band_edges, GapInfo};
use disloc_core::Potential;
use rayon::prelude::*;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "disloc",
    about = "Spectral bands, gap states and dislocation dynamics of 1-D periodic Dirac operators",
    after_help = "Log level: set DISLOC_LOG=debug|info|warn (default warn)."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate bands/gaps in a window with Dirichlet/Neumann data
    Bands(BandsArgs),
    /// Locate the two gap states at a fixed dislocation parameter
    States(StatesArgs),
    /// Track the gap states over a range of the dislocation parameter
    Track(TrackArgs),
    /// Run the invariant suite against a potential and report pass/fail
    Validate(ValidateArgs),
    /// Cross-check gap states against the independent shooting oracle
    OracleCheck(OracleArgs),
    /// Regenerate the built-in experiment suite
    Examples(ExamplesArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Potential file: {"breakpoints": [...], "q1": [...], "q2": [...]}
    #[arg(long)]
    potential: PathBuf,
    /// Spectral window
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    window: Vec<f64>,
    /// Number of scan points across the window
    #[arg(long, default_value_t = 800)]
    grid: usize,
    /// Output directory (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BandsArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct StatesArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Dislocation parameter
    #[arg(long, allow_negative_numbers = true)]
    t: f64,
    /// Gap selector: "all" or a comma list of indices like "1,-1"
    #[arg(long, default_value = "all")]
    gaps: String,
}

#[derive(Args)]
struct TrackArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Range and sample count of the dislocation parameter
    #[arg(long = "t-range", num_args = 3, value_names = ["T0", "T1", "STEPS"], allow_negative_numbers = true)]
    t_range: Vec<f64>,
    /// Gap selector: "all" or a comma list of indices
    #[arg(long, default_value = "all")]
    gaps: String,
    /// Worker threads for gap-parallel tracking
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Dislocation parameter used by the state-level checks
    #[arg(long, default_value_t = 0.37, allow_negative_numbers = true)]
    t: f64,
    /// Seed for the randomized identity checks
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Root-finding tolerance override
    #[arg(long = "tol-root", default_value_t = 1e-12)]
    tol_root: f64,
    /// Invariant tolerance override
    #[arg(long = "tol-invariant", default_value_t = 1e-9)]
    tol_invariant: f64,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Dislocation parameter
    #[arg(long, allow_negative_numbers = true)]
    t: f64,
    /// Gap selector: "all" or a comma list of indices
    #[arg(long, default_value = "all")]
    gaps: String,
}

#[derive(Args)]
struct ExamplesArgs {
    /// Output directory for the experiment artifacts
    #[arg(long, default_value = "disloc-out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DISLOC_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // Machine-readable error on stdout, human-readable on stderr.
            let payload = serde_json::json!({ "error": format!("{err:#}") });
            println!("{}", serde_json::to_string_pretty(&payload).unwrap());
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Bands(args) => {
            let (v, gaps) = load_and_scan(&args.common)?;
            let _ = v;
            output::emit_bands(&gaps, args.common.out.as_deref())
        }
        Cmd::States(args) => {
            let (v, gaps) = load_and_scan(&args.common)?;
            let selected = select_gaps(&gaps, &args.gaps)?;
            let mut rows = Vec::new();
            for gap in selected {
                let (a, b) = locate_states(&v, gap, args.t)
                    .with_context(|| format!("locating states of gap {}", gap.n))?;
                rows.push((gap.n, a, b));
            }
            output::emit_states(args.t, &rows, args.common.out.as_deref())
        }
        Cmd::Track(args) => {
            if args.t_range.len() != 3 {
                bail!("--t-range needs T0 T1 STEPS");
            }
            let (t0, t1, steps) = (args.t_range[0], args.t_range[1], args.t_range[2] as usize);
            if steps < 2 {
                bail!("STEPS must be at least 2");
            }
            if t0 >= t1 {
                bail!("need T0 < T1");
            }
            let (v, gaps) = load_and_scan(&args.common)?;
            let selected = select_gaps(&gaps, &args.gaps)?;
            let sample_times: Vec<f64> = (0..steps)
                .map(|i| t0 + (t1 - t0) * i as f64 / (steps - 1) as f64)
                .collect();
            let ctrl = StepControl {
                record_times: sample_times.clone(),
                ..StepControl::default()
            };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(args.jobs.max(1))
                .build()
                .context("building thread pool")?;
            let results: Vec<_> = pool.install(|| {
                selected
                    .par_iter()
                    .map(|gap| {
                        track_states(&v, gap, t0, t1, &ctrl)
                            .map(|(p, m)| (gap.n, p, m))
                            .map_err(|e| anyhow::anyhow!("tracking gap {}: {e}", gap.n))
                    })
                    .collect()
            });
            let out = args
                .common
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from("."));
            fs::create_dir_all(&out)?;
            let mut summaries = Vec::new();
            for r in results {
                let (n, tp, tm) = r?;
                output::write_track_csv(&out, n, &sample_times, &tp, &tm)?;
                summaries.push(output::track_summary(n, &tp, &tm));
            }
            output::write_track_summary(&out, t0, t1, &summaries)
        }
        Cmd::Validate(args) => {
            let (v, gaps) = load_and_scan(&args.common)?;
            let report = checks::run_validation(
                &v,
                &gaps,
                args.t,
                args.seed,
                args.tol_root,
                args.tol_invariant,
            );
            output::emit_report(&report, args.common.out.as_deref())?;
            if report.iter().any(|c| !c.pass) {
                bail!("validation failed");
            }
            Ok(())
        }
        Cmd::OracleCheck(args) => {
            let (v, gaps) = load_and_scan(&args.common)?;
            let selected = select_gaps(&gaps, &args.gaps)?;
            let report = checks::run_oracle_check(&v, &selected, args.t)?;
            output::emit_report(&report, args.common.out.as_deref())?;
            if report.iter().any(|c| !c.pass) {
                bail!("oracle check failed");
            }
            Ok(())
        }
        Cmd::Examples(args) => {
            let verdicts = experiments::run_all(&args.out)?;
            for v in &verdicts {
                println!("{}: {}", v.name, if v.pass { "PASS" } else { "FAIL" });
            }
            if verdicts.iter().any(|v| !v.pass) {
                bail!("experiment suite failed");
            }
            Ok(())
        }
    }
}

fn load_potential(path: &Path) -> Result<Potential> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading potential file {}", path.display()))?;
    let v: Potential = serde_json::from_str(&text)
        .with_context(|| format!("parsing potential file {}", path.display()))?;
    Ok(v)
}

fn load_and_scan(common: &CommonArgs) -> Result<(Potential, Vec<GapInfo>)> {
    if common.window.len() != 2 {
        bail!("--window needs LO HI");
    }
    let (lo, hi) = (common.window[0], common.window[1]);
    if lo >= hi {
        bail!("need LO < HI");
    }
    let v = load_potential(&common.potential)?;
    log::info!("scanning window ({lo}, {hi}) with {} points", common.grid);
    let gaps = band_edges(&v, (lo, hi), common.grid).context("scanning band edges")?;
    Ok((v, gaps))
}

fn select_gaps<'g>(gaps: &'g [GapInfo], selector: &str) -> Result<Vec<&'g GapInfo>> {
    let open: Vec<&GapInfo> = gaps.iter().filter(|g| !g.closed).collect();
    if selector.trim() == "all" {
        if open.is_empty() {
            bail!("no open gaps in the window");
        }
        return Ok(open);
    }
    let mut wanted = Vec::new();
    for part in selector.split(',') {
        let n: i64 = part
            .trim()
            .parse()
            .with_context(|| format!("bad gap index {part:?}"))?;
        let gap = open
            .iter()
            .find(|g| g.n == n)
            .with_context(|| format!("no open gap with index {n} in the window"))?;
        wanted.push(*gap);
    }
    Ok(wanted)
}
