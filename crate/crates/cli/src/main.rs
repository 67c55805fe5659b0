use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use poseidon_sim_core::metrics::{relative_csv, relative_throughput, MetricsBundle};
use poseidon_sim_core::scenario::{load_scenario, PoseidonMode, Scenario, ScenarioError};
use poseidon_sim_core::sim::{run_scenario, RunSummary};
use poseidon_sim_core::SimTime;
use rayon::prelude::*;

#[derive(Parser)]
#[command(
    name = "poseidon-sim",
    version,
    about = "NDN interest-flooding simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its metrics.
    Run(RunArgs),
    /// Run a scenario without attackers and under every defense mode, and
    /// print the relative throughput of each router.
    Compare(CompareArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for metrics.csv (and relative.csv).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Run seeds seed..seed+N-1 and average the metrics.
    #[arg(long, default_value_t = 1)]
    repeats: u32,
    /// Directory holding the metrics.csv of a baseline run.
    #[arg(long)]
    baseline: Option<PathBuf>,
    #[arg(long)]
    mode: Option<PoseidonMode>,
    /// Stop the run at this time (ms) instead of the scenario horizon.
    #[arg(long)]
    until: Option<f64>,
}

#[derive(clap::Args)]
struct CompareArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    repeats: u32,
}

/// Error with a dedicated exit code.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct InputError(String);

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("POSEIDON_SIM_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Compare(args) => compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InputError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn load(path: &Path) -> Result<Scenario> {
    load_scenario(path).map_err(|e| match e {
        ScenarioError::Io { .. } | ScenarioError::Parse { .. } | ScenarioError::Validation(_) => {
            InputError(e.to_string()).into()
        }
    })
}

/// Runs `repeats` seeds in parallel and averages the metrics.
fn run_repeats(scenario: &Scenario, repeats: u32) -> Result<(MetricsBundle, Vec<RunSummary>)> {
    let runs: Vec<_> = (0..u64::from(repeats.max(1)))
        .into_par_iter()
        .map(|k| run_scenario(&scenario.clone().with_seed(scenario.seed + k)))
        .collect::<Result<_, _>>()?;
    let (bundles, summaries): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    Ok((MetricsBundle::mean(&bundles)?, summaries))
}

fn run(args: RunArgs) -> Result<()> {
    let mut scenario = load(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(mode) = args.mode {
        scenario = scenario.with_mode(mode);
    }
    if let Some(until) = args.until {
        scenario.horizon = SimTime::from_millis_f64(until);
    }
    let baseline = match &args.baseline {
        Some(dir) => {
            let path = dir.join("metrics.csv");
            let file = fs::File::open(&path)
                .map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
            Some(
                MetricsBundle::from_csv(std::io::BufReader::new(file))
                    .with_context(|| format!("parsing {}", path.display()))?,
            )
        }
        None => None,
    };

    let (metrics, summaries) = run_repeats(&scenario, args.repeats)?;
    for s in &summaries {
        if let Err(e) = s.check_conservation() {
            log::warn!("{e}");
        }
    }
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    fs::write(args.out.join("metrics.csv"), metrics.to_csv())?;

    let rel = baseline
        .as_ref()
        .map(|b| relative_throughput(&metrics, b))
        .transpose()?;
    if let Some(rel) = &rel {
        fs::write(args.out.join("relative.csv"), relative_csv(rel))?;
    }

    println!(
        "{} | mode {} | seed {} | {} run(s) | horizon {} ms",
        args.scenario.display(),
        scenario.poseidon.mode,
        scenario.seed,
        summaries.len(),
        scenario.horizon
    );
    println!(
        "{:<8} {:>12} {:>10} {:>10} {:>8} {:>10}",
        "router", "contents", "drops", "pitfull", "alerts", "relative"
    );
    for router in metrics.routers() {
        let last = metrics.last(router).expect("router has samples");
        let pct = rel
            .as_ref()
            .and_then(|r| r.get(router).copied().flatten())
            .map(|p| format!("{p:.1}%"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{router:<8} {:>12.1} {:>10.1} {:>10.1} {:>8.1} {pct:>10}",
            last.contents_cum,
            last.drops_poseidon_cum,
            last.drops_pitfull_cum,
            last.alerts_sent_cum
        );
    }
    println!("wrote {}", args.out.join("metrics.csv").display());
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let mut scenario = load(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    let mut baseline = scenario.clone().with_mode(PoseidonMode::Off);
    baseline.attackers.clear();
    let (base, _) = run_repeats(&baseline, args.repeats)?;
    let on_path = scenario.attack_path_routers();

    let modes = [
        PoseidonMode::Off,
        PoseidonMode::Local,
        PoseidonMode::Pushback,
    ];
    let mut table: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
    let mut first_drops: BTreeMap<String, Vec<Option<SimTime>>> = BTreeMap::new();
    for mode in modes {
        let (m, summaries) = run_repeats(&scenario.clone().with_mode(mode), args.repeats)?;
        for (router, pct) in relative_throughput(&m, &base)? {
            table.entry(router.clone()).or_default().push(pct);
            first_drops
                .entry(router.clone())
                .or_default()
                .push(summaries[0].routers[&router].first_poseidon_drop);
        }
    }
    let fmt_pct = |p: &Option<f64>| p.map(|v| format!("{v:.1}")).unwrap_or_else(|| "NA".into());
    let fmt_t = |t: &Option<SimTime>| t.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
    println!(
        "{:<8} {:>4} {:>8} {:>8} {:>9} {:>11} {:>11}",
        "router", "path", "off%", "local%", "pushback%", "drop@local", "drop@push"
    );
    for (router, row) in &table {
        let fd = &first_drops[router];
        println!(
            "{router:<8} {:>4} {:>8} {:>8} {:>9} {:>11} {:>11}",
            if on_path.contains(router) { "*" } else { "" },
            fmt_pct(&row[0]),
            fmt_pct(&row[1]),
            fmt_pct(&row[2]),
            fmt_t(&fd[1]),
            fmt_t(&fd[2])
        );
    }
    Ok(())
}
