use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use intersim::engine::SimResult;
use intersim::metrics::DelaySummary;
use intersim::report::{events_csv, scopes};
use intersim::suite::{run_suite, ExperimentSuite, RunFiles, SuiteName};
use intersim::{parse_scenario, run, PolicyKind, ScenarioConfig, SimError};

/// Four-way intersection simulator: fixed-cycle lights vs. V2V brake-or-pass.
#[derive(Parser)]
#[command(name = "intersim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario and write its output files.
    Run(RunArgs),
    /// Run a named experiment suite (even, uneven, custom).
    Suite(SuiteArgs),
    /// Strict invariant-only run; exits non-zero on any violation.
    Check(CheckArgs),
}

#[derive(Args)]
struct Common {
    /// Scenario configuration file; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Abort on the first invariant violation.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_policy)]
    policy: Option<PolicyKind>,
    #[arg(long, default_value = "out/run")]
    out: PathBuf,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(value_parser = parse_suite)]
    name: SuiteName,
    #[command(flatten)]
    common: Common,
    /// Comma-separated seeds shared by every grid point and policy.
    #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3, 4, 5])]
    seeds: Vec<u64>,
    /// Policy for the custom suite (even and uneven always run both).
    #[arg(long, value_parser = parse_policy)]
    policy: Option<PolicyKind>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Check only this policy; both when omitted.
    #[arg(long, value_parser = parse_policy)]
    policy: Option<PolicyKind>,
}

fn parse_policy(s: &str) -> Result<PolicyKind, String> {
    s.parse().map_err(|e: intersim::ConfigError| e.to_string())
}

fn parse_suite(s: &str) -> Result<SuiteName, String> {
    s.parse().map_err(|e: intersim::ConfigError| e.to_string())
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig> {
    let text = match path {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => String::new(),
    };
    Ok(parse_scenario(&text)?)
}

fn print_summary(result: &SimResult) {
    println!(
        "policy={} seed={} vehicles={} non_drained={} violations={} end={:.1}s",
        result.config.policy,
        result.config.seed,
        result.records.len(),
        result.non_drained.len(),
        result.violations.len(),
        result.final_time
    );
    for (scope, recs) in scopes(&result.records) {
        if let Ok(s) = DelaySummary::of(&recs) {
            println!(
                "  {scope:>6}: n={:<5} median={:>8.3} mean={:>8.3} max={:>8.3} >20s={:.3}",
                s.count, s.median, s.mean, s.max, s.over_20s
            );
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let mut cfg = load_config(args.common.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(policy) = args.policy {
        cfg.policy = policy;
    }
    cfg.strict |= args.common.strict;
    let result = run(&cfg)?;
    RunFiles::render(&result).write_to(&args.out)?;
    let events = args.out.join("events.csv");
    fs::write(&events, events_csv(&result.events)).with_context(|| format!("writing {}", events.display()))?;
    print_summary(&result);
    println!("wrote {}", args.out.display());
    Ok(if result.drained() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(4)
    })
}

fn cmd_suite(args: SuiteArgs) -> Result<ExitCode> {
    let mut base = load_config(args.common.config.as_deref())?;
    base.strict |= args.common.strict;
    if let Some(policy) = args.policy {
        base.policy = policy;
    }
    let suite = ExperimentSuite::named(args.name, base, args.seeds);
    let report = run_suite(&suite, &args.out)?;
    let mut capped = 0;
    for run in &report.runs {
        let c = &run.spec.config;
        let pooled = run.summary("pooled");
        println!(
            "{:<8} {:<5} seed={:<4} median={:>9.3} mean={:>9.3} non_drained={}",
            run.spec.label,
            c.policy.to_string(),
            c.seed,
            pooled.map_or(f64::NAN, |s| s.median),
            pooled.map_or(f64::NAN, |s| s.mean),
            run.non_drained
        );
        capped += usize::from(run.non_drained > 0);
    }
    println!("wrote {}", args.out.join(args.name.to_string()).display());
    Ok(if capped == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(4)
    })
}

fn cmd_check(args: CheckArgs) -> Result<ExitCode> {
    let mut base = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        base.seed = seed;
    }
    base.strict = true;
    let policies = match args.policy {
        Some(p) => vec![p],
        None => vec![PolicyKind::Light, PolicyKind::V2v],
    };
    for policy in policies {
        let result = run(&base.clone().with_policy(policy))?;
        println!(
            "{policy}: ok ({} vehicles, {} ticks checked)",
            result.records.len(),
            (result.final_time * 10.0).round()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Suite(args) => cmd_suite(args),
        Command::Check(args) => cmd_check(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<SimError>() {
                Some(SimError::Invariant { .. }) => ExitCode::from(3),
                Some(SimError::Config(_)) => ExitCode::from(2),
                _ if err.downcast_ref::<intersim::ConfigError>().is_some() => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
