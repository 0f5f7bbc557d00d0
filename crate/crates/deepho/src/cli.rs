//! Command line interface: `deepho scene build|run|replay`.

use crate::error::{Error, Result};
use crate::report::{load_config, replay_report, run_experiment};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "deepho", about = "Deep homology and coarse duality experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scene experiments.
    Scene {
        #[command(subcommand)]
        action: SceneAction,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config (for `replay`: a previously written report).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for reports and graphs.
    #[arg(long)]
    out: PathBuf,
    /// Worker count; experiments currently run serially, the flag is
    /// accepted for compatibility and does not affect output.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Simplex budget for window construction; overrides DEEPHO_BUDGET.
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Subcommand)]
enum SceneAction {
    /// Build the scene and report its size and control audit, without
    /// running homology.
    Build(CommonArgs),
    /// Run the configured checks and write `report.json` (and
    /// `adjacency.dot` when an adjacency graph is built).
    Run(CommonArgs),
    /// Recompute a report from its embedded config and diff the results.
    Replay(CommonArgs),
}

fn budget_of(args: &CommonArgs) -> Result<Option<usize>> {
    if args.budget.is_some() {
        return Ok(args.budget);
    }
    match std::env::var("DEEPHO_BUDGET") {
        Ok(v) => v
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::Config(format!("DEEPHO_BUDGET is not a number: {v}"))),
        Err(_) => Ok(None),
    }
}

fn write(path: &std::path::Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn scene_build(args: &CommonArgs) -> Result<i32> {
    let cfg = load_config(&args.config)?;
    let budget = budget_of(args)?;
    // Reuse the runner with no checks: it builds and audits the scene.
    let mut cfg = cfg;
    cfg.checks.clear();
    let exp = run_experiment(&cfg, budget)?;
    std::fs::create_dir_all(&args.out)?;
    write(&args.out.join("build.json"), &pretty(&exp.report))?;
    println!("built scene '{}'", cfg.name);
    Ok(0)
}

fn scene_run(args: &CommonArgs) -> Result<i32> {
    let cfg = load_config(&args.config)?;
    let budget = budget_of(args)?;
    let exp = run_experiment(&cfg, budget)?;
    std::fs::create_dir_all(&args.out)?;
    write(&args.out.join("report.json"), &pretty(&exp.report))?;
    if let Some(dot) = &exp.dot {
        write(&args.out.join("adjacency.dot"), dot)?;
    }
    println!(
        "{}: {}",
        cfg.name,
        if exp.pass { "all checks passed" } else { "CHECKS FAILED" }
    );
    Ok(if exp.pass { 0 } else { 1 })
}

fn scene_replay(args: &CommonArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&args.config)?;
    let report: serde_json::Value = serde_json::from_str(&text)?;
    let budget = budget_of(args)?;
    let outcome = replay_report(&report, budget)?;
    std::fs::create_dir_all(&args.out)?;
    let verdict = json!({
        "schema": crate::report::SCHEMA_VERSION,
        "replayed": args.config.display().to_string(),
        "pass": outcome.pass,
        "mismatches": outcome.mismatches,
    });
    write(&args.out.join("replay.json"), &pretty(&verdict))?;
    for m in &outcome.mismatches {
        eprintln!("mismatch {m}");
    }
    println!("replay: {}", if outcome.pass { "consistent" } else { "MISMATCH" });
    Ok(if outcome.pass { 0 } else { 1 })
}

/// Entry point for the `deepho` binary.
pub fn cli_main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Scene { action } => match action {
            SceneAction::Build(args) => scene_build(args),
            SceneAction::Run(args) => scene_run(args),
            SceneAction::Replay(args) => scene_replay(args),
        },
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            // Machine-readable diagnostics on stderr, nonzero exit.
            let diag = json!({"error": {"kind": error_kind(&e), "message": e.to_string()}});
            eprintln!("{diag}");
            std::process::exit(2);
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::BudgetExceeded { .. } => "budget",
        Error::WindowPolicy { .. } => "window_policy",
        Error::OutOfWindow { .. } => "out_of_window",
        Error::NotACycle { .. } => "not_a_cycle",
        Error::FillFailed { .. } => "fill_failed",
        Error::RelativeStructure { .. } => "relative_structure",
        Error::FiltrationExhausted { .. } => "filtration_exhausted",
        Error::NotInvertible { .. } => "not_invertible",
        Error::UnstableLimit { .. } => "unstable_limit",
        Error::Config(_) => "config",
        Error::Schema { .. } => "schema",
        Error::ReplayMismatch { .. } => "replay_mismatch",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}
