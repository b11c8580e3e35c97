use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qdyn_harness::{find, list_scenarios, run_scenario, HarnessError, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "qdyn",
    version,
    about = "Run quantum-dynamics scenarios and write their data series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List registered scenarios.
    List,
    /// Show a scenario's parameters and defaults.
    Describe { id: String },
    /// Run a scenario and write CSV tables plus metadata.toml.
    Run {
        id: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override a parameter, e.g. --set n_max=60 or --set steps=[2,4].
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn describe(id: &str) -> Result<(), HarnessError> {
    let sc = find(id)?;
    println!("{}\n  {}\n  reproduces: {}\n", sc.id, sc.description, sc.anchor);
    println!(
        "  {:<14} {:<10} {:<28} {:<10} help",
        "name", "section", "default", "unit"
    );
    for p in (sc.schema)() {
        let section = if p.truncation { "truncation" } else { "params" };
        println!(
            "  {:<14} {:<10} {:<28} {:<10} {}",
            p.name,
            section,
            p.default.to_string(),
            p.unit,
            p.help
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run(
    id: &str,
    config: Option<PathBuf>,
    set: &[String],
    seed: Option<u64>,
    threads: Option<usize>,
    out: Option<PathBuf>,
) -> Result<ExitCode, HarnessError> {
    let sc = find(id)?;
    let mut cfg = match config {
        Some(p) => ScenarioConfig::load(&p)?,
        None => ScenarioConfig::default(),
    };
    let schema = (sc.schema)();
    for kv in set {
        cfg.apply_set(kv, &schema)?;
    }
    cfg.seed = seed.or(cfg.seed);
    cfg.threads = threads.or(cfg.threads);
    cfg.out = out.or(cfg.out);
    let art = run_scenario(id, &cfg)?;
    for t in &art.tables {
        println!("wrote {}", t.display());
    }
    println!("wrote {}", art.metadata.display());
    for c in &art.output.checks {
        println!(
            "check {}: {} {:e} (limit {:e})",
            c.name,
            if c.passed { "ok" } else { "FAILED" },
            c.value,
            c.limit
        );
    }
    if let Some(c) = art.breach() {
        eprintln!("invariant breached: {} = {:e} (limit {:e})", c.name, c.value, c.limit);
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::List => {
            for (id, desc, anchor) in list_scenarios() {
                println!("{id:<26} {desc}\n{:<26} reproduces: {anchor}", "");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Describe { id } => describe(&id).map(|_| ExitCode::SUCCESS),
        Command::Run {
            id,
            config,
            set,
            seed,
            threads,
            out,
        } => run(&id, config, &set, seed, threads, out),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
