use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use spike4::config::{parse_config, Kind};
use spike4::report;

#[derive(Parser)]
#[command(name = "spike4", version, about = "Runs spike4 experiments from TOML configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sobolev constant, scalar levels, k-system and A₁.
    Constants(RunArgs),
    /// Scalar ground states on one grid.
    ScalarGround(RunArgs),
    /// Vector ground state on one grid.
    SystemGround(RunArgs),
    /// ε ladder with spike traces.
    Sweep(RunArgs),
    /// Optimal spike placement in a 4-D domain.
    Placement(RunArgs),
    /// Decay of the bubble interaction integral.
    Interaction(RunArgs),
    /// Merges JSON reports into one summary table.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `out` in the config; defaults to the current directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

const USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    let (kind, args) = match cli.command {
        Command::Constants(a) => (Kind::Constants, a),
        Command::ScalarGround(a) => (Kind::ScalarGround, a),
        Command::SystemGround(a) => (Kind::SystemGround, a),
        Command::Sweep(a) => (Kind::Sweep, a),
        Command::Placement(a) => (Kind::Placement, a),
        Command::Interaction(a) => (Kind::Interaction, a),
        Command::Report { files, out, quiet } => return merge(&files, out, quiet),
    };
    match run(kind, &args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(USAGE)
        }
    }
}

fn run(kind: Kind, args: &RunArgs) -> anyhow::Result<bool> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let cfg = parse_config(&text, kind, args.seed).with_context(|| format!("in {}", args.config.display()))?;
    let out = args.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    let (rep, tables) = spike4::run(kind, &cfg);
    report::write(&out, &rep, &tables)?;
    if !args.quiet {
        for a in &rep.assertions {
            println!("{:<5} {} (margin {})", if a.pass { "PASS" } else { "FAIL" }, a.name, report::num(a.margin));
        }
        println!("{}: {}", kind.name(), if rep.all_pass { "all assertions passed" } else { "assertions failed" });
    }
    Ok(rep.all_pass)
}

fn merge(files: &[PathBuf], out: Option<PathBuf>, quiet: bool) -> ExitCode {
    let merged = report::merge(files).and_then(|(t, all)| {
        if let Some(dir) = &out {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("summary.csv"), t.to_csv()?)?;
        }
        Ok((t, all))
    });
    match merged {
        Ok((t, all)) => {
            if !quiet {
                for r in &t.rows {
                    println!("{}", r.join("  "));
                }
            }
            if all {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(USAGE)
        }
    }
}
