use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use levyheat::runner::{emit_plotdata, load_scenario, run_corpus, run_scenario, RunOptions};

/// Small-time heat content of Lévy processes against their limit laws.
#[derive(Parser, Debug)]
#[command(name = "levyheat", version, about)]
struct Cli {
    /// Seed of the Monte-Carlo streams (overrides the scenario).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Do not read or write the density cache.
    #[arg(long, global = true)]
    no_cache: bool,
    /// PASS threshold used instead of each scenario's tolerance.
    #[arg(long, global = true)]
    tolerance_override: Option<f64>,
    /// Root of the output directories.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario file.
    Run { scenario: PathBuf },
    /// Run every scenario of a directory and write corpus_summary.csv.
    Corpus { dir: PathBuf },
    /// Turn a report CSV into plotting series.
    Plotdata {
        report: PathBuf,
        #[arg(short, long, default_value = "plotdata.csv")]
        output: PathBuf,
    },
    /// Parse and check a scenario (including the law's hypotheses) without running it.
    Validate { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let opts = RunOptions {
        seed: cli.seed,
        tolerance_override: cli.tolerance_override,
        out_root: Some(cli.out.clone()),
        no_cache: cli.no_cache,
    };
    let code: u8 = match &cli.command {
        Command::Run { scenario } => match run_scenario(scenario, &opts) {
            Ok(outcome) => {
                print!("{}", outcome.summary());
                println!("outputs written to {}", outcome.output_dir.display());
                if outcome.pass() {
                    0
                } else {
                    2
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        Command::Corpus { dir } => match run_corpus(dir, &opts) {
            Ok(summary) => {
                for r in &summary.rows {
                    let err = r.final_error.map(|e| format!("{e:.3e}")).unwrap_or_else(|| "-".into());
                    println!("{:<5} {:<28} {:<14} {:<11} error {}  {}", r.verdict, r.file, r.theorem, r.estimator, err, r.message);
                }
                println!("summary written to {}", cli.out.join("corpus_summary.csv").display());
                summary.exit_code()
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        Command::Plotdata { report, output } => match emit_plotdata(report, output) {
            Ok(n) => {
                println!("{n} points per series written to {}", output.display());
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        Command::Validate { scenario } => match load_scenario(scenario, &opts) {
            Ok(l) => {
                println!(
                    "ok: {} ({}, limit {:.10e} ± {:.1e}, {} times)",
                    l.scenario.name,
                    l.law.theorem,
                    l.law.limit,
                    l.law.limit_error,
                    l.scenario.t_grid.len()
                );
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
    };
    ExitCode::from(code)
}
