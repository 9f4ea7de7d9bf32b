//! `dyncon`: generate workloads, replay them through the connectivity
//! engine, and summarize the work counters.
//!
//! Exit status: 0 on success, 1 when verification fails, 2 on bad input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dyncon::connectivity::SearchStrategy;
use dyncon::workload::{generate, run, sweep, GenerateParams, Report, RunOptions, Script, Summary, Verify};

#[derive(Parser)]
#[command(name = "dyncon", version, about = "Batch-dynamic graph connectivity harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random workload script.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        batches: usize,
        /// Average batch size.
        #[arg(long)]
        delta: usize,
        #[arg(long, default_value_t = 0.5)]
        insert: f64,
        #[arg(long, default_value_t = 0.3)]
        delete: f64,
        #[arg(long, default_value_t = 0.2)]
        query: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a script and print a key=value report.
    Run {
        script: PathBuf,
        #[arg(long, default_value = "interleaved")]
        strategy: SearchStrategy,
        #[arg(long, default_value = "none")]
        verify: Verify,
        /// Skip-list seed; defaults to the script's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Report file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the report as JSON to this file.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Leave wall-time lines out of the text report.
        #[arg(long)]
        no_timing: bool,
        #[arg(long, hide = true)]
        corrupt_after: Option<usize>,
    },
    /// Summarize a JSON report written by `run --json`.
    Stats {
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pushes per deleted edge across deletion batch sizes.
    Sweep {
        #[arg(long, default_value_t = 2048)]
        n: usize,
        /// Edges inserted, then all deleted.
        #[arg(long, default_value_t = 8192)]
        m: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,16,256,2048")]
        deltas: Vec<usize>,
        #[arg(long, default_value = "interleaved")]
        strategy: SearchStrategy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure carrying its exit status.
struct Fail(u8, String);

fn input(msg: impl std::fmt::Display) -> Fail {
    Fail(2, msg.to_string())
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Fail> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn execute(cmd: Command) -> Result<(), Fail> {
    match cmd {
        Command::Generate {
            n,
            batches,
            delta,
            insert,
            delete,
            query,
            seed,
            out,
        } => {
            let script = generate(&GenerateParams {
                n,
                batches,
                delta,
                insert_ratio: insert,
                delete_ratio: delete,
                query_ratio: query,
                seed,
            })
            .map_err(input)?;
            emit(out.as_deref(), &script.to_text())
        }
        Command::Run {
            script,
            strategy,
            verify,
            seed,
            threads,
            out,
            json,
            no_timing,
            corrupt_after,
        } => {
            let text = read(&script)?;
            let script = Script::parse(&text).map_err(|e| input(format!("{}: {e}", script.display())))?;
            let opts = RunOptions {
                strategy,
                verify,
                seed,
                threads: threads.max(1),
                corrupt_after,
            };
            let report = run(&script, &opts).map_err(input)?;
            emit(out.as_deref(), &report.render(!no_timing))?;
            if let Some(path) = json {
                let body = serde_json::to_string_pretty(&report).expect("report serializes");
                fs::write(&path, body).map_err(|e| input(format!("{}: {e}", path.display())))?;
            }
            if report.passed() {
                Ok(())
            } else {
                Err(Fail(1, format!("verification failed ({} failures)", report.failures.len())))
            }
        }
        Command::Stats { report, out } => {
            let text = read(&report)?;
            let report: Report =
                serde_json::from_str(&text).map_err(|e| input(format!("{}: not a JSON report: {e}", report.display())))?;
            emit(out.as_deref(), &Summary::of(&report).render())
        }
        Command::Sweep {
            n,
            m,
            deltas,
            strategy,
            seed,
            threads,
            out,
        } => {
            if n < 2 || m > n * (n - 1) / 2 || deltas.contains(&0) {
                return Err(input("need n >= 2, m <= n(n-1)/2 and positive deltas"));
            }
            let points = sweep(n, m, &deltas, strategy, seed, threads.max(1)).map_err(input)?;
            let mut text = format!("n={n}\nm={m}\nstrategy={strategy}\nseed={seed}\n");
            for p in &points {
                text.push_str(&format!(
                    "delta={} K={} P={} pushes_per_deletion={:.4}\n",
                    p.delta, p.deleted, p.pushes, p.pushes_per_deletion
                ));
            }
            emit(out.as_deref(), &text)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail(code, msg)) => {
            eprintln!("dyncon: {msg}");
            ExitCode::from(code)
        }
    }
}
