use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bsq::runner::{self, RunOptions, CHECKS, DEFAULT_OUT_DIR, OUT_DIR_ENV};
use bsq::Error;

#[derive(Parser)]
#[command(name = "bsq", version, about = "Run half-weighted Bohr-Sommerfeld scenarios and convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file; exit 0 if every selected check passes, 1 otherwise, 2 on invalid input.
    Run {
        config: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: the config's output.dir, then $BSQ_OUT_DIR, then ./bsq-out).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Multiply every upper tolerance.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// List the check ids a scenario may select.
    ListChecks,
    /// Fit convergence orders across report files written at different N.
    Converge {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long, env = OUT_DIR_ENV, default_value = DEFAULT_OUT_DIR)]
        out_dir: PathBuf,
        /// Smallest acceptable order for second-order checks.
        #[arg(long, default_value_t = 1.8)]
        min_order: f64,
    },
}

fn input_error(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::ListChecks => {
            for (id, about) in CHECKS {
                println!("{id:<14} {about}");
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, seed, out_dir, tol_scale } => {
            let options = RunOptions { seed, out_dir, tol_scale };
            match runner::run_scenario(&config, &options) {
                Ok(outcome) => {
                    for c in &outcome.report.checks {
                        let secs = outcome.timings.get(&c.id).copied().unwrap_or(0.0);
                        println!("{:<14} {} ({} records, {secs:.2} s)", c.id, if c.pass { "PASS" } else { "FAIL" }, c.records.len());
                        if let Some(err) = &c.error {
                            println!("    error: {err}");
                        }
                        for r in c.failures().take(5) {
                            println!(
                                "    {} N={} lhs={:.6e} rhs={:.6e} abs_err={:.3e} rel_err={:.3e} tol={:.1e}",
                                r.label, r.n, r.lhs, r.rhs, r.abs_err, r.rel_err, r.tol
                            );
                        }
                        if !c.pass {
                            for note in c.notes.iter().take(5) {
                                println!("    note: {note}");
                            }
                        }
                    }
                    println!("report: {}", outcome.dir.join("report.json").display());
                    if outcome.report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) }
                }
                Err(e) => input_error(&e),
            }
        }
        Command::Converge { reports, out_dir, min_order } => match runner::converge_reports(&reports, &out_dir, min_order) {
            Ok(table) => {
                for r in &table.rows {
                    println!("{:<12} {:<24} order {}{}", r.check, r.label, r.order, if r.flagged { "  FLAGGED" } else { "" });
                }
                println!("table: {}", out_dir.join("convergence.csv").display());
                if table.flagged().next().is_some() { ExitCode::from(1) } else { ExitCode::SUCCESS }
            }
            Err(e) => input_error(&e),
        },
    }
}
