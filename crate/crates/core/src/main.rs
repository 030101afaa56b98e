#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use choquard::cli::{
    format_pairs, parse_config, report_pairs, run_convolve_test, run_solve, run_sweep, run_verify, sweep_csv,
    sweep_points, write_artifacts, ROUND_TRIP_TOL,
};
use choquard::ChoquardError;

#[derive(Parser)]
#[command(name = "choquard", version, about = "Penalized Choquard solver and audit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve, audit and write artifacts.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Exit with status 1 when the audit fails.
        #[arg(long)]
        strict: bool,
    },
    /// Re-audit the stored solution and compare with the stored report.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Directory holding the artifacts; defaults to `output.directory`.
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long)]
        strict: bool,
    },
    /// Solve over a parameter grid, one CSV row per run.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        cutoffs: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        deltas: Vec<f64>,
        #[arg(long = "w0-scales", value_delimiter = ',')]
        w0_scales: Vec<f64>,
        #[arg(long)]
        strict: bool,
    },
    /// Compare the fast convolution engines with brute force.
    ConvolveTest {
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        strict: bool,
    },
}

fn run(cli: Cli) -> Result<bool, ChoquardError> {
    match cli.command {
        Command::Solve { config, strict } => {
            let cfg = parse_config(&config)?;
            let out = run_solve(&cfg)?;
            write_artifacts(&out, &cfg.output.directory, &cfg.output.formats)?;
            print!("{}", format_pairs(&report_pairs(&out)));
            Ok(!strict || out.audit.passed())
        }
        Command::Verify { config, dir, strict } => {
            let cfg = parse_config(&config)?;
            let dir = dir.unwrap_or(cfg.output.directory.clone());
            let rt = run_verify(&cfg, &dir)?;
            println!("round_trip.max_gap = {:.16e}", rt.max_gap);
            println!("round_trip.tolerance = {ROUND_TRIP_TOL:.16e}");
            println!("round_trip.reproduced = {}", rt.reproduced());
            for k in &rt.mismatches {
                println!("round_trip.mismatch = {k}");
            }
            println!("audit.pass = {}", rt.audit.passed());
            Ok(rt.reproduced() && (!strict || rt.audit.passed()))
        }
        Command::Sweep {
            config,
            cutoffs,
            deltas,
            w0_scales,
            strict,
        } => {
            let cfg = parse_config(&config)?;
            let points = sweep_points(&cfg, &cutoffs, &deltas, &w0_scales);
            let rows = run_sweep(&cfg, &points)?;
            let csv = sweep_csv(&rows);
            std::fs::create_dir_all(&cfg.output.directory)?;
            std::fs::write(cfg.output.directory.join("sweep.csv"), &csv)?;
            print!("{csv}");
            Ok(!strict || rows.iter().all(|r| r.audit_pass))
        }
        Command::ConvolveTest { mu, seed, strict } => {
            let a = run_convolve_test(mu, seed)?;
            println!("radial_max_rel_err = {:.6e}", a.radial);
            println!("box_max_rel_err = {:.6e}", a.boxed);
            println!("max_disagreement = {:.6e}", a.max());
            Ok(!strict || a.max() <= 1e-6)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
