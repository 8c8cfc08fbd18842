//! `qlop` — runs the verification suites and writes structured reports.
//!
//! Exit codes: 0 when every check passes, 1 when any check fails, 2 on
//! configuration or convergence errors.

mod config;
mod dump;
mod suites;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use config::Overrides;
use dump::DumpObject;
use qlop::report::write_report;
use suites::SuiteArg;

#[derive(Parser)]
#[command(
    name = "qlop",
    version,
    about = "Verification suites for q-oscillator L-operators, their factorization, and trace-built T/Q-operators"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a verification suite and write a JSONL report
    Check(CheckArgs),
    /// Write one operator in the binary dump format (plus sidecar)
    Dump(DumpArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// Suite to run
    #[arg(value_enum, ignore_case = true, required_unless_present = "suite_flag")]
    suite: Option<SuiteArg>,
    /// Alternative spelling of the suite selection
    #[arg(long = "suite", value_enum, ignore_case = true, conflicts_with = "suite")]
    suite_flag: Option<SuiteArg>,
    #[command(flatten)]
    flags: FlagArgs,
    /// Also dump these objects after the checks (repeatable)
    #[arg(long = "dump", value_enum, ignore_case = true)]
    dump: Vec<DumpObject>,
}

#[derive(Args)]
struct DumpArgs {
    /// Object to dump
    #[arg(value_enum, ignore_case = true)]
    object: DumpObject,
    #[command(flatten)]
    flags: FlagArgs,
}

#[derive(Args)]
struct FlagArgs {
    /// Deformation parameter q (per-suite defaults otherwise)
    #[arg(long)]
    q: Option<f64>,
    /// Highest weight mu
    #[arg(long)]
    mu: Option<f64>,
    /// Spectral parameter x
    #[arg(long)]
    x: Option<f64>,
    /// Second spectral parameter y (RLL)
    #[arg(long)]
    y: Option<f64>,
    /// Twist exponent phi (default: sites + 2)
    #[arg(long)]
    phi: Option<f64>,
    /// Chain length N (default: 1 and 2)
    #[arg(long)]
    sites: Option<usize>,
    /// Auxiliary-space cutoff D
    #[arg(long)]
    cutoff: Option<usize>,
    /// Tolerance override for every check in the suite
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for the randomized generic points
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: qlop-out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional key=value config file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

impl FlagArgs {
    fn overrides(&self) -> Result<Overrides> {
        let flags = Overrides {
            q: self.q,
            mu: self.mu,
            x: self.x,
            y: self.y,
            phi: self.phi,
            sites: self.sites,
            cutoff: self.cutoff,
            tol: self.tol,
            seed: self.seed,
            out: self.out.clone(),
        };
        let ov = match &self.config {
            Some(path) => Overrides::from_file(path)?.merged_under(flags),
            None => flags,
        };
        ov.validate()?;
        Ok(ov)
    }
}

fn run_check(args: &CheckArgs) -> Result<bool> {
    let suite = args
        .suite
        .or(args.suite_flag)
        .ok_or_else(|| anyhow!("field `suite`: no suite selected"))?;
    let ov = args.flags.overrides()?;
    let reports = suites::run_suite(suite, &ov)?;

    let out_dir = ov.out_dir();
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| anyhow!("field `out`: cannot create {}: {e}", out_dir.display()))?;
    let report_path = out_dir.join("report.jsonl");
    write_report(&report_path, &reports)?;

    let mut passed = 0usize;
    for r in &reports {
        println!(
            "[{}] {:<40} residual {:>12.3e}  tol {:>8.1e}  ({})",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.residual,
            r.tolerance,
            r.margin,
        );
        if r.pass {
            passed += 1;
        }
    }
    println!(
        "{passed}/{} checks passed; report written to {}",
        reports.len(),
        report_path.display()
    );

    for obj in &args.dump {
        let (bin, meta) = dump::dump_object(*obj, &ov)?;
        println!("dumped {} -> {} (+ {})", obj.name(), bin.display(), meta.display());
    }
    Ok(passed == reports.len())
}

fn run_dump(args: &DumpArgs) -> Result<()> {
    let ov = args.flags.overrides()?;
    let (bin, meta) = dump::dump_object(args.object, &ov)?;
    println!("dumped {} -> {} (+ {})", args.object.name(), bin.display(), meta.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.cmd {
        Cmd::Check(args) => run_check(args),
        Cmd::Dump(args) => run_dump(args).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
