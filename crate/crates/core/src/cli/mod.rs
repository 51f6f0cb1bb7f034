//! The `ellipnls` command line.
//!
//! Exit status: 0 when every check passes, 2 when a run completed but some
//! check reported a discrepancy, 1 on error. Errors are also written as a
//! JSON record to stderr and to `<out>/error.json`.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::error::{Error, Result};
use commands::{Ctx, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Coeffs,
    PhaseDiagram,
    HProfile,
    Region,
    Surface,
    PeriodT,
    Phase,
    Residuals,
    SsfmCheck,
    Search,
    ReproduceAppendix,
}

impl Command {
    pub fn name(self) -> String {
        self.to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default()
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ellipnls",
    version,
    about = "Elliptic-function solution family for the cubic NLS"
)]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// TOML run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override, e.g. `c1=-2` or `region.nz=100`
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

pub fn run(args: &Args) -> Result<Outcome> {
    let cfg = config::load(args.config.as_deref(), &args.params)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", args.out.display())))?;
    let ctx = Ctx {
        cfg: &cfg,
        out: &args.out,
    };
    let outcome = match args.command {
        Command::Coeffs => commands::coeffs(&ctx),
        Command::PhaseDiagram => commands::phase_diagram(&ctx),
        Command::HProfile => commands::h_profile(&ctx),
        Command::Region => commands::region(&ctx, "region"),
        Command::Surface => commands::surface(&ctx, "surface"),
        Command::PeriodT => commands::period_t(&ctx, "period_t"),
        Command::Phase => commands::phase(&ctx),
        Command::Residuals => commands::residuals(&ctx),
        Command::SsfmCheck => commands::ssfm_check(&ctx),
        Command::Search => commands::search(&ctx),
        Command::ReproduceAppendix => commands::reproduce_appendix(&ctx),
    }?;
    commands::write_summary(&cfg, &args.out, &args.command.name(), &outcome)?;
    Ok(outcome)
}

fn error_record(command: &str, e: &Error) -> String {
    serde_json::json!({
        "command": command,
        "error": e.kind(),
        "message": e.to_string(),
    })
    .to_string()
}

fn set_threads() {
    if let Some(n) = std::env::var("ELLIPNLS_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main() -> i32 {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    set_threads();
    let command = args.command.name();
    match run(&args) {
        Ok(outcome) => {
            for c in &outcome.checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "DISCREPANCY" },
                    c.name,
                    c.detail
                );
            }
            for (k, v) in &outcome.notes {
                println!("NOTE {k}: {v}");
            }
            if outcome.checks.iter().all(|c| c.passed) {
                0
            } else {
                2
            }
        }
        Err(e) => {
            let record = error_record(&command, &e);
            eprintln!("{record}");
            if std::fs::create_dir_all(&args.out).is_ok() {
                let _ = std::fs::write(args.out.join("error.json"), format!("{record}\n"));
            }
            1
        }
    }
}
