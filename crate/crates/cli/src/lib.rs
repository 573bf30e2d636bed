//! Batch front end: JSON problem files in, `report.json` and CSV tables out.
//!
//! Exit codes: 0 every check passed, 1 a check failed, 2 the input was unreadable or
//! violated its schema (no report is written), 3 a solver failed (the report carries
//! the error).

mod commands;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use qfisher::io::GridOverride;
use qfisher::report::{ErrorInfo, Report};
use qfisher::states::TruncationCheck;
use qfisher::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const REPORT_NAME: &str = "report.json";
pub const METADATA_NAME: &str = "metadata.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    VerifyIdentities,
    Evolve,
    Epi,
    Maxent,
    Sweep,
    Thermal,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyIdentities => "verify-identities",
            Command::Evolve => "evolve",
            Command::Epi => "epi",
            Command::Maxent => "maxent",
            Command::Sweep => "sweep",
            Command::Thermal => "thermal",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub input: PathBuf,
    pub out: PathBuf,
    pub grid: GridOverride,
    pub tol_scale: f64,
    pub truncation_check: bool,
}

impl RunConfig {
    fn check(&self) -> TruncationCheck {
        if self.truncation_check {
            TruncationCheck::Enforce
        } else {
            TruncationCheck::Skip
        }
    }

    /// Everything besides the input bytes that changes the numbers in the report.
    fn fingerprint(&self) -> String {
        format!(
            "command={};xmin={:?};xmax={:?};n={:?};tol_scale={:?};truncation_check={}",
            self.command.name(),
            self.grid.xmin,
            self.grid.xmax,
            self.grid.n,
            self.tol_scale,
            self.truncation_check
        )
    }
}

/// Context handed to each command.
pub(crate) struct Ctx<'a> {
    pub out: &'a Path,
    pub grid: GridOverride,
    pub check: TruncationCheck,
}

pub fn inputs_digest(input: &[u8], config: &RunConfig) -> String {
    let mut h = Sha256::new();
    h.update(input);
    h.update(b"\n");
    h.update(config.fingerprint().as_bytes());
    hex::encode(h.finalize())
}

/// Runs one command and returns its exit code.
pub fn run(config: &RunConfig) -> i32 {
    if !(config.tol_scale.is_finite() && config.tol_scale > 0.0) {
        eprintln!("error: --tol-scale must be positive, got {}", config.tol_scale);
        return EXIT_SCHEMA;
    }
    let bytes = match fs::read(&config.input) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config.input.display());
            return EXIT_SCHEMA;
        }
    };
    let text = match std::str::from_utf8(&bytes) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: input is not UTF-8: {e}");
            return EXIT_SCHEMA;
        }
    };
    if let Err(e) = fs::create_dir_all(&config.out) {
        eprintln!("error: cannot create {}: {e}", config.out.display());
        return EXIT_NUMERICAL;
    }
    let ctx = Ctx {
        out: &config.out,
        grid: config.grid,
        check: config.check(),
    };

    let mut report = Report::new(config.command.name(), &inputs_digest(&bytes, config));
    match commands::dispatch(config.command, text, &ctx) {
        Ok(outcome) => {
            report.checks = outcome
                .checks
                .into_iter()
                .map(|c| c.rescaled(config.tol_scale))
                .collect();
            report.discrepancies = outcome.discrepancies;
        }
        Err(Error::Format(msg)) => {
            eprintln!("error: invalid input: {msg}");
            return EXIT_SCHEMA;
        }
        Err(e) => {
            eprintln!("error: {} ({})", e, e.kind());
            report.error = Some(ErrorInfo::from(&e));
        }
    }
    report.finalize();

    if let Err(e) = write_report(&report, config) {
        eprintln!("error: cannot write report: {e}");
        return EXIT_NUMERICAL;
    }
    print_summary(&report);

    if report.error.is_some() {
        EXIT_NUMERICAL
    } else if report.overall_pass {
        EXIT_PASS
    } else {
        EXIT_CHECK_FAILED
    }
}

fn write_report(report: &Report, config: &RunConfig) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    text.push('\n');
    fs::write(config.out.join(REPORT_NAME), text)?;
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = serde_json::json!({
        "tool": "qfisher",
        "version": env!("CARGO_PKG_VERSION"),
        "command": config.command.name(),
        "input": config.input.display().to_string(),
        "created_unix": created,
    });
    let mut meta = serde_json::to_string_pretty(&meta).map_err(std::io::Error::other)?;
    meta.push('\n');
    fs::write(config.out.join(METADATA_NAME), meta)
}

fn print_summary(report: &Report) {
    for c in &report.checks {
        println!(
            "{} {:<34} {:<9} lhs={:.6e} rhs={:.6e} err={:.2e} tol={:.1e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.paper_eq,
            c.lhs,
            c.rhs,
            match c.mode {
                qfisher::report::Tolerance::Abs => c.abs_err,
                qfisher::report::Tolerance::Rel => c.rel_err,
            },
            c.tol
        );
    }
    for d in &report.discrepancies {
        println!("NOTE {:<34} {:<9} ratio={:.6}", d.name, d.paper_eq, d.ratio);
    }
    if let Some(e) = &report.error {
        println!("ERROR {}: {}", e.kind, e.message);
    }
    println!("overall_pass={}", report.overall_pass);
}
