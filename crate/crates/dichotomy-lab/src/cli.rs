//! Command-line interface.
//!
//! Exit codes: 0 when every executed verdict passed, 1 when any verdict
//! failed, 2 for usage, IO, or spec errors.

use crate::datko::{self, CertificateProvenance, DichotomyCertificate};
use crate::error::Error;
use crate::pipeline::{run_analysis, AnalysisOutput};
use crate::spec::SystemSpec;
use clap::{Parser, Subcommand};
use serde::Deserialize;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "dichotomy-lab",
    version,
    about = "Analyze dichotomies of nonautonomous linear systems: validate growth rates and \
             operator/projection pairs, test the weighted-integral criterion, estimate and \
             verify dichotomy constants, and check Lyapunov certificates."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full analysis pipeline on a system spec and emit a JSON report.
    Analyze {
        /// System specification (JSON).
        #[arg(long)]
        spec: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the sampled operator norms as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Seed for the randomized sample vectors (recorded in the report).
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check a claimed certificate against the system on the spec's grid.
    Verify {
        #[arg(long)]
        spec: PathBuf,
        /// Certificate file (JSON with a, b, epsilon, n1, n2).
        #[arg(long)]
        certificate: PathBuf,
        /// Relative tolerance on the bound ratios.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// List the built-in growth rates and operators with their constraints.
    ListBuiltins,
}

/// A certificate file: the constant tuple, provenance defaulting to a user
/// claim.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CertificateFile {
    a: f64,
    b: f64,
    epsilon: f64,
    n1: f64,
    n2: f64,
    #[serde(default)]
    provenance: Option<CertificateProvenance>,
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version on stdout with success
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn install_worker_pool() -> Result<(), Error> {
    let Ok(value) = std::env::var("DICHOTOMY_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.parse().map_err(|_| {
        Error::InvalidParameter(format!(
            "DICHOTOMY_LAB_THREADS must be a positive integer, got `{value}`"
        ))
    })?;
    if threads == 0 {
        return Err(Error::InvalidParameter(
            "DICHOTOMY_LAB_THREADS must be a positive integer, got `0`".into(),
        ));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidParameter(format!("failed to size the worker pool: {e}")))
}

fn dispatch(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Analyze {
            spec,
            out,
            csv,
            seed,
        } => {
            install_worker_pool()?;
            let spec = SystemSpec::load(&spec)?;
            let AnalysisOutput {
                report,
                samples_csv,
            } = run_analysis(&spec, seed)?;
            if let Some(path) = csv {
                std::fs::write(path, samples_csv)?;
            }
            match out {
                Some(path) => {
                    std::fs::write(path, report.to_json_pretty())?;
                    for line in report.summary_lines() {
                        println!("{line}");
                    }
                }
                None => println!("{}", report.to_json_pretty()),
            }
            Ok(report.exit_code())
        }
        Command::Verify {
            spec,
            certificate,
            tolerance,
        } => {
            install_worker_pool()?;
            let spec = SystemSpec::load(&spec)?;
            let text = std::fs::read_to_string(&certificate)?;
            let file: CertificateFile = serde_json::from_str(&text)?;
            let cert = DichotomyCertificate {
                a: file.a,
                b: file.b,
                epsilon: file.epsilon,
                n1: file.n1,
                n2: file.n2,
                provenance: file
                    .provenance
                    .unwrap_or(CertificateProvenance::UserClaimed),
            };
            let (rate, pair) = spec.build()?;
            let pairs = spec.analysis.pair_grid.expect("resolved spec").pairs();
            let report = datko::verify_certificate(&pair, &rate, &cert, &pairs, tolerance)?;
            for check in &report.checks {
                println!(
                    "{:<24} {}  worst ratio {:.9}{}",
                    check.name,
                    if check.pass { "pass" } else { "FAIL" },
                    check.worst_residual + 1.0,
                    check
                        .worst_at
                        .as_deref()
                        .map(|a| format!("  at {a}"))
                        .unwrap_or_default()
                );
            }
            Ok(if report.pass { 0 } else { 1 })
        }
        Command::ListBuiltins => {
            print!("{}", builtins_listing());
            Ok(0)
        }
    }
}

fn builtins_listing() -> String {
    "\
growth rates:
  exponential   mu(t) = exp(t)
  polynomial    mu(t) = t + 1
  sqrt_shift    mu(t) = t + sqrt(t^2 + 1)
  custom        any expression in t with mu(0) = 1, increasing, unbounded

operators:
  example1      coupled 2-d system over any rate; parameters a > 0, b > 0,
                epsilon >= 0; projection implied; exact branch norms in the
                max norm
  example2      oscillating diagonal 2-d system over sqrt_shift; parameters
                a > 1, b > 1, alpha >= 0 with alpha + 1 < min(a, b);
                projection implied
  diagonal      U(t, s) = diag((mu(t)/mu(s))^c_i); projection defaults to
                the coordinates with c_i < 0
  ode           x' = A(t) x with A given entrywise as expressions in t;
                requires an explicit projection (coordinate or constant)

environment:
  DICHOTOMY_LAB_THREADS   caps the worker pool (default: available cores)
"
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listing_names_every_builtin() {
        let listing = builtins_listing();
        for name in [
            "example1",
            "example2",
            "exponential",
            "polynomial",
            "sqrt_shift",
        ] {
            assert!(listing.contains(name), "missing {name}");
        }
    }
}
