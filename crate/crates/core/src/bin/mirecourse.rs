use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use matroid_recourse::harness::{self, RunConfig, Suite};
use matroid_recourse::instances::{generate, parse_params, InstanceFile};

#[derive(Parser)]
#[command(name = "mirecourse", version, about = "Online matroid intersection with recourse accounting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Skeleton,
    Monotone,
    Expansion,
    Gluing,
    Kkt,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Skeleton => Suite::Skeleton,
            SuiteArg::Monotone => Suite::Monotone,
            SuiteArg::Expansion => Suite::Expansion,
            SuiteArg::Gluing => Suite::Gluing,
            SuiteArg::Kkt => Suite::Kkt,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Process every arrival of an instance and report the recourse.
    Run {
        file: PathBuf,
        /// Recompute prices after each arrival and check they never drop.
        #[arg(long)]
        prices: bool,
        #[arg(long, conflicts_with = "csv")]
        json: bool,
        #[arg(long)]
        csv: bool,
        /// Include wall-clock time in the report.
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the structural properties of an instance's prices.
    Verify {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run many generated instances and write a CSV of recourse ratios.
    Sweep {
        #[arg(long = "gen")]
        generator: String,
        /// Comma-separated list of sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Extra generator parameters, `k=v,k=v`.
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate an instance file.
    Gen {
        #[arg(long)]
        family: String,
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<InstanceFile> {
    InstanceFile::read(path).with_context(|| format!("reading {}", path.display()))
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    match Cli::parse().command {
        Command::Run {
            file,
            prices,
            json: _,
            csv,
            timing,
            out,
        } => {
            let report = harness::run(&load(&file)?, RunConfig { prices, timing })?;
            let text = if csv { report.to_csv() } else { report.to_json() };
            emit(&text, out.as_ref())?;
            for f in &report.failures {
                eprintln!("invariant failed: {f}");
            }
            Ok(report.passed())
        }
        Command::Verify { file, suite, out } => {
            let report = harness::verify(&load(&file)?, suite.into())?;
            emit(&report.to_json(), out.as_ref())?;
            for r in &report.results {
                eprintln!(
                    "{} {}/{}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.suite,
                    r.property
                );
            }
            Ok(report.passed)
        }
        Command::Sweep {
            generator,
            n,
            trials,
            seed,
            params,
            out,
        } => {
            if trials == 0 {
                bail!("--trials must be positive");
            }
            let rows = harness::sweep(&generator, &n, trials, seed, &parse_params(&params)?, Some(&out))?;
            eprintln!(
                "wrote {} rows to {}",
                rows.len(),
                out.join(format!("sweep_{generator}.csv")).display()
            );
            Ok(true)
        }
        Command::Gen {
            family,
            params,
            seed,
            out,
        } => {
            let file = generate(&family, &parse_params(&params)?, seed)?;
            file.write(&out)?;
            Ok(true)
        }
    }
}
