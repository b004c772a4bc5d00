//! `minvec`: batch front end for the verification library.
//!
//! Exit codes: 0 pass, 1 falsified, 2 usage or parse error, 3 construction
//! failure, 4 budget exceeded.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use minvec::error::{Error, Result};
use minvec::files::{DatumFile, QueryFile};
use minvec::samples::DEFAULT_MARGIN;

use commands::Settings;
use report::{error_code, Report};

#[derive(Parser, Debug)]
#[command(
    name = "minvec",
    version,
    about = "Exact checks of minimal-vector test functions over Z/p^N"
)]
struct Cli {
    /// Largest enumeration any single step may perform.
    #[arg(long, global = true, default_value_t = 1 << 26)]
    budget: u128,
    /// Seed for every sampled check.
    #[arg(long, global = true, default_value_t = 0x6b70)]
    seed: u64,
    /// Extra p-adic digits carried beyond the group level.
    #[arg(long, global = true, default_value_t = DEFAULT_MARGIN)]
    precision_margin: u32,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Valuation, k0, minimality and lattice approximations of a datum.
    Order { datum: PathBuf },
    /// Group-theoretic and test-function checks on a minimal datum.
    Verify {
        datum: PathBuf,
        /// Comma-separated subset of character, heisenberg, intertwine, omega,
        /// convolution, concentration.
        #[arg(
            long,
            default_value = "character,heisenberg,intertwine,omega,convolution,concentration"
        )]
        checks: String,
    },
    /// Enumerate a lattice query and test commutativity and the partition bound.
    Count { query: PathBuf },
    /// Exponent of the amplified bound for GL_n.
    Exponent {
        #[arg(allow_hyphen_values = true)]
        n: i64,
    },
    /// Every datum and query file in a directory.
    ReportAll { dir: PathBuf },
}

fn run(cli: &Cli, cfg: Settings) -> Result<Vec<Result<Report>>> {
    Ok(match &cli.command {
        Command::Order { datum } => vec![commands::order(&DatumFile::read(datum)?, cfg)],
        Command::Verify { datum, checks } => {
            let list: Vec<&str> = checks
                .split(',')
                .map(str::trim)
                .filter(|c| !c.is_empty())
                .collect();
            if list.is_empty() {
                return Err(Error::InvalidInput("empty check set".into()));
            }
            vec![commands::verify(&DatumFile::read(datum)?, &list, cfg)]
        }
        Command::Count { query } => vec![commands::count(&QueryFile::read(query)?, cfg)],
        Command::Exponent { n } => vec![commands::exponent(*n)],
        Command::ReportAll { dir } => commands::report_all(dir, cfg)?,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = Settings {
        budget: cli.budget,
        seed: cli.seed,
        margin: cli.precision_margin,
    };
    let start = Instant::now();
    let (text, code) = match run(&cli, cfg) {
        Ok(results) => {
            let mut text = String::new();
            let mut code = 0;
            for r in results {
                match r {
                    Ok(report) => {
                        text.push_str(&report.render());
                        code = code.max(report.exit_code());
                    }
                    Err(e) => {
                        eprintln!("minvec: {e}");
                        code = code.max(error_code(&e));
                    }
                }
            }
            (text, code)
        }
        Err(e) => {
            eprintln!("minvec: {e}");
            (String::new(), error_code(&e))
        }
    };
    eprintln!("minvec: finished in {:.2?}", start.elapsed());
    if !text.is_empty() {
        match &cli.out {
            Some(path) => {
                if let Err(e) = std::fs::write(path, &text) {
                    eprintln!("minvec: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            None => print!("{text}"),
        }
    }
    ExitCode::from(code as u8)
}
