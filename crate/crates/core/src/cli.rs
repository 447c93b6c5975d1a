//! Command-line front end of the `simulate` binary.

use std::path::PathBuf;

use clap::Parser;

use crate::error::{Error, Result};
use crate::selftest;
use crate::sim::{run_sweep, summary_table, write_results, SweepConfig};

/// Paper-scale information bits per user and power point.
pub const PAPER_BITS_PER_USER: u64 = 1_000_000;

#[derive(Debug, Parser)]
#[command(
    name = "simulate",
    about = "Coded BER sweeps for spatially coded 1-bit MU-MIMO downlink"
)]
pub struct Args {
    /// TOML sweep configuration; the desk profile is used when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for the CSV and JSON results.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Comma-separated transmit powers in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub ptx_db: Option<Vec<f64>>,
    /// Spatial coding rate; sets every L'_m and the matching LDPC rate.
    #[arg(long, value_parser = ["1", "0.75", "0.5"])]
    pub sc_rate: Option<String>,
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Use 10^6 information bits per user and power point.
    #[arg(long)]
    pub paper_profile: bool,
    /// Run the embedded small-instance oracle checks and exit.
    #[arg(long)]
    pub selftest: bool,
}

impl Args {
    /// Loads the config file (or the desk profile) and applies flag
    /// overrides, which take precedence over file values.
    pub fn resolve_config(&self) -> Result<SweepConfig> {
        let mut cfg = match &self.config {
            Some(path) => SweepConfig::load(path)?,
            None => SweepConfig::desk_profile(0.8, 1.0)?,
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(rho) = self.rho {
            cfg.rho = rho;
        }
        if let Some(grid) = &self.ptx_db {
            cfg.ptx_db = grid.clone();
        }
        if let Some(r) = &self.sc_rate {
            let r: f64 = r
                .parse()
                .map_err(|_| Error::Config(format!("bad --sc-rate {r}")))?;
            cfg.set_sc_rate(r)?;
        }
        if let Some(blocks) = self.blocks {
            cfg.blocks = blocks;
        }
        if self.paper_profile {
            cfg.bits_per_user = PAPER_BITS_PER_USER;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(args: &Args) -> Result<()> {
    let cfg = args.resolve_config()?;
    let result = run_sweep(&cfg)?;
    let files = write_results(&result, &args.out)?;
    print!("{}", summary_table(&result));
    println!("wrote {} and {}", files.csv.display(), files.json.display());
    Ok(())
}

/// Parses `argv`, runs and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if args.selftest {
        let report = selftest::run();
        for check in &report {
            println!(
                "{} {}",
                if check.passed { "PASS" } else { "FAIL" },
                check.name
            );
            if !check.passed {
                println!("     {}", check.detail);
            }
        }
        return if report.iter().all(|c| c.passed) {
            0
        } else {
            1
        };
    }
    match run(&args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
