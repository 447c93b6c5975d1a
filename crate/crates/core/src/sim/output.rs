//! Result persistence: a CSV with one row per transmit power and a JSON
//! document with the config echo and per-block diagnostics.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::engine::SweepResult;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "ptx_db,rho,sc_rate,ldpc_rate,ber,fer,bits,errors,blocks,seed";

pub fn to_csv(result: &SweepResult) -> String {
    let cfg = &result.config;
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in &result.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            p.ptx_db,
            cfg.rho,
            result.sc_rate(),
            result.ldpc_rate,
            p.ber,
            p.fer,
            p.counts.bits,
            p.counts.errors,
            p.blocks,
            cfg.seed
        );
    }
    out
}

pub fn to_json(result: &SweepResult) -> String {
    serde_json::to_string_pretty(result).expect("result serializes")
}

/// Paths written by [`write_results`].
#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub csv: PathBuf,
    pub json: PathBuf,
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let partial = path.with_extension(format!(
        "{}.partial",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    std::fs::write(&partial, contents).map_err(|e| Error::io(&partial, e))?;
    std::fs::rename(&partial, path).map_err(|e| Error::io(path, e))
}

/// Writes `<name>.csv` and `<name>.json` under `dir`. The CSV goes first, so
/// a failure on the JSON leaves the CSV in place; a failed rename leaves the
/// `.partial` file behind.
pub fn write_results(result: &SweepResult, dir: &Path) -> Result<OutputFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = &result.config.name;
    let files = OutputFiles {
        csv: dir.join(format!("{name}.csv")),
        json: dir.join(format!("{name}.json")),
    };
    write_atomic(&files.csv, &to_csv(result))?;
    write_atomic(&files.json, &to_json(result))?;
    Ok(files)
}

/// Fixed-width summary table for the terminal.
pub fn summary_table(result: &SweepResult) -> String {
    let mut out = format!(
        "{}: N={} M={} K={} rho={} r_SC={} r_LDPC={} ({} blocks, {:.1} s)\n",
        result.config.name,
        result.config.tx_antennas,
        result.config.users,
        result.config.antennas,
        result.config.rho,
        result.sc_rate(),
        result.ldpc_rate,
        result.config.blocks,
        result.wall_time_s
    );
    let _ = writeln!(
        out,
        "{:>8} {:>12} {:>12} {:>12} {:>10} {:>8}",
        "ptx_db", "ber", "fer", "raw_ber", "bits", "errors"
    );
    for p in &result.points {
        let _ = writeln!(
            out,
            "{:>8.2} {:>12.4e} {:>12.4e} {:>12.4e} {:>10} {:>8}",
            p.ptx_db, p.ber, p.fer, p.raw_ber, p.counts.bits, p.counts.errors
        );
    }
    out
}
