//! End-to-end BER sweeps.

mod config;
mod engine;
mod output;

pub use config::{LdpcSpec, SolverSection, SweepConfig, DESK_PTX_DB};
pub use engine::{
    run_sweep, transmit_amplitude, BlockDiagnostics, BlockOutcome, BlockSetup, PointCounts,
    PointResult, Simulator, SweepResult,
};
pub use output::{summary_table, to_csv, to_json, write_results, OutputFiles, CSV_HEADER};
