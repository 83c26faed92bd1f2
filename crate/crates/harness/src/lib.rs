//! Experiment runner for `rsma-core`: scenario presets, paired Monte Carlo
//! sweeps, CSV/JSON emission and timing benchmarks.

pub mod bench;
pub mod emit;
pub mod scenario;
pub mod sweep;

pub use bench::{benchmark_complexity, grid, BenchReport, Exponents, GridPoint, TimingRow};
pub use emit::{emit_results, read_csv, read_json, write_csv, write_json, Format, SweepReport, CSV_HEADER};
pub use scenario::{load_config, Scenario, SweepParam};
pub use sweep::{
    run_sweep, run_trial, summarize, threads_from_env, trial_seed, Gain, PointSummary, ResultRow, Summary,
    SweepOutput, SweepSpec, STATUS_OK,
};
