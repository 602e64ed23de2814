//! Simulation examples, evaluation metrics and the replicate benchmark driver.

pub mod baselines;
mod benchmark;
mod examples;
mod metrics;

pub use benchmark::{
    run_benchmark, run_replicate, run_replicates, summarize, write_report, BenchmarkConfig, BenchmarkReport, FrequencySummary, Method,
    MethodSummary, Preset, ReplicateOutcome,
};
pub use examples::{
    cholesky_lower, generate, mvn_sample, mvn_sample_with_factor, ExampleId, SimulationSpec, EX5_BETA_SEED,
};
pub use metrics::{rme, snr};
