//! Experiment orchestration: configuration files, seeded Monte-Carlo
//! evaluation, sweeps and their CSV output.

pub mod artifacts;
pub mod config;
pub mod experiment;
pub mod sweep;

pub use artifacts::{load_system, save_system, RunManifest};
pub use config::{Axis, ExperimentConfig, Scheme, SweepConfig};
pub use experiment::{
    evaluate_nmse, generate, sensing_model, train_system, Dataset, Estimate, Evaluation, Quantizer, TrainedSystem,
};
pub use sweep::{bound_csv, records_csv, run_point, run_sweep, stats_csv, PointOutcome, PointResult};
