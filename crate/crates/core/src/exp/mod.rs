//! Experiment orchestration: declarative configs, seeded deterministic
//! runners for each pipeline, and run manifests with artifact hashes.

pub mod config;
pub mod manifest;
pub mod runners;

pub use config::{ExperimentConfig, ExperimentKind, Precision, ScheduleKind, SourceKind};
pub use manifest::{RunContext, RunManifest};
pub use runners::{
    run_experiment, AnnReport, ExperimentReport, PathsEmbedReport, StdpCompareReport, WeightTrajReport,
};
