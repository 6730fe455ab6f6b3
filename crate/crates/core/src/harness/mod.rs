//! Configuration, experiment drivers and result files for the `pea` binary.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{CircuitConfig, ExperimentConfig, ExperimentKind, GainRule, GainSpec};
pub use experiments::{
    derive_seed, log_log_slope, run_design, run_predict, run_scaling_experiment, run_tfim_experiment, run_to_dir,
    with_threads, DesignReport, FitOutcome, FitStatus, PredictReport, ScalingReport, TfimReport,
};
