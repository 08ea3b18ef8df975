//! End-to-end experiment drivers: encoder, channel, receiver, estimation
//! and key rate, deterministic per seed.

pub mod cv;
pub mod dv;

pub use cv::{run_cv_experiment, ConstellationRow, CvExperimentConfig, CvExperimentOutput, CvExperimentReport};
pub use dv::{run_dv_experiment, DvBlockResult, DvExperimentConfig, DvExperimentReport};
