// SPDX-License-Identifier: Apache-2.0

//! Propagation engines: exact unitary, Lindblad master equation and quantum
//! trajectories, plus the measurement-conditioned cat experiment.

mod experiment;
mod lindblad;
mod measure;
mod trajectory;
mod unitary;

pub use experiment::{
    build_setup, run_cat_experiment, run_cat_experiment_on, Engine, ExperimentConfig,
    ExperimentResult, ExperimentSetup, LINDBLAD_DIM_LIMIT,
};
pub use lindblad::{lindblad_evolve, Lindbladian, DEFAULT_DT_MAX};
pub use measure::{measure_qubit, measure_qubit_rho, qubit_probabilities, MeasureOutcome};
pub use trajectory::{trajectory_rng, trajectory_run, TrajectoryRecord, MAX_STEP_JUMP_PROBABILITY};
pub use unitary::{apply_segment, propagate_unitary};
