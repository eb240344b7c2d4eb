// SPDX-License-Identifier: Apache-2.0

//! Generalized photon-number parity measurements built from quantum signal
//! processing, and their cavity-QED simulation.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod device;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod measurement;
pub mod perturbation;
pub mod qubit;
pub mod schedule;
pub mod synthesis;

pub use error::{Error, Result};
pub use qubit::{
    compose_qsp, real_protocol, response, rot_x, rot_z, PhaseSequence, QubitMatrix, C64,
};
pub use synthesis::{analytic_phases, cost, optimize_phases, target_g, SynthesisReport};
