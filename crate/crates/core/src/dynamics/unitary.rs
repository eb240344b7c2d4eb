// SPDX-License-Identifier: Apache-2.0

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::fock::{apply_blocks, leaked_weight, photon_distribution, SystemState, LEAK_LIMIT};
use crate::qubit::C64;
use crate::schedule::{ProtocolSchedule, Segment};

/// Applies a non-measurement segment in place; measurements are skipped.
pub fn apply_segment(seg: &Segment, amps: &mut Array1<C64>, dim: usize) {
    if let Some(b) = seg.blocks(dim) {
        apply_blocks(&b, amps);
    }
}

pub(crate) fn check_leak(psi: &SystemState) -> Result<f64> {
    let leak = leaked_weight(&photon_distribution(psi));
    if leak > LEAK_LIMIT {
        return Err(Error::Truncation {
            lost: leak,
            limit: LEAK_LIMIT,
        });
    }
    Ok(leak)
}

/// Noiseless propagation through every unitary segment of `schedule`
/// (measurement segments are ignored).
pub fn propagate_unitary(schedule: &ProtocolSchedule, psi: &SystemState) -> Result<SystemState> {
    check_leak(psi)?;
    let mut out = psi.clone();
    for seg in &schedule.segments {
        apply_segment(seg, &mut out.amplitudes, psi.dim);
    }
    out.refresh_norm();
    check_leak(&out)?;
    Ok(out)
}
