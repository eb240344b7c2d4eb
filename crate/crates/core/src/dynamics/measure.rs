// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, SystemState};
use crate::qubit::ZERO;

/// Result of projecting the ancilla onto one outcome.
#[derive(Clone, Debug)]
pub struct MeasureOutcome<T> {
    pub outcome: u8,
    pub probability: f64,
    /// Renormalized post-measurement state.
    pub state: T,
}

/// `(P(0), P(1))` from the qubit-block norms.
pub fn qubit_probabilities(psi: &SystemState) -> (f64, f64) {
    let p0 = psi.qubit_weight(0);
    let p1 = psi.qubit_weight(1);
    let t = p0 + p1;
    (p0 / t, p1 / t)
}

/// Projects a pure state onto ancilla outcome `outcome`.
pub fn measure_qubit(psi: &SystemState, outcome: u8) -> Result<MeasureOutcome<SystemState>> {
    let (p0, p1) = qubit_probabilities(psi);
    let probability = if outcome == 0 { p0 } else { p1 };
    if !(probability > 0.0) {
        return Err(Error::DegenerateOutcome {
            outcome,
            probability,
        });
    }
    let mut state = psi.clone();
    let d = psi.dim;
    let other = if outcome == 0 { 1 } else { 0 };
    state
        .amplitudes
        .slice_mut(ndarray::s![other * d..(other + 1) * d])
        .fill(ZERO);
    state.normalize()?;
    Ok(MeasureOutcome {
        outcome,
        probability,
        state,
    })
}

/// Projects a density matrix onto ancilla outcome `outcome`.
pub fn measure_qubit_rho(
    rho: &DensityMatrix,
    outcome: u8,
) -> Result<MeasureOutcome<DensityMatrix>> {
    let w0 = rho.qubit_weight(0);
    let w1 = rho.qubit_weight(1);
    let probability = if outcome == 0 { w0 } else { w1 } / (w0 + w1);
    if !(probability > 0.0) {
        return Err(Error::DegenerateOutcome {
            outcome,
            probability,
        });
    }
    let d = rho.dim;
    let keep = outcome as usize;
    let mut entries = rho.entries.clone();
    let norm = if outcome == 0 { w0 } else { w1 };
    for ((i, j), v) in entries.indexed_iter_mut() {
        if i / d == keep && j / d == keep {
            *v /= norm;
        } else {
            *v = ZERO;
        }
    }
    Ok(MeasureOutcome {
        outcome,
        probability,
        state: DensityMatrix { entries, dim: d },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, FockSpaceConfig};
    use crate::qubit::{C64, ONE};

    #[test]
    fn ground_state_always_zero() {
        let cfg = FockSpaceConfig::new(32).unwrap();
        let psi = SystemState::product([ONE, ZERO], &coherent_state(4.0, cfg).unwrap());
        let m = measure_qubit(&psi, 0).unwrap();
        assert_eq!(m.probability, 1.0);
        assert!(matches!(
            measure_qubit(&psi, 1),
            Err(Error::DegenerateOutcome { outcome: 1, .. })
        ));
    }

    #[test]
    fn equal_superposition() {
        let cfg = FockSpaceConfig::new(32).unwrap();
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let psi = SystemState::product([h, h], &coherent_state(4.0, cfg).unwrap());
        for o in 0..2 {
            let m = measure_qubit(&psi, o).unwrap();
            assert!((m.probability - 0.5).abs() < 1e-12);
            assert!((m.state.norm() - 1.0).abs() < 1e-12);
        }
        let rho = DensityMatrix::from_pure(&psi);
        let m = measure_qubit_rho(&rho, 1).unwrap();
        assert!((m.probability - 0.5).abs() < 1e-12);
        assert!((m.state.trace().re - 1.0).abs() < 1e-12);
        assert_eq!(m.state.qubit_weight(0), 0.0);
    }
}
