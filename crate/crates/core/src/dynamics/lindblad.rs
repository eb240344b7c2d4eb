// SPDX-License-Identifier: Apache-2.0

//! Fixed-step fourth-order integration of the master equation in the
//! interaction picture of each segment's (block-diagonal) Hamiltonian.

use ndarray::Array2;

use crate::device::JumpOperator;
use crate::error::{invalid, Error, Result};
use crate::fock::DensityMatrix;
use crate::qubit::{QubitMatrix, C64};
use crate::schedule::{ProtocolSchedule, Segment, SegmentKind};

/// Default upper bound on the integrator step (s).
pub const DEFAULT_DT_MAX: f64 = 1e-6;
/// Minimum number of steps per timed segment.
const MIN_STEPS: usize = 50;
const TRACE_DRIFT_LIMIT: f64 = 1e-5;

/// Dissipative part `D(ρ) = Σ LρL† − ½{Γ, ρ}` with diagonal `Γ = Σ L†L`.
#[derive(Clone, Debug)]
pub struct Lindbladian {
    channels: Vec<JumpOperator>,
    gamma: Vec<f64>,
}

impl Lindbladian {
    pub fn new(channels: &[JumpOperator], size: usize) -> Result<Self> {
        let mut gamma = vec![0.0; size];
        for l in channels {
            if l.size != size {
                return invalid("jump operator does not match the state dimension");
            }
            for (g, v) in gamma.iter_mut().zip(l.ldag_l_diag()) {
                *g += v;
            }
        }
        Ok(Self {
            channels: channels.to_vec(),
            gamma,
        })
    }

    pub fn gamma_diag(&self) -> &[f64] {
        &self.gamma
    }

    pub fn apply(&self, rho: &Array2<C64>, out: &mut Array2<C64>) {
        let n = rho.nrows();
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] = rho[[i, j]] * (-0.5 * (self.gamma[i] + self.gamma[j]));
            }
        }
        for l in &self.channels {
            for &(ra, ca, va) in &l.entries {
                for &(rb, cb, vb) in &l.entries {
                    out[[ra, rb]] += va * vb.conj() * rho[[ca, cb]];
                }
            }
        }
    }
}

/// `ρ ← UρU†` for block-diagonal `U`.
pub(crate) fn conjugate_blocks(blocks: &[QubitMatrix], rho: &mut Array2<C64>) {
    let d = blocks.len();
    let n = rho.nrows();
    // left: rows n and d+n mix
    for (m, b) in blocks.iter().enumerate() {
        for j in 0..n {
            let [a0, a1] = b.apply([rho[[m, j]], rho[[d + m, j]]]);
            rho[[m, j]] = a0;
            rho[[d + m, j]] = a1;
        }
    }
    // right: columns mix with U†
    for (m, b) in blocks.iter().enumerate() {
        let e = b.entries;
        for i in 0..n {
            let v0 = rho[[i, m]];
            let v1 = rho[[i, d + m]];
            rho[[i, m]] = v0 * e[0].conj() + v1 * e[1].conj();
            rho[[i, d + m]] = v0 * e[2].conj() + v1 * e[3].conj();
        }
    }
}

fn trace(rho: &Array2<C64>) -> C64 {
    rho.diag().sum()
}

pub(crate) fn hermitize(rho: &mut Array2<C64>) {
    let n = rho.nrows();
    for i in 0..n {
        rho[[i, i]].im = 0.0;
        for j in i + 1..n {
            let avg = 0.5 * (rho[[i, j]] + rho[[j, i]].conj());
            rho[[i, j]] = avg;
            rho[[j, i]] = avg.conj();
        }
    }
}

/// Integrates one segment in place. Measurement segments are no-ops here.
pub(crate) fn evolve_segment(
    seg: &Segment,
    lind: &Lindbladian,
    rho: &mut Array2<C64>,
    dim: usize,
    dt_max: f64,
) -> Result<()> {
    match seg.kind {
        SegmentKind::Measure => return Ok(()),
        SegmentKind::Gate => {
            if let Some(b) = seg.blocks(dim) {
                conjugate_blocks(&b, rho);
            }
            return Ok(());
        }
        _ => {}
    }
    if seg.duration <= 0.0 {
        return Ok(());
    }
    let steps = MIN_STEPS.max((seg.duration / dt_max).ceil() as usize);
    let h = seg.duration / steps as f64;
    let half = seg.generator.propagator_blocks(dim, 0.5 * h);
    let n = rho.nrows();
    let start = trace(rho).re;

    let mut k1 = Array2::zeros((n, n));
    let mut k2 = Array2::zeros((n, n));
    let mut k3 = Array2::zeros((n, n));
    let mut k4 = Array2::zeros((n, n));
    let c = |x: f64| C64::new(x, 0.0);
    for _ in 0..steps {
        // interaction picture around the step midpoint
        let mut rho_i = rho.clone();
        conjugate_blocks(&half, &mut rho_i);
        lind.apply(rho, &mut k1);
        conjugate_blocks(&half, &mut k1);
        let tmp = &rho_i + &(&k1 * c(0.5 * h));
        lind.apply(&tmp, &mut k2);
        let tmp = &rho_i + &(&k2 * c(0.5 * h));
        lind.apply(&tmp, &mut k3);
        let mut tmp = &rho_i + &(&k3 * c(h));
        conjugate_blocks(&half, &mut tmp);
        lind.apply(&tmp, &mut k4);
        let mut next = &rho_i + &((&k1 + &(&k2 * c(2.0)) + &(&k3 * c(2.0))) * c(h / 6.0));
        conjugate_blocks(&half, &mut next);
        next.zip_mut_with(&k4, |a, b| *a += b * (h / 6.0));
        hermitize(&mut next);
        *rho = next;
        let drift = (trace(rho).re - start).abs();
        if !(drift <= TRACE_DRIFT_LIMIT) {
            return Err(Error::IntegratorFailure {
                drift,
                suggested_dt: 0.5 * h,
            });
        }
    }
    Ok(())
}

/// Evolves `rho` through every segment (measurements ignored).
pub fn lindblad_evolve(
    schedule: &ProtocolSchedule,
    channels: &[JumpOperator],
    rho: &DensityMatrix,
    dt_max: f64,
) -> Result<DensityMatrix> {
    if !(dt_max > 0.0) {
        return invalid(format!("dt_max must be > 0, got {dt_max}"));
    }
    let dim = rho.dim;
    let lind = Lindbladian::new(channels, 2 * dim)?;
    let mut e = rho.entries.clone();
    for seg in &schedule.segments {
        evolve_segment(seg, &lind, &mut e, dim, dt_max)?;
    }
    Ok(DensityMatrix { entries: e, dim })
}
