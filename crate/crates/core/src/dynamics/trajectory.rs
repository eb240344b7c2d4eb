// SPDX-License-Identifier: Apache-2.0

//! First-order jump unraveling of the master equation.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::device::{Channel, JumpOperator};
use crate::error::{Error, Result};
use crate::fock::{apply_blocks, SystemState};
use crate::qubit::{QubitMatrix, C64, ZERO};
use crate::schedule::{ProtocolSchedule, Segment, SegmentKind};

/// Target bound on the total jump probability per substep.
const TARGET_STEP_JUMP_PROBABILITY: f64 = 0.01;
/// Hard limit; exceeding it is a step-size violation.
pub const MAX_STEP_JUMP_PROBABILITY: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    /// `(time, channel)`, strictly increasing in time.
    pub jump_events: Vec<(f64, Channel)>,
    pub final_state: SystemState,
    /// Outcomes observed so far, in time order.
    pub outcome_string: String,
    /// All measurements matched the schedule's success pattern.
    pub success: bool,
}

/// Independent stream `index` derived from `master_seed`.
pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Precomputed no-jump propagators for one timed segment.
struct SegmentPlan {
    steps: usize,
    h: f64,
    blocks: Vec<QubitMatrix>,
}

fn plan_segment(seg: &Segment, gamma: &[f64], gamma_max: f64, dim: usize) -> SegmentPlan {
    let steps = if gamma_max > 0.0 {
        ((seg.duration * gamma_max / TARGET_STEP_JUMP_PROBABILITY).ceil() as usize).max(1)
    } else {
        1
    };
    let h = seg.duration / steps as f64;
    let blocks = (0..dim)
        .map(|n| {
            let (e, x, z) = seg.generator.coeffs(n);
            let g0 = gamma[n];
            let g1 = gamma[dim + n];
            // H̄ = H − (i/2)Γ, written in the Pauli basis
            let a0 = C64::new(e, -0.25 * (g0 + g1));
            let az = C64::new(z, -0.25 * (g0 - g1));
            let mi = C64::new(0.0, -h);
            QubitMatrix::exp_pauli(mi * a0, mi * x, ZERO, mi * az)
        })
        .collect();
    SegmentPlan { steps, h, blocks }
}

pub(crate) struct TrajectoryEngine<'a> {
    schedule: &'a ProtocolSchedule,
    channels: &'a [JumpOperator],
    channel_diags: Vec<Vec<f64>>,
    plans: Vec<Option<SegmentPlan>>,
    gate_blocks: Vec<Option<Vec<QubitMatrix>>>,
    dim: usize,
}

impl<'a> TrajectoryEngine<'a> {
    pub(crate) fn new(
        schedule: &'a ProtocolSchedule,
        channels: &'a [JumpOperator],
        dim: usize,
    ) -> Self {
        let channel_diags: Vec<Vec<f64>> = channels.iter().map(|l| l.ldag_l_diag()).collect();
        let mut gamma = vec![0.0; 2 * dim];
        for diag in &channel_diags {
            for (g, v) in gamma.iter_mut().zip(diag) {
                *g += v;
            }
        }
        let gamma_max = gamma.iter().cloned().fold(0.0, f64::max);
        let mut plans = Vec::with_capacity(schedule.segments.len());
        let mut gate_blocks = Vec::with_capacity(schedule.segments.len());
        for seg in &schedule.segments {
            match seg.kind {
                SegmentKind::Measure => {
                    plans.push(None);
                    gate_blocks.push(None);
                }
                SegmentKind::Gate => {
                    plans.push(None);
                    gate_blocks.push(seg.blocks(dim));
                }
                _ if seg.duration <= 0.0 => {
                    plans.push(None);
                    gate_blocks.push(None);
                }
                _ => {
                    plans.push(Some(plan_segment(seg, &gamma, gamma_max, dim)));
                    gate_blocks.push(None);
                }
            }
        }
        Self {
            schedule,
            channels,
            channel_diags,
            plans,
            gate_blocks,
            dim,
        }
    }

    pub(crate) fn run(&self, psi: &SystemState, rng: &mut ChaCha8Rng) -> Result<TrajectoryRecord> {
        let dim = self.dim;
        let mut amps = psi.amplitudes.clone();
        let mut scratch = Array1::zeros(2 * dim);
        let mut jumps = Vec::new();
        let mut outcomes = String::new();
        let mut t = 0.0;
        let mut weights = vec![0.0; self.channels.len()];
        for (idx, seg) in self.schedule.segments.iter().enumerate() {
            if let Some(b) = &self.gate_blocks[idx] {
                apply_blocks(b, &mut amps);
                continue;
            }
            if seg.kind == SegmentKind::Measure {
                let p0: f64 = amps.iter().take(dim).map(|a| a.norm_sqr()).sum();
                let p1: f64 = amps.iter().skip(dim).map(|a| a.norm_sqr()).sum();
                let u: f64 = rng.random();
                let outcome = u8::from(u * (p0 + p1) >= p0);
                outcomes.push(char::from(b'0' + outcome));
                let keep = outcome as usize;
                for (i, a) in amps.iter_mut().enumerate() {
                    if i / dim != keep {
                        *a = ZERO;
                    }
                }
                normalize(&mut amps);
                if seg.expected_outcome.is_some_and(|e| e != outcome) {
                    return Ok(self.finish(amps, jumps, outcomes, false));
                }
                continue;
            }
            let Some(plan) = &self.plans[idx] else {
                continue;
            };
            for _ in 0..plan.steps {
                apply_blocks(&plan.blocks, &mut amps);
                t += plan.h;
                let kept: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
                let dp = 1.0 - kept;
                if dp > MAX_STEP_JUMP_PROBABILITY {
                    return Err(Error::StepSizeViolation(dp));
                }
                let u: f64 = rng.random();
                if u < dp && !self.channels.is_empty() {
                    let mut total = 0.0;
                    for (w, diag) in weights.iter_mut().zip(&self.channel_diags) {
                        *w = diag
                            .iter()
                            .zip(amps.iter())
                            .map(|(g, a)| g * a.norm_sqr())
                            .sum();
                        total += *w;
                    }
                    let v: f64 = rng.random::<f64>() * total;
                    let mut acc = 0.0;
                    let mut pick = self.channels.len() - 1;
                    for (m, w) in weights.iter().enumerate() {
                        acc += w;
                        if v < acc {
                            pick = m;
                            break;
                        }
                    }
                    let l = &self.channels[pick];
                    l.apply_into(&amps, &mut scratch);
                    std::mem::swap(&mut amps, &mut scratch);
                    jumps.push((t, l.channel));
                }
                normalize(&mut amps);
            }
        }
        Ok(self.finish(amps, jumps, outcomes, true))
    }

    fn finish(
        &self,
        amps: Array1<C64>,
        jump_events: Vec<(f64, Channel)>,
        outcome_string: String,
        success: bool,
    ) -> TrajectoryRecord {
        let final_state =
            SystemState::from_amplitudes(amps, crate::fock::FockSpaceConfig { dim: self.dim })
                .expect("dimension fixed by construction");
        TrajectoryRecord {
            jump_events,
            final_state,
            outcome_string,
            success,
        }
    }
}

fn normalize(a: &mut Array1<C64>) {
    let n = a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        a.mapv_inplace(|v| v / n);
    }
}

/// One trajectory with its own stream `index` of `master_seed`.
pub fn trajectory_run(
    schedule: &ProtocolSchedule,
    channels: &[JumpOperator],
    psi: &SystemState,
    master_seed: u64,
    index: u64,
) -> Result<TrajectoryRecord> {
    let engine = TrajectoryEngine::new(schedule, channels, psi.dim);
    engine.run(psi, &mut trajectory_rng(master_seed, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{jump_operators, DeviceParams};
    use crate::dynamics::propagate_unitary;
    use crate::fock::{coherent_state, FockSpaceConfig};
    use crate::qubit::ONE;
    use crate::schedule::{schedule_cat, ScheduleOptions};

    fn setup(nbar: f64) -> (DeviceParams, FockSpaceConfig, SystemState) {
        let cfg = FockSpaceConfig::for_nbar(nbar).unwrap();
        let psi = SystemState::product([ONE, ZERO], &coherent_state(nbar, cfg).unwrap());
        (DeviceParams::preset(), cfg, psi)
    }

    #[test]
    fn zero_rates_equal_unitary() {
        let (p, _, psi) = setup(5.0);
        let mut s = schedule_cat(4, 0, 1, &p, 5.0, &ScheduleOptions::default()).unwrap();
        // drop the measurement to compare pure evolution
        s.segments.retain(|x| x.kind != SegmentKind::Measure);
        let rec = trajectory_run(&s, &[], &psi, 1, 0).unwrap();
        let u = propagate_unitary(&s, &psi).unwrap();
        assert!(rec.jump_events.is_empty());
        let diff = rec
            .final_state
            .amplitudes
            .iter()
            .zip(u.amplitudes.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn seeded_runs_repeat() {
        let (mut p, cfg, psi) = setup(5.0);
        p.gamma_c *= 1e3;
        p.gamma_q *= 10.0;
        let s = schedule_cat(4, 0, 3, &p, 5.0, &ScheduleOptions::default()).unwrap();
        let ch = jump_operators(&p, cfg);
        for idx in 0..20 {
            let a = trajectory_run(&s, &ch, &psi, 42, idx).unwrap();
            let b = trajectory_run(&s, &ch, &psi, 42, idx).unwrap();
            assert_eq!(a.jump_events, b.jump_events);
            assert_eq!(a.outcome_string, b.outcome_string);
            assert_eq!(a.final_state, b.final_state);
            for w in a.jump_events.windows(2) {
                assert!(w[0].0 < w[1].0);
            }
            if let Some(last) = a.jump_events.last() {
                assert!(last.0 <= s.total_time * (1.0 + 1e-12));
            }
        }
    }
}
