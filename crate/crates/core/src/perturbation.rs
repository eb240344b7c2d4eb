// SPDX-License-Identifier: Apache-2.0

//! First-order (single-jump) estimates of success probability and fidelity.
//!
//! Jumps are only inserted right after signal segments. Slot `l` carries the
//! weight `δt_l`, the duration of signal `l` plus the processing that follows
//! it up to the next signal (the leading processing goes to the first slot).

use std::collections::BTreeMap;
use std::io::Write;

use log::warn;
use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::device::{Channel, JumpOperator};
use crate::dynamics::{Engine, ExperimentResult};
use crate::error::{invalid, Error, Result};
use crate::fock::{
    apply_blocks, cat_reference, coherent_state, FockSpaceConfig, SystemOperator, SystemState,
};
use crate::qubit::{QubitMatrix, C64, ZERO};
use crate::schedule::{ProtocolSchedule, SegmentKind};

/// Upper bound accepted for first-order fidelity estimates.
pub const FIDELITY_CLAMP: f64 = 1.001;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub p_succ_pert: f64,
    pub fidelity_pert: f64,
    pub fidelity_naive: f64,
    /// Correction factor per channel relative to the naive decay rate.
    pub eta_factors: BTreeMap<Channel, f64>,
    pub per_channel_infidelity: BTreeMap<Channel, f64>,
    /// Jump-free values.
    pub p_succ_zero: f64,
    pub fidelity_zero: f64,
    pub n_r: f64,
    pub total_time: f64,
}

enum Step {
    Unitary(Vec<QubitMatrix>),
    Project(usize),
}

/// One step per segment; measurements project onto the expected outcome.
fn steps(schedule: &ProtocolSchedule, dim: usize) -> Vec<Step> {
    schedule
        .segments
        .iter()
        .map(|seg| match seg.blocks(dim) {
            Some(b) => Step::Unitary(b),
            None => Step::Project(seg.expected_outcome.unwrap_or(1) as usize),
        })
        .collect()
}

fn run_steps(steps: &[Step], v: &mut Array1<C64>, dim: usize) {
    for s in steps {
        match s {
            Step::Unitary(b) => apply_blocks(b, v),
            Step::Project(q) => {
                for (i, a) in v.iter_mut().enumerate() {
                    if i / dim != *q {
                        *a = ZERO;
                    }
                }
            }
        }
    }
}

/// Segment index of each signal (one jump slot per signal).
fn signal_positions(schedule: &ProtocolSchedule) -> Vec<usize> {
    schedule
        .segments
        .iter()
        .enumerate()
        .filter(|(_, s)| s.kind == SegmentKind::Signal)
        .map(|(i, _)| i)
        .collect()
}

/// Slot weights `δt_l`; they sum to the schedule's total time.
pub fn slot_weights(schedule: &ProtocolSchedule) -> Vec<f64> {
    let pos = signal_positions(schedule);
    let mut w = vec![0.0; pos.len()];
    if pos.is_empty() {
        return w;
    }
    let mut slot = 0;
    for (i, seg) in schedule.segments.iter().enumerate() {
        while slot + 1 < pos.len() && pos[slot + 1] <= i {
            slot += 1;
        }
        w[slot] += seg.duration;
    }
    w
}

/// `L̄_{m,l} = U_after L_m U_before` for a jump right after signal `slot`
/// (zero based). Measurements are treated as identity here.
pub fn modified_jump(
    schedule: &ProtocolSchedule,
    jump: &JumpOperator,
    slot: usize,
) -> Result<SystemOperator> {
    let pos = signal_positions(schedule);
    let Some(&p) = pos.get(slot) else {
        return invalid(format!(
            "slot {slot} out of range ({} signal slots)",
            pos.len()
        ));
    };
    let dim = jump.size / 2;
    let identity = vec![QubitMatrix::identity(); dim];
    let mut before = identity.clone();
    let mut after = identity;
    for (i, seg) in schedule.segments.iter().enumerate() {
        if let Some(b) = seg.blocks(dim) {
            let target = if i <= p { &mut before } else { &mut after };
            for (t, u) in target.iter_mut().zip(&b) {
                *t = *u * *t;
            }
        }
    }
    Ok(SystemOperator::from_blocks(&after)
        .matmul(&jump.dense())
        .matmul(&SystemOperator::from_blocks(&before)))
}

fn naive_rate(l: &JumpOperator, nbar: f64) -> Option<f64> {
    match l.channel {
        Channel::CavityDecay => Some(l.rate * nbar),
        Channel::QubitDecay | Channel::QubitDephasing => Some(l.rate),
        Channel::DressedDown | Channel::DressedUp => None,
    }
}

/// `Σ_q |⟨t|φ_q⟩|²` and the per-qubit overlaps.
fn overlaps(t: &Array1<C64>, v: &Array1<C64>, dim: usize) -> [C64; 2] {
    let mut o = [ZERO; 2];
    for (q, oq) in o.iter_mut().enumerate() {
        *oq = (0..dim).map(|n| t[n].conj() * v[q * dim + n]).sum();
    }
    o
}

fn check_initial(psi: &SystemState, nbar: f64) -> Result<()> {
    let cfg = psi.config();
    let alpha = coherent_state(nbar, cfg)
        .map_err(|_| Error::UnsupportedInput("initial cavity state is not coherent".into()))?;
    let norm = psi.norm();
    let ov: C64 = (0..cfg.dim)
        .map(|n| alpha[n].conj() * psi.amplitudes[n])
        .sum();
    if (ov.norm_sqr() / (norm * norm) - 1.0).abs() > 1e-9 {
        return Err(Error::UnsupportedInput(
            "first-order estimates need the initial state |0⟩|α⟩ with |α|² = n̄".into(),
        ));
    }
    Ok(())
}

/// Single-jump estimates for the schedule's target state `G_r|α⟩/√N_r`.
///
/// The fidelity is expanded to first order in the jump weights, with the
/// cavity Kerr phase accumulated by the schedule removed from the reference.
pub fn perturbative_estimates(
    schedule: &ProtocolSchedule,
    psi_init: &SystemState,
    channels: &[JumpOperator],
) -> Result<PerturbationReport> {
    let cfg: FockSpaceConfig = psi_init.config();
    let dim = cfg.dim;
    check_initial(psi_init, schedule.nbar)?;
    for l in channels {
        if l.size != 2 * dim {
            return invalid("jump operator does not match the state dimension");
        }
    }
    let (target, n_r) = cat_reference(schedule.r, schedule.nbar, cfg)?;
    let kerr: f64 = schedule
        .segments
        .iter()
        .filter(|s| !matches!(s.kind, SegmentKind::Gate | SegmentKind::Measure))
        .map(|s| s.generator.e2 * s.duration)
        .sum();
    let t: Array1<C64> = target
        .iter()
        .enumerate()
        .map(|(n, a)| a * C64::from_polar(1.0, -kerr * (n * n) as f64))
        .collect();

    let all = steps(schedule, dim);
    let pos = signal_positions(schedule);
    let weights = slot_weights(schedule);
    let mut psi0 = psi_init.amplitudes.clone();
    let inorm = psi_init.norm();
    psi0.mapv_inplace(|a| a / inorm);

    let mut fin = psi0.clone();
    run_steps(&all, &mut fin, dim);
    let p0: f64 = fin.iter().map(|a| a.norm_sqr()).sum();
    if !(p0 > 0.0) {
        return Err(Error::DegenerateOutcome {
            outcome: schedule.success_pattern.first().copied().unwrap_or(1),
            probability: p0,
        });
    }
    let o_fin = overlaps(&t, &fin, dim);
    let f0_sq = (o_fin[0].norm_sqr() + o_fin[1].norm_sqr()) / p0;

    let mut b1 = vec![0.0; channels.len()];
    let mut a1 = vec![0.0; channels.len()];
    let gammas: Vec<Vec<f64>> = channels.iter().map(|l| l.ldag_l_diag()).collect();
    let mut state = psi0;
    let mut done = 0;
    let mut jumped = Array1::zeros(2 * dim);
    for (l, &p) in pos.iter().enumerate() {
        run_steps(&all[done..=p], &mut state, dim);
        done = p + 1;
        let rest = &all[done..];
        let w = weights[l];
        for (m, ch) in channels.iter().enumerate() {
            // jump branch
            ch.apply_into(&state, &mut jumped);
            run_steps(rest, &mut jumped, dim);
            let nj: f64 = jumped.iter().map(|a| a.norm_sqr()).sum();
            let oj = overlaps(&t, &jumped, dim);
            // no-jump damping −½Γ
            let mut damped: Array1<C64> =
                state.iter().zip(&gammas[m]).map(|(a, g)| a * *g).collect();
            run_steps(rest, &mut damped, dim);
            let cross: C64 = fin.iter().zip(&damped).map(|(a, b)| a.conj() * b).sum();
            let od = overlaps(&t, &damped, dim);
            let cross_t = o_fin[0].conj() * od[0] + o_fin[1].conj() * od[1];
            b1[m] += w * (nj - cross.re);
            a1[m] += w * (oj[0].norm_sqr() + oj[1].norm_sqr() - cross_t.re);
        }
    }

    let mut eta = BTreeMap::new();
    let mut infid = BTreeMap::new();
    let mut d_f2 = 0.0;
    let mut d_p = 0.0;
    let mut naive = 0.0;
    let total = schedule.total_time;
    for (m, ch) in channels.iter().enumerate() {
        let df = (a1[m] - f0_sq * b1[m]) / p0;
        d_f2 += df;
        d_p += b1[m];
        let inf = 1.0 - (1.0 + df).max(0.0).sqrt();
        *infid.entry(ch.channel).or_insert(0.0) += inf;
        if let Some(rate) = naive_rate(ch, schedule.nbar) {
            naive += rate;
            if rate > 0.0 && total > 0.0 {
                eta.insert(ch.channel, inf / (0.5 * total * rate));
            }
        }
    }
    let f2 = f0_sq + d_f2;
    let mut fidelity = f2.max(0.0).sqrt();
    if fidelity > FIDELITY_CLAMP {
        warn!("first-order fidelity {fidelity} clamped to {FIDELITY_CLAMP}");
        fidelity = FIDELITY_CLAMP;
    }
    Ok(PerturbationReport {
        p_succ_pert: (p0 + d_p).max(0.0),
        fidelity_pert: fidelity,
        fidelity_naive: (1.0 - 0.5 * total * naive).max(0.0),
        eta_factors: eta,
        per_channel_infidelity: infid,
        p_succ_zero: p0,
        fidelity_zero: f0_sq.sqrt(),
        n_r,
        total_time: total,
    })
}

/// One line of a full-vs-perturbative comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub nbar: f64,
    pub r: u32,
    pub s_repeats: usize,
    pub engine: Engine,
    pub f_full: f64,
    pub f_pert: f64,
    pub f_naive: f64,
    pub gap_pert: f64,
    pub gap_naive: f64,
    pub p_full: f64,
    pub p_pert: f64,
    pub eta_cr: Option<f64>,
    pub eta_qr: Option<f64>,
    pub eta_qz: Option<f64>,
}

/// Pairs a full simulation with the estimates for the same configuration.
pub fn compare_with_full(
    schedule: &ProtocolSchedule,
    psi_init: &SystemState,
    channels: &[JumpOperator],
    full: &ExperimentResult,
) -> Result<ComparisonRow> {
    let mismatch = |what: &str| {
        Err(Error::InvalidComparison(format!(
            "{what} differs from the full run"
        )))
    };
    if full.r != schedule.r {
        return mismatch("modulus r");
    }
    if full.s_repeats != schedule.repeats {
        return mismatch("repetition count");
    }
    if full.nbar != schedule.nbar {
        return mismatch("mean photon number");
    }
    if full.dim != psi_init.dim {
        return mismatch("cavity dimension");
    }
    if (full.total_time - schedule.total_time).abs() > 1e-12 * schedule.total_time.abs().max(1e-300)
    {
        return mismatch("protocol duration");
    }
    let rep = perturbative_estimates(schedule, psi_init, channels)?;
    let label = if channels.is_empty() {
        "none".to_string()
    } else {
        channels
            .iter()
            .map(|c| c.channel.name())
            .collect::<Vec<_>>()
            .join("+")
    };
    Ok(ComparisonRow {
        label,
        nbar: schedule.nbar,
        r: schedule.r,
        s_repeats: schedule.repeats,
        engine: full.engine,
        f_full: full.fidelity,
        f_pert: rep.fidelity_pert,
        f_naive: rep.fidelity_naive,
        gap_pert: (rep.fidelity_pert - full.fidelity).abs(),
        gap_naive: (rep.fidelity_naive - full.fidelity).abs(),
        p_full: full.p_succ,
        p_pert: rep.p_succ_pert,
        eta_cr: rep.eta_factors.get(&Channel::CavityDecay).copied(),
        eta_qr: rep.eta_factors.get(&Channel::QubitDecay).copied(),
        eta_qz: rep.eta_factors.get(&Channel::QubitDephasing).copied(),
    })
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "label",
        "nbar",
        "r",
        "s",
        "engine",
        "F_full",
        "F_pert",
        "F_naive",
        "gap_pert",
        "gap_naive",
        "p_full",
        "p_pert",
        "eta_cr",
        "eta_qr",
        "eta_qz",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for r in rows {
        let engine = serde_json::to_value(r.engine)?;
        w.write_record([
            r.label.clone(),
            format!("{}", r.nbar),
            r.r.to_string(),
            r.s_repeats.to_string(),
            engine.as_str().unwrap_or_default().to_string(),
            format!("{:e}", r.f_full),
            format!("{:e}", r.f_pert),
            format!("{:e}", r.f_naive),
            format!("{:e}", r.gap_pert),
            format!("{:e}", r.gap_naive),
            format!("{:e}", r.p_full),
            format!("{:e}", r.p_pert),
            opt(r.eta_cr),
            opt(r.eta_qr),
            opt(r.eta_qz),
        ])?;
    }
    w.flush()?;
    Ok(())
}
