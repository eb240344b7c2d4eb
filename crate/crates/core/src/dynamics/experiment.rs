// SPDX-License-Identifier: Apache-2.0

//! Measurement-conditioned cat-state preparation.

use std::collections::BTreeMap;
use std::time::Instant;

use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lindblad::{evolve_segment, Lindbladian, DEFAULT_DT_MAX};
use super::trajectory::{trajectory_rng, TrajectoryEngine};
use super::unitary::{apply_segment, check_leak};
use crate::device::{jump_operator, Channel, DeviceParams, JumpOperator};
use crate::error::{invalid, Error, Result};
use crate::fock::{
    cat_reference, coherent_state, fidelity, leaked_weight, partial_trace_qubit,
    photon_distribution, photon_distribution_rho, DensityMatrix, FockSpaceConfig, SystemState,
    LEAK_LIMIT,
};
use crate::qubit::{PhaseSequence, C64, ONE, ZERO};
use crate::schedule::{
    schedule_cat, PhaseErrorModel, ProtocolSchedule, ScheduleOptions, SegmentKind,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Unitary,
    Lindblad,
    Trajectory,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unitary" => Ok(Engine::Unitary),
            "lindblad" => Ok(Engine::Lindblad),
            "trajectory" => Ok(Engine::Trajectory),
            other => invalid(format!("unknown engine `{other}`")),
        }
    }
}

/// Largest cavity dimension the dense master-equation engine accepts.
pub const LINDBLAD_DIM_LIMIT: usize = 512;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub device: DeviceParams,
    pub r: u32,
    pub s_repeats: usize,
    pub nbar: f64,
    pub engine: Engine,
    pub seed: u64,
    /// Cavity cutoff override.
    pub dim: Option<usize>,
    pub trajectories: usize,
    pub dt_max: f64,
    pub phase_error: PhaseErrorModel,
    /// Restrict dissipation to these channels; all active ones when absent.
    pub channels: Option<Vec<Channel>>,
    pub phases: Option<PhaseSequence>,
}

impl ExperimentConfig {
    pub fn new(device: DeviceParams, r: u32, s_repeats: usize, nbar: f64, engine: Engine) -> Self {
        Self {
            device,
            r,
            s_repeats,
            nbar,
            engine,
            seed: 0,
            dim: None,
            trajectories: 4000,
            dt_max: DEFAULT_DT_MAX,
            phase_error: PhaseErrorModel::WorstCase,
            channels: None,
            phases: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub engine: Engine,
    pub r: u32,
    pub s_repeats: usize,
    pub nbar: f64,
    pub dim: usize,
    pub total_time: f64,
    pub success_pattern: String,
    pub p_succ: f64,
    pub p_succ_stderr: Option<f64>,
    /// Fidelity after undoing the cavity Kerr phase `e^{−i(K_C/2)n²T}`.
    pub fidelity: f64,
    pub fidelity_stderr: Option<f64>,
    pub fidelity_uncorrected: f64,
    pub photon_dist: Vec<f64>,
    /// Probability of each outcome string, truncated at the first failure.
    pub outcomes_histogram: BTreeMap<String, f64>,
    pub leaked_weight: f64,
    /// Norm of the desired state's weight `N_r = ‖G_r|α⟩‖²`.
    pub n_r: f64,
    pub seed: u64,
    /// Excluded from serialized output so reruns compare bitwise.
    #[serde(skip)]
    pub wall_time: f64,
}

/// Everything a run needs, shared with the perturbative estimates.
#[derive(Clone, Debug)]
pub struct ExperimentSetup {
    pub schedule: ProtocolSchedule,
    pub fock: FockSpaceConfig,
    pub channels: Vec<JumpOperator>,
    pub psi0: SystemState,
    pub target: Array1<C64>,
    pub n_r: f64,
}

pub fn build_setup(cfg: &ExperimentConfig) -> Result<ExperimentSetup> {
    if cfg.r < 2 {
        return invalid(format!("modulus r must be >= 2, got {}", cfg.r));
    }
    let fock = match cfg.dim {
        Some(d) => FockSpaceConfig::new(d)?,
        None => FockSpaceConfig::for_nbar(cfg.nbar)?,
    };
    let opts = ScheduleOptions {
        phase_error: cfg.phase_error,
        phases: cfg.phases.clone(),
        ..Default::default()
    };
    let schedule = schedule_cat(cfg.r, 0, cfg.s_repeats, &cfg.device, cfg.nbar, &opts)?;
    let wanted: Vec<Channel> = cfg
        .channels
        .clone()
        .unwrap_or_else(|| Channel::ALL.to_vec());
    let channels = wanted
        .iter()
        .filter_map(|&c| jump_operator(c, &cfg.device, fock))
        .collect();
    let alpha = coherent_state(cfg.nbar, fock)?;
    let psi0 = SystemState::product([ONE, ZERO], &alpha);
    let (target, n_r) = cat_reference(cfg.r, cfg.nbar, fock)?;
    Ok(ExperimentSetup {
        schedule,
        fock,
        channels,
        psi0,
        target,
        n_r,
    })
}

/// `e^{+i(K_C/2)n²T}` on the cavity.
fn kerr_correction(k_c: f64, total_time: f64, dim: usize) -> Vec<C64> {
    (0..dim)
        .map(|n| C64::from_polar(1.0, 0.5 * k_c * (n * n) as f64 * total_time))
        .collect()
}

fn corrected_state_fidelity(psi: &SystemState, target: &Array1<C64>, phase: &[C64]) -> f64 {
    let d = psi.dim;
    let mut acc = 0.0;
    for q in 0..2 {
        let ov: C64 = (0..d)
            .map(|n| target[n].conj() * phase[n] * psi.amplitudes[q * d + n])
            .sum();
        acc += ov.norm_sqr();
    }
    acc
}

struct Collected {
    p_succ: f64,
    p_stderr: Option<f64>,
    f2: f64,
    f2_stderr: Option<f64>,
    f2_raw: f64,
    photon: Vec<f64>,
    hist: BTreeMap<String, f64>,
}

fn pattern_char(b: u8) -> char {
    char::from(b'0' + b)
}

fn run_unitary(setup: &ExperimentSetup, phase: &[C64]) -> Result<Collected> {
    let dim = setup.fock.dim;
    let mut psi = setup.psi0.clone();
    let mut hist = BTreeMap::new();
    let mut prefix = String::new();
    let mut p_acc = 1.0;
    for seg in &setup.schedule.segments {
        if seg.kind == SegmentKind::Measure {
            let want = seg.expected_outcome.unwrap_or(1);
            let p_want = psi.qubit_weight(want as usize) / psi.refresh_norm().powi(2);
            let mut fail = prefix.clone();
            fail.push(pattern_char(1 - want));
            if p_acc * (1.0 - p_want) > 0.0 {
                hist.insert(fail, p_acc * (1.0 - p_want));
            }
            prefix.push(pattern_char(want));
            p_acc *= p_want;
            if !(p_want > 0.0) {
                return Err(Error::DegenerateOutcome {
                    outcome: want,
                    probability: p_want,
                });
            }
            for (i, a) in psi.amplitudes.iter_mut().enumerate() {
                if i / dim != want as usize {
                    *a = ZERO;
                }
            }
            psi.normalize()?;
        } else {
            apply_segment(seg, &mut psi.amplitudes, dim);
        }
    }
    psi.refresh_norm();
    hist.insert(prefix, p_acc);
    Ok(Collected {
        p_succ: p_acc,
        p_stderr: None,
        f2: corrected_state_fidelity(&psi, &setup.target, phase),
        f2_stderr: None,
        f2_raw: corrected_state_fidelity(&psi, &setup.target, &vec![ONE; dim]),
        photon: photon_distribution(&psi),
        hist,
    })
}

fn run_lindblad(setup: &ExperimentSetup, dt_max: f64, phase: &[C64]) -> Result<Collected> {
    let dim = setup.fock.dim;
    if dim > LINDBLAD_DIM_LIMIT {
        return invalid(format!(
            "cavity dimension {dim} exceeds the master-equation limit {LINDBLAD_DIM_LIMIT}"
        ));
    }
    if !(dt_max > 0.0) {
        return invalid(format!("dt_max must be > 0, got {dt_max}"));
    }
    let lind = Lindbladian::new(&setup.channels, 2 * dim)?;
    let mut rho = DensityMatrix::from_pure(&setup.psi0).entries;
    let mut hist = BTreeMap::new();
    let mut prefix = String::new();
    let mut p_acc = 1.0;
    for seg in &setup.schedule.segments {
        if seg.kind == SegmentKind::Measure {
            let want = seg.expected_outcome.unwrap_or(1) as usize;
            let tr: f64 = rho.diag().iter().map(|v| v.re).sum();
            let w: f64 = (want * dim..(want + 1) * dim).map(|i| rho[[i, i]].re).sum();
            let p_want = w / tr;
            let mut fail = prefix.clone();
            fail.push(pattern_char(1 - want as u8));
            if p_acc * (1.0 - p_want) > 0.0 {
                hist.insert(fail, p_acc * (1.0 - p_want));
            }
            prefix.push(pattern_char(want as u8));
            p_acc *= p_want;
            if !(p_want > 0.0) {
                return Err(Error::DegenerateOutcome {
                    outcome: want as u8,
                    probability: p_want,
                });
            }
            for ((i, j), v) in rho.indexed_iter_mut() {
                if i / dim == want && j / dim == want {
                    *v /= w;
                } else {
                    *v = ZERO;
                }
            }
        } else {
            evolve_segment(seg, &lind, &mut rho, dim, dt_max)?;
        }
    }
    hist.insert(prefix, p_acc);
    let rho = DensityMatrix { entries: rho, dim };
    let rc = partial_trace_qubit(&rho);
    let shifted: Array1<C64> = setup
        .target
        .iter()
        .zip(phase)
        .map(|(t, p)| t * p.conj())
        .collect();
    Ok(Collected {
        p_succ: p_acc,
        p_stderr: None,
        f2: fidelity(&rc, &shifted).powi(2),
        f2_stderr: None,
        f2_raw: fidelity(&rc, &setup.target).powi(2),
        photon: photon_distribution_rho(&rho),
        hist,
    })
}

struct TrajSample {
    success: bool,
    outcomes: String,
    f2: f64,
    f2_raw: f64,
    photon: Vec<f64>,
}

fn run_trajectories(
    setup: &ExperimentSetup,
    seed: u64,
    count: usize,
    phase: &[C64],
) -> Result<Collected> {
    if count == 0 {
        return invalid("trajectory count must be positive");
    }
    let dim = setup.fock.dim;
    let engine = TrajectoryEngine::new(&setup.schedule, &setup.channels, dim);
    let ones = vec![ONE; dim];
    let samples: Vec<Result<TrajSample>> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(seed, i);
            let rec = engine.run(&setup.psi0, &mut rng)?;
            let (f2, f2_raw, photon) = if rec.success {
                (
                    corrected_state_fidelity(&rec.final_state, &setup.target, phase),
                    corrected_state_fidelity(&rec.final_state, &setup.target, &ones),
                    photon_distribution(&rec.final_state),
                )
            } else {
                (0.0, 0.0, Vec::new())
            };
            Ok(TrajSample {
                success: rec.success,
                outcomes: rec.outcome_string,
                f2,
                f2_raw,
                photon,
            })
        })
        .collect();

    // ordered sequential reduction keeps results bitwise reproducible
    let mut hist: BTreeMap<String, f64> = BTreeMap::new();
    let mut ns = 0usize;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut sum_raw = 0.0;
    let mut photon = vec![0.0; dim];
    for s in samples {
        let s = s?;
        *hist.entry(s.outcomes).or_insert(0.0) += 1.0;
        if s.success {
            ns += 1;
            sum += s.f2;
            sum_sq += s.f2 * s.f2;
            sum_raw += s.f2_raw;
            for (a, b) in photon.iter_mut().zip(&s.photon) {
                *a += b;
            }
        }
    }
    let n = count as f64;
    hist.values_mut().for_each(|v| *v /= n);
    let p = ns as f64 / n;
    let p_stderr = (p * (1.0 - p) / n).sqrt();
    if ns == 0 {
        return Err(Error::DegenerateOutcome {
            outcome: setup.schedule.success_pattern.first().copied().unwrap_or(1),
            probability: 0.0,
        });
    }
    let m = ns as f64;
    let mean = sum / m;
    let var = if ns > 1 {
        ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0)
    } else {
        0.0
    };
    photon.iter_mut().for_each(|v| *v /= m);
    Ok(Collected {
        p_succ: p,
        p_stderr: Some(p_stderr),
        f2: mean,
        f2_stderr: Some((var / m).sqrt()),
        f2_raw: sum_raw / m,
        photon,
        hist,
    })
}

/// Runs the protocol on a prepared setup.
pub fn run_cat_experiment_on(
    setup: &ExperimentSetup,
    cfg: &ExperimentConfig,
) -> Result<ExperimentResult> {
    let start = Instant::now();
    check_leak(&setup.psi0)?;
    let dim = setup.fock.dim;
    let phase = kerr_correction(cfg.device.k_c, setup.schedule.total_time, dim);
    let c = match cfg.engine {
        Engine::Unitary => run_unitary(setup, &phase)?,
        Engine::Lindblad => run_lindblad(setup, cfg.dt_max, &phase)?,
        Engine::Trajectory => run_trajectories(setup, cfg.seed, cfg.trajectories, &phase)?,
    };
    let leak = leaked_weight(&c.photon);
    if leak > LEAK_LIMIT {
        return Err(Error::Truncation {
            lost: leak,
            limit: LEAK_LIMIT,
        });
    }
    let fidelity = c.f2.clamp(0.0, 1.0).sqrt();
    let fidelity_stderr = c.f2_stderr.map(|s| {
        if fidelity > 0.0 {
            s / (2.0 * fidelity)
        } else {
            0.0
        }
    });
    Ok(ExperimentResult {
        engine: cfg.engine,
        r: cfg.r,
        s_repeats: cfg.s_repeats,
        nbar: cfg.nbar,
        dim,
        total_time: setup.schedule.total_time,
        success_pattern: setup.schedule.pattern_string(),
        p_succ: c.p_succ.clamp(0.0, 1.0),
        p_succ_stderr: c.p_stderr,
        fidelity,
        fidelity_stderr,
        fidelity_uncorrected: c.f2_raw.clamp(0.0, 1.0).sqrt(),
        photon_dist: c.photon,
        outcomes_histogram: c.hist,
        leaked_weight: leak,
        n_r: setup.n_r,
        seed: cfg.seed,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Prepares `|0⟩|α⟩`, runs the repeated protocol and conditions on the
/// success pattern.
pub fn run_cat_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let setup = build_setup(cfg)?;
    run_cat_experiment_on(&setup, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noiseless(r: u32, s: usize, nbar: f64) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(
            DeviceParams::preset().noiseless(),
            r,
            s,
            nbar,
            Engine::Unitary,
        );
        c.phase_error = PhaseErrorModel::None;
        c
    }

    #[test]
    fn noiseless_success_near_one_over_r() {
        for r in [3u32, 5, 7] {
            let res = run_cat_experiment(&noiseless(r, 1, 20.0)).unwrap();
            assert!(
                (res.p_succ * r as f64 - 1.0).abs() < 0.2,
                "r={r} p={}",
                res.p_succ
            );
            assert!((res.p_succ - res.n_r).abs() < 0.02);
            let total: f64 = res.outcomes_histogram.values().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn qnd_repetition() {
        let mut one = noiseless(8, 1, 10.0);
        one.device.k_c = 0.0;
        let mut two = one.clone();
        two.s_repeats = 2;
        let a = run_cat_experiment(&one).unwrap();
        let b = run_cat_experiment(&two).unwrap();
        assert!(
            (a.p_succ - b.p_succ).abs() < 1e-3 * a.p_succ,
            "{} {}",
            a.p_succ,
            b.p_succ
        );
        assert_eq!(b.success_pattern, "10");
    }

    #[test]
    fn kerr_correction_only_changes_phase_reference() {
        let mut c = noiseless(4, 1, 10.0);
        c.device.k_c *= 1e3;
        c.device.eta = 0.0;
        let res = run_cat_experiment(&c).unwrap();
        assert!(
            res.fidelity > res.fidelity_uncorrected + 0.1,
            "{} {}",
            res.fidelity,
            res.fidelity_uncorrected
        );
        let mut off = c.clone();
        off.device.k_c = 0.0;
        off.device.eta = 0.0;
        let base = run_cat_experiment(&off).unwrap();
        assert!((base.fidelity - base.fidelity_uncorrected).abs() < 1e-15);
    }

    #[test]
    fn engines_agree_without_noise() {
        let u = run_cat_experiment(&noiseless(3, 2, 6.0)).unwrap();
        let mut lc = noiseless(3, 2, 6.0);
        lc.engine = Engine::Lindblad;
        let l = run_cat_experiment(&lc).unwrap();
        assert!((u.p_succ - l.p_succ).abs() < 1e-8);
        assert!((u.fidelity - l.fidelity).abs() < 1e-8);
        for (k, v) in &u.outcomes_histogram {
            assert!((v - l.outcomes_histogram[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn trajectory_reproducible() {
        let mut c = ExperimentConfig::new(DeviceParams::preset(), 3, 3, 6.0, Engine::Trajectory);
        c.trajectories = 200;
        c.seed = 11;
        let a = run_cat_experiment(&c).unwrap();
        let b = run_cat_experiment(&c).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
