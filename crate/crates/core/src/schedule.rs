// SPDX-License-Identifier: Apache-2.0

//! Compilation of the repeated cat-preparation protocol into timed segments.
//!
//! The device couples through `σ_z⊗n_C`, so the protocol is run in the
//! Hadamard-conjugated frame where signal steps are free `Z`-type evolution
//! and processing steps are `X` drives. One repetition realizes
//! `W = e^{iΦ_0 X} Π_j [e^{iθ_n Z} e^{iΦ_j X}] = i·X·U^R` on each photon-number
//! block, so a success in the `U^R` picture reads out as a flipped ancilla.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::device::DeviceParams;
use crate::error::{invalid, Result};
use crate::qubit::{rot_x_unchecked, rot_z_unchecked, PhaseSequence, QubitMatrix, C64};
use crate::synthesis::analytic_phases;

/// Per-photon-number generator `H(n) = x·X + (z0 + z1·n + z2·n²)·Z + e2·n²·I`
/// in the qubit index basis (rad/s).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BlockGenerator {
    pub x: f64,
    pub z0: f64,
    pub z1: f64,
    pub z2: f64,
    pub e2: f64,
}

impl BlockGenerator {
    /// `(e, x, z)` coefficients at photon number `n`.
    #[inline]
    pub fn coeffs(&self, n: usize) -> (f64, f64, f64) {
        let n = n as f64;
        (
            self.e2 * n * n,
            self.x,
            self.z0 + self.z1 * n + self.z2 * n * n,
        )
    }

    pub fn matrix(&self, n: usize) -> QubitMatrix {
        let (e, x, z) = self.coeffs(n);
        QubitMatrix::new(
            C64::new(e + z, 0.0),
            C64::new(x, 0.0),
            C64::new(x, 0.0),
            C64::new(e - z, 0.0),
        )
    }

    /// `e^{−iH(n)t}`.
    pub fn propagator(&self, n: usize, t: f64) -> QubitMatrix {
        let (e, x, z) = self.coeffs(n);
        let w = (x * x + z * z).sqrt();
        let (s, c) = (w * t).sin_cos();
        let sw = if w * t.abs() < 1e-8 { t } else { s / w };
        let ph = C64::from_polar(1.0, -e * t);
        let m = QubitMatrix::new(
            C64::new(c, -sw * z),
            C64::new(0.0, -sw * x),
            C64::new(0.0, -sw * x),
            C64::new(c, sw * z),
        );
        m.scale(ph)
    }

    pub fn propagator_blocks(&self, dim: usize, t: f64) -> Vec<QubitMatrix> {
        (0..dim).map(|n| self.propagator(n, t)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Signal,
    Processing,
    /// Zero-duration ideal single-qubit operation (virtual Z, ideal rotation).
    Gate,
    Measure,
    Idle,
}

/// Always-on terms removed by the compiled replacements.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Cancellation {
    /// `χ·n̄` subtracted during processing.
    pub chi_nbar: f64,
    /// `(K̄/2)·n̄²` subtracted throughout.
    pub kerr_nbar2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub duration: f64,
    pub generator: BlockGenerator,
    /// Instantaneous operation for `Gate` segments.
    pub gate: Option<QubitMatrix>,
    pub cancellation: Cancellation,
    /// Target processing angle (rad); zero for non-processing segments.
    pub nominal_phase: f64,
    /// Angle actually driven after the phase-error model.
    pub applied_phase: f64,
    pub repetition: usize,
    /// Outcome that counts as success at a `Measure` segment.
    pub expected_outcome: Option<u8>,
}

impl Segment {
    /// Per-`n` unitary of the segment; `None` for measurements.
    pub fn blocks(&self, dim: usize) -> Option<Vec<QubitMatrix>> {
        match self.kind {
            SegmentKind::Measure => None,
            SegmentKind::Gate => Some(vec![self.gate.unwrap_or_else(QubitMatrix::identity); dim]),
            _ => Some(self.generator.propagator_blocks(dim, self.duration)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSchedule {
    pub segments: Vec<Segment>,
    pub total_time: f64,
    pub r: u32,
    pub k: u32,
    pub repeats: usize,
    pub nbar: f64,
    pub phases: PhaseSequence,
    /// Outcome required at each measurement, in time order.
    pub success_pattern: Vec<u8>,
}

impl ProtocolSchedule {
    pub fn count(&self, kind: SegmentKind) -> usize {
        self.segments.iter().filter(|s| s.kind == kind).count()
    }

    /// Total signal time over all repetitions.
    pub fn signal_time(&self) -> f64 {
        self.segments
            .iter()
            .filter(|s| s.kind == SegmentKind::Signal)
            .map(|s| s.duration)
            .sum()
    }

    /// Success pattern as a `"101"`-style string.
    pub fn pattern_string(&self) -> String {
        self.success_pattern
            .iter()
            .map(|b| char::from(b'0' + b))
            .collect()
    }

    /// An empty schedule (identity).
    pub fn empty(nbar: f64) -> Self {
        Self {
            segments: Vec::new(),
            total_time: 0.0,
            r: 2,
            k: 0,
            repeats: 0,
            nbar,
            phases: PhaseSequence::new(vec![0.0]),
            success_pattern: Vec::new(),
        }
    }

    /// A single idle segment of length `t` under the device's always-on terms.
    pub fn idle(p: &DeviceParams, nbar: f64, t: f64, kerr: bool) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return invalid(format!("idle time must be finite and >= 0, got {t}"));
        }
        let mut s = Self::empty(nbar);
        s.segments.push(Segment {
            kind: SegmentKind::Idle,
            duration: t,
            generator: always_on(p, kerr),
            gate: None,
            cancellation: Cancellation::default(),
            nominal_phase: 0.0,
            applied_phase: 0.0,
            repetition: 0,
            expected_outcome: None,
        });
        s.total_time = t;
        Ok(s)
    }
}

/// Processing-angle error model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum PhaseErrorModel {
    /// Exact angles.
    None,
    /// Every angle scaled by `1 + dphi_rel`.
    WorstCase,
    /// Independent `ε ~ U[−dphi_rel, dphi_rel]` per segment.
    Uniform { seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleOptions {
    /// Keep the qubit-dependent Kerr `H_K̄` and cavity Kerr `H_K`.
    pub kerr: bool,
    /// Apply the `χn̄` and `K̄n̄²/2` replacements.
    pub cancellation: bool,
    /// Treat processing rotations as instantaneous ideal gates.
    pub ideal_processing: bool,
    pub phase_error: PhaseErrorModel,
    /// Phase sequence; closed-form phases for `r` when absent.
    pub phases: Option<PhaseSequence>,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        Self {
            kerr: true,
            cancellation: true,
            ideal_processing: false,
            phase_error: PhaseErrorModel::WorstCase,
            phases: None,
        }
    }
}

impl ScheduleOptions {
    /// Instantaneous exact processing, no Kerr: the algebraic protocol.
    pub fn ideal() -> Self {
        Self {
            kerr: false,
            cancellation: true,
            ideal_processing: true,
            phase_error: PhaseErrorModel::None,
            phases: None,
        }
    }
}

/// Signal step duration `π/(rχ)`.
pub fn signal_duration(r: u32, chi: f64) -> f64 {
    PI / (r as f64 * chi)
}

fn always_on(p: &DeviceParams, kerr: bool) -> BlockGenerator {
    // σ_z = −Z in the index basis
    let mut g = BlockGenerator {
        z1: -p.chi,
        ..Default::default()
    };
    if kerr {
        g.z2 = -0.5 * p.kbar();
        g.e2 = 0.5 * p.k_c;
    }
    g
}

/// Timed `X` rotation by `φ_j` under the always-on terms.
///
/// The drive lasts `|φ(1+ε)|/Ω_q`; with cancellation the `χn̄σ_z` term is
/// removed so that the Fock component `n = n̄` sees a pure rotation.
pub fn processing_generator(
    phi: f64,
    eps: f64,
    p: &DeviceParams,
    nbar: f64,
    opts: &ScheduleOptions,
) -> Result<Segment> {
    if !(phi.abs() <= PI) {
        return invalid(format!(
            "processing angle must satisfy |phi| <= pi, got {phi}"
        ));
    }
    let applied = phi * (1.0 + eps);
    if opts.ideal_processing {
        return Ok(Segment {
            kind: SegmentKind::Gate,
            duration: 0.0,
            generator: BlockGenerator::default(),
            gate: Some(rot_x_unchecked(applied)),
            cancellation: Cancellation::default(),
            nominal_phase: phi,
            applied_phase: applied,
            repetition: 0,
            expected_outcome: None,
        });
    }
    let t = applied.abs() / p.omega_q;
    let mut g = always_on(p, opts.kerr);
    let mut cancel = Cancellation::default();
    if opts.cancellation {
        cancel.chi_nbar = p.chi * nbar;
        g.z0 += p.chi * nbar;
        if opts.kerr {
            cancel.kerr_nbar2 = 0.5 * p.kbar() * nbar * nbar;
            g.z0 += cancel.kerr_nbar2;
        }
    }
    if t > 0.0 {
        g.x = -applied / t;
    }
    Ok(Segment {
        kind: SegmentKind::Processing,
        duration: t,
        generator: g,
        gate: None,
        cancellation: cancel,
        nominal_phase: phi,
        applied_phase: applied,
        repetition: 0,
        expected_outcome: None,
    })
}

/// Compiles `s_repeats` back-to-back measurement rounds for `GP_{r,k}`.
pub fn schedule_cat(
    r: u32,
    k: u32,
    s_repeats: usize,
    p: &DeviceParams,
    nbar: f64,
    opts: &ScheduleOptions,
) -> Result<ProtocolSchedule> {
    if r < 2 {
        return invalid(format!("modulus r must be >= 2, got {r}"));
    }
    if s_repeats == 0 {
        return invalid("at least one repetition is required");
    }
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return invalid(format!("nbar must be finite and >= 0, got {nbar}"));
    }
    p.validate()?;
    let phases = match &opts.phases {
        Some(ph) => {
            if !ph.symmetric {
                return invalid("schedule phases must be symmetric");
            }
            ph.clone()
        }
        None => analytic_phases(r)?,
    };
    let mut rng = match opts.phase_error {
        PhaseErrorModel::Uniform { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut draw_eps = || -> f64 {
        match opts.phase_error {
            PhaseErrorModel::None => 0.0,
            PhaseErrorModel::WorstCase => p.dphi_rel,
            PhaseErrorModel::Uniform { .. } => {
                let u: f64 = rng.as_mut().map(|g| g.random()).unwrap_or(0.5);
                p.dphi_rel * (2.0 * u - 1.0)
            }
        }
    };

    let t_sig = signal_duration(r, p.chi);
    let mut signal_gen = always_on(p, opts.kerr);
    let mut sig_cancel = Cancellation::default();
    if opts.cancellation && opts.kerr {
        sig_cancel.kerr_nbar2 = 0.5 * p.kbar() * nbar * nbar;
        signal_gen.z0 += sig_cancel.kerr_nbar2;
    }
    let k_gate = if !k.is_multiple_of(2 * r) {
        Some(rot_z_unchecked(-PI / r as f64 * k as f64))
    } else {
        None
    };

    let mut segments = Vec::new();
    let mut pattern = Vec::with_capacity(s_repeats);
    for rep in 0..s_repeats {
        let d = phases.depth();
        for j in (0..=d).rev() {
            let mut seg = processing_generator(phases.angles[j], draw_eps(), p, nbar, opts)?;
            seg.repetition = rep;
            segments.push(seg);
            if j > 0 {
                segments.push(Segment {
                    kind: SegmentKind::Signal,
                    duration: t_sig,
                    generator: signal_gen,
                    gate: None,
                    cancellation: sig_cancel,
                    nominal_phase: 0.0,
                    applied_phase: 0.0,
                    repetition: rep,
                    expected_outcome: None,
                });
                if let Some(g) = k_gate {
                    segments.push(Segment {
                        kind: SegmentKind::Gate,
                        duration: 0.0,
                        generator: BlockGenerator::default(),
                        gate: Some(g),
                        cancellation: Cancellation::default(),
                        nominal_phase: 0.0,
                        applied_phase: 0.0,
                        repetition: rep,
                        expected_outcome: None,
                    });
                }
            }
        }
        let want = u8::from(rep % 2 == 0);
        pattern.push(want);
        segments.push(Segment {
            kind: SegmentKind::Measure,
            duration: 0.0,
            generator: BlockGenerator::default(),
            gate: None,
            cancellation: Cancellation::default(),
            nominal_phase: 0.0,
            applied_phase: 0.0,
            repetition: rep,
            expected_outcome: Some(want),
        });
    }
    let total_time = segments.iter().map(|s| s.duration).sum();
    Ok(ProtocolSchedule {
        segments,
        total_time,
        r,
        k,
        repeats: s_repeats,
        nbar,
        phases,
        success_pattern: pattern,
    })
}

/// Per-`n` product of the unitary segments of repetition `rep`.
pub fn repetition_blocks(schedule: &ProtocolSchedule, rep: usize, dim: usize) -> Vec<QubitMatrix> {
    let mut acc = vec![QubitMatrix::identity(); dim];
    for seg in schedule.segments.iter().filter(|s| s.repetition == rep) {
        if let Some(b) = seg.blocks(dim) {
            for (a, m) in acc.iter_mut().zip(b) {
                *a = m * *a;
            }
        }
    }
    acc
}

/// Writes one row per segment.
pub fn write_schedule_csv<W: Write>(schedule: &ProtocolSchedule, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "index",
        "kind",
        "repetition",
        "duration_s",
        "nominal_phase",
        "applied_phase",
        "x",
        "z0",
        "z1",
        "z2",
        "e2",
        "chi_nbar",
        "kerr_nbar2",
        "expected_outcome",
    ])?;
    for (i, s) in schedule.segments.iter().enumerate() {
        let kind = match s.kind {
            SegmentKind::Signal => "signal",
            SegmentKind::Processing => "processing",
            SegmentKind::Gate => "gate",
            SegmentKind::Measure => "measure",
            SegmentKind::Idle => "idle",
        };
        let g = &s.generator;
        wr.write_record([
            i.to_string(),
            kind.to_string(),
            s.repetition.to_string(),
            format!("{:e}", s.duration),
            format!("{:e}", s.nominal_phase),
            format!("{:e}", s.applied_phase),
            format!("{:e}", g.x),
            format!("{:e}", g.z0),
            format!("{:e}", g.z1),
            format!("{:e}", g.z2),
            format!("{:e}", g.e2),
            format!("{:e}", s.cancellation.chi_nbar),
            format!("{:e}", s.cancellation.kerr_nbar2),
            s.expected_outcome
                .map(|o| o.to_string())
                .unwrap_or_default(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
