// SPDX-License-Identifier: Apache-2.0

//! Cavity-QED device parameters, dispersive Hamiltonian terms and jump
//! operators.
//!
//! Qubit index 0 is the ground state `|g⟩` and index 1 the excited state
//! `|e⟩`; `σ_z = |e⟩⟨e| − |g⟩⟨g|`, `σ_− = |g⟩⟨e|`. In the index basis
//! `σ_z = −Z`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{FockSpaceConfig, SystemOperator};
use crate::qubit::{C64, ZERO};

const TWO_PI: f64 = 2.0 * PI;

/// Rates in 1/s, frequencies in rad/s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    /// Dispersive shift magnitude.
    pub chi: f64,
    /// Cavity self-Kerr.
    #[serde(rename = "K_C")]
    pub k_c: f64,
    /// Qubit-state-dependent Kerr factor; `K̄ = K_C·η`.
    pub eta: f64,
    #[serde(rename = "Omega_q")]
    pub omega_q: f64,
    pub gamma_c: f64,
    pub gamma_q: f64,
    pub gamma_qphi: f64,
    #[serde(rename = "gamma_cDelta")]
    pub gamma_c_delta: f64,
    /// Qubit-induced cavity decay (Purcell-type dressing).
    #[serde(default)]
    pub gamma_cq: f64,
    /// Cavity-induced qubit decay.
    #[serde(default)]
    pub gamma_qc: f64,
    pub dphi_rel: f64,
    pub n_crit: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self::preset()
    }
}

impl DeviceParams {
    /// Reference device. The listed rates already include dressing, so the
    /// separate `gamma_cq`/`gamma_qc` terms are zero.
    pub fn preset() -> Self {
        let gamma_q = 1.0 / 300e-6;
        let gamma_qphi = 4.5 * gamma_q;
        let n_crit = 1000.0;
        Self {
            chi: TWO_PI * 41e3,
            k_c: TWO_PI * 2.0,
            eta: 0.5,
            omega_q: TWO_PI * 8.2e6,
            gamma_c: TWO_PI * 3.2,
            gamma_q,
            gamma_qphi,
            // 2(g/Δ)²γ_qφ with (g/Δ)² = 1/(12·n_crit)
            gamma_c_delta: gamma_qphi / (6.0 * n_crit),
            gamma_cq: 0.0,
            gamma_qc: 0.0,
            dphi_rel: 0.01,
            n_crit,
        }
    }

    /// Same device with every dissipative rate set to zero.
    pub fn noiseless(&self) -> Self {
        Self {
            gamma_c: 0.0,
            gamma_q: 0.0,
            gamma_qphi: 0.0,
            gamma_c_delta: 0.0,
            gamma_cq: 0.0,
            gamma_qc: 0.0,
            ..self.clone()
        }
    }

    /// `K̄ = K_C·η`.
    pub fn kbar(&self) -> f64 {
        self.k_c * self.eta
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("chi", self.chi),
            ("K_C", self.k_c),
            ("eta", self.eta),
            ("Omega_q", self.omega_q),
            ("gamma_c", self.gamma_c),
            ("gamma_q", self.gamma_q),
            ("gamma_qphi", self.gamma_qphi),
            ("gamma_cDelta", self.gamma_c_delta),
            ("gamma_cq", self.gamma_cq),
            ("gamma_qc", self.gamma_qc),
            ("dphi_rel", self.dphi_rel),
            ("n_crit", self.n_crit),
        ];
        if let Some((name, v)) = all.iter().find(|(_, v)| !v.is_finite()) {
            return invalid(format!("{name} must be finite, got {v}"));
        }
        let rates = [
            ("gamma_c", self.gamma_c),
            ("gamma_q", self.gamma_q),
            ("gamma_qphi", self.gamma_qphi),
            ("gamma_cDelta", self.gamma_c_delta),
            ("gamma_cq", self.gamma_cq),
            ("gamma_qc", self.gamma_qc),
        ];
        if let Some((name, v)) = rates.iter().find(|(_, v)| *v < 0.0) {
            return invalid(format!("{name} must be >= 0, got {v}"));
        }
        if !(self.chi > 0.0) {
            return invalid(format!("chi must be > 0, got {}", self.chi));
        }
        if !(self.omega_q > 0.0) {
            return invalid(format!("Omega_q must be > 0, got {}", self.omega_q));
        }
        if !(0.0..=0.1).contains(&self.dphi_rel) {
            return invalid(format!(
                "dphi_rel must lie in [0, 0.1], got {}",
                self.dphi_rel
            ));
        }
        if self.n_crit < 0.0 {
            return invalid("n_crit must be >= 0");
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let p: DeviceParams =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

/// Bare rates and drive settings fed to [`derive_params`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseRates {
    pub gamma_c: f64,
    pub gamma_q: f64,
    pub gamma_qphi: f64,
    pub omega_q: f64,
    pub dphi_rel: f64,
}

/// Dispersive-regime parameters from the transmon–cavity coupling `g`,
/// detuning `Δ` and charging energy `E_C` (all rad/s).
///
/// `chi` holds the magnitude `g²E_C/(Δ(Δ−E_C))`; its sign is absorbed by the
/// qubit labelling. `K_C = −E_C(g/Δ)⁴` keeps its sign.
pub fn derive_params(g: f64, delta: f64, e_c: f64, base: &BaseRates) -> Result<DeviceParams> {
    if ![g, delta, e_c].iter().all(|v| v.is_finite()) {
        return invalid("g, Delta and E_C must be finite");
    }
    if delta == 0.0 || delta == e_c {
        return Err(Error::SingularParameters(format!(
            "dispersive pole at Delta = {delta}, E_C = {e_c}"
        )));
    }
    let ratio = g / delta;
    if ratio.abs() > 0.1 {
        log::warn!("g/Delta = {ratio:.3} is not small; dispersive expansion is doubtful");
    }
    let r2 = ratio * ratio;
    let chi = (g * g * e_c / (delta * (delta - e_c))).abs();
    let n_crit = if g == 0.0 {
        f64::INFINITY
    } else {
        delta * delta / (12.0 * g * g)
    };
    Ok(DeviceParams {
        chi,
        k_c: -e_c * r2 * r2,
        eta: 4.5 * e_c / delta,
        omega_q: base.omega_q,
        gamma_c: base.gamma_c,
        gamma_q: base.gamma_q,
        gamma_qphi: base.gamma_qphi,
        gamma_c_delta: 2.0 * r2 * base.gamma_qphi,
        gamma_cq: r2 * base.gamma_q,
        gamma_qc: r2 * base.gamma_c,
        dphi_rel: base.dphi_rel,
        n_crit,
    })
}

/// The three diagonal Hamiltonian pieces on the joint space.
#[derive(Clone, Debug)]
pub struct HamiltonianTerms {
    /// `χ·σ_z⊗n_C`.
    pub h_chi: SystemOperator,
    /// `(K̄/2)·σ_z⊗n_C²`.
    pub h_kbar: SystemOperator,
    /// `(K_C/2)·I⊗n_C²`.
    pub h_k: SystemOperator,
}

/// `σ_z` eigenvalue of qubit index `q`.
pub fn sigma_z(q: usize) -> f64 {
    if q == 0 {
        -1.0
    } else {
        1.0
    }
}

pub fn hamiltonian_terms(p: &DeviceParams, cfg: FockSpaceConfig) -> HamiltonianTerms {
    let d = cfg.dim;
    let diag = |f: &dyn Fn(usize, f64) -> f64| -> SystemOperator {
        let v: Vec<C64> = (0..2 * d)
            .map(|i| C64::new(f(i / d, (i % d) as f64), 0.0))
            .collect();
        SystemOperator::diagonal(&v)
    };
    HamiltonianTerms {
        h_chi: diag(&|q, n| p.chi * sigma_z(q) * n),
        h_kbar: diag(&|q, n| 0.5 * p.kbar() * sigma_z(q) * n * n),
        h_k: diag(&|_, n| 0.5 * p.k_c * n * n),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// `√(γ_c+γ_cq)·b`
    CavityDecay,
    /// `√(γ_q+γ_qc)·σ_−`
    QubitDecay,
    /// `√(γ_qφ/2)·σ_z`
    QubitDephasing,
    /// `√γ_cΔ·σ_−b†`
    DressedDown,
    /// `√γ_cΔ·σ_+b`
    DressedUp,
}

impl Channel {
    pub const ALL: [Channel; 5] = [
        Channel::CavityDecay,
        Channel::QubitDecay,
        Channel::QubitDephasing,
        Channel::DressedDown,
        Channel::DressedUp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Channel::CavityDecay => "cavity_decay",
            Channel::QubitDecay => "qubit_decay",
            Channel::QubitDephasing => "qubit_dephasing",
            Channel::DressedDown => "dressed_down",
            Channel::DressedUp => "dressed_up",
        }
    }

    /// Rate multiplying the operator in the jump `√rate·O`.
    pub fn rate(&self, p: &DeviceParams) -> f64 {
        match self {
            Channel::CavityDecay => p.gamma_c + p.gamma_cq,
            Channel::QubitDecay => p.gamma_q + p.gamma_qc,
            Channel::QubitDephasing => 0.5 * p.gamma_qphi,
            Channel::DressedDown | Channel::DressedUp => p.gamma_c_delta,
        }
    }
}

/// Jump operator with at most one non-zero entry per row and per column,
/// stored as `(row, col, value)` triples including the `√rate` factor.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpOperator {
    pub channel: Channel,
    pub rate: f64,
    pub entries: Vec<(usize, usize, C64)>,
    pub size: usize,
}

impl JumpOperator {
    pub fn dense(&self) -> SystemOperator {
        let mut m = ndarray::Array2::zeros((self.size, self.size));
        for &(i, j, v) in &self.entries {
            m[[i, j]] += v;
        }
        SystemOperator {
            entries: m,
            structure: None,
        }
    }

    /// `L|ψ⟩` into `out` (overwritten).
    pub fn apply_into(&self, psi: &ndarray::Array1<C64>, out: &mut ndarray::Array1<C64>) {
        out.fill(ZERO);
        for &(i, j, v) in &self.entries {
            out[i] += v * psi[j];
        }
    }

    /// Diagonal of `L†L`.
    pub fn ldag_l_diag(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.size];
        for &(_, j, v) in &self.entries {
            d[j] += v.norm_sqr();
        }
        d
    }
}

/// Active dissipators of `p` on the joint space; zero-rate channels omitted.
pub fn jump_operators(p: &DeviceParams, cfg: FockSpaceConfig) -> Vec<JumpOperator> {
    Channel::ALL
        .iter()
        .filter_map(|&c| jump_operator(c, p, cfg))
        .collect()
}

/// A single channel, or `None` when its rate vanishes.
pub fn jump_operator(
    channel: Channel,
    p: &DeviceParams,
    cfg: FockSpaceConfig,
) -> Option<JumpOperator> {
    let rate = channel.rate(p);
    if rate <= 0.0 {
        return None;
    }
    let d = cfg.dim;
    let s = rate.sqrt();
    let sq = |n: usize| (n as f64).sqrt();
    let mut entries = Vec::new();
    match channel {
        Channel::CavityDecay => {
            for q in 0..2 {
                for n in 1..d {
                    entries.push((q * d + n - 1, q * d + n, C64::new(s * sq(n), 0.0)));
                }
            }
        }
        Channel::QubitDecay => {
            for n in 0..d {
                entries.push((n, d + n, C64::new(s, 0.0)));
            }
        }
        Channel::QubitDephasing => {
            for q in 0..2 {
                for n in 0..d {
                    entries.push((q * d + n, q * d + n, C64::new(s * sigma_z(q), 0.0)));
                }
            }
        }
        Channel::DressedDown => {
            // σ_− b†: |e,n⟩ → √(n+1)|g,n+1⟩
            for n in 0..d - 1 {
                entries.push((n + 1, d + n, C64::new(s * sq(n + 1), 0.0)));
            }
        }
        Channel::DressedUp => {
            // σ_+ b: |g,n⟩ → √n|e,n−1⟩
            for n in 1..d {
                entries.push((d + n - 1, n, C64::new(s * sq(n), 0.0)));
            }
        }
    }
    Some(JumpOperator {
        channel,
        rate,
        entries,
        size: 2 * d,
    })
}
