// SPDX-License-Identifier: Apache-2.0

//! Truncated cavity Fock space and the joint qubit ⊗ cavity space.
//!
//! Joint index ordering is qubit-major: `index = q·dim + n`.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::qubit::{QubitMatrix, C64, ONE, ZERO};

/// Largest tolerated truncated weight when building a coherent state.
pub const COHERENT_TRUNCATION_LIMIT: f64 = 1e-8;
/// Largest tolerated population of the top Fock level after a run.
pub const LEAK_LIMIT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockSpaceConfig {
    pub dim: usize,
}

impl FockSpaceConfig {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return invalid(format!("cavity dimension must be >= 2, got {dim}"));
        }
        Ok(Self { dim })
    }

    /// Smallest power of two `≥ n̄ + 8√n̄ + 16`.
    pub fn for_nbar(nbar: f64) -> Result<Self> {
        if !(nbar >= 0.0) || !nbar.is_finite() {
            return invalid(format!(
                "mean photon number must be finite and >= 0, got {nbar}"
            ));
        }
        let need = (nbar + 8.0 * nbar.sqrt() + 16.0).ceil() as usize;
        Self::new(need.next_power_of_two())
    }

    pub fn joint_dim(&self) -> usize {
        2 * self.dim
    }
}

/// Normalized (or explicitly unnormalized) joint state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemState {
    pub amplitudes: Array1<C64>,
    pub dim: usize,
    norm: f64,
}

impl SystemState {
    pub fn from_amplitudes(amplitudes: Array1<C64>, cfg: FockSpaceConfig) -> Result<Self> {
        if amplitudes.len() != cfg.joint_dim() {
            return invalid(format!(
                "state has {} amplitudes, expected {}",
                amplitudes.len(),
                cfg.joint_dim()
            ));
        }
        let norm = l2(amplitudes.view());
        Ok(Self {
            amplitudes,
            dim: cfg.dim,
            norm,
        })
    }

    /// `(a|0⟩ + b|1⟩) ⊗ |c⟩`.
    pub fn product(qubit: [C64; 2], cavity: &Array1<C64>) -> Self {
        let dim = cavity.len();
        let mut amplitudes = Array1::zeros(2 * dim);
        for n in 0..dim {
            amplitudes[n] = qubit[0] * cavity[n];
            amplitudes[dim + n] = qubit[1] * cavity[n];
        }
        let norm = l2(amplitudes.view());
        Self {
            amplitudes,
            dim,
            norm,
        }
    }

    pub fn config(&self) -> FockSpaceConfig {
        FockSpaceConfig { dim: self.dim }
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Recomputes the cached norm after in-place edits.
    pub fn refresh_norm(&mut self) -> f64 {
        self.norm = l2(self.amplitudes.view());
        self.norm
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.refresh_norm();
        if !(n > 0.0) {
            return Err(Error::DegenerateInput(
                "cannot normalize a zero state".into(),
            ));
        }
        self.amplitudes.mapv_inplace(|a| a / n);
        self.norm = 1.0;
        Ok(())
    }

    pub fn inner(&self, other: &SystemState) -> C64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Squared norm of the qubit-`q` block.
    pub fn qubit_weight(&self, q: usize) -> f64 {
        let d = self.dim;
        self.amplitudes
            .slice(ndarray::s![q * d..(q + 1) * d])
            .iter()
            .map(|a| a.norm_sqr())
            .sum()
    }
}

fn l2(v: ArrayView1<C64>) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Joint density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub entries: Array2<C64>,
    pub dim: usize,
}

impl DensityMatrix {
    pub fn from_pure(psi: &SystemState) -> Self {
        let a = &psi.amplitudes;
        let n = a.len();
        let entries = Array2::from_shape_fn((n, n), |(i, j)| a[i] * a[j].conj());
        Self {
            entries,
            dim: psi.dim,
        }
    }

    pub fn from_entries(entries: Array2<C64>, cfg: FockSpaceConfig) -> Result<Self> {
        let d = cfg.joint_dim();
        if entries.dim() != (d, d) {
            return invalid(format!("density matrix must be {d}x{d}"));
        }
        Ok(Self {
            entries,
            dim: cfg.dim,
        })
    }

    pub fn config(&self) -> FockSpaceConfig {
        FockSpaceConfig { dim: self.dim }
    }

    pub fn trace(&self) -> C64 {
        self.entries.diag().sum()
    }

    /// `‖ρ − ρ†‖_max`.
    pub fn hermiticity_error(&self) -> f64 {
        let e = &self.entries;
        let n = e.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((e[[i, j]] - e[[j, i]].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() < 1e-10
    }

    pub fn is_trace_one(&self) -> bool {
        (self.trace() - ONE).norm() < 1e-8
    }

    /// `ρ ← (ρ + ρ†)/2`.
    pub fn hermitize(&mut self) {
        let e = &mut self.entries;
        let n = e.nrows();
        for i in 0..n {
            e[[i, i]].im = 0.0;
            for j in i + 1..n {
                let avg = 0.5 * (e[[i, j]] + e[[j, i]].conj());
                e[[i, j]] = avg;
                e[[j, i]] = avg.conj();
            }
        }
    }

    /// Population of the qubit-`q` block.
    pub fn qubit_weight(&self, q: usize) -> f64 {
        let d = self.dim;
        (q * d..(q + 1) * d).map(|i| self.entries[[i, i]].re).sum()
    }
}

/// Structural promise attached to an operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Structure {
    /// Diagonal in the product basis.
    Diagonal,
    /// Couples `|0,n⟩` and `|1,n⟩` only: block-diagonal in `n`.
    QubitDiagonal,
    Dense,
}

/// Dense operator on either the cavity or the joint space.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemOperator {
    pub entries: Array2<C64>,
    pub structure: Option<Structure>,
}

impl SystemOperator {
    /// Wraps `entries`, verifying that `structure` holds exactly.
    pub fn new(entries: Array2<C64>, structure: Option<Structure>) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c {
            return invalid("operator must be square");
        }
        if let Some(s) = structure {
            let ok = match s {
                Structure::Dense => true,
                Structure::Diagonal => entries
                    .indexed_iter()
                    .all(|((i, j), v)| i == j || *v == ZERO),
                Structure::QubitDiagonal => {
                    if r % 2 != 0 {
                        false
                    } else {
                        let d = r / 2;
                        entries
                            .indexed_iter()
                            .all(|((i, j), v)| i % d == j % d || *v == ZERO)
                    }
                }
            };
            if !ok {
                return invalid(format!("operator entries violate the {s:?} tag"));
            }
        }
        Ok(Self { entries, structure })
    }

    pub fn dense(entries: Array2<C64>) -> Self {
        Self {
            entries,
            structure: Some(Structure::Dense),
        }
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut entries = Array2::zeros((n, n));
        for (i, &v) in diag.iter().enumerate() {
            entries[[i, i]] = v;
        }
        Self {
            entries,
            structure: Some(Structure::Diagonal),
        }
    }

    /// Joint operator from one 2×2 block per photon number.
    pub fn from_blocks(blocks: &[QubitMatrix]) -> Self {
        let d = blocks.len();
        let mut entries = Array2::zeros((2 * d, 2 * d));
        for (n, b) in blocks.iter().enumerate() {
            for q in 0..2 {
                for p in 0..2 {
                    entries[[q * d + n, p * d + n]] = b.get(q, p);
                }
            }
        }
        Self {
            entries,
            structure: Some(Structure::QubitDiagonal),
        }
    }

    /// Per-photon-number 2×2 blocks of a joint operator.
    pub fn block(&self, n: usize) -> QubitMatrix {
        let d = self.size() / 2;
        let e = &self.entries;
        QubitMatrix::new(e[[n, n]], e[[n, d + n]], e[[d + n, n]], e[[d + n, d + n]])
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![ONE; n])
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.t().mapv(|v| v.conj()),
            structure: self.structure,
        }
    }

    pub fn matmul(&self, rhs: &SystemOperator) -> SystemOperator {
        let structure = match (self.structure, rhs.structure) {
            (Some(a), Some(b)) if a == b => Some(a),
            (Some(Structure::Diagonal), Some(Structure::QubitDiagonal))
            | (Some(Structure::QubitDiagonal), Some(Structure::Diagonal)) => {
                Some(Structure::QubitDiagonal)
            }
            _ => None,
        };
        SystemOperator {
            entries: self.entries.dot(&rhs.entries),
            structure,
        }
    }

    pub fn add(&self, rhs: &SystemOperator) -> SystemOperator {
        let structure = if self.structure == rhs.structure {
            self.structure
        } else {
            None
        };
        SystemOperator {
            entries: &self.entries + &rhs.entries,
            structure,
        }
    }

    pub fn scale(&self, s: C64) -> SystemOperator {
        SystemOperator {
            entries: self.entries.mapv(|v| v * s),
            structure: self.structure,
        }
    }

    pub fn apply(&self, v: &Array1<C64>) -> Array1<C64> {
        self.entries.dot(v)
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, psi: &SystemState) -> C64 {
        let av = self.apply(&psi.amplitudes);
        psi.amplitudes
            .iter()
            .zip(av.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `Tr(Aρ)`.
    pub fn expectation_rho(&self, rho: &DensityMatrix) -> C64 {
        let a = &self.entries;
        let r = &rho.entries;
        let n = a.nrows();
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += a[[i, k]] * r[[k, i]];
            }
        }
        acc
    }

    pub fn trace(&self) -> C64 {
        self.entries.diag().sum()
    }

    pub fn max_diff(&self, other: &SystemOperator) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn commutator_norm(&self, other: &SystemOperator) -> f64 {
        let ab = self.entries.dot(&other.entries);
        let ba = other.entries.dot(&self.entries);
        ab.iter()
            .zip(ba.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.max_diff(&self.adjoint())
    }
}

/// Cavity annihilation operator `b` (dim × dim).
pub fn annihilation(cfg: FockSpaceConfig) -> Array2<C64> {
    let d = cfg.dim;
    let mut b = Array2::zeros((d, d));
    for n in 1..d {
        b[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    b
}

/// `n_C` on the cavity.
pub fn number_operator(cfg: FockSpaceConfig) -> SystemOperator {
    let diag: Vec<C64> = (0..cfg.dim).map(|n| C64::new(n as f64, 0.0)).collect();
    SystemOperator::diagonal(&diag)
}

/// `A_q ⊗ B_c` on the joint space.
pub fn kron(q: &QubitMatrix, c: &Array2<C64>) -> Array2<C64> {
    let d = c.nrows();
    let mut out = Array2::zeros((2 * d, 2 * d));
    for a in 0..2 {
        for b in 0..2 {
            let s = q.get(a, b);
            if s == ZERO {
                continue;
            }
            for i in 0..d {
                for j in 0..d {
                    out[[a * d + i, b * d + j]] = s * c[[i, j]];
                }
            }
        }
    }
    out
}

/// `A_q ⊗ I`.
pub fn embed_qubit(q: &QubitMatrix, cfg: FockSpaceConfig) -> SystemOperator {
    SystemOperator::from_blocks(&vec![*q; cfg.dim])
}

/// `I ⊗ B_c`.
pub fn embed_cavity(c: &SystemOperator) -> SystemOperator {
    let structure = match c.structure {
        Some(Structure::Diagonal) => Some(Structure::Diagonal),
        Some(_) => Some(Structure::Dense),
        None => None,
    };
    SystemOperator {
        entries: kron(&QubitMatrix::identity(), &c.entries),
        structure,
    }
}

/// Coherent state `|α = √n̄⟩`, renormalized after truncation.
pub fn coherent_state(nbar: f64, cfg: FockSpaceConfig) -> Result<Array1<C64>> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return invalid(format!(
            "mean photon number must be finite and >= 0, got {nbar}"
        ));
    }
    let d = cfg.dim;
    let mut c = Array1::zeros(d);
    if nbar == 0.0 {
        c[0] = ONE;
        return Ok(c);
    }
    let ln_alpha = 0.5 * nbar.ln();
    let mut ln_fact = 0.0;
    let mut kept = 0.0;
    for n in 0..d {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        let amp = (-0.5 * nbar + n as f64 * ln_alpha - 0.5 * ln_fact).exp();
        kept += amp * amp;
        c[n] = C64::new(amp, 0.0);
    }
    let lost = (1.0 - kept).max(0.0);
    if lost > COHERENT_TRUNCATION_LIMIT {
        return Err(Error::Truncation {
            lost,
            limit: COHERENT_TRUNCATION_LIMIT,
        });
    }
    let s = kept.sqrt();
    c.mapv_inplace(|v| v / s);
    Ok(c)
}

fn check_rk(r: u32, k: u32) -> Result<()> {
    if r == 0 {
        return invalid("modulus r must be positive");
    }
    if k >= r {
        return invalid(format!("residue k = {k} must satisfy 0 <= k < r = {r}"));
    }
    Ok(())
}

/// Indicator of `n ≡ k (mod r)` over `0..dim`.
pub fn residue_mask(r: u32, k: u32, dim: usize) -> Vec<bool> {
    (0..dim).map(|n| n as u64 % r as u64 == k as u64).collect()
}

/// Cavity projector onto `S_{r,k}`.
pub fn parity_projector(r: u32, k: u32, cfg: FockSpaceConfig) -> Result<SystemOperator> {
    check_rk(r, k)?;
    let diag: Vec<C64> = residue_mask(r, k, cfg.dim)
        .into_iter()
        .map(|b| if b { ONE } else { ZERO })
        .collect();
    Ok(SystemOperator::diagonal(&diag))
}

/// Normalized projection of `|α⟩` onto `S_{r,0}` and its weight `N_r`.
pub fn cat_reference(r: u32, nbar: f64, cfg: FockSpaceConfig) -> Result<(Array1<C64>, f64)> {
    check_rk(r, 0)?;
    let alpha = coherent_state(nbar, cfg)?;
    let mut out = Array1::zeros(cfg.dim);
    let mut weight = 0.0;
    for (n, keep) in residue_mask(r, 0, cfg.dim).into_iter().enumerate() {
        if keep {
            out[n] = alpha[n];
            weight += alpha[n].norm_sqr();
        }
    }
    if !(weight > 1e-300) {
        return Err(Error::DegenerateInput(format!(
            "coherent state with nbar = {nbar} has no weight on n = 0 mod {r}"
        )));
    }
    let s = weight.sqrt();
    out.mapv_inplace(|v| v / s);
    Ok((out, weight))
}

/// `p(n)` of a cavity vector.
pub fn photon_distribution_cavity(c: &Array1<C64>) -> Vec<f64> {
    c.iter().map(|a| a.norm_sqr()).collect()
}

/// `p(n) = Σ_q |⟨q,n|ψ⟩|²`.
pub fn photon_distribution(psi: &SystemState) -> Vec<f64> {
    let d = psi.dim;
    let a = &psi.amplitudes;
    (0..d)
        .map(|n| a[n].norm_sqr() + a[d + n].norm_sqr())
        .collect()
}

pub fn photon_distribution_rho(rho: &DensityMatrix) -> Vec<f64> {
    let d = rho.dim;
    let e = &rho.entries;
    (0..d)
        .map(|n| e[[n, n]].re + e[[d + n, d + n]].re)
        .collect()
}

/// `Tr_q ρ`.
pub fn partial_trace_qubit(rho: &DensityMatrix) -> Array2<C64> {
    let d = rho.dim;
    let e = &rho.entries;
    Array2::from_shape_fn((d, d), |(i, j)| e[[i, j]] + e[[d + i, d + j]])
}

/// `√⟨φ|ρ|φ⟩` for a cavity density matrix.
pub fn fidelity(rho_c: &Array2<C64>, phi: &Array1<C64>) -> f64 {
    let rp = rho_c.dot(phi);
    let v: C64 = phi.iter().zip(rp.iter()).map(|(a, b)| a.conj() * b).sum();
    v.re.max(0.0).sqrt()
}

/// `√⟨φ|Tr_q |ψ⟩⟨ψ| |φ⟩` for a normalized joint state.
pub fn fidelity_state(psi: &SystemState, phi: &Array1<C64>) -> f64 {
    let d = psi.dim;
    let a = &psi.amplitudes;
    let mut acc = 0.0;
    for q in 0..2 {
        let ov: C64 = (0..d).map(|n| phi[n].conj() * a[q * d + n]).sum();
        acc += ov.norm_sqr();
    }
    acc.sqrt()
}

/// Applies one 2×2 block per photon number in place.
pub fn apply_blocks(blocks: &[QubitMatrix], psi: &mut Array1<C64>) {
    let d = blocks.len();
    debug_assert_eq!(psi.len(), 2 * d);
    for (n, b) in blocks.iter().enumerate() {
        let [a0, a1] = b.apply([psi[n], psi[d + n]]);
        psi[n] = a0;
        psi[d + n] = a1;
    }
}

/// `p(dim − 1)`, the population of the top retained level.
pub fn leaked_weight(p: &[f64]) -> f64 {
    p.last().copied().unwrap_or(0.0)
}
