// SPDX-License-Identifier: Apache-2.0

//! Single-qubit QSP algebra.
//!
//! The QSP sequence with phases `Φ = (Φ_0, …, Φ_d)` and signal angle `θ` is
//! `e^{iΦ_0 Z} Π_{j=1..d} [e^{iθX} e^{iΦ_j Z}]`. For palindromic phases the
//! conjugated protocol `U^R = -i·X·H·U·H` has a real `⟨0|U^R|0⟩` for every
//! `θ`; that matrix element is the filter response used everywhere else.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Global phase `s` in `U^R = s·X·H·U·H`.
///
/// With `Σ Φ = π/2` and an even number of signal applications the bare
/// sequence collapses to `iZ` at `θ ∈ {0, π}`, and `X·H·iZ·H = i·I`; `s = -i`
/// is the unique choice that makes the boundary response `+1`.
pub const REAL_PROTOCOL_PHASE: C64 = C64::new(0.0, -1.0);

/// Dense 2×2 complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitMatrix {
    pub entries: [C64; 4],
}

impl QubitMatrix {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Self {
            entries: [a, b, c, d],
        }
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn pauli_x() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    pub const fn pauli_y() -> Self {
        Self::new(ZERO, C64::new(0.0, -1.0), I, ZERO)
    }

    pub const fn pauli_z() -> Self {
        Self::new(ONE, ZERO, ZERO, C64::new(-1.0, 0.0))
    }

    pub fn hadamard() -> Self {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        Self::new(h, h, h, -h)
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Self::new(a, ZERO, ZERO, d)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[2 * row + col]
    }

    pub fn scale(&self, s: C64) -> Self {
        let e = self.entries;
        Self::new(s * e[0], s * e[1], s * e[2], s * e[3])
    }

    pub fn adjoint(&self) -> Self {
        let e = self.entries;
        Self::new(e[0].conj(), e[2].conj(), e[1].conj(), e[3].conj())
    }

    pub fn det(&self) -> C64 {
        let e = self.entries;
        e[0] * e[3] - e[1] * e[2]
    }

    /// Max-entry distance to another matrix.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `‖U†U − I‖_max`.
    pub fn unitarity_error(&self) -> f64 {
        (self.adjoint() * *self).max_diff(&Self::identity())
    }

    #[inline]
    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let e = self.entries;
        [e[0] * v[0] + e[1] * v[1], e[2] * v[0] + e[3] * v[1]]
    }

    /// `exp(a0·I + ax·X + ay·Y + az·Z)` for complex coefficients.
    pub fn exp_pauli(a0: C64, ax: C64, ay: C64, az: C64) -> Self {
        let s2 = ax * ax + ay * ay + az * az;
        let s = s2.sqrt();
        let (ch, sh_over_s) = if s.norm() < 1e-4 {
            // Taylor: cosh s = 1 + s²/2 + s⁴/24, sinh(s)/s = 1 + s²/6 + s⁴/120
            (
                ONE + s2 / 2.0 + s2 * s2 / 24.0,
                ONE + s2 / 6.0 + s2 * s2 / 120.0,
            )
        } else {
            (s.cosh(), s.sinh() / s)
        };
        let pre = a0.exp();
        let d = pre * ch;
        let k = pre * sh_over_s;
        Self::new(d + k * az, k * (ax - I * ay), k * (ax + I * ay), d - k * az)
    }
}

impl Mul for QubitMatrix {
    type Output = QubitMatrix;

    fn mul(self, rhs: QubitMatrix) -> QubitMatrix {
        let a = self.entries;
        let b = rhs.entries;
        QubitMatrix::new(
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        )
    }
}

/// Ordered processing angles (radians).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSequence {
    pub angles: Vec<f64>,
    /// True iff `angles` is a palindrome (bitwise).
    pub symmetric: bool,
    /// Modulus of the filter this sequence targets, if any.
    pub modulus_r: Option<u32>,
}

impl PhaseSequence {
    /// Wraps `angles`, detecting palindromic structure exactly.
    pub fn new(angles: Vec<f64>) -> Self {
        let symmetric = is_palindrome(&angles);
        Self {
            angles,
            symmetric,
            modulus_r: None,
        }
    }

    /// Builds a palindrome from its first half. `total_len` angles in all.
    pub fn from_half(half: &[f64], total_len: usize) -> Self {
        assert_eq!(half.len(), total_len.div_ceil(2), "half length mismatch");
        let mut angles = Vec::with_capacity(total_len);
        angles.extend_from_slice(half);
        let mirror = total_len - half.len();
        angles.extend(half[..mirror].iter().rev());
        Self {
            angles,
            symmetric: true,
            modulus_r: None,
        }
    }

    pub fn with_modulus(mut self, r: u32) -> Self {
        self.modulus_r = Some(r);
        self
    }

    /// Number of signal applications `d`.
    pub fn depth(&self) -> usize {
        self.angles.len().saturating_sub(1)
    }

    /// Independent parameters of a symmetric sequence.
    pub fn half(&self) -> &[f64] {
        &self.angles[..self.angles.len().div_ceil(2)]
    }

    pub fn sum(&self) -> f64 {
        self.angles.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

fn is_palindrome(a: &[f64]) -> bool {
    let n = a.len();
    (0..n / 2).all(|j| a[j].to_bits() == a[n - 1 - j].to_bits())
}

fn check_finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        invalid(format!("{what} must be finite, got {x}"))
    }
}

/// `exp(iθX)`.
pub fn rot_x(theta: f64) -> Result<QubitMatrix> {
    check_finite(theta, "theta")?;
    Ok(rot_x_unchecked(theta))
}

/// `exp(iφZ)`.
pub fn rot_z(phi: f64) -> Result<QubitMatrix> {
    check_finite(phi, "phi")?;
    Ok(rot_z_unchecked(phi))
}

#[inline]
pub(crate) fn rot_x_unchecked(theta: f64) -> QubitMatrix {
    let (s, c) = theta.sin_cos();
    let c = C64::new(c, 0.0);
    let is = C64::new(0.0, s);
    QubitMatrix::new(c, is, is, c)
}

#[inline]
pub(crate) fn rot_z_unchecked(phi: f64) -> QubitMatrix {
    QubitMatrix::diag(C64::from_polar(1.0, phi), C64::from_polar(1.0, -phi))
}

/// `e^{iΦ_0 Z} Π_{j=1..d} [e^{iθX} e^{iΦ_j Z}]`.
pub fn compose_qsp(phases: &PhaseSequence, theta: f64) -> Result<QubitMatrix> {
    if phases.is_empty() {
        return invalid("phase sequence is empty");
    }
    check_finite(theta, "theta")?;
    for &a in &phases.angles {
        check_finite(a, "phase")?;
    }
    let signal = rot_x_unchecked(theta);
    let mut u = rot_z_unchecked(phases.angles[0]);
    for &phi in &phases.angles[1..] {
        u = u * signal * rot_z_unchecked(phi);
    }
    Ok(u)
}

/// `U^R = s·X·H·U_Φ(θ)·H` with `s` = [`REAL_PROTOCOL_PHASE`].
pub fn real_protocol(phases: &PhaseSequence, theta: f64) -> Result<QubitMatrix> {
    if !phases.symmetric {
        return invalid("real protocol requires a symmetric phase sequence");
    }
    let u = compose_qsp(phases, theta)?;
    let h = QubitMatrix::hadamard();
    Ok((QubitMatrix::pauli_x() * h * u * h).scale(REAL_PROTOCOL_PHASE))
}

/// Signal angle `θ_m = (π/r)(m − k)`.
pub fn signal_angle(m: i64, r: u32, k: i64) -> f64 {
    std::f64::consts::PI / r as f64 * (m - k) as f64
}

/// Response functions `(⟨0|U^R|0⟩, ⟨1|U^R|0⟩)` at `θ = θ_m^{r,k}`.
pub fn response(m: i64, r: u32, k: i64, phases: &PhaseSequence) -> Result<(C64, C64)> {
    if r < 2 {
        return invalid(format!("modulus r must be >= 2, got {r}"));
    }
    let u = real_protocol(phases, signal_angle(m, r, k))?;
    Ok((u.get(0, 0), u.get(1, 0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn close(a: &QubitMatrix, b: &QubitMatrix) -> bool {
        a.max_diff(b) < 1e-14
    }

    #[test]
    fn rot_x_examples() {
        assert!(close(&rot_x(0.0).unwrap(), &QubitMatrix::identity()));
        assert!(close(
            &rot_x(PI).unwrap(),
            &QubitMatrix::identity().scale(-ONE)
        ));
        assert!(close(
            &rot_x(FRAC_PI_2).unwrap(),
            &QubitMatrix::pauli_x().scale(I)
        ));
        assert!(rot_x(f64::NAN).is_err());
        assert!(rot_x(f64::INFINITY).is_err());
    }

    #[test]
    fn rot_z_examples() {
        assert!(close(&rot_z(0.0).unwrap(), &QubitMatrix::identity()));
        assert!(close(
            &rot_z(FRAC_PI_2).unwrap(),
            &QubitMatrix::pauli_z().scale(I)
        ));
        let pair = rot_z(-FRAC_PI_4).unwrap() * rot_z(FRAC_PI_4).unwrap();
        assert!(close(&pair, &QubitMatrix::identity()));
        assert!(rot_z(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn compose_examples() {
        let p = PhaseSequence::new(vec![FRAC_PI_4, FRAC_PI_4]);
        let u = compose_qsp(&p, 0.0).unwrap();
        assert!(close(&u, &QubitMatrix::pauli_z().scale(I)));

        let p = PhaseSequence::new(vec![0.0, 0.0]);
        assert!(close(&compose_qsp(&p, 0.3).unwrap(), &rot_x(0.3).unwrap()));

        assert!(compose_qsp(&PhaseSequence::new(vec![]), 0.1).is_err());
    }

    #[test]
    fn real_protocol_rejects_asymmetric() {
        let p = PhaseSequence::new(vec![0.1, 0.2, 0.3]);
        assert!(!p.symmetric);
        assert!(real_protocol(&p, 0.4).is_err());
    }

    #[test]
    fn global_phase_choice_gives_plus_one_boundary_response() {
        // Σ Φ = π/2 with an even signal count: compose_qsp(θ=0) = iZ.
        let p = PhaseSequence::from_half(&[0.3, FRAC_PI_2 - 0.6], 3);
        let u = real_protocol(&p, 0.0).unwrap();
        assert!((u.get(0, 0) - ONE).norm() < 1e-14);
        assert!(u.get(1, 0).norm() < 1e-14);
    }

    #[test]
    fn exp_pauli_matches_rotations() {
        let t = 0.37;
        let a = QubitMatrix::exp_pauli(ZERO, C64::new(0.0, t), ZERO, ZERO);
        assert!(a.max_diff(&rot_x(t).unwrap()) < 1e-15);
        let b = QubitMatrix::exp_pauli(ZERO, ZERO, ZERO, C64::new(0.0, t));
        assert!(b.max_diff(&rot_z(t).unwrap()) < 1e-15);
        // small-argument branch against a second-order series
        let ax = C64::new(0.0, 1e-6);
        let az = C64::new(-2e-6, 0.0);
        let c = QubitMatrix::exp_pauli(ZERO, ax, ZERO, az);
        let gen = QubitMatrix::new(az, ax, ax, -az);
        let sq = gen * gen;
        let series = QubitMatrix::new(
            ONE + gen.entries[0] + sq.entries[0] / 2.0,
            gen.entries[1] + sq.entries[1] / 2.0,
            gen.entries[2] + sq.entries[2] / 2.0,
            ONE + gen.entries[3] + sq.entries[3] / 2.0,
        );
        assert!(c.max_diff(&series) < 1e-15);
    }

    #[test]
    fn from_half_odd_and_even_lengths() {
        let p = PhaseSequence::from_half(&[1.0, 2.0], 3);
        assert_eq!(p.angles, vec![1.0, 2.0, 1.0]);
        let q = PhaseSequence::from_half(&[1.0, 2.0], 4);
        assert_eq!(q.angles, vec![1.0, 2.0, 2.0, 1.0]);
        assert!(PhaseSequence::new(q.angles.clone()).symmetric);
    }
}
