// SPDX-License-Identifier: Apache-2.0

//! Phase sequences for the mod-r step filter: closed-form and optimized.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::qubit::{real_protocol, PhaseSequence};

/// `G_r`: 1 when `m − k ≡ 0 (mod r)`, else 0.
pub fn target_g(r: u32, m_minus_k: i64) -> Result<u8> {
    if r < 2 {
        return invalid(format!("modulus r must be >= 2, got {r}"));
    }
    Ok(u8::from(m_minus_k.rem_euclid(r as i64) == 0))
}

/// Number of signal applications used by [`analytic_phases`] for modulus `r`.
pub fn analytic_depth(r: u32) -> usize {
    2 * (r as usize).div_ceil(2)
}

/// Closed-form symmetric phases approximating `G_r`.
///
/// The bulk has `2⌈r/2⌉ − 1` entries sampled from
/// `(4/(πr))·[1 + ½cos(4x/r)]` on integer points `x` centred at zero; the two
/// edge phases absorb the remainder so that the angles sum to `π/2`.
pub fn analytic_phases(r: u32) -> Result<PhaseSequence> {
    if r < 2 {
        return invalid(format!("modulus r must be >= 2, got {r}"));
    }
    let c = (r as usize).div_ceil(2);
    let rf = r as f64;
    let bulk_at = |x: f64| 4.0 / (PI * rf) * (1.0 + 0.5 * (4.0 * x / rf).cos());
    // first half of the bulk including the centre (x = 0)
    let half_bulk: Vec<f64> = (0..c).map(|j| bulk_at(j as f64 - (c - 1) as f64)).collect();
    let bulk_sum: f64 = 2.0 * half_bulk[..c - 1].iter().sum::<f64>() + half_bulk[c - 1];
    let edge = 0.5 * (FRAC_PI_2 - bulk_sum);

    let mut half = Vec::with_capacity(c + 1);
    half.push(edge);
    half.extend_from_slice(&half_bulk);
    Ok(PhaseSequence::from_half(&half, 2 * c + 1).with_modulus(r))
}

/// Chebyshev nodes of order `d̃ = ⌈(d+1)/2⌉`, keeping `x ≥ 0`.
pub fn cost_nodes(d: usize) -> Vec<f64> {
    let dt = (d + 1).div_ceil(2);
    (1..=dt)
        .map(|j| (PI * (2 * j - 1) as f64 / (2 * dt) as f64).cos())
        .filter(|&x| x >= 0.0)
        .collect()
}

/// Filter target at a node: `G_r` of the nearest grid point `θ_m`.
fn node_target(r: u32, x: f64) -> f64 {
    let u = r as f64 * x.acos() / PI;
    let frac = u - u.floor();
    if (frac - 0.5).abs() < 1e-12 {
        return 0.0;
    }
    let m = u.round() as i64;
    f64::from(u8::from(m.rem_euclid(r as i64) == 0))
}

/// Least-squares mismatch between `⟨0|U^R|0⟩` and `G_r` on the cost nodes.
pub fn cost(phases: &PhaseSequence, r: u32) -> Result<f64> {
    if r < 2 {
        return invalid(format!("modulus r must be >= 2, got {r}"));
    }
    let d = phases.depth();
    let dt = (d + 1).div_ceil(2) as f64;
    let mut acc = 0.0;
    for x in cost_nodes(d) {
        let u = real_protocol(phases, x.acos())?;
        let diff = u.get(0, 0).re - node_target(r, x);
        acc += diff * diff;
    }
    Ok(acc / dt)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub phases: PhaseSequence,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grid_size: usize,
    /// Some parameter sits on the edge of the symmetric domain.
    pub boundary_active: bool,
}

/// Bounds of the symmetric phase domain for the independent half.
fn domain_bounds(total_len: usize) -> Vec<(f64, f64)> {
    let d = total_len - 1;
    let half_len = total_len.div_ceil(2);
    // half-open upper edges
    let top = |b: f64| b - 1e-12;
    (0..half_len)
        .map(|j| {
            if d.is_multiple_of(2) && j == half_len - 1 {
                (-PI, top(PI))
            } else {
                (-FRAC_PI_2, top(FRAC_PI_2))
            }
        })
        .collect()
}

fn clamp(p: &mut [f64], bounds: &[(f64, f64)]) -> bool {
    let mut active = false;
    for (v, &(lo, hi)) in p.iter_mut().zip(bounds) {
        if *v <= lo {
            *v = lo;
            active = true;
        } else if *v >= hi {
            *v = hi;
            active = true;
        }
    }
    active
}

struct Objective {
    r: u32,
    total_len: usize,
}

impl Objective {
    fn eval(&self, half: &[f64]) -> Result<f64> {
        cost(&PhaseSequence::from_half(half, self.total_len), self.r)
    }

    fn grad(&self, half: &[f64]) -> Result<Vec<f64>> {
        const H: f64 = 1e-6;
        let mut g = vec![0.0; half.len()];
        let mut p = half.to_vec();
        for i in 0..half.len() {
            let v = p[i];
            p[i] = v + H;
            let fp = self.eval(&p)?;
            p[i] = v - H;
            let fm = self.eval(&p)?;
            p[i] = v;
            g[i] = (fp - fm) / (2.0 * H);
        }
        Ok(g)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Quasi-Newton (BFGS) minimisation of [`cost`] over symmetric sequences of
/// depth `d`, starting from `init`.
pub fn optimize_phases(
    r: u32,
    d: usize,
    init: &PhaseSequence,
    tol: f64,
    max_iter: usize,
) -> Result<SynthesisReport> {
    if d < 2 {
        return invalid(format!("depth must be >= 2, got {d}"));
    }
    if !init.symmetric {
        return invalid("initial phases must be symmetric");
    }
    if init.len() != d + 1 {
        return invalid(format!(
            "initial phases have {} angles, expected {}",
            init.len(),
            d + 1
        ));
    }
    if !(tol >= 0.0) {
        return invalid("tolerance must be non-negative");
    }
    let total_len = d + 1;
    let obj = Objective { r, total_len };
    let bounds = domain_bounds(total_len);
    let mut p = init.half().to_vec();
    let mut boundary_active = clamp(&mut p, &bounds);
    let mut f = obj.eval(&p)?;
    let mut g = obj.grad(&p)?;
    let n = p.len();
    let mut hinv = identity(n);
    let mut iterations = 0;

    while iterations < max_iter && f > tol {
        let mut dir = mat_vec(&hinv, &g);
        dir.iter_mut().for_each(|v| *v = -*v);
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            hinv = identity(n);
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        if slope == 0.0 {
            break;
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let mut trial: Vec<f64> = p.iter().zip(&dir).map(|(a, b)| a + alpha * b).collect();
            let hit = clamp(&mut trial, &bounds);
            let ft = obj.eval(&trial)?;
            if ft < f && ft <= f + 1e-4 * alpha * slope.min(0.0) {
                accepted = Some((trial, ft, hit));
                break;
            }
            // accept plain decrease once the step is tiny
            if ft < f && alpha < 1e-6 {
                accepted = Some((trial, ft, hit));
                break;
            }
            alpha *= 0.5;
        }
        let Some((p_new, f_new, hit)) = accepted else {
            break;
        };
        iterations += 1;
        let g_new = obj.grad(&p_new)?;
        let s: Vec<f64> = p_new.iter().zip(&p).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 {
            bfgs_update(&mut hinv, &s, &y, sy);
        }
        p = p_new;
        f = f_new;
        g = g_new;
        boundary_active = hit;
    }

    let phases = PhaseSequence::from_half(&p, total_len).with_modulus(r);
    Ok(SynthesisReport {
        phases,
        cost: f,
        iterations,
        converged: f <= tol,
        grid_size: cost_nodes(d).len(),
        boundary_active,
    })
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect()
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let hy = mat_vec(h, y);
    let yhy = dot(y, &hy);
    let rho = 1.0 / sy;
    for i in 0..n {
        for j in 0..n {
            h[i][j] += (1.0 + yhy * rho) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PhaseRow {
    index: usize,
    angle_rad: f64,
    /// Running sum, ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cumulative_rad: Option<f64>,
}

/// JSON form of a phase table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseTable {
    #[serde(default)]
    pub r: Option<u32>,
    pub angles: Vec<f64>,
}

/// Writes `index,angle_rad,cumulative_rad` rows; the last running sum is
/// the total phase.
pub fn write_phase_csv<W: Write>(phases: &PhaseSequence, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut acc = 0.0;
    for (index, &angle_rad) in phases.angles.iter().enumerate() {
        acc += angle_rad;
        wr.serialize(PhaseRow {
            index,
            angle_rad,
            cumulative_rad: Some(acc),
        })?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_phase_json<W: Write>(phases: &PhaseSequence, w: W) -> Result<()> {
    let table = PhaseTable {
        r: phases.modulus_r,
        angles: phases.angles.clone(),
    };
    serde_json::to_writer_pretty(w, &table)?;
    Ok(())
}

fn validate_angles(angles: Vec<f64>, r: Option<u32>) -> Result<PhaseSequence> {
    if angles.is_empty() {
        return Err(Error::Parse("phase table has no rows".into()));
    }
    if let Some(bad) = angles.iter().find(|a| !a.is_finite()) {
        return Err(Error::Parse(format!("non-finite angle {bad}")));
    }
    if let Some(r) = r {
        if r < 2 {
            return Err(Error::Parse(format!("modulus r must be >= 2, got {r}")));
        }
    }
    let mut seq = PhaseSequence::new(angles);
    seq.modulus_r = r;
    Ok(seq)
}

/// Parses a CSV phase table with header `index,angle_rad` and an optional
/// `cumulative_rad` column; indices must run `0, 1, 2, …` in order. Lines
/// starting with `#` are skipped.
pub fn read_phase_csv<R: Read>(rd: R) -> Result<PhaseSequence> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(rd);
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .clone();
    let ok = match headers.len() {
        2 => true,
        3 => &headers[2] == "cumulative_rad",
        _ => false,
    };
    if !ok || &headers[0] != "index" || &headers[1] != "angle_rad" {
        return Err(Error::Parse(
            "expected header `index,angle_rad[,cumulative_rad]`".into(),
        ));
    }
    let mut angles = Vec::new();
    for row in reader.deserialize::<PhaseRow>() {
        let row = row.map_err(|e| Error::Parse(e.to_string()))?;
        if row.index != angles.len() {
            return Err(Error::Parse(format!(
                "row index {} out of sequence (expected {})",
                row.index,
                angles.len()
            )));
        }
        angles.push(row.angle_rad);
    }
    validate_angles(angles, None)
}

pub fn read_phase_json(text: &str) -> Result<PhaseSequence> {
    let table: PhaseTable = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    validate_angles(table.angles, table.r)
}
