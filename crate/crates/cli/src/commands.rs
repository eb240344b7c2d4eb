// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use gparity::device::{Channel, DeviceParams};
use gparity::dynamics::{
    build_setup, run_cat_experiment_on, Engine, ExperimentConfig, ExperimentResult,
};
use gparity::measurement::{delta_table, write_delta_csv};
use gparity::perturbation::{
    compare_with_full, perturbative_estimates, write_comparison_csv, ComparisonRow,
};
use gparity::synthesis::{analytic_depth, read_phase_csv, read_phase_json, write_phase_csv};
use gparity::{analytic_phases, optimize_phases, response, target_g, PhaseSequence};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Resolved, SweepAxis};
use crate::error::{CliError, CliResult};
use crate::output::Outputs;

fn load_phases(path: &Path) -> CliResult<PhaseSequence> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "csv") {
        read_phase_csv(text.as_bytes())
    } else {
        // plain table, or the `result` of a phases run
        read_phase_json(&text).or_else(|e| {
            let v: serde_json::Value = serde_json::from_str(&text).map_err(|_| e)?;
            let inner = v.get("result").and_then(|r| r.get("phases")).cloned();
            match inner {
                Some(p) => read_phase_json(&p.to_string()),
                None => Err(gparity::Error::Parse("no phase table found".into())),
            }
        })
    };
    parsed.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn phases_for(cfg: &Resolved, r: u32) -> CliResult<PhaseSequence> {
    match &cfg.phases_file {
        Some(p) => Ok(load_phases(p)?.with_modulus(r)),
        None => Ok(analytic_phases(r)?),
    }
}

#[derive(Serialize)]
struct PhasesOut {
    phases: gparity::synthesis::PhaseTable,
    depth: usize,
    sum: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    synthesis: Option<gparity::SynthesisReport>,
}

/// Symmetric starting point of a given depth, with total phase `π/2`.
fn flat_init(d: usize) -> PhaseSequence {
    PhaseSequence::new(vec![PI / (2.0 * (d + 1) as f64); d + 1])
}

pub fn cmd_phases(cfg: &Resolved, out: &mut Outputs) -> CliResult<()> {
    let r = cfg.r;
    let analytic = analytic_phases(r)?;
    let (phases, synthesis) = match cfg.optimize_depth {
        Some(d) => {
            let init = if d == analytic_depth(r) {
                analytic.clone()
            } else {
                flat_init(d)
            };
            let rep = optimize_phases(r, d, &init, cfg.tol, cfg.max_iter)?;
            (rep.phases.clone(), Some(rep))
        }
        None => (analytic, None),
    };
    let stem = format!("phases_r{r}");
    out.csv(&format!("{stem}.csv"), cfg, |w| {
        Ok(write_phase_csv(&phases, w)?)
    })?;
    let doc = PhasesOut {
        phases: gparity::synthesis::PhaseTable {
            r: Some(r),
            angles: phases.angles.clone(),
        },
        depth: phases.depth(),
        sum: phases.sum(),
        synthesis,
    };
    out.json(&format!("{stem}.json"), cfg, &doc)
}

#[derive(Serialize)]
struct ResponseRow {
    m: i64,
    theta: f64,
    re_r00: f64,
    im_r00: f64,
    re_r10: f64,
    im_r10: f64,
    target: u8,
}

pub fn cmd_response(cfg: &Resolved, out: &mut Outputs) -> CliResult<()> {
    let (r, k) = (cfg.r, cfg.k);
    let phases = phases_for(cfg, r)?;
    let mut rows = Vec::new();
    for m in cfg.m_min..=cfg.m_max {
        let (a, b) = response(m, r, k as i64, &phases)?;
        rows.push(ResponseRow {
            m,
            theta: PI / r as f64 * (m - k as i64) as f64,
            re_r00: a.re,
            im_r00: a.im,
            re_r10: b.re,
            im_r10: b.im,
            target: target_g(r, m - k as i64)?,
        });
    }
    let stem = format!("response_r{r}_k{k}");
    out.csv(&format!("{stem}.csv"), cfg, |w| {
        let mut wr = csv::Writer::from_writer(w);
        for row in &rows {
            wr.serialize(row).map_err(gparity::Error::from)?;
        }
        wr.flush()?;
        Ok(())
    })?;
    out.json(&format!("{stem}.json"), cfg, &rows)
}

pub fn cmd_delta(cfg: &Resolved, out: &mut Outputs) -> CliResult<()> {
    let rows = delta_table(cfg.r_min, cfg.r_max, cfg.k)?;
    let stem = format!("delta_r{}-{}_k{}", cfg.r_min, cfg.r_max, cfg.k);
    out.csv(&format!("{stem}.csv"), cfg, |w| {
        Ok(write_delta_csv(&rows, w)?)
    })?;
    out.json(&format!("{stem}.json"), cfg, &rows)
}

fn experiment_config(
    cfg: &Resolved,
    device: DeviceParams,
    r: u32,
    nbar: f64,
) -> CliResult<ExperimentConfig> {
    let mut c = ExperimentConfig::new(device, r, cfg.s, nbar, cfg.engine);
    c.seed = cfg.seed;
    c.dim = cfg.dim;
    c.trajectories = cfg.trajectories;
    c.dt_max = cfg.dt_max;
    c.phase_error = cfg.phase_error;
    c.channels = cfg.channels.clone();
    if cfg.phases_file.is_some() {
        c.phases = Some(phases_for(cfg, r)?);
    }
    Ok(c)
}

fn photon_csv(w: &mut dyn Write, dist: &[f64]) -> CliResult<()> {
    writeln!(w, "n,probability")?;
    for (n, p) in dist.iter().enumerate() {
        writeln!(w, "{n},{p:e}")?;
    }
    Ok(())
}

pub fn cmd_prepare(cfg: &Resolved, out: &mut Outputs) -> CliResult<ExperimentResult> {
    let c = experiment_config(cfg, cfg.device.clone(), cfg.r, cfg.nbar)?;
    let setup = build_setup(&c)?;
    let res = run_cat_experiment_on(&setup, &c)?;
    out.json("prepare.json", cfg, &res)?;
    out.csv("prepare_photon.csv", cfg, |w| {
        photon_csv(w, &res.photon_dist)
    })?;
    Ok(res)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub r: u32,
    pub nbar: f64,
    pub s: usize,
    pub engine: Engine,
    pub dim: usize,
    pub total_time: f64,
    pub p_succ: f64,
    pub p_succ_stderr: Option<f64>,
    pub fidelity: f64,
    pub fidelity_stderr: Option<f64>,
    pub fidelity_uncorrected: f64,
    pub p_pert: f64,
    pub f_pert: f64,
    pub f_naive: f64,
}

fn sweep_point(cfg: &Resolved, axis: SweepAxis, value: f64) -> CliResult<SweepRow> {
    let (r, nbar) = match axis {
        SweepAxis::R => {
            if value.fract() != 0.0 || value < 2.0 || value > u32::MAX as f64 {
                return Err(CliError::Config(format!(
                    "sweep value {value} is not a modulus r >= 2"
                )));
            }
            (value as u32, cfg.nbar)
        }
        SweepAxis::Nbar => (cfg.r, value),
    };
    let c = experiment_config(cfg, cfg.device.clone(), r, nbar)?;
    let setup = build_setup(&c)?;
    let res = run_cat_experiment_on(&setup, &c)?;
    let pert = perturbative_estimates(&setup.schedule, &setup.psi0, &setup.channels)?;
    Ok(SweepRow {
        axis,
        value,
        r,
        nbar,
        s: cfg.s,
        engine: cfg.engine,
        dim: res.dim,
        total_time: res.total_time,
        p_succ: res.p_succ,
        p_succ_stderr: res.p_succ_stderr,
        fidelity: res.fidelity,
        fidelity_stderr: res.fidelity_stderr,
        fidelity_uncorrected: res.fidelity_uncorrected,
        p_pert: pert.p_succ_pert,
        f_pert: pert.fidelity_pert,
        f_naive: pert.fidelity_naive,
    })
}

pub fn cmd_sweep(cfg: &Resolved, out: &mut Outputs) -> CliResult<Vec<SweepRow>> {
    let axis = cfg.sweep_axis;
    let values = if cfg.sweep_values.is_empty() {
        match axis {
            SweepAxis::R => (2..=14).map(f64::from).collect(),
            SweepAxis::Nbar => vec![10.0, 20.0, 30.0, 40.0, 50.0],
        }
    } else {
        cfg.sweep_values.clone()
    };
    let rows: Vec<CliResult<SweepRow>> = values
        .par_iter()
        .map(|&v| sweep_point(cfg, axis, v))
        .collect();
    let rows = rows.into_iter().collect::<CliResult<Vec<_>>>()?;
    let name = match axis {
        SweepAxis::R => "sweep_r",
        SweepAxis::Nbar => "sweep_nbar",
    };
    out.csv(&format!("{name}.csv"), cfg, |w| {
        let mut wr = csv::Writer::from_writer(w);
        for row in &rows {
            wr.serialize(row).map_err(gparity::Error::from)?;
        }
        wr.flush()?;
        Ok(())
    })?;
    out.json(&format!("{name}.json"), cfg, &rows)?;
    Ok(rows)
}

/// Channel sets compared one at a time and together.
pub const PERT_CHANNEL_SETS: [&[Channel]; 4] = [
    &[Channel::CavityDecay],
    &[Channel::QubitDecay],
    &[Channel::QubitDephasing],
    &[
        Channel::CavityDecay,
        Channel::QubitDecay,
        Channel::QubitDephasing,
    ],
];

/// Full-vs-perturbative table over `nbar_values`, with `r = ⌈√n̄⌉` and the
/// Kerr terms switched off.
pub fn cmd_pert_compare(cfg: &Resolved, out: &mut Outputs) -> CliResult<Vec<ComparisonRow>> {
    if cfg.engine == Engine::Unitary {
        return Err(CliError::Usage(
            "pert-compare needs a dissipative engine (--engine lindblad or trajectory)".into(),
        ));
    }
    let mut device = cfg.device.clone();
    device.k_c = 0.0;
    device.eta = 0.0;
    let mut points = Vec::new();
    for &nbar in &cfg.nbar_values {
        if !(nbar > 0.0 && nbar.is_finite()) {
            return Err(CliError::Config(format!(
                "nbar value {nbar} must be positive"
            )));
        }
        for set in PERT_CHANNEL_SETS {
            points.push((nbar, set));
        }
    }
    let rows: Vec<CliResult<ComparisonRow>> = points
        .par_iter()
        .map(|&(nbar, set)| {
            let r = (nbar.sqrt().ceil() as u32).max(2);
            let mut c = experiment_config(cfg, device.clone(), r, nbar)?;
            c.channels = Some(set.to_vec());
            let setup = build_setup(&c)?;
            let full = run_cat_experiment_on(&setup, &c)?;
            Ok(compare_with_full(
                &setup.schedule,
                &setup.psi0,
                &setup.channels,
                &full,
            )?)
        })
        .collect();
    let rows = rows.into_iter().collect::<CliResult<Vec<_>>>()?;
    out.csv("pert_compare.csv", cfg, |w| {
        Ok(write_comparison_csv(&rows, w)?)
    })?;
    out.json("pert_compare.json", cfg, &rows)?;
    Ok(rows)
}
