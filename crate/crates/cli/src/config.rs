// SPDX-License-Identifier: Apache-2.0

//! Run configuration: a JSON document, overridden by command-line flags.

use std::path::{Path, PathBuf};

use gparity::device::{Channel, DeviceParams};
use gparity::dynamics::{Engine, DEFAULT_DT_MAX};
use gparity::schedule::PhaseErrorModel;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Named parameter set or an inline one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeviceSpec {
    Preset(String),
    Inline(DeviceParams),
}

impl DeviceSpec {
    pub fn resolve(&self) -> CliResult<DeviceParams> {
        let p = match self {
            DeviceSpec::Preset(name) => match name.as_str() {
                "default" => DeviceParams::preset(),
                "noiseless" => DeviceParams::preset().noiseless(),
                other => {
                    return Err(CliError::Config(format!(
                        "unknown device preset `{other}` (expected `default` or `noiseless`)"
                    )))
                }
            },
            DeviceSpec::Inline(p) => p.clone(),
        };
        p.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(p)
    }
}

/// Every key is optional; unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub r: Option<u32>,
    pub k: Option<u32>,
    pub s: Option<usize>,
    pub nbar: Option<f64>,
    pub engine: Option<Engine>,
    pub seed: Option<u64>,
    pub device: Option<DeviceSpec>,
    pub trajectories: Option<usize>,
    pub dt_max: Option<f64>,
    pub dim: Option<usize>,
    pub no_kerr: Option<bool>,
    pub phase_error: Option<PhaseErrorModel>,
    pub phases_file: Option<PathBuf>,
    pub channels: Option<Vec<Channel>>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub m_min: Option<i64>,
    pub m_max: Option<i64>,
    pub r_min: Option<u32>,
    pub r_max: Option<u32>,
    pub optimize_depth: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub sweep_axis: Option<SweepAxis>,
    pub sweep_values: Option<Vec<f64>>,
    pub nbar_values: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    R,
    Nbar,
}

impl std::str::FromStr for SweepAxis {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "r" => Ok(SweepAxis::R),
            "nbar" => Ok(SweepAxis::Nbar),
            other => Err(CliError::Usage(format!("unknown sweep axis `{other}`"))),
        }
    }
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn merge(mut self, other: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            r,
            k,
            s,
            nbar,
            engine,
            seed,
            device,
            trajectories,
            dt_max,
            dim,
            no_kerr,
            phase_error,
            phases_file,
            channels,
            jobs,
            out,
            m_min,
            m_max,
            r_min,
            r_max,
            optimize_depth,
            tol,
            max_iter,
            sweep_axis,
            sweep_values,
            nbar_values
        );
        self
    }

    /// Fills defaults and checks ranges.
    pub fn resolve(self) -> CliResult<Resolved> {
        let bad = |m: String| Err(CliError::Config(m));
        let device_spec = self.device.unwrap_or(DeviceSpec::Preset("default".into()));
        let mut device = device_spec.resolve()?;
        let no_kerr = self.no_kerr.unwrap_or(false);
        if no_kerr {
            // drops the qubit-state dependent Kerr only
            device.eta = 0.0;
        }
        let r = self.r.unwrap_or(7);
        let k = self.k.unwrap_or(0);
        let s = self.s.unwrap_or(3);
        let nbar = self.nbar.unwrap_or(50.0);
        let trajectories = self.trajectories.unwrap_or(4000);
        let dt_max = self.dt_max.unwrap_or(DEFAULT_DT_MAX);
        let jobs = self.jobs.unwrap_or(0);
        if r < 2 {
            return bad(format!("r must be >= 2, got {r}"));
        }
        if k >= r {
            return bad(format!("k must be below r, got k = {k}, r = {r}"));
        }
        if s == 0 {
            return bad("s must be >= 1".into());
        }
        if !(nbar > 0.0 && nbar.is_finite()) {
            return bad(format!("nbar must be positive, got {nbar}"));
        }
        if trajectories == 0 {
            return bad("trajectories must be >= 1".into());
        }
        if !(dt_max > 0.0 && dt_max.is_finite()) {
            return bad(format!("dt_max must be positive, got {dt_max}"));
        }
        if let Some(d) = self.dim {
            if !(4..=4096).contains(&d) {
                return bad(format!("dim must lie in 4..=4096, got {d}"));
            }
        }
        let m_min = self.m_min.unwrap_or(0);
        let m_max = self.m_max.unwrap_or(2 * r as i64);
        if m_max < m_min {
            return bad(format!("m_max {m_max} < m_min {m_min}"));
        }
        let r_min = self.r_min.unwrap_or(2);
        let r_max = self.r_max.unwrap_or(60);
        if r_min < 2 || r_max < r_min {
            return bad(format!("bad modulus range {r_min}..={r_max}"));
        }
        let tol = self.tol.unwrap_or(1e-10);
        if !(tol >= 0.0) {
            return bad(format!("tol must be >= 0, got {tol}"));
        }
        Ok(Resolved {
            version: env!("CARGO_PKG_VERSION").to_string(),
            r,
            k,
            s,
            nbar,
            engine: self.engine.unwrap_or(Engine::Unitary),
            seed: self.seed.unwrap_or(0),
            device_spec,
            device,
            trajectories,
            dt_max,
            dim: self.dim,
            no_kerr,
            phase_error: self.phase_error.unwrap_or(PhaseErrorModel::WorstCase),
            phases_file: self.phases_file,
            channels: self.channels,
            jobs,
            out: self.out.unwrap_or_else(|| PathBuf::from(".")),
            m_min,
            m_max,
            r_min,
            r_max,
            optimize_depth: self.optimize_depth,
            tol,
            max_iter: self.max_iter.unwrap_or(500),
            sweep_axis: self.sweep_axis.unwrap_or(SweepAxis::R),
            sweep_values: self.sweep_values.unwrap_or_default(),
            nbar_values: self.nbar_values.unwrap_or_else(|| vec![10.0, 20.0, 30.0]),
        })
    }
}

/// Fully resolved configuration, echoed into every output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Resolved {
    pub version: String,
    pub r: u32,
    pub k: u32,
    pub s: usize,
    pub nbar: f64,
    pub engine: Engine,
    pub seed: u64,
    pub device_spec: DeviceSpec,
    pub device: DeviceParams,
    pub trajectories: usize,
    pub dt_max: f64,
    pub dim: Option<usize>,
    pub no_kerr: bool,
    pub phase_error: PhaseErrorModel,
    pub phases_file: Option<PathBuf>,
    pub channels: Option<Vec<Channel>>,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    pub out: PathBuf,
    pub m_min: i64,
    pub m_max: i64,
    pub r_min: u32,
    pub r_max: u32,
    pub optimize_depth: Option<usize>,
    pub tol: f64,
    pub max_iter: usize,
    pub sweep_axis: SweepAxis,
    pub sweep_values: Vec<f64>,
    pub nbar_values: Vec<f64>,
}
