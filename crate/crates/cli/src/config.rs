//! Sectioned TOML configuration.
//!
//! Every key is optional; missing keys take the documented defaults and
//! unknown keys are rejected.
//!
//! ```toml
//! [initial_data]
//! epsilon = 0.02          # total charge Q
//! radius = 2.0            # spatial support radius
//! v_support_low = 2.0     # inner speed of the velocity shell, at least 2
//! v_support_high = 5.0    # outer speed of the velocity shell
//! kappa = 0.0             # angular tilt in (-1, 1)
//!
//! [grid]
//! r_max = 100.0
//! cells = 2000
//!
//! [integration]
//! dt = 0.05
//! t_final = 50.0
//! sigma = 1               # -1, 0 or 1
//! barrier = 0.5           # abort when some |V| drops below this
//!
//! [run]
//! particles = 100000
//! seed = 1
//! output_every = 20       # steps between snapshots
//! tangents = false        # carry flow Jacobians and report the charge identity
//! norm_power = 1
//! output_dir = "."
//!
//! [free_stream]
//! times = [5.0, 10.0, 20.0, 40.0]
//! samples = 801           # radii per snapshot
//! particles = 20000       # Monte Carlo sample for the charge identity
//! charge_time = 10.0
//!
//! [inequality]
//! p = [0, 2]
//! times = [1.0, 5.0, 10.0, 20.0, 40.0]
//! family = []             # member names; empty selects the whole family
//! tolerance = 1e-4        # relative tolerance of the right-hand side
//! level = 6               # Gauss nodes per dimension on the fine level
//! lhs_tolerance = 1e-6
//! gate_points = 64
//! ```

use crate::error::CliError;
use rvp_core::ineq::{family_member, ScanConfig};
use rvp_core::{InitialData, RadialGrid, SimConfig};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialDataSection {
    pub epsilon: f64,
    pub radius: f64,
    pub v_support_low: f64,
    pub v_support_high: f64,
    pub kappa: f64,
}

impl Default for InitialDataSection {
    fn default() -> Self {
        let d = InitialData::default();
        Self {
            epsilon: d.epsilon,
            radius: d.radius,
            v_support_low: d.v_low,
            v_support_high: d.v_high,
            kappa: d.kappa,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub r_max: f64,
    pub cells: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            r_max: 100.0,
            cells: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrationSection {
    pub dt: f64,
    pub t_final: f64,
    pub sigma: i8,
    pub barrier: f64,
}

impl Default for IntegrationSection {
    fn default() -> Self {
        Self {
            dt: 0.05,
            t_final: 50.0,
            sigma: 1,
            barrier: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub particles: usize,
    pub seed: u64,
    pub output_every: usize,
    pub tangents: bool,
    pub norm_power: u32,
    pub output_dir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            particles: 100_000,
            seed: 1,
            output_every: 20,
            tangents: false,
            norm_power: 1,
            output_dir: PathBuf::from("."),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FreeStreamSection {
    pub times: Vec<f64>,
    pub samples: usize,
    pub particles: usize,
    pub charge_time: f64,
}

impl Default for FreeStreamSection {
    fn default() -> Self {
        Self {
            times: vec![5.0, 10.0, 20.0, 40.0],
            samples: 801,
            particles: 20_000,
            charge_time: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InequalitySection {
    pub p: Vec<u32>,
    pub times: Vec<f64>,
    pub family: Vec<String>,
    pub tolerance: f64,
    pub level: usize,
    pub lhs_tolerance: f64,
    pub gate_points: usize,
}

impl Default for InequalitySection {
    fn default() -> Self {
        Self {
            p: vec![0, 2],
            times: vec![1.0, 5.0, 10.0, 20.0, 40.0],
            family: Vec::new(),
            tolerance: 1e-4,
            level: 6,
            lhs_tolerance: 1e-6,
            gate_points: 64,
        }
    }
}

/// Fully validated configuration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub initial_data: InitialDataSection,
    pub grid: GridSection,
    pub integration: IntegrationSection,
    pub run: RunSection,
    pub free_stream: FreeStreamSection,
    pub inequality: InequalitySection,
}

/// A rejected value and where it sits in the source.
struct Invalid {
    section: &'static str,
    key: &'static str,
    message: String,
}

fn invalid(section: &'static str, key: &'static str, message: impl Into<String>) -> Invalid {
    Invalid {
        section,
        key,
        message: message.into(),
    }
}

fn positive(section: &'static str, key: &'static str, x: f64) -> Result<(), Invalid> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(section, key, format!("must be positive and finite, got {x}")))
    }
}

fn nonzero(section: &'static str, key: &'static str, n: usize) -> Result<(), Invalid> {
    if n > 0 {
        Ok(())
    } else {
        Err(invalid(section, key, "must be positive"))
    }
}

fn times(section: &'static str, ts: &[f64], min_len: usize) -> Result<(), Invalid> {
    if ts.len() < min_len {
        return Err(invalid(section, "times", format!("needs at least {min_len} entries")));
    }
    if let Some(t) = ts.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(invalid(
            section,
            "times",
            format!("must be nonnegative and finite, got {t}"),
        ));
    }
    Ok(())
}

/// 1-based line of `key` inside `[section]`, if the key is present.
fn locate(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in src.lines().enumerate() {
        let l = line.trim();
        if let Some(rest) = l.strip_prefix('[') {
            current = rest.trim_end_matches(']').trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = l.split_once('=') {
                if k.trim().trim_matches('"') == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

impl RunConfig {
    pub fn parse_str(src: &str, origin: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(src).map_err(|e| CliError::Config {
            path: origin.to_string(),
            message: e.to_string().trim_end().to_string(),
        })?;
        cfg.validate_inner().map_err(|bad| {
            let at = locate(src, bad.section, bad.key)
                .map(|l| format!("line {l}: "))
                .unwrap_or_default();
            CliError::Config {
                path: origin.to_string(),
                message: format!("{at}[{}] {}: {}", bad.section, bad.key, bad.message),
            }
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.validate_inner().map_err(|bad| CliError::Config {
            path: "<config>".into(),
            message: format!("[{}] {}: {}", bad.section, bad.key, bad.message),
        })
    }

    fn validate_inner(&self) -> Result<(), Invalid> {
        let d = &self.initial_data;
        positive("initial_data", "epsilon", d.epsilon)?;
        positive("initial_data", "radius", d.radius)?;
        if !(d.v_support_low >= 2.0 && d.v_support_low.is_finite()) {
            return Err(invalid(
                "initial_data",
                "v_support_low",
                format!("data must vanish for |v| <= 2, got {}", d.v_support_low),
            ));
        }
        if !(d.v_support_high > d.v_support_low && d.v_support_high.is_finite()) {
            return Err(invalid("initial_data", "v_support_high", "must exceed v_support_low"));
        }
        if !(d.kappa.abs() < 1.0) {
            return Err(invalid(
                "initial_data",
                "kappa",
                format!("must lie in (-1, 1), got {}", d.kappa),
            ));
        }
        positive("grid", "r_max", self.grid.r_max)?;
        if self.grid.cells < 2 {
            return Err(invalid("grid", "cells", "needs at least 2 cells"));
        }
        let i = &self.integration;
        positive("integration", "dt", i.dt)?;
        if !(i.t_final >= 0.0 && i.t_final.is_finite()) {
            return Err(invalid(
                "integration",
                "t_final",
                format!("must be nonnegative, got {}", i.t_final),
            ));
        }
        if !matches!(i.sigma, -1..=1) {
            return Err(invalid(
                "integration",
                "sigma",
                format!("must be -1, 0 or 1, got {}", i.sigma),
            ));
        }
        if !(i.barrier >= 0.0 && i.barrier.is_finite()) {
            return Err(invalid("integration", "barrier", "must be nonnegative"));
        }
        nonzero("run", "particles", self.run.particles)?;
        nonzero("run", "output_every", self.run.output_every)?;
        let f = &self.free_stream;
        times("free_stream", &f.times, 3)?;
        if f.samples < 2 {
            return Err(invalid("free_stream", "samples", "needs at least 2 radii"));
        }
        nonzero("free_stream", "particles", f.particles)?;
        if !(f.charge_time >= 0.0 && f.charge_time.is_finite()) {
            return Err(invalid("free_stream", "charge_time", "must be nonnegative"));
        }
        let q = &self.inequality;
        if q.p.is_empty() {
            return Err(invalid("inequality", "p", "needs at least one power"));
        }
        times("inequality", &q.times, 1)?;
        for name in &q.family {
            family_member(name).map_err(|e| invalid("inequality", "family", e.to_string()))?;
        }
        positive("inequality", "tolerance", q.tolerance)?;
        if q.level < 3 {
            return Err(invalid("inequality", "level", "needs at least 3 nodes"));
        }
        positive("inequality", "lhs_tolerance", q.lhs_tolerance)?;
        nonzero("inequality", "gate_points", q.gate_points)?;
        Ok(())
    }

    pub fn initial_data(&self) -> InitialData {
        let d = &self.initial_data;
        InitialData {
            epsilon: d.epsilon,
            radius: d.radius,
            v_low: d.v_support_low,
            v_high: d.v_support_high,
            kappa: d.kappa,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            init: self.initial_data(),
            n_particles: self.run.particles,
            seed: self.run.seed,
            grid: RadialGrid {
                r_max: self.grid.r_max,
                n_cells: self.grid.cells,
            },
            dt: self.integration.dt,
            t_final: self.integration.t_final,
            sigma: self.integration.sigma as f64,
            output_every: self.run.output_every,
            tangents: self.run.tangents,
            norm_power: self.run.norm_power,
            barrier: self.integration.barrier,
        }
    }

    pub fn scan_config(&self) -> ScanConfig {
        let mut s = ScanConfig {
            lhs_tol: self.inequality.lhs_tolerance,
            ..ScanConfig::default()
        };
        s.rhs.tol = self.inequality.tolerance;
        s.rhs.level = self.inequality.level;
        s
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let src = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    RunConfig::parse_str(&src, &path.display().to_string())
}
