//! Time loop and per-snapshot diagnostics.

use super::ensemble::ParticleEnsemble;
use super::init::InitialData;
use crate::diagnostics::{charge_identity_check, energy_norm, moment_decay_statistic};
use crate::error::SimError;
use crate::poisson::{RadialField, RadialGrid};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub init: InitialData,
    pub n_particles: usize,
    pub seed: u64,
    pub grid: RadialGrid,
    pub dt: f64,
    pub t_final: f64,
    pub sigma: f64,
    /// Steps between snapshots.
    pub output_every: usize,
    pub tangents: bool,
    /// Weight power of the energy norms.
    pub norm_power: u32,
    /// Abort threshold for `min |V_p|`.
    pub barrier: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            init: InitialData::default(),
            n_particles: 100_000,
            seed: 1,
            grid: RadialGrid {
                r_max: 100.0,
                n_cells: 2000,
            },
            dt: 0.05,
            t_final: 50.0,
            sigma: 1.0,
            output_every: 20,
            tangents: false,
            norm_power: 1,
            barrier: 0.5,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.init.validate()?;
        let bad = |m: String| Err(SimError::InvalidParameter(m));
        if self.n_particles == 0 {
            return bad("n_particles must be positive".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final must be nonnegative, got {}", self.t_final));
        }
        if !(self.grid.r_max > 0.0 && self.grid.r_max.is_finite()) || self.grid.n_cells < 2 {
            return bad("grid needs r_max > 0 and at least 2 cells".into());
        }
        if ![-1.0, 0.0, 1.0].contains(&self.sigma) {
            return bad(format!("sigma must be -1, 0 or 1, got {}", self.sigma));
        }
        if self.output_every == 0 {
            return bad("output_every must be positive".into());
        }
        if !(self.barrier >= 0.0) {
            return bad(format!("barrier must be nonnegative, got {}", self.barrier));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Diagnostics at one output time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub energy: f64,
    pub charge: f64,
    pub particle_charge: f64,
    /// Running minimum of `|V_p|` over all steps so far.
    pub min_speed: f64,
    /// `sup_r (1 + t + r)^2 |E|`.
    pub field_decay: f64,
    /// `sup_r (1 + r)^2 tau_-^2 rho`.
    pub moment_decay: f64,
    pub energy_norm0: f64,
    pub energy_norm1: Option<f64>,
    pub charge_identity: Option<f64>,
    pub angular_drift: f64,
    pub overflow: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSeries {
    pub snapshots: Vec<Snapshot>,
}

/// Summary of a run relative to its first snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: usize,
    pub t_final: f64,
    pub charge_drift: f64,
    pub energy_drift: f64,
    pub min_speed: f64,
    pub field_decay_ratio: f64,
    pub moment_decay_ratio: f64,
    pub max_angular_drift: f64,
    pub max_overflow: f64,
}

fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

impl DiagnosticsSeries {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "t,energy,charge,particle_charge,min_speed,field_decay,moment_decay,energy_norm0,energy_norm1,charge_identity,angular_drift,overflow\n",
        );
        let opt = |x: Option<f64>| x.map(fmt).unwrap_or_default();
        for p in &self.snapshots {
            let row = [
                fmt(p.t),
                fmt(p.energy),
                fmt(p.charge),
                fmt(p.particle_charge),
                fmt(p.min_speed),
                fmt(p.field_decay),
                fmt(p.moment_decay),
                fmt(p.energy_norm0),
                opt(p.energy_norm1),
                opt(p.charge_identity),
                fmt(p.angular_drift),
                fmt(p.overflow),
            ];
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn summary(&self, steps: usize) -> Option<RunSummary> {
        let first = self.snapshots.first()?;
        let last = self.snapshots.last()?;
        let rel = |a: f64, b: f64| if b == 0.0 { (a - b).abs() } else { ((a - b) / b).abs() };
        let fold = |f: &dyn Fn(&Snapshot) -> f64| self.snapshots.iter().map(f).fold(0.0, f64::max);
        Some(RunSummary {
            steps,
            t_final: last.t,
            charge_drift: fold(&|s| rel(s.charge, first.charge)),
            energy_drift: fold(&|s| rel(s.energy, first.energy)),
            min_speed: last.min_speed,
            field_decay_ratio: fold(&|s| s.field_decay) / first.field_decay,
            moment_decay_ratio: fold(&|s| s.moment_decay) / first.moment_decay,
            max_angular_drift: fold(&|s| s.angular_drift),
            max_overflow: fold(&|s| s.overflow),
        })
    }
}

/// Result of [`run`]: the series, the final ensemble and field.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub series: DiagnosticsSeries,
    pub ensemble: ParticleEnsemble,
    pub field: RadialField,
    pub steps: usize,
}

fn snapshot(
    cfg: &SimConfig,
    ens: &ParticleEnsemble,
    field: &RadialField,
    rho: &[f64],
    overflow: f64,
    min_speed: f64,
) -> Result<Snapshot, SimError> {
    let (norm1, identity) = if ens.tangent.is_some() {
        (
            Some(energy_norm(ens, field, cfg.sigma, cfg.norm_power, 1)?.value),
            Some(charge_identity_check(ens, field, cfg.sigma)?),
        )
    } else {
        (None, None)
    };
    Ok(Snapshot {
        t: ens.t,
        energy: ens.energy(field, cfg.sigma),
        charge: field.q,
        particle_charge: ens.total_charge(),
        min_speed,
        field_decay: field.potential_decay_report(ens.t),
        moment_decay: moment_decay_statistic(&cfg.grid, rho, ens.t),
        energy_norm0: energy_norm(ens, field, cfg.sigma, cfg.norm_power, 0)?.value,
        energy_norm1: norm1,
        charge_identity: identity,
        angular_drift: ens.angular_momentum_drift(),
        overflow,
    })
}

/// Samples the initial data and runs the kick-drift-kick loop to `t_final`.
pub fn run(cfg: &SimConfig) -> Result<RunOutput, SimError> {
    cfg.validate()?;
    let mut ens = ParticleEnsemble::sample(&cfg.init, cfg.n_particles, cfg.seed, cfg.tangents)?;
    let grid = cfg.grid;
    let dep = ens.deposit(&grid);
    let mut field = crate::poisson::solve_field(grid, &dep.rho);
    let mut min_speed = ens.min_speed();
    let mut series = DiagnosticsSeries::default();
    series
        .snapshots
        .push(snapshot(cfg, &ens, &field, &dep.rho, dep.overflow, min_speed)?);
    let steps = cfg.n_steps();
    for k in 1..=steps {
        let dt = if k == steps { cfg.t_final - ens.t } else { cfg.dt };
        ens.kick(&field, cfg.sigma, 0.5 * dt);
        ens.drift(dt);
        let dep = ens.deposit(&grid);
        field = crate::poisson::solve_field(grid, &dep.rho);
        ens.kick(&field, cfg.sigma, 0.5 * dt);
        if k == steps {
            ens.t = cfg.t_final;
        }
        min_speed = min_speed.min(ens.min_speed());
        if min_speed < cfg.barrier {
            return Err(SimError::BarrierViolated {
                min_speed,
                threshold: cfg.barrier,
                t: ens.t,
            });
        }
        if k % cfg.output_every == 0 || k == steps {
            series
                .snapshots
                .push(snapshot(cfg, &ens, &field, &dep.rho, dep.overflow, min_speed)?);
        }
    }
    Ok(RunOutput {
        series,
        ensemble: ens,
        field,
        steps,
    })
}
