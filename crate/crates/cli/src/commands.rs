//! One function per subcommand.

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::OutputDir;
use rvp_core::diagnostics::{
    charge_identity_check, charge_identity_oracle, decay_fit, free_stream_snapshot, DecayReport,
};
use rvp_core::ineq::{
    constant_scan, default_family, derivative_gate, family_member, BumpMember, GateReport, TestFunction,
};
use rvp_core::sim::{run, RunSummary};
use rvp_core::symkernel::{verify_identity_catalog, CertificateEntry};
use rvp_core::{ParticleEnsemble, RadialField, RadialGrid, SimConfig, SimError};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    VerifyAlgebra,
    FreeStream,
    Simulate,
    Inequality,
    Report,
}

/// What a subcommand did: the text for stdout and whether every hard invariant held.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub text: String,
    pub ok: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.ok {
            0
        } else {
            1
        }
    }
}

pub fn dispatch(mode: Mode, cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let out = OutputDir::open(&cfg.run.output_dir)?;
    match mode {
        Mode::VerifyAlgebra => verify_algebra(&out),
        Mode::FreeStream => free_stream(cfg, &out),
        Mode::Simulate => simulate(cfg, &out),
        Mode::Inequality => inequality(cfg, &out),
        Mode::Report => report(&out),
    }
}

#[derive(Serialize, Deserialize)]
pub struct CertificateFile {
    pub schema_version: u32,
    pub all_proved: bool,
    pub entries: Vec<CertificateEntry>,
}

pub fn verify_algebra(out: &OutputDir) -> Result<Outcome, CliError> {
    let report = verify_identity_catalog();
    let table = report.to_table();
    let file = CertificateFile {
        schema_version: SCHEMA_VERSION,
        all_proved: report.all_proved(),
        entries: report.entries.clone(),
    };
    out.write("certificate.txt", table.as_bytes())?;
    out.write_json("certificate.json", &file)?;
    let mut text = table;
    let _ = writeln!(text, "elapsed {:.3} s", report.elapsed_seconds);
    Ok(Outcome {
        text,
        ok: file.all_proved,
    })
}

#[derive(Serialize, Deserialize)]
pub struct ChargeIdentity {
    pub oracle_t0: f64,
    pub monte_carlo_t0: f64,
    pub t: f64,
    pub monte_carlo_t: f64,
    pub particles: usize,
}

#[derive(Serialize, Deserialize)]
pub struct FreeStreamFile {
    pub schema_version: u32,
    pub decay: DecayReport,
    pub charge_identity: ChargeIdentity,
}

pub fn charge_identity(cfg: &RunConfig) -> Result<ChargeIdentity, CliError> {
    let init = cfg.initial_data();
    let n = cfg.free_stream.particles;
    let t = cfg.free_stream.charge_time;
    let grid = RadialGrid {
        r_max: cfg.grid.r_max,
        n_cells: cfg.grid.cells,
    };
    let zero = RadialField::zero(grid);
    let mut ens = ParticleEnsemble::sample(&init, n, cfg.run.seed, true)?;
    let monte_carlo_t0 = charge_identity_check(&ens, &zero, 0.0)?;
    if t > 0.0 {
        ens.drift(t);
    }
    let monte_carlo_t = charge_identity_check(&ens, &zero, 0.0)?;
    Ok(ChargeIdentity {
        oracle_t0: charge_identity_oracle(&init),
        monte_carlo_t0,
        t,
        monte_carlo_t,
        particles: n,
    })
}

pub fn free_stream(cfg: &RunConfig, out: &OutputDir) -> Result<Outcome, CliError> {
    let init = cfg.initial_data();
    let snaps: Vec<_> = cfg
        .free_stream
        .times
        .iter()
        .map(|t| free_stream_snapshot(&init, *t, cfg.free_stream.samples))
        .collect();
    let decay = decay_fit(&snaps)?;
    let mut csv = String::from("t,r,mu\n");
    for s in &snaps {
        for (r, m) in s.r.iter().zip(&s.mu) {
            let _ = writeln!(csv, "{:.17e},{:.17e},{:.17e}", s.t, r, m);
        }
    }
    let file = FreeStreamFile {
        schema_version: SCHEMA_VERSION,
        decay,
        charge_identity: charge_identity(cfg)?,
    };
    out.write("free_stream.csv", csv.as_bytes())?;
    out.write_json("free_stream.json", &file)?;
    let mut text = String::new();
    let d = &file.decay;
    for ((t, p), w) in d.times.iter().zip(&d.peak).zip(&d.weighted) {
        let _ = writeln!(text, "t={t:<6} sup_r mu={p:.6e}  weighted={w:.6e}");
    }
    let _ = writeln!(text, "slope {:.4}  spread {:.4}", d.slope, d.spread);
    let c = &file.charge_identity;
    let _ = writeln!(
        text,
        "charge identity: oracle(t=0) {:.3e}  mc(t=0) {:.3e}  mc(t={}) {:.3e}",
        c.oracle_t0, c.monte_carlo_t0, c.t, c.monte_carlo_t
    );
    Ok(Outcome { text, ok: true })
}

#[derive(Serialize, Deserialize)]
pub struct SimulateFile {
    pub schema_version: u32,
    pub config: SimConfig,
    pub summary: RunSummary,
}

/// Relative charge drift above which a run is reported as broken.
pub const CHARGE_DRIFT_LIMIT: f64 = 1e-10;

pub fn simulate(cfg: &RunConfig, out: &OutputDir) -> Result<Outcome, CliError> {
    let sim = cfg.sim_config();
    let result = run(&sim)?;
    let summary = result
        .series
        .summary(result.steps)
        .ok_or_else(|| SimError::InvalidParameter("run produced no snapshots".into()))?;
    out.write("simulate.csv", result.series.to_csv().as_bytes())?;
    out.write("field.csv", result.field.to_csv().as_bytes())?;
    out.write_json(
        "simulate.json",
        &SimulateFile {
            schema_version: SCHEMA_VERSION,
            config: sim,
            summary: summary.clone(),
        },
    )?;
    let mut text = String::new();
    let _ = writeln!(text, "steps {}  t_final {}", summary.steps, summary.t_final);
    let _ = writeln!(text, "charge drift {:.3e}", summary.charge_drift);
    let _ = writeln!(text, "energy drift {:.3e}", summary.energy_drift);
    let _ = writeln!(text, "min speed {:.6}", summary.min_speed);
    let _ = writeln!(text, "field decay ratio {:.4}", summary.field_decay_ratio);
    let _ = writeln!(text, "moment decay ratio {:.4}", summary.moment_decay_ratio);
    let ok = summary.charge_drift <= CHARGE_DRIFT_LIMIT;
    if !ok {
        let _ = writeln!(text, "charge drift exceeds {CHARGE_DRIFT_LIMIT:e}");
    }
    Ok(Outcome { text, ok })
}

#[derive(Serialize, Deserialize)]
pub struct MemberSummary {
    pub name: String,
    pub c: f64,
    pub gate: GateReport,
    /// Largest transport sum over all times and powers.
    pub max_transport_sum: f64,
}

#[derive(Serialize, Deserialize)]
pub struct FamilyMax {
    pub p: u32,
    pub t: f64,
    pub max_ratio: f64,
}

#[derive(Serialize, Deserialize)]
pub struct Variation {
    pub p: u32,
    pub max_over_min: f64,
}

#[derive(Serialize, Deserialize)]
pub struct InequalityFile {
    pub schema_version: u32,
    pub p: Vec<u32>,
    pub times: Vec<f64>,
    pub tolerance: f64,
    pub members: Vec<MemberSummary>,
    pub family_max: Vec<FamilyMax>,
    pub variation: Vec<Variation>,
    pub all_finite: bool,
    pub all_converged: bool,
}

pub fn selected_family(names: &[String]) -> Result<Vec<BumpMember>, CliError> {
    if names.is_empty() {
        return Ok(default_family());
    }
    Ok(names.iter().map(|n| family_member(n)).collect::<Result<_, _>>()?)
}

pub fn inequality(cfg: &RunConfig, out: &OutputDir) -> Result<Outcome, CliError> {
    let q = &cfg.inequality;
    let family = selected_family(&q.family)?;
    let mut gates = Vec::new();
    for (k, g) in family.iter().enumerate() {
        gates.push(derivative_gate(g, q.gate_points, cfg.run.seed.wrapping_add(k as u64))?);
    }
    let refs: Vec<&dyn TestFunction> = family.iter().map(|g| g as &dyn TestFunction).collect();
    let report = constant_scan(&refs, &q.times, &q.p, &cfg.scan_config())?;
    let members: Vec<MemberSummary> = family
        .iter()
        .zip(gates)
        .map(|(g, gate)| MemberSummary {
            name: g.name().to_string(),
            c: g.support().c,
            gate,
            max_transport_sum: report
                .rows
                .iter()
                .filter(|r| r.member == g.name())
                .map(|r| r.transport_sum)
                .fold(0.0, f64::max),
        })
        .collect();
    let file = InequalityFile {
        schema_version: SCHEMA_VERSION,
        p: q.p.clone(),
        times: q.times.clone(),
        tolerance: q.tolerance,
        all_finite: report.rows.iter().all(|r| r.ratio.is_some_and(f64::is_finite)),
        all_converged: report.rows.iter().all(|r| r.converged),
        family_max: report
            .family_max
            .iter()
            .map(|&(p, t, max_ratio)| FamilyMax { p, t, max_ratio })
            .collect(),
        variation: report
            .variation
            .iter()
            .map(|&(p, max_over_min)| Variation { p, max_over_min })
            .collect(),
        members,
    };
    out.write("inequality.csv", report.to_csv().as_bytes())?;
    out.write_json("inequality.json", &file)?;
    let mut text = String::new();
    for r in &report.rows {
        let ratio = r.ratio.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            text,
            "{:<18} t={:<5} p={} ratio={ratio}  sup at r={:.3}{}",
            r.member,
            r.t,
            r.p,
            r.sup_r,
            if r.converged { "" } else { "  (rhs not converged)" }
        );
    }
    for v in &file.variation {
        let _ = writeln!(text, "p={} family max varies by {:.4}", v.p, v.max_over_min);
    }
    let free_ok = file
        .members
        .iter()
        .filter(|m| m.c == 1.0)
        .all(|m| m.max_transport_sum == 0.0);
    if !free_ok {
        let _ = writeln!(text, "nonzero transport sum for a free-streaming member");
    }
    Ok(Outcome { text, ok: free_ok })
}

const REPORT_FILES: [&str; 4] = [
    "certificate.json",
    "free_stream.json",
    "simulate.json",
    "inequality.json",
];

pub fn report(out: &OutputDir) -> Result<Outcome, CliError> {
    let mut combined = serde_json::Map::new();
    combined.insert("schema_version".into(), SCHEMA_VERSION.into());
    let mut text = String::new();
    let mut found = 0;
    for name in REPORT_FILES {
        let path = out.path(name);
        if !path.exists() {
            let _ = writeln!(text, "{name}: absent");
            continue;
        }
        let raw = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let value: serde_json::Value = serde_json::from_str(&raw)?;
        let _ = writeln!(text, "{name}: {}", headline(name, &value));
        combined.insert(name.trim_end_matches(".json").into(), value);
        found += 1;
    }
    if found == 0 {
        return Err(CliError::io(
            out.path(""),
            std::io::Error::new(std::io::ErrorKind::NotFound, "no result files to report on"),
        ));
    }
    out.write_json("report.json", &combined)?;
    Ok(Outcome { text, ok: true })
}

fn headline(name: &str, v: &serde_json::Value) -> String {
    let f = |path: &str| v.pointer(path).cloned().unwrap_or(serde_json::Value::Null);
    match name {
        "certificate.json" => {
            let n = v["entries"].as_array().map_or(0, Vec::len);
            format!("all_proved={} over {n} identities", f("/all_proved"))
        }
        "free_stream.json" => format!(
            "slope={} spread={} charge identity mc(t)={}",
            f("/decay/slope"),
            f("/decay/spread"),
            f("/charge_identity/monte_carlo_t")
        ),
        "simulate.json" => format!(
            "charge_drift={} energy_drift={} min_speed={} field_decay_ratio={}",
            f("/summary/charge_drift"),
            f("/summary/energy_drift"),
            f("/summary/min_speed"),
            f("/summary/field_decay_ratio")
        ),
        _ => {
            let vars: Vec<String> = v["variation"]
                .as_array()
                .map(|a| {
                    a.iter()
                        .map(|x| format!("p={} {}", x["p"], x["max_over_min"]))
                        .collect()
                })
                .unwrap_or_default();
            format!("variation [{}] all_finite={}", vars.join(", "), f("/all_finite"))
        }
    }
}
