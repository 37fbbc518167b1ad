//! Output files.
//!
//! * `trajectory.csv`: one row per step with columns `step, t, amp`, then
//!   `z_e`, `V_e`, `traction_e` for every node, then `elastic, dissipated,
//!   work, drift`, then the envelope `g_e = g(V_e)`, `gprime_e = g'(V_e)`
//!   and `broken_e` (0 or 1).
//! * `summary.json`: final energies, rupture times, `η_k`, drift, solver stats.
//! * `audit.json`: one entry per check.
//! * `refinement.csv`: `k, v_error, z_error, max_drift, eta, rupture_time`.
//! * `mesh.csv`, `interface.csv`: model dumps.
//!
//! Floats are written in shortest round-trip form, so identical runs give
//! byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use cohesive_core::law::LawField;
use cohesive_core::verify::{AuditReport, RefinementRow};
use cohesive_core::{ReducedModel, Trajectory};
use serde::Serialize;

use crate::error::CliError;

/// Shortest decimal string that round-trips; `-0.0` prints as `0.0`.
pub fn num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:?}")
}

pub fn trajectory_csv(traj: &Trajectory, laws: &LawField) -> String {
    let m = traj.nodes();
    let mut out = String::new();
    let mut header = vec!["step".to_owned(), "t".into(), "amp".into()];
    for prefix in ["z", "V", "traction"] {
        header.extend((0..m).map(|e| format!("{prefix}_{e}")));
    }
    header.extend(["elastic", "dissipated", "work", "drift"].map(String::from));
    for prefix in ["g", "gprime", "broken"] {
        header.extend((0..m).map(|e| format!("{prefix}_{e}")));
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for (i, r) in traj.records.iter().enumerate() {
        let mut row = vec![i.to_string(), num(r.t), num(r.amp)];
        row.extend(r.z.iter().chain(&r.v).chain(&r.traction).map(|x| num(*x)));
        row.extend([r.elastic, r.dissipated, r.work, r.drift].map(num));
        row.extend((0..m).map(|e| num(laws[e].value(r.v[e]))));
        row.extend((0..m).map(|e| num(laws[e].slope(r.v[e]))));
        row.extend(
            r.broken
                .iter()
                .map(|b| if *b { "1" } else { "0" }.to_owned()),
        );
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub name: String,
    pub nodes: usize,
    pub steps: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub eta: f64,
    pub max_drift: f64,
    pub max_abs_drift: f64,
    pub final_energies: FinalEnergies,
    pub rupture_steps: Vec<Option<usize>>,
    pub rupture_times: Vec<Option<f64>>,
    pub first_rupture_time: Option<f64>,
    pub solver: SolverSummary,
}

#[derive(Debug, Serialize)]
pub struct FinalEnergies {
    pub elastic: f64,
    pub dissipated: f64,
    pub work: f64,
    pub drift: f64,
}

#[derive(Debug, Serialize)]
pub struct SolverSummary {
    pub total_sweeps: usize,
    pub max_sweeps_per_step: usize,
    pub max_stationarity_residual: f64,
    pub wins_stay: usize,
    pub wins_elastic: usize,
    pub wins_partial_rupture: usize,
}

impl Summary {
    pub fn new(name: &str, traj: &Trajectory) -> Self {
        let f = traj.final_record();
        let m = traj.nodes();
        let s = traj.stats;
        Summary {
            name: name.to_owned(),
            nodes: m,
            steps: traj.steps,
            horizon: traj.horizon,
            eta: traj.eta,
            max_drift: traj.max_drift(),
            max_abs_drift: traj.max_abs_drift(),
            final_energies: FinalEnergies {
                elastic: f.elastic,
                dissipated: f.dissipated,
                work: f.work,
                drift: f.drift,
            },
            rupture_steps: (0..m).map(|e| traj.rupture_step(e)).collect(),
            rupture_times: (0..m).map(|e| traj.rupture_time(e)).collect(),
            first_rupture_time: cohesive_core::verify::first_rupture_time(traj),
            solver: SolverSummary {
                total_sweeps: s.total_sweeps,
                max_sweeps_per_step: s.max_sweeps,
                max_stationarity_residual: s.max_stationarity_residual,
                wins_stay: s.wins[0],
                wins_elastic: s.wins[1],
                wins_partial_rupture: s.wins[2],
            },
        }
    }
}

#[derive(Debug, Serialize)]
struct AuditJson<'a> {
    passed: bool,
    checks: Vec<CheckJson<'a>>,
}

#[derive(Debug, Serialize)]
struct CheckJson<'a> {
    name: &'a str,
    passed: bool,
    worst: f64,
    tolerance: f64,
    step: Option<usize>,
    node: Option<usize>,
    checked: usize,
    skipped: usize,
}

pub fn audit_json(report: &AuditReport) -> String {
    let doc = AuditJson {
        passed: report.passed(),
        checks: report
            .checks
            .iter()
            .map(|c| CheckJson {
                name: &c.name,
                passed: c.passed,
                worst: c.worst,
                tolerance: c.tolerance,
                step: c.location.map(|l| l.0),
                node: c.location.and_then(|l| l.1),
                checked: c.checked,
                skipped: c.skipped,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("audit serializes") + "\n"
}

pub fn refinement_csv(rows: &[RefinementRow]) -> String {
    let mut out = String::from("k,v_error,z_error,max_drift,eta,rupture_time\n");
    for r in rows {
        let rupture = r.rupture_time.map(num).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.k,
            num(r.v_error),
            num(r.z_error),
            num(r.max_drift),
            num(r.eta),
            rupture
        )
        .unwrap();
    }
    out
}

pub fn mesh_csv(model: &ReducedModel) -> String {
    let mesh = model.mesh();
    let mut out = String::from("node,x,y,tag\n");
    for (i, (p, tag)) in mesh.coords.iter().zip(&mesh.tags).enumerate() {
        writeln!(out, "{i},{},{},{}", num(p[0]), num(p[1]), tag.name()).unwrap();
    }
    out
}

/// Rows `e, weight, c_e, S_e0 … S_e(m−1)`.
pub fn interface_csv(model: &ReducedModel) -> String {
    let m = model.interface_len();
    let s = model.interface_matrix();
    let mut out = String::from("node,weight,c_unit");
    for j in 0..m {
        write!(out, ",S_{j}").unwrap();
    }
    out.push('\n');
    for e in 0..m {
        write!(
            out,
            "{e},{},{}",
            num(model.weights()[e]),
            num(model.c_unit()[e])
        )
        .unwrap();
        for j in 0..m {
            write!(out, ",{}", num(s.get(e, j))).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, 1.0, 0.1 + 0.2, 1e-300, -2.5e17, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(2.0), "2.0");
        assert_eq!(num(f64::INFINITY), "inf");
    }
}
