//! A posteriori audits of a trajectory and refinement studies.
//!
//! Every check is a pure function of its inputs and returns a
//! [`CheckReport`]; a failed check is a report entry, not an error.

use alloc::string::String;
use alloc::vec::Vec;

use crate::evolution::{run, EvolutionError, InitialState, Trajectory};
use crate::law::LawField;
use crate::load::LoadProgram;
use crate::oracle::{brute_force_step, GridSpec};
use crate::reduced::ReducedModel;
use crate::step::{solve_step, StepOptions, StepProblem};

pub const ENERGY_TOL: f64 = 1e-8;
pub const KKT_TOL: f64 = 1e-6;
pub const IRREVERSIBILITY_REL: f64 = 1e-12;
pub const SLIP_TOL: f64 = 1e-8;
pub const STABILITY_TOL: f64 = 1e-8;
pub const BULK_RESIDUAL_TOL: f64 = 1e-10;
/// Number of sample intervals on `[0, T]` for refinement comparisons.
pub const REFINEMENT_SAMPLES: usize = 97;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    /// Largest violation found; nonpositive when the check holds with margin.
    pub worst: f64,
    /// `(step, node)` of the worst violation.
    pub location: Option<(usize, Option<usize>)>,
    pub tolerance: f64,
    pub checked: usize,
    /// Entries skipped inside the kink guard band.
    pub skipped: usize,
}

impl CheckReport {
    fn new(name: &str, tolerance: f64) -> Self {
        CheckReport {
            name: name.into(),
            passed: true,
            worst: f64::NEG_INFINITY,
            location: None,
            tolerance,
            checked: 0,
            skipped: 0,
        }
    }

    /// Records `violation` (positive means broken) at a location.
    fn record(&mut self, violation: f64, step: usize, node: Option<usize>) {
        self.checked += 1;
        if violation > self.worst || self.location.is_none() {
            self.worst = violation;
            self.location = Some((step, node));
        }
        if violation > 0.0 || violation.is_nan() {
            self.passed = false;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditReport {
    pub checks: Vec<CheckReport>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// `drift_i ≤ η_k + ENERGY_TOL` at every step.
pub fn check_energy_balance(traj: &Trajectory) -> CheckReport {
    let mut report = CheckReport::new("energy_balance", ENERGY_TOL);
    for (i, r) in traj.records.iter().enumerate() {
        report.record(r.drift - traj.eta - ENERGY_TOL, i, None);
    }
    report
}

/// Monotonicity of `V`, `V + z` and `V − z`, and `V_j ≥ V_i + |z_j − z_i|`
/// on a subsample of pairs.
pub fn check_irreversibility(traj: &Trajectory, scale: f64) -> CheckReport {
    let tol = IRREVERSIBILITY_REL * scale;
    let mut report = CheckReport::new("irreversibility", tol);
    let r = &traj.records;
    for i in 1..r.len() {
        for e in 0..r[i].z.len() {
            let (v0, v1, z0, z1) = (r[i - 1].v[e], r[i].v[e], r[i - 1].z[e], r[i].z[e]);
            let drop = (v0 - v1)
                .max((v0 + z0) - (v1 + z1))
                .max((v0 - z0) - (v1 - z1));
            report.record(drop - tol, i, Some(e));
        }
    }
    let stride = (r.len() / 16).max(1);
    for i in (0..r.len()).step_by(stride) {
        for j in (i..r.len()).step_by(stride) {
            for e in 0..r[i].z.len() {
                let gap = r[i].v[e] + (r[j].z[e] - r[i].z[e]).abs() - r[j].v[e];
                report.record(gap - tol * (1 + j - i) as f64, j, Some(e));
            }
        }
    }
    report
}

/// `|t_e| ≤ g'_e(V_e) + KKT_TOL` at every step and node outside the guard band.
pub fn check_kkt(traj: &Trajectory, laws: &LawField) -> CheckReport {
    let mut report = CheckReport::new("kkt", KKT_TOL);
    for (i, r) in traj.records.iter().enumerate() {
        for e in 0..r.z.len() {
            let law = &laws[e];
            if law.in_guard_band(r.v[e]) {
                report.skipped += 1;
                continue;
            }
            report.record(
                r.traction[e].abs() - law.slope(r.v[e]) - KKT_TOL,
                i,
                Some(e),
            );
        }
    }
    report
}

/// At slipping steps, `|t_e − sign(Δz_e)·g'_e(V_e)| ≤ KKT_TOL` with the
/// post-update `V`.
pub fn check_flow_rule(traj: &Trajectory, laws: &LawField, slip_tol: f64) -> CheckReport {
    let mut report = CheckReport::new("flow_rule", KKT_TOL);
    let r = &traj.records;
    for i in 1..r.len() {
        for e in 0..r[i].z.len() {
            let dz = r[i].z[e] - r[i - 1].z[e];
            if dz.abs() <= slip_tol {
                continue;
            }
            let law = &laws[e];
            if law.in_guard_band(r[i].v[e]) {
                report.skipped += 1;
                continue;
            }
            let mismatch = (r[i].traction[e] - dz.signum() * law.slope(r[i].v[e])).abs();
            report.record(mismatch - KKT_TOL, i, Some(e));
        }
    }
    report
}

/// Re-minimizes the step objective from recorded states, treating each
/// as the previous state, and checks that nothing lowers the energy by
/// more than [`STABILITY_TOL`]. Uses the brute-force oracle when
/// `m ≤ oracle_limit`, the multi-start solver otherwise.
pub fn check_global_stability(
    model: &ReducedModel,
    laws: &LawField,
    traj: &Trajectory,
    sample_steps: &[usize],
    oracle_limit: usize,
    opts: &StepOptions,
) -> CheckReport {
    let mut report = CheckReport::new("global_stability", STABILITY_TOL);
    let energy = model.interface();
    for &i in sample_steps {
        let Some(r) = traj.records.get(i) else {
            continue;
        };
        let problem = StepProblem {
            energy,
            laws,
            v_prev: r.v.clone(),
            p: r.z.clone(),
            amp: r.amp,
        };
        let here = problem.total_energy(&r.z);
        let best = if problem.len() <= oracle_limit.min(crate::oracle::MAX_ORACLE_NODES) {
            brute_force_step(&problem, &GridSpec::covering(&problem, 1_000_000))
                .map(|s| s.energy)
                .ok()
        } else {
            solve_step(&problem, opts).map(|s| s.energy).ok()
        };
        match best {
            Some(best) => report.record(here - best - STABILITY_TOL, i, None),
            None => report.record(f64::INFINITY, i, None),
        }
    }
    report
}

/// Free-node residual of the reconstructed bulk field at every step.
pub fn check_bulk_residual(model: &ReducedModel, traj: &Trajectory) -> CheckReport {
    let mut report = CheckReport::new("bulk_residual", BULK_RESIDUAL_TOL);
    for (i, r) in traj.records.iter().enumerate() {
        match model.reconstruct_bulk(&r.z, r.amp) {
            Ok(field) => report.record(field.free_residual - BULK_RESIDUAL_TOL, i, None),
            Err(_) => report.record(f64::INFINITY, i, None),
        }
    }
    report
}

/// Evenly spread sample of step indices including the first and last.
pub fn sample_steps(len: usize, count: usize) -> Vec<usize> {
    if len == 0 || count == 0 {
        return Vec::new();
    }
    if count >= len {
        return (0..len).collect();
    }
    let mut out: Vec<usize> = (0..count)
        .map(|j| j * (len - 1) / (count - 1).max(1))
        .collect();
    out.dedup();
    out
}

/// Runs every check.
pub fn audit(
    model: &ReducedModel,
    laws: &LawField,
    traj: &Trajectory,
    stability_samples: usize,
    opts: &StepOptions,
) -> AuditReport {
    let scale = laws.max_scale().clamp(1.0, 1e6);
    let samples = sample_steps(traj.len(), stability_samples);
    AuditReport {
        checks: alloc::vec![
            check_energy_balance(traj),
            check_irreversibility(traj, scale),
            check_kkt(traj, laws),
            check_flow_rule(traj, laws, SLIP_TOL),
            check_global_stability(model, laws, traj, &samples, 3, opts),
            check_bulk_residual(model, traj),
        ],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementRow {
    pub k: usize,
    /// `max_t max_e |V∧θ(k) − V∧θ(ref)|`
    pub v_error: f64,
    /// `max_t max_e |z(k) − z(ref)|`
    pub z_error: f64,
    pub max_drift: f64,
    pub eta: f64,
    /// Earliest rupture time over all nodes.
    pub rupture_time: Option<f64>,
}

pub fn first_rupture_time(traj: &Trajectory) -> Option<f64> {
    (0..traj.nodes())
        .filter_map(|e| traj.rupture_time(e))
        .reduce(f64::min)
}

/// Compares `traj` with `reference` at [`REFINEMENT_SAMPLES`]` + 1` evenly
/// spaced times using the piecewise-constant interpolation of each.
pub fn compare(traj: &Trajectory, reference: &Trajectory, laws: &LawField) -> RefinementRow {
    let horizon = reference.horizon;
    let (mut v_error, mut z_error) = (0.0f64, 0.0f64);
    for j in 0..=REFINEMENT_SAMPLES {
        let t = horizon * j as f64 / REFINEMENT_SAMPLES as f64;
        let a = &traj.records[traj.index_at(t)];
        let b = &reference.records[reference.index_at(t)];
        for e in 0..a.z.len() {
            let theta = laws[e].threshold();
            v_error = v_error.max((a.v[e].min(theta) - b.v[e].min(theta)).abs());
            z_error = z_error.max((a.z[e] - b.z[e]).abs());
        }
    }
    RefinementRow {
        k: traj.steps,
        v_error,
        z_error,
        max_drift: traj.max_abs_drift(),
        eta: traj.eta,
        rupture_time: first_rupture_time(traj),
    }
}

/// Runs the scenario at each `k` and compares with the run at `reference_k`.
pub fn refinement_study(
    model: &ReducedModel,
    laws: &LawField,
    load: &LoadProgram,
    initial: &InitialState,
    ks: &[usize],
    reference_k: usize,
    opts: &StepOptions,
) -> Result<Vec<RefinementRow>, EvolutionError> {
    let reference = run(model, laws, load, reference_k, initial, opts)?;
    ks.iter()
        .map(|&k| run(model, laws, load, k, initial, opts).map(|t| compare(&t, &reference, laws)))
        .collect()
}

/// Each column is nonincreasing in `k`, with relative `slack` on the last
/// pair and an absolute floor `noise`.
pub fn nonincreasing(values: &[f64], slack: f64, noise: f64) -> bool {
    let n = values.len();
    (1..n).all(|i| {
        let allowance = if i == n - 1 { 1.0 + slack } else { 1.0 };
        values[i] <= values[i - 1] * allowance + noise
    })
}

/// `log(e_first / e_last) / log(k_last / k_first)`.
pub fn empirical_order(ks: &[usize], errors: &[f64]) -> f64 {
    let (k0, k1) = (ks[0] as f64, ks[ks.len() - 1] as f64);
    let (e0, e1) = (errors[0], errors[errors.len() - 1]);
    (e0 / e1).ln() / (k1 / k0).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::CohesiveLaw;
    use crate::mesh::{DomainSpec, Mesh};

    fn two_bar_run(k: usize) -> (ReducedModel, LawField, Trajectory) {
        let model = ReducedModel::from_mesh(Mesh::build(DomainSpec::two_bar()).unwrap()).unwrap();
        let laws = LawField::uniform(CohesiveLaw::capped_linear(0.5, 1.0).unwrap(), 2);
        let load = LoadProgram::linear(1.0, 2.0).unwrap();
        let traj = run(
            &model,
            &laws,
            &load,
            k,
            &InitialState::zero(2),
            &StepOptions::default(),
        )
        .unwrap();
        (model, laws, traj)
    }

    #[test]
    fn valid_run_passes_every_check() {
        let (model, laws, traj) = two_bar_run(100);
        let report = audit(&model, &laws, &traj, 6, &StepOptions::default());
        for c in &report.checks {
            assert!(c.passed, "{c:?}");
        }
        assert!(report.get("kkt").unwrap().checked > 0);
    }

    #[test]
    fn decremented_variation_is_caught() {
        let (_, _, mut traj) = two_bar_run(100);
        traj.records[60].v[1] -= 1e-6;
        let report = check_irreversibility(&traj, 1.0);
        assert!(!report.passed);
        assert_eq!(report.location.map(|l| l.1), Some(Some(1)));
    }

    #[test]
    fn non_stationary_state_is_caught() {
        let (model, laws, mut traj) = two_bar_run(100);
        // a state stuck far below the threshold at high load
        traj.records[80].z = alloc::vec![0.0, 0.0];
        let report =
            check_global_stability(&model, &laws, &traj, &[80], 3, &StepOptions::default());
        assert!(!report.passed);
        assert_eq!(report.location, Some((80, None)));
    }

    #[test]
    fn traction_above_threshold_is_caught() {
        let (_, laws, mut traj) = two_bar_run(100);
        traj.records[10].traction[0] = 0.6;
        assert!(!check_kkt(&traj, &laws).passed);
    }

    #[test]
    fn sampling_and_monotonicity_helpers() {
        assert_eq!(sample_steps(11, 3), alloc::vec![0, 5, 10]);
        assert_eq!(sample_steps(3, 10), alloc::vec![0, 1, 2]);
        assert!(sample_steps(0, 3).is_empty());
        assert!(nonincreasing(&[0.3, 0.2, 0.1, 0.105], 0.1, 0.0));
        assert!(!nonincreasing(&[0.3, 0.2, 0.1, 0.12], 0.1, 0.0));
        assert!(!nonincreasing(&[0.3, 0.31, 0.1], 0.1, 0.0));
        assert!((empirical_order(&[50, 400], &[0.08, 0.01]) - 1.0).abs() < 1e-12);
    }
}
