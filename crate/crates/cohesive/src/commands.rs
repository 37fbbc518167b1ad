//! The subcommands, as library functions returning structured results.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cohesive_core::law::{CohesiveLaw, LawField, LawKind};
use cohesive_core::linalg::DenseMatrix;
use cohesive_core::oracle::{
    brute_force_step, scalar_fatigue_recursion, FatigueRecursion, GridSpec,
};
use cohesive_core::verify::{self, AuditReport, RefinementRow};
use cohesive_core::{
    run, InterfaceEnergy, Mesh, ReducedModel, StepOptions, StepProblem, Trajectory,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::{self, num, Summary};
use crate::scenario::{LawKindConfig, Prepared, Scenario};

pub const MIN_SWEEP_STEPS: usize = 10;
/// Recorded states re-minimized by the global stability audit.
pub const STABILITY_SAMPLES: usize = 16;

pub fn build_model(prepared: &Prepared) -> Result<ReducedModel, CliError> {
    let mesh = Mesh::build(prepared.domain).map_err(|e| CliError::config("mesh", e.to_string()))?;
    ReducedModel::from_mesh(mesh).map_err(|e| CliError::Solver(e.to_string()))
}

pub fn simulate(prepared: &Prepared, model: &ReducedModel) -> Result<Trajectory, CliError> {
    Ok(run(
        model,
        &prepared.laws,
        &prepared.load,
        prepared.scenario.time.steps,
        &prepared.initial,
        &prepared.opts,
    )?)
}

pub struct RunOutcome {
    pub prepared: Prepared,
    pub model: ReducedModel,
    pub trajectory: Trajectory,
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub dump_model: bool,
    pub dump_step: Option<usize>,
}

/// Runs a scenario and writes `trajectory.csv` and `summary.json`.
pub fn run_scenario(scenario: &Scenario, options: RunOptions) -> Result<RunOutcome, CliError> {
    let prepared = scenario.prepare()?;
    let model = build_model(&prepared)?;
    let trajectory = simulate(&prepared, &model)?;
    let dir = scenario.output_dir();
    write_run(&dir, &prepared, &trajectory)?;
    if options.dump_model {
        output::write(&dir, "mesh.csv", &output::mesh_csv(&model))?;
        output::write(&dir, "interface.csv", &output::interface_csv(&model))?;
    }
    if let Some(i) = options.dump_step {
        if i == 0 || i >= trajectory.len() {
            return Err(CliError::Config {
                key: None,
                message: format!("--dump-step {i} outside 1..{}", trajectory.len()),
            });
        }
        let dump = ProblemDump::for_step(&model, &prepared.laws, &trajectory, i);
        let text = serde_json::to_string_pretty(&dump).expect("dump serializes") + "\n";
        output::write(&dir, &format!("problem_{i}.json"), &text)?;
    }
    Ok(RunOutcome {
        prepared,
        model,
        trajectory,
        dir,
    })
}

fn write_run(dir: &Path, prepared: &Prepared, trajectory: &Trajectory) -> Result<(), CliError> {
    output::write(
        dir,
        "trajectory.csv",
        &output::trajectory_csv(trajectory, &prepared.laws),
    )?;
    let summary = serde_json::to_string_pretty(&Summary::new(&prepared.scenario.name, trajectory))
        .expect("summary serializes")
        + "\n";
    output::write(dir, "summary.json", &summary)
}

/// Test hook: lowers the stored variation at one step and node before the
/// audit runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Corruption {
    pub step: usize,
    pub node: usize,
}

impl std::str::FromStr for Corruption {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once(',').ok_or("expected `step,node`")?;
        Ok(Corruption {
            step: a.trim().parse().map_err(|_| "bad step")?,
            node: b.trim().parse().map_err(|_| "bad node")?,
        })
    }
}

/// Runs a scenario, audits it and writes `audit.json` next to the run files.
pub fn verify_scenario(
    scenario: &Scenario,
    corruption: Option<Corruption>,
) -> Result<(RunOutcome, AuditReport), CliError> {
    let mut outcome = run_scenario(scenario, RunOptions::default())?;
    if let Some(c) = corruption {
        let r = outcome
            .trajectory
            .records
            .get_mut(c.step)
            .and_then(|r| r.v.get_mut(c.node));
        let v = r.ok_or_else(|| CliError::Config {
            key: None,
            message: format!("corruption target {c:?} out of range"),
        })?;
        *v -= 1e-3;
    }
    let report = verify::audit(
        &outcome.model,
        &outcome.prepared.laws,
        &outcome.trajectory,
        STABILITY_SAMPLES,
        &outcome.prepared.opts,
    );
    output::write(&outcome.dir, "audit.json", &output::audit_json(&report))?;
    Ok((outcome, report))
}

pub fn audit_text(report: &AuditReport) -> String {
    let mut out = String::new();
    for c in &report.checks {
        let at = match c.location {
            Some((step, Some(node))) => format!(" at step {step}, node {node}"),
            Some((step, None)) => format!(" at step {step}"),
            None => String::new(),
        };
        let verdict = if c.passed { "pass" } else { "FAIL" };
        writeln!(
            out,
            "{:<17} {verdict}  worst {:+.3e} (tol {:.0e}){at}, {} checked, {} skipped",
            c.name, c.worst, c.tolerance, c.checked, c.skipped
        )
        .unwrap();
    }
    out
}

/// Refinement table against the finest `k` (or `reference` if given).
pub fn sweep_scenario(
    scenario: &Scenario,
    ks: &[usize],
    reference: Option<usize>,
) -> Result<Vec<RefinementRow>, CliError> {
    if ks.is_empty() {
        return Err(CliError::config("--ks", "needs at least one step count"));
    }
    if let Some(&k) = ks
        .iter()
        .chain(reference.as_ref())
        .find(|&&k| k < MIN_SWEEP_STEPS)
    {
        return Err(CliError::config(
            "--ks",
            format!("step counts must be at least {MIN_SWEEP_STEPS}, got {k}"),
        ));
    }
    let prepared = scenario.prepare()?;
    let model = build_model(&prepared)?;
    let finest = reference.unwrap_or_else(|| *ks.iter().max().unwrap());
    let mut all: Vec<usize> = ks.to_vec();
    all.push(finest);
    let runs: Vec<Result<Trajectory, CliError>> = all
        .par_iter()
        .map(|&k| {
            Ok(run(
                &model,
                &prepared.laws,
                &prepared.load,
                k,
                &prepared.initial,
                &prepared.opts,
            )?)
        })
        .collect();
    let mut runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let reference = runs.pop().unwrap();
    let rows: Vec<RefinementRow> = runs
        .iter()
        .map(|t| verify::compare(t, &reference, &prepared.laws))
        .collect();
    output::write(
        &scenario.output_dir(),
        "refinement.csv",
        &output::refinement_csv(&rows),
    )?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawDump {
    pub kind: LawKindConfig,
    pub kappa: f64,
    pub scale: f64,
}

/// Self-contained step problem for `oracle-compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDump {
    #[serde(rename = "S")]
    pub s: Vec<Vec<f64>>,
    pub c_unit: Vec<f64>,
    pub e0_unit: f64,
    pub weights: Vec<f64>,
    pub laws: Vec<LawDump>,
    #[serde(rename = "V_prev")]
    pub v_prev: Vec<f64>,
    pub p: Vec<f64>,
    pub amp: f64,
    /// Approximate number of coarse grid points for the brute force.
    #[serde(default)]
    pub grid_points: Option<u64>,
}

impl ProblemDump {
    /// The problem solved at step `i` of a trajectory.
    pub fn for_step(model: &ReducedModel, laws: &LawField, traj: &Trajectory, i: usize) -> Self {
        let m = model.interface_len();
        let s = model.interface_matrix();
        let prev = &traj.records[i - 1];
        ProblemDump {
            s: (0..m).map(|r| s.row(r).to_vec()).collect(),
            c_unit: model.c_unit().to_vec(),
            e0_unit: model.e0_unit(),
            weights: model.weights().to_vec(),
            laws: laws
                .iter()
                .map(|l| LawDump {
                    kind: match l.kind {
                        LawKind::CappedLinear => LawKindConfig::CappedLinear,
                        LawKind::Exponential => LawKindConfig::Exponential,
                    },
                    kappa: l.kappa,
                    scale: l.scale,
                })
                .collect(),
            v_prev: prev.v.clone(),
            p: prev.z.clone(),
            amp: traj.records[i].amp,
            grid_points: None,
        }
    }

    pub fn build(&self) -> Result<(InterfaceEnergy, LawField), CliError> {
        let m = self.s.len();
        let mut s = DenseMatrix::zeros(m);
        for (r, row) in self.s.iter().enumerate() {
            if row.len() != m {
                return Err(CliError::config(
                    &format!("S[{r}]"),
                    format!("expected {m} entries, got {}", row.len()),
                ));
            }
            for (c, v) in row.iter().enumerate() {
                s.set(r, c, *v);
            }
        }
        let energy =
            InterfaceEnergy::new(s, self.c_unit.clone(), self.e0_unit, self.weights.clone())
                .map_err(|e| CliError::config("S", e.to_string()))?;
        let laws = self
            .laws
            .iter()
            .enumerate()
            .map(|(e, l)| {
                CohesiveLaw::new(l.kind.into(), l.kappa, l.scale)
                    .map_err(|err| CliError::config(&format!("laws[{e}]"), err.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let laws =
            LawField::from_nodes(laws).map_err(|e| CliError::config("laws", e.to_string()))?;
        Ok((energy, laws))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub solver_energy: f64,
    pub oracle_energy: f64,
    pub solver_z: Vec<f64>,
    pub oracle_z: Vec<f64>,
}

impl OracleComparison {
    pub fn energy_gap(&self) -> f64 {
        (self.solver_energy - self.oracle_energy).abs()
    }

    pub fn z_gap(&self) -> f64 {
        self.solver_z
            .iter()
            .zip(&self.oracle_z)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("quantity,solver,oracle,delta\n");
        let d = self.solver_energy - self.oracle_energy;
        writeln!(
            out,
            "F,{},{},{}",
            num(self.solver_energy),
            num(self.oracle_energy),
            num(d)
        )
        .unwrap();
        for (e, (a, b)) in self.solver_z.iter().zip(&self.oracle_z).enumerate() {
            writeln!(out, "z_{e},{},{},{}", num(*a), num(*b), num(a - b)).unwrap();
        }
        out
    }
}

pub const DEFAULT_GRID_POINTS: u64 = 1_000_000;

pub fn oracle_compare(
    dump: &ProblemDump,
    opts: &StepOptions,
) -> Result<OracleComparison, CliError> {
    let (energy, laws) = dump.build()?;
    let problem = StepProblem::new(
        &energy,
        &laws,
        dump.v_prev.clone(),
        dump.p.clone(),
        dump.amp,
    )
    .map_err(|e| CliError::Config {
        key: None,
        message: e.to_string(),
    })?;
    let solver =
        cohesive_core::solve_step(&problem, opts).map_err(|e| CliError::Solver(e.to_string()))?;
    let grid = GridSpec::covering(&problem, dump.grid_points.unwrap_or(DEFAULT_GRID_POINTS));
    let oracle = brute_force_step(&problem, &grid).map_err(|e| CliError::Config {
        key: None,
        message: e.to_string(),
    })?;
    Ok(OracleComparison {
        solver_energy: solver.energy,
        oracle_energy: oracle.energy,
        solver_z: solver.z,
        oracle_z: oracle.z,
    })
}

#[derive(Debug, Clone)]
pub struct FatigueDemo {
    pub stiffness: f64,
    pub amplitude: f64,
    pub recursion: FatigueRecursion,
    /// Mean `V` over nodes at the end of each cycle of the run.
    pub run_v: Vec<f64>,
    pub law: CohesiveLaw,
}

impl FatigueDemo {
    pub fn first_cycle_run(&self, level: f64) -> Option<usize> {
        self.run_v
            .iter()
            .position(|v| self.law.value(*v) >= level)
            .map(|i| i + 1)
    }

    pub fn first_cycle_recursion(&self, level: f64) -> Option<usize> {
        self.recursion.first_cycle_reaching(&self.law, level)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("cycle,V_run,V_recursion,g_run,g_recursion,z_up,z_down\n");
        for (c, (v, rec)) in self.run_v.iter().zip(&self.recursion.cycles).enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c + 1,
                num(*v),
                num(rec.v_end),
                num(self.law.value(*v)),
                num(self.law.value(rec.v_end)),
                num(rec.z_up),
                num(rec.z_down)
            )
            .unwrap();
        }
        out
    }
}

/// Runs a triangle-wave scenario and sets it beside the scalar cycle map.
pub fn demo_fatigue(scenario: &Scenario) -> Result<(RunOutcome, FatigueDemo), CliError> {
    let wave = scenario.load.triangle_wave.ok_or_else(|| {
        CliError::config(
            "load.triangle_wave",
            "the fatigue demo needs a triangle-wave load",
        )
    })?;
    if !scenario.law.overrides.is_empty() {
        return Err(CliError::config(
            "law.overrides",
            "the fatigue demo needs a uniform law",
        ));
    }
    if !scenario.time.steps.is_multiple_of(wave.cycles) {
        return Err(CliError::config(
            "time.steps",
            "must be a multiple of load.triangle_wave.cycles",
        ));
    }
    let outcome = run_scenario(scenario, RunOptions::default())?;
    let law = outcome.prepared.laws[0];
    let m = outcome.model.interface_len();
    let ones = vec![1.0; m];
    let total: f64 = outcome.model.interface_matrix().mul_vec(&ones).iter().sum();
    let stiffness = total / scenario.mesh.lx;
    let v0 = outcome.prepared.initial.v0.iter().sum::<f64>() / m as f64;
    let recursion = scalar_fatigue_recursion(&law, stiffness, wave.amplitude, v0, wave.cycles)
        .map_err(|e| CliError::Solver(e.to_string()))?;
    let per_cycle = scenario.time.steps / wave.cycles;
    let run_v = (1..=wave.cycles)
        .map(|c| {
            outcome.trajectory.records[c * per_cycle]
                .v
                .iter()
                .sum::<f64>()
                / m as f64
        })
        .collect();
    let demo = FatigueDemo {
        stiffness,
        amplitude: wave.amplitude,
        recursion,
        run_v,
        law,
    };
    output::write(&outcome.dir, "fatigue.csv", &demo.csv())?;
    Ok((outcome, demo))
}
