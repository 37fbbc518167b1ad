//! Discrete-time evolution: a sequence of incremental minimizations on a
//! uniform time grid, with the variation update and energy bookkeeping.

use alloc::boxed::Box;
use alloc::vec::Vec;
use thiserror::Error;

use crate::law::{LawError, LawField};
use crate::load::{eta_bound, LoadError, LoadProgram};
use crate::reduced::ReducedModel;
use crate::step::{solve_step, Start, StepError, StepOptions, StepProblem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolutionError {
    #[error(
        "initial state is not globally stable: a competitor lowers the energy by {improvement:e}"
    )]
    InitialNotStable {
        improvement: f64,
        competitor: Vec<f64>,
    },
    #[error("initial variation {v0} at node {node} is below the initial jump magnitude {jump}")]
    InitialInconsistent { node: usize, v0: f64, jump: f64 },
    #[error("{what} has {got} entries, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("step count must be at least 1")]
    NoSteps,
    #[error("step {step} failed: {source}")]
    Step {
        step: usize,
        source: StepError,
        partial: Box<Trajectory>,
    },
    #[error("index out of range: node {node}, steps {i}..{j} of {len}")]
    Index {
        node: usize,
        i: usize,
        j: usize,
        len: usize,
    },
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Law(#[from] LawError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub z0: Vec<f64>,
    pub v0: Vec<f64>,
}

impl InitialState {
    /// Uncracked and undamaged.
    pub fn zero(m: usize) -> Self {
        InitialState {
            z0: alloc::vec![0.0; m],
            v0: alloc::vec![0.0; m],
        }
    }

    pub fn new(z0: Vec<f64>, v0: Vec<f64>) -> Result<Self, EvolutionError> {
        let state = InitialState { z0, v0 };
        state.check(state.z0.len())?;
        Ok(state)
    }

    pub fn check(&self, m: usize) -> Result<(), EvolutionError> {
        for (what, got) in [("z0", self.z0.len()), ("V0", self.v0.len())] {
            if got != m {
                return Err(EvolutionError::Dimension {
                    what,
                    expected: m,
                    got,
                });
            }
        }
        for (node, (&v0, &z0)) in self.v0.iter().zip(&self.z0).enumerate() {
            if !(v0 >= z0.abs()) {
                return Err(EvolutionError::InitialInconsistent {
                    node,
                    v0,
                    jump: z0.abs(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub amp: f64,
    pub z: Vec<f64>,
    pub v: Vec<f64>,
    pub traction: Vec<f64>,
    pub broken: Vec<bool>,
    pub elastic: f64,
    /// `Σ w_e g_e(V_e)`
    pub dissipated: f64,
    /// Cumulative work of the boundary data.
    pub work: f64,
    /// `(E_i + D_i) − (E_0 + D_0) − W_i`
    pub drift: f64,
    pub sweeps: [usize; 3],
    pub start: Option<Start>,
    pub stationarity_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverStats {
    pub total_sweeps: usize,
    pub max_sweeps: usize,
    pub max_stationarity_residual: f64,
    /// Number of steps won by each start, in [`Start::ALL`] order.
    pub wins: [usize; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    pub eta: f64,
    pub steps: usize,
    pub horizon: f64,
    pub stats: SolverStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn nodes(&self) -> usize {
        self.records.first().map_or(0, |r| r.z.len())
    }

    pub fn final_record(&self) -> &StepRecord {
        self.records
            .last()
            .expect("trajectory has the initial record")
    }

    pub fn max_drift(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.drift)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_drift(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.drift.abs())
            .fold(0.0, f64::max)
    }

    /// First step at which node `e` is broken.
    pub fn rupture_step(&self, e: usize) -> Option<usize> {
        self.records.iter().position(|r| r.broken[e])
    }

    pub fn rupture_time(&self, e: usize) -> Option<f64> {
        self.rupture_step(e).map(|i| self.records[i].t)
    }

    /// Index of the record holding the state at time `t` under the
    /// piecewise-constant interpolation `u_k(t) = u_k^i` on `[t_i, t_{i+1})`.
    pub fn index_at(&self, t: f64) -> usize {
        let k = self.steps as f64;
        let i = (t / self.horizon * k).floor();
        if !(i > 0.0) {
            0
        } else {
            (i as usize).min(self.len() - 1)
        }
    }
}

/// Runs the incremental scheme on `t_i = T·i/k`, `i = 0..=k`.
///
/// The initial state is first audited for global stability: one step is
/// solved at `t = 0` from `(z0, V0)` and rejected if it lowers the energy
/// by more than `opts.tol`.
pub fn run(
    model: &ReducedModel,
    laws: &LawField,
    load: &LoadProgram,
    k: usize,
    initial: &InitialState,
    opts: &StepOptions,
) -> Result<Trajectory, EvolutionError> {
    if k == 0 {
        return Err(EvolutionError::NoSteps);
    }
    let energy = model.interface();
    let m = energy.len();
    initial.check(m)?;
    laws.check_len(m)?;
    let lift_norm = model.mesh().spec.lift_gradient_norm();
    let eta = eta_bound(load, lift_norm, k)?;
    let times = load.times(k);
    let w = energy.weights();
    let surface = |v: &[f64]| -> f64 { (0..m).map(|e| w[e] * laws[e].value(v[e])).sum() };
    let broken = |v: &[f64]| -> Vec<bool> { (0..m).map(|e| laws[e].is_broken(v[e])).collect() };

    let amp0 = load.amp(0.0);
    let audit = StepProblem::new(energy, laws, initial.v0.clone(), initial.z0.clone(), amp0)
        .map_err(|source| EvolutionError::Step {
            step: 0,
            source,
            partial: Box::new(empty(eta, k, load)),
        })?;
    let f0 = audit.total_energy(&initial.z0);
    let competitor = solve_step(&audit, opts).map_err(|source| EvolutionError::Step {
        step: 0,
        source,
        partial: Box::new(empty(eta, k, load)),
    })?;
    if f0 - competitor.energy > opts.tol {
        return Err(EvolutionError::InitialNotStable {
            improvement: f0 - competitor.energy,
            competitor: competitor.z,
        });
    }

    let e0 = energy.energy(&initial.z0, amp0);
    let d0 = surface(&initial.v0);
    let mut trajectory = empty(eta, k, load);
    trajectory.records.push(StepRecord {
        t: 0.0,
        amp: amp0,
        z: initial.z0.clone(),
        v: initial.v0.clone(),
        traction: energy.traction_unchecked(&initial.z0, amp0),
        broken: broken(&initial.v0),
        elastic: e0,
        dissipated: d0,
        work: 0.0,
        drift: 0.0,
        sweeps: [0; 3],
        start: None,
        stationarity_residual: audit.stationarity_residual(&initial.z0),
    });

    for (i, &t) in times.iter().enumerate().skip(1) {
        let prev = trajectory.final_record();
        let amp = load.amp(t);
        let work = prev.work + (amp - prev.amp) * energy.lift_pairing(&prev.z, prev.amp);
        let problem = StepProblem {
            energy,
            laws,
            v_prev: prev.v.clone(),
            p: prev.z.clone(),
            amp,
        };
        let solution = match solve_step(&problem, opts) {
            Ok(s) => s,
            Err(source) => {
                return Err(EvolutionError::Step {
                    step: i,
                    source,
                    partial: Box::new(trajectory),
                })
            }
        };
        let v = problem.updated_variation(&solution.z);
        let elastic = solution.elastic;
        let dissipated = surface(&v);
        let stats = &mut trajectory.stats;
        let used: usize = solution.sweeps.iter().sum();
        stats.total_sweeps += used;
        stats.max_sweeps = stats.max_sweeps.max(used);
        stats.max_stationarity_residual = stats
            .max_stationarity_residual
            .max(solution.stationarity_residual);
        stats.wins[Start::ALL
            .iter()
            .position(|s| *s == solution.start)
            .unwrap()] += 1;
        trajectory.records.push(StepRecord {
            t,
            amp,
            traction: energy.traction_unchecked(&solution.z, amp),
            broken: broken(&v),
            elastic,
            dissipated,
            work,
            drift: (elastic + dissipated) - (e0 + d0) - work,
            sweeps: solution.sweeps,
            start: Some(solution.start),
            stationarity_residual: solution.stationarity_residual,
            z: solution.z,
            v,
        });
    }
    Ok(trajectory)
}

fn empty(eta: f64, k: usize, load: &LoadProgram) -> Trajectory {
    Trajectory {
        records: Vec::with_capacity(k + 1),
        eta,
        steps: k,
        horizon: load.horizon(),
        stats: SolverStats::default(),
    }
}

/// `Σ_{h=i+1..j} |z_h − z_{h−1}|` at node `e`.
pub fn discrete_variation(
    trajectory: &Trajectory,
    e: usize,
    i: usize,
    j: usize,
) -> Result<f64, EvolutionError> {
    let len = trajectory.len();
    if i > j || j >= len || e >= trajectory.nodes() {
        return Err(EvolutionError::Index { node: e, i, j, len });
    }
    let r = &trajectory.records;
    Ok((i + 1..=j).map(|h| (r[h].z[e] - r[h - 1].z[e]).abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::CohesiveLaw;
    use crate::mesh::{DomainSpec, Mesh};
    use alloc::vec;

    fn two_bar() -> ReducedModel {
        ReducedModel::from_mesh(Mesh::build(DomainSpec::two_bar()).unwrap()).unwrap()
    }

    #[test]
    fn zero_load_is_trivial() {
        let model = two_bar();
        let laws = LawField::uniform(CohesiveLaw::capped_linear(0.5, 1.0).unwrap(), 2);
        let load = LoadProgram::constant(0.0, 1.0).unwrap();
        let traj = run(
            &model,
            &laws,
            &load,
            10,
            &InitialState::zero(2),
            &StepOptions::default(),
        )
        .unwrap();
        assert_eq!(traj.len(), 11);
        for r in &traj.records {
            assert!(r.z.iter().chain(&r.v).all(|&x| x == 0.0));
            assert_eq!(
                (r.elastic, r.dissipated, r.work, r.drift),
                (0.0, 0.0, 0.0, 0.0)
            );
        }
        assert_eq!(traj.eta, 0.0);
    }

    #[test]
    fn variation_update_is_exact() {
        let model = two_bar();
        let laws = LawField::uniform(CohesiveLaw::exponential(1.0, 5.0).unwrap(), 2);
        let load = LoadProgram::triangle_wave(0.3, 1.0, 3).unwrap();
        let traj = run(
            &model,
            &laws,
            &load,
            120,
            &InitialState::zero(2),
            &StepOptions::default(),
        )
        .unwrap();
        for e in 0..2 {
            let mut v = 0.0;
            for i in 1..traj.len() {
                v += (traj.records[i].z[e] - traj.records[i - 1].z[e]).abs();
                assert_eq!(traj.records[i].v[e], v);
                assert_eq!(discrete_variation(&traj, e, 0, i).unwrap(), v);
            }
            assert_eq!(discrete_variation(&traj, e, 5, 5).unwrap(), 0.0);
        }
        assert!(discrete_variation(&traj, 0, 3, 2).is_err());
        assert!(discrete_variation(&traj, 2, 0, 1).is_err());
    }

    #[test]
    fn doubled_horizon_and_steps_give_the_same_path() {
        let model = two_bar();
        let laws = LawField::uniform(CohesiveLaw::capped_linear(0.5, 1.0).unwrap(), 2);
        let a = LoadProgram::new(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.2)]).unwrap();
        let b = LoadProgram::new(vec![(0.0, 0.0), (2.0, 1.0), (4.0, 0.2)]).unwrap();
        let ta = run(
            &model,
            &laws,
            &a,
            40,
            &InitialState::zero(2),
            &StepOptions::default(),
        )
        .unwrap();
        let tb = run(
            &model,
            &laws,
            &b,
            40,
            &InitialState::zero(2),
            &StepOptions::default(),
        )
        .unwrap();
        for (ra, rb) in ta.records.iter().zip(&tb.records) {
            assert_eq!(ra.z, rb.z);
            assert_eq!(ra.v, rb.v);
        }
    }

    #[test]
    fn unstable_initial_state_is_rejected() {
        let model = two_bar();
        let laws = LawField::uniform(CohesiveLaw::capped_linear(0.5, 1.0).unwrap(), 2);
        let load = LoadProgram::constant(2.0, 1.0).unwrap();
        let err = run(
            &model,
            &laws,
            &load,
            4,
            &InitialState::zero(2),
            &StepOptions::default(),
        )
        .unwrap_err();
        assert!(
            matches!(err, EvolutionError::InitialNotStable { improvement, .. } if improvement > 0.0)
        );
    }

    #[test]
    fn inconsistent_initial_state_is_rejected() {
        assert!(matches!(
            InitialState::new(vec![0.5, 0.0], vec![0.1, 0.0]),
            Err(EvolutionError::InitialInconsistent { node: 0, .. })
        ));
        let model = two_bar();
        let laws = LawField::uniform(CohesiveLaw::capped_linear(0.5, 1.0).unwrap(), 2);
        let load = LoadProgram::constant(0.0, 1.0).unwrap();
        let err = run(
            &model,
            &laws,
            &load,
            4,
            &InitialState::zero(3),
            &StepOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, EvolutionError::Dimension { .. }));
        assert_eq!(
            run(
                &model,
                &laws,
                &load,
                0,
                &InitialState::zero(2),
                &StepOptions::default()
            ),
            Err(EvolutionError::NoSteps)
        );
    }

    #[test]
    fn step_failure_returns_partial_trajectory() {
        let model = two_bar();
        let laws = LawField::uniform(CohesiveLaw::capped_linear(0.5, 1.0).unwrap(), 2);
        let load = LoadProgram::linear(1.0, 2.0).unwrap();
        let opts = StepOptions {
            tol: 1e-300,
            max_sweeps: 3,
        };
        match run(&model, &laws, &load, 20, &InitialState::zero(2), &opts) {
            Err(EvolutionError::Step {
                step,
                partial,
                source: StepError::NonConvergence { .. },
            }) => {
                assert!(step > 0);
                assert_eq!(partial.len(), step);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn interpolation_index() {
        let model = two_bar();
        let laws = LawField::uniform(CohesiveLaw::capped_linear(0.5, 1.0).unwrap(), 2);
        let load = LoadProgram::linear(1.0, 2.0).unwrap();
        let traj = run(
            &model,
            &laws,
            &load,
            8,
            &InitialState::zero(2),
            &StepOptions::default(),
        )
        .unwrap();
        assert_eq!(traj.index_at(0.0), 0);
        assert_eq!(traj.index_at(0.26), 1);
        assert_eq!(traj.index_at(0.25), 1);
        assert_eq!(traj.index_at(2.0), 8);
        assert_eq!(traj.index_at(9.0), 8);
    }
}
