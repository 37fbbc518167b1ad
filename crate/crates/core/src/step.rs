//! One incremental minimization step.
//!
//! Minimizes
//!
//! ```text
//! F(z) = E(z; amp) + Σ_e w_e · g_e(V_e + |z_e − p_e|)
//! ```
//!
//! over the interface jumps `z`, where `p` are the previous jumps and `V`
//! the previous cumulated variations. The dissipation is separable and
//! concave in `|z_e − p_e|`, so each coordinate subproblem can be solved
//! to global optimality by enumerating its few candidate points. Cyclic
//! coordinate descent with those exact 1D solves is run from three
//! deterministic starting points and the lowest energy wins.

use alloc::vec::Vec;
use thiserror::Error;

use crate::law::{CohesiveLaw, LawError, LawField};
use crate::reduced::{InterfaceEnergy, ReducedError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("coordinate curvature must be positive, got {0}")]
    Curvature(f64),
    #[error("step problem has inconsistent sizes: {what} has {got} entries, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("previous variation must be nonnegative, node {node} has {value}")]
    NegativeVariation { node: usize, value: f64 },
    #[error("coordinate descent did not reach tolerance {tol:e} in {sweeps} sweeps (last move {last_move:e})")]
    NonConvergence {
        tol: f64,
        sweeps: usize,
        last_move: f64,
        best: Vec<f64>,
    },
    #[error(transparent)]
    Law(#[from] LawError),
    #[error(transparent)]
    Reduced(#[from] ReducedError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    /// Convergence threshold on the largest coordinate move in a sweep.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            tol: 1e-10,
            max_sweeps: 10_000,
        }
    }
}

/// Incremental problem at one time step.
#[derive(Debug, Clone)]
pub struct StepProblem<'a> {
    pub energy: &'a InterfaceEnergy,
    pub laws: &'a LawField,
    /// Cumulated variation before the step; entries may be `∞`.
    pub v_prev: Vec<f64>,
    /// Jumps at the previous step.
    pub p: Vec<f64>,
    pub amp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Start {
    /// `z⁰ = p`: nothing moves.
    Stay,
    /// `z⁰ = S⁻¹ c(amp)`: the purely elastic response.
    Elastic,
    /// Nodes that pass the stick test at `p` are held there, the others
    /// take the elastic response of the remaining system.
    PartialRupture,
}

impl Start {
    pub const ALL: [Start; 3] = [Start::Stay, Start::Elastic, Start::PartialRupture];

    pub fn name(self) -> &'static str {
        match self {
            Start::Stay => "stay",
            Start::Elastic => "elastic",
            Start::PartialRupture => "partial-rupture",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepSolution {
    pub z: Vec<f64>,
    /// Total `F(z)`.
    pub energy: f64,
    pub elastic: f64,
    /// `Σ w_e (g_e(V_e + |z_e − p_e|) − g_e(V_e))`
    pub dissipation_increment: f64,
    /// Sweeps used by each start, in [`Start::ALL`] order.
    pub sweeps: [usize; 3],
    pub start: Start,
    pub stationarity_residual: f64,
}

impl<'a> StepProblem<'a> {
    pub fn new(
        energy: &'a InterfaceEnergy,
        laws: &'a LawField,
        v_prev: Vec<f64>,
        p: Vec<f64>,
        amp: f64,
    ) -> Result<Self, StepError> {
        let problem = StepProblem {
            energy,
            laws,
            v_prev,
            p,
            amp,
        };
        problem.check()?;
        Ok(problem)
    }

    pub fn check(&self) -> Result<(), StepError> {
        let m = self.energy.len();
        for (what, got) in [
            ("laws", self.laws.len()),
            ("v_prev", self.v_prev.len()),
            ("p", self.p.len()),
        ] {
            if got != m {
                return Err(StepError::Dimension {
                    what,
                    expected: m,
                    got,
                });
            }
        }
        if let Some((node, &value)) = self.v_prev.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(StepError::NegativeVariation { node, value });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Variation after moving to `z`.
    pub fn updated_variation(&self, z: &[f64]) -> Vec<f64> {
        self.v_prev
            .iter()
            .zip(z)
            .zip(&self.p)
            .map(|((v, zi), pi)| v + (zi - pi).abs())
            .collect()
    }

    pub fn dissipation(&self, z: &[f64]) -> f64 {
        let w = self.energy.weights();
        (0..self.len())
            .map(|e| w[e] * self.laws[e].value(self.v_prev[e] + (z[e] - self.p[e]).abs()))
            .sum()
    }

    pub fn dissipation_increment(&self, z: &[f64]) -> f64 {
        let w = self.energy.weights();
        (0..self.len())
            .map(|e| {
                let law = &self.laws[e];
                w[e] * (law.value(self.v_prev[e] + (z[e] - self.p[e]).abs())
                    - law.value(self.v_prev[e]))
            })
            .sum()
    }

    /// Total incremental energy `F(z)`.
    pub fn total_energy(&self, z: &[f64]) -> f64 {
        self.energy.energy(z, self.amp) + self.dissipation(z)
    }

    /// `max_e dist(0, ∂_e F(z))` expressed as a traction mismatch; nodes in
    /// the kink guard band are skipped.
    pub fn stationarity_residual(&self, z: &[f64]) -> f64 {
        let t = self.energy.traction_unchecked(z, self.amp);
        let mut worst = 0.0f64;
        for e in 0..self.len() {
            let law = &self.laws[e];
            let d = z[e] - self.p[e];
            let r = if d == 0.0 {
                (t[e].abs() - law.slope(self.v_prev[e])).max(0.0)
            } else {
                let v_new = self.v_prev[e] + d.abs();
                if law.in_guard_band(v_new) {
                    continue;
                }
                (t[e] - d.signum() * law.slope(v_new)).abs()
            };
            worst = worst.max(r);
        }
        worst
    }

    fn starting_point(&self, start: Start) -> Vec<f64> {
        match start {
            Start::Stay => self.p.clone(),
            Start::Elastic => self.energy.elastic_minimizer(self.amp),
            Start::PartialRupture => {
                let t = self.energy.traction_unchecked(&self.p, self.amp);
                let fixed: Vec<Option<f64>> = (0..self.len())
                    .map(|e| {
                        let sticks = t[e].abs() <= self.laws[e].slope(self.v_prev[e]);
                        sticks.then_some(self.p[e])
                    })
                    .collect();
                self.energy.elastic_minimizer_with_fixed(self.amp, &fixed)
            }
        }
    }
}

/// `true` if `(h_new, d_new)` beats the incumbent `(h_old, d_old)`: lower
/// energy by more than `eps`, or tied within `eps` and closer to the
/// previous jump.
#[inline]
fn better(h_new: f64, d_new: f64, h_old: f64, d_old: f64, eps: f64) -> bool {
    h_new < h_old - eps || (h_new <= h_old + eps && d_new < d_old)
}

/// Roundoff level of `h(ζ)`.
#[inline]
fn coordinate_eps(a: f64, b: f64, law: &CohesiveLaw, v: f64, p: f64, w: f64, zeta: f64) -> f64 {
    64.0 * f64::EPSILON
        * (0.5 * a * zeta * zeta + (b * zeta).abs() + w * law.value(v + (zeta - p).abs()))
}

#[inline]
fn coordinate_energy(a: f64, b: f64, law: &CohesiveLaw, v: f64, p: f64, w: f64, zeta: f64) -> f64 {
    0.5 * a * zeta * zeta + b * zeta + w * law.value(v + (zeta - p).abs())
}

/// Stationary points of `ζ ↦ ½aζ² + bζ + w·g(v + ζ − p)` on `ζ > p` that
/// are local minima. At most two.
fn right_branch_minima(
    a: f64,
    b: f64,
    law: &CohesiveLaw,
    v: f64,
    p: f64,
    w: f64,
) -> [Option<f64>; 2] {
    let mut out = [None, None];
    // a ζ + b = −w g' ≤ 0 forces ζ ≤ −b/a
    let s_max = -b / a - p;
    if !(s_max > 0.0) {
        return out;
    }
    let phi = |s: f64| a * (p + s) + b + w * law.slope(v + s);
    let phi_left = |s: f64| a * (p + s) + b + w * law.slope_left(v + s);
    for (slot, window) in law
        .nondecreasing_slope_windows(v, a / w)
        .into_iter()
        .enumerate()
    {
        let Some(window) = window else { continue };
        let lo = window.lo;
        let hi = window.hi.min(s_max);
        if !(hi > lo) {
            continue;
        }
        if !(phi(lo) < 0.0 && phi_left(hi) > 0.0) {
            continue;
        }
        let s = if window.constant_slope {
            let slope = law.slope(v + lo);
            ((-b - w * slope) / a - p).clamp(lo, hi)
        } else {
            bracketed_root(&phi, |s| a + w * law.curvature(v + s), lo, hi)
        };
        out[slot] = Some(p + s);
    }
    out
}

/// Root of a nondecreasing `f` with `f(lo) < 0 < f(hi)`: Newton steps
/// safeguarded by bisection.
fn bracketed_root(
    f: &impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
) -> f64 {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        let d = df(x);
        let newton = x - fx / d;
        x = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if x == lo || x == hi {
            x = 0.5 * (lo + hi);
            if x == lo || x == hi {
                break;
            }
        }
    }
    x
}

/// Global minimizer of `h(ζ) = ½aζ² + bζ + w·g(v + |ζ − p|)`.
///
/// Candidates are the kink `ζ = p`, the local minima of each smooth branch
/// and, when the law saturates there, the unconstrained quadratic minimizer
/// `−b/a`. Ties go to the candidate closest to `p`.
pub fn solve_coordinate_1d(
    a: f64,
    b: f64,
    law: &CohesiveLaw,
    v: f64,
    p: f64,
    w: f64,
) -> Result<f64, StepError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(StepError::Curvature(a));
    }
    if !(v >= 0.0) {
        return Err(StepError::Law(LawError::Domain(v)));
    }
    Ok(coordinate_minimizer(a, b, law, v, p, w))
}

fn coordinate_minimizer(a: f64, b: f64, law: &CohesiveLaw, v: f64, p: f64, w: f64) -> f64 {
    let h = |zeta: f64| coordinate_energy(a, b, law, v, p, w, zeta);
    let mut best = p;
    let mut best_h = h(p);
    let mut consider = |zeta: f64| {
        let hz = h(zeta);
        let eps =
            coordinate_eps(a, b, law, v, p, w, zeta).max(coordinate_eps(a, b, law, v, p, w, best));
        if better(hz, (zeta - p).abs(), best_h, (best - p).abs(), eps) {
            best = zeta;
            best_h = hz;
        }
    };
    for zeta in right_branch_minima(a, b, law, v, p, w)
        .into_iter()
        .flatten()
    {
        consider(zeta);
    }
    // left branch: mirror ζ → −ζ
    for zeta in right_branch_minima(a, -b, law, v, -p, w)
        .into_iter()
        .flatten()
    {
        consider(-zeta);
    }
    let free = -b / a;
    if v + (free - p).abs() >= law.threshold() {
        consider(free);
    }
    best
}

struct Descent {
    z: Vec<f64>,
    sweeps: usize,
    last_move: f64,
    converged: bool,
}

fn coordinate_descent(problem: &StepProblem<'_>, mut z: Vec<f64>, opts: &StepOptions) -> Descent {
    let energy = problem.energy;
    let s = energy.matrix();
    let w = energy.weights();
    let m = problem.len();
    let mut last_move = f64::INFINITY;
    for sweep in 1..=opts.max_sweeps {
        let mut grad = energy.gradient(&z, problem.amp);
        let mut max_move = 0.0f64;
        for e in 0..m {
            let a = s.get(e, e);
            let b = grad[e] - a * z[e];
            let law = &problem.laws[e];
            let (v, p) = (problem.v_prev[e], problem.p[e]);
            let candidate = coordinate_minimizer(a, b, law, v, p, w[e]);
            let h_new = coordinate_energy(a, b, law, v, p, w[e], candidate);
            let h_old = coordinate_energy(a, b, law, v, p, w[e], z[e]);
            let eps = coordinate_eps(a, b, law, v, p, w[e], candidate)
                .max(coordinate_eps(a, b, law, v, p, w[e], z[e]));
            if candidate != z[e] && h_new <= h_old + eps {
                let delta = candidate - z[e];
                z[e] = candidate;
                for (gi, sij) in grad.iter_mut().zip(s.row(e)) {
                    *gi += delta * sij;
                }
                max_move = max_move.max(delta.abs());
            }
        }
        last_move = max_move;
        if max_move < opts.tol {
            return Descent {
                z,
                sweeps: sweep,
                last_move,
                converged: true,
            };
        }
    }
    Descent {
        z,
        sweeps: opts.max_sweeps,
        last_move,
        converged: false,
    }
}

/// Solves the incremental problem by multi-start cyclic coordinate descent.
pub fn solve_step(
    problem: &StepProblem<'_>,
    opts: &StepOptions,
) -> Result<StepSolution, StepError> {
    problem.check()?;
    let w = problem.energy.weights();
    let distance = |z: &[f64]| -> f64 {
        (0..z.len())
            .map(|e| w[e] * (z[e] - problem.p[e]).abs())
            .sum()
    };

    let mut sweeps = [0usize; 3];
    let mut best: Option<(Start, Descent, f64)> = None;
    for (k, start) in Start::ALL.into_iter().enumerate() {
        let run = coordinate_descent(problem, problem.starting_point(start), opts);
        sweeps[k] = run.sweeps;
        let f = problem.total_energy(&run.z);
        let wins = match &best {
            None => true,
            Some((_, incumbent, f_best)) => {
                better(f, distance(&run.z), *f_best, distance(&incumbent.z), 0.0)
            }
        };
        if wins {
            best = Some((start, run, f));
        }
    }
    let (start, run, energy) = best.expect("at least one start");
    if !run.converged {
        return Err(StepError::NonConvergence {
            tol: opts.tol,
            sweeps: run.sweeps,
            last_move: run.last_move,
            best: run.z,
        });
    }
    let z = run.z;
    Ok(StepSolution {
        elastic: problem.energy.energy(&z, problem.amp),
        dissipation_increment: problem.dissipation_increment(&z),
        stationarity_residual: problem.stationarity_residual(&z),
        energy,
        sweeps,
        start,
        z,
    })
}

/// Convenience: one-node problem data for [`solve_coordinate_1d`] built
/// from a full step problem at node `e` with all other jumps held at `z`.
pub fn coordinate_coefficients(problem: &StepProblem<'_>, z: &[f64], e: usize) -> (f64, f64) {
    let a = problem.energy.matrix().get(e, e);
    let grad = problem.energy.gradient(z, problem.amp);
    (a, grad[e] - a * z[e])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::CohesiveLaw;
    use crate::linalg::DenseMatrix;
    use crate::mesh::{DomainSpec, Mesh};
    use crate::reduced::ReducedModel;
    use alloc::vec;
    use proptest::prelude::*;

    fn capped() -> CohesiveLaw {
        CohesiveLaw::capped_linear(0.5, 1.0).unwrap()
    }

    /// Exhaustive grid over `[lo, hi]` with step `dz`.
    fn grid_argmin(h: impl Fn(f64) -> f64, lo: f64, hi: f64, dz: f64) -> (f64, f64) {
        let n = ((hi - lo) / dz).round() as usize;
        let mut best = (lo, h(lo));
        for i in 0..=n {
            let x = lo + i as f64 * dz;
            let hx = h(x);
            if hx < best.1 {
                best = (x, hx);
            }
        }
        best
    }

    #[test]
    fn two_bar_coordinate_examples_match_grid_oracle() {
        let law = capped();
        for (b, expected) in [(-0.4, 0.0), (-0.8, 0.3), (-2.0, 2.0)] {
            let zeta = solve_coordinate_1d(1.0, b, &law, 0.0, 0.0, 1.0).unwrap();
            let h = |x: f64| coordinate_energy(1.0, b, &law, 0.0, 0.0, 1.0, x);
            let (z_grid, h_grid) = grid_argmin(h, -1.0, 2.0, 1e-6);
            assert!((zeta - expected).abs() < 1e-12, "b={b}: got {zeta}");
            assert!((zeta - z_grid).abs() <= 2e-6, "b={b}: grid {z_grid}");
            assert!(h(zeta) <= h_grid + 1e-12);
        }
    }

    #[test]
    fn saturated_candidate_beats_interior() {
        // F(2.0) = 0.5 < F(1.5) = 0.625 with F = ½(2 − z)² + g(z)
        let law = capped();
        let f = |z: f64| 0.5 * (2.0 - z) * (2.0 - z) + law.value(z);
        assert!((f(2.0) - 0.5).abs() < 1e-15);
        assert!((f(1.5) - 0.625).abs() < 1e-15);
        assert_eq!(
            solve_coordinate_1d(1.0, -2.0, &law, 0.0, 0.0, 1.0).unwrap(),
            2.0
        );
    }

    #[test]
    fn nonpositive_curvature_rejected() {
        assert_eq!(
            solve_coordinate_1d(0.0, 1.0, &capped(), 0.0, 0.0, 1.0),
            Err(StepError::Curvature(0.0))
        );
        assert!(solve_coordinate_1d(-1.0, 1.0, &capped(), 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn left_branch_mirrors_right() {
        let law = CohesiveLaw::exponential(1.0, 5.0).unwrap();
        let right = solve_coordinate_1d(1.0, -0.3, &law, 0.4, 0.1, 1.0).unwrap();
        let left = solve_coordinate_1d(1.0, 0.3, &law, 0.4, -0.1, 1.0).unwrap();
        assert!((right + left).abs() < 1e-14);
        assert!(right > 0.1);
    }

    #[test]
    fn broken_node_goes_elastic() {
        let law = capped();
        assert_eq!(
            solve_coordinate_1d(2.0, -1.0, &law, 1.5, 0.3, 0.5).unwrap(),
            0.5
        );
        assert_eq!(
            solve_coordinate_1d(2.0, -1.0, &law, f64::INFINITY, 0.3, 0.5).unwrap(),
            0.5
        );
    }

    fn scalar_energy(s: f64, c: f64, w: f64) -> InterfaceEnergy {
        let mut m = DenseMatrix::zeros(1);
        m.set(0, 0, s);
        InterfaceEnergy::new(m, vec![c], c * c / s, vec![w]).unwrap()
    }

    proptest! {
        #[test]
        fn coordinate_solve_matches_grid(
            capped_law in prop::bool::ANY,
            kappa in 0.1f64..2.0,
            scale in 0.2f64..3.0,
            a in 0.2f64..3.0,
            b in -4.0f64..4.0,
            v in 0.0f64..3.0,
            p in -1.0f64..1.0,
            w in 0.2f64..2.0,
        ) {
            let law = if capped_law { CohesiveLaw::capped_linear(kappa, scale) } else { CohesiveLaw::exponential(kappa, scale) }.unwrap();
            let zeta = solve_coordinate_1d(a, b, &law, v, p, w).unwrap();
            let h = |x: f64| coordinate_energy(a, b, &law, v, p, w, x);
            let span = b.abs() / a + p.abs() + 2.0;
            let (_, h_grid) = grid_argmin(h, -span, span, 1e-4);
            prop_assert!(h(zeta) <= h_grid + 1e-12, "h(ζ*)={} grid={}", h(zeta), h_grid);
        }
    }

    #[test]
    fn zero_load_stays_put() {
        let model =
            ReducedModel::from_mesh(Mesh::build(DomainSpec::new(2.0, 1.0, 4, 2).unwrap()).unwrap())
                .unwrap();
        let laws = LawField::uniform(capped(), 5);
        let v0 = vec![0.0, 0.2, 0.4, 0.6, 0.8];
        let problem =
            StepProblem::new(model.interface(), &laws, v0.clone(), vec![0.0; 5], 0.0).unwrap();
        let sol = solve_step(&problem, &StepOptions::default()).unwrap();
        assert!(sol.z.iter().all(|&z| z == 0.0));
        assert_eq!(sol.dissipation_increment, 0.0);
        let constant: f64 = v0
            .iter()
            .zip(model.weights())
            .map(|(v, w)| w * capped().value(*v))
            .sum();
        assert!((sol.energy - constant).abs() < 1e-15);
    }

    #[test]
    fn all_broken_gives_elastic_minimizer() {
        let model =
            ReducedModel::from_mesh(Mesh::build(DomainSpec::new(2.0, 1.0, 4, 2).unwrap()).unwrap())
                .unwrap();
        let laws = LawField::uniform(capped(), 5);
        let problem =
            StepProblem::new(model.interface(), &laws, vec![1.5; 5], vec![0.1; 5], 0.8).unwrap();
        let sol = solve_step(&problem, &StepOptions::default()).unwrap();
        let elastic = model.elastic_minimizer(0.8);
        for (z, ze) in sol.z.iter().zip(&elastic) {
            assert!((z - ze).abs() < 1e-12);
        }
        assert_eq!(sol.dissipation_increment, 0.0);
    }

    #[test]
    fn two_bar_symmetric_load_keeps_symmetry() {
        let model = ReducedModel::from_mesh(Mesh::build(DomainSpec::two_bar()).unwrap()).unwrap();
        let laws = LawField::uniform(capped(), 2);
        for amp in [0.3, 0.8, 1.1, 2.0] {
            let problem =
                StepProblem::new(model.interface(), &laws, vec![0.0; 2], vec![0.0; 2], amp)
                    .unwrap();
            let sol = solve_step(&problem, &StepOptions::default()).unwrap();
            assert!((sol.z[0] - sol.z[1]).abs() < 1e-9, "amp={amp}: {:?}", sol.z);
        }
    }

    #[test]
    fn stationarity_examples() {
        // scalar two-bar: E = ½(amp − z)², w = 1
        let energy = scalar_energy(1.0, 1.0, 1.0);
        let laws = LawField::uniform(capped(), 1);
        let amp = 0.8;
        let problem = StepProblem::new(&energy, &laws, vec![0.0], vec![0.0], amp).unwrap();
        let interior = amp - 0.5;
        assert!(problem.stationarity_residual(&[interior]) < 1e-15);
        let below = StepProblem::new(&energy, &laws, vec![0.0], vec![0.0], 0.3).unwrap();
        assert_eq!(below.stationarity_residual(&[0.0]), 0.0);
        let above = StepProblem::new(&energy, &laws, vec![0.0], vec![0.0], 0.6).unwrap();
        assert!((above.stationarity_residual(&[0.0]) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn descent_is_deterministic() {
        let model =
            ReducedModel::from_mesh(Mesh::build(DomainSpec::new(3.0, 1.0, 6, 4).unwrap()).unwrap())
                .unwrap();
        let laws = LawField::uniform(CohesiveLaw::exponential(1.0, 0.5).unwrap(), 7);
        let v: Vec<f64> = (0..7).map(|e| 0.1 * e as f64).collect();
        let p: Vec<f64> = (0..7).map(|e| 0.02 * e as f64).collect();
        let problem = StepProblem::new(model.interface(), &laws, v, p, 1.2).unwrap();
        let a = solve_step(&problem, &StepOptions::default()).unwrap();
        let b = solve_step(&problem, &StepOptions::default()).unwrap();
        assert_eq!(a, b);
        for start in Start::ALL {
            assert!(a.energy <= problem.total_energy(&problem.starting_point(start)) + 1e-12);
        }
        assert!(a.stationarity_residual < 1e-8);
    }

    #[test]
    fn sweeps_never_increase_energy() {
        let model =
            ReducedModel::from_mesh(Mesh::build(DomainSpec::new(2.0, 1.0, 5, 2).unwrap()).unwrap())
                .unwrap();
        let laws = LawField::uniform(capped(), 6);
        let problem =
            StepProblem::new(model.interface(), &laws, vec![0.3; 6], vec![0.05; 6], 1.4).unwrap();
        let mut z = problem.p.clone();
        let mut f = problem.total_energy(&z);
        for _ in 0..20 {
            let run = coordinate_descent(
                &problem,
                z.clone(),
                &StepOptions {
                    tol: 0.0,
                    max_sweeps: 1,
                },
            );
            let f_new = problem.total_energy(&run.z);
            assert!(f_new <= f + 1e-14);
            z = run.z;
            f = f_new;
        }
    }

    #[test]
    fn dimension_checks() {
        let energy = scalar_energy(1.0, 1.0, 1.0);
        let laws = LawField::uniform(capped(), 2);
        assert!(matches!(
            StepProblem::new(&energy, &laws, vec![0.0], vec![0.0], 0.0),
            Err(StepError::Dimension { what: "laws", .. })
        ));
        let laws = LawField::uniform(capped(), 1);
        assert!(matches!(
            StepProblem::new(&energy, &laws, vec![-1.0], vec![0.0], 0.0),
            Err(StepError::NegativeVariation { node: 0, .. })
        ));
    }
}
