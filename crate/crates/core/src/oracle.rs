//! Brute-force references for tiny instances.
//!
//! [`brute_force_step`] minimizes the step objective on a tensor grid and
//! then zooms in around the best grid cells. It evaluates the objective
//! directly from `S`, `c` and the laws and shares no code with the
//! coordinate-descent solver. [`scalar_fatigue_recursion`] gives the
//! quasistatic response of a uniformly loaded interface to a symmetric
//! triangle wave, cycle by cycle.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::law::CohesiveLaw;
use crate::step::StepProblem;

pub const MAX_ORACLE_NODES: usize = 3;
pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("brute force supports at most {MAX_ORACLE_NODES} interface nodes, got {0}")]
    TooManyNodes(usize),
    #[error("grid needs {needed} points, budget is {budget}")]
    Budget { needed: u64, budget: u64 },
    #[error("grid has {got} ranges for {expected} nodes")]
    Dimension { expected: usize, got: usize },
    #[error("grid step must be positive and ranges nonempty")]
    Grid,
    #[error("recursion needs s > 0, got {0}")]
    Stiffness(f64),
}

/// Tensor grid `lo_e ≤ z_e ≤ hi_e` with spacing `dz`, anchored so that the
/// previous jump `p_e` is a grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub dz: f64,
    pub budget: u64,
}

impl GridSpec {
    /// Box containing `p` and the elastic minimizer with margin
    /// `2·max(scale_e)`, with `dz` chosen so that roughly `points` grid
    /// points are evaluated in total.
    pub fn covering(problem: &StepProblem<'_>, points: u64) -> Self {
        let m = problem.len();
        let elastic = problem.energy.elastic_minimizer(problem.amp);
        let margin = 2.0 * problem.laws.max_scale().min(1e6) + 1e-3;
        let lo: Vec<f64> = (0..m)
            .map(|e| problem.p[e].min(elastic[e]) - margin)
            .collect();
        let hi: Vec<f64> = (0..m)
            .map(|e| problem.p[e].max(elastic[e]) + margin)
            .collect();
        let per_axis = (points.max(2) as f64)
            .powf(1.0 / m.max(1) as f64)
            .floor()
            .max(2.0);
        let widest = (0..m).map(|e| hi[e] - lo[e]).fold(0.0, f64::max);
        GridSpec {
            lo,
            hi,
            dz: widest / (per_axis - 1.0),
            budget: DEFAULT_BUDGET,
        }
    }

    fn axis(&self, e: usize, anchor: f64) -> (i64, i64) {
        let jlo = ((self.lo[e] - anchor) / self.dz).floor() as i64;
        let jhi = ((self.hi[e] - anchor) / self.dz).ceil() as i64;
        (jlo, jhi)
    }

    fn count(&self, anchors: &[f64]) -> u64 {
        (0..anchors.len())
            .map(|e| {
                let (jlo, jhi) = self.axis(e, anchors[e]);
                (jhi - jlo + 1) as u64
            })
            .fold(1u64, |acc, n| acc.saturating_mul(n))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub z: Vec<f64>,
    pub energy: f64,
    pub evaluations: u64,
}

/// Step objective evaluated straight from its definition.
struct Objective<'p, 'a> {
    problem: &'p StepProblem<'a>,
}

impl Objective<'_, '_> {
    fn eval(&self, z: &[f64]) -> f64 {
        let pr = self.problem;
        let s = pr.energy.matrix();
        let c = pr.energy.c_unit();
        let w = pr.energy.weights();
        let m = z.len();
        let mut f = 0.5 * pr.amp * pr.amp * pr.energy.e0_unit();
        for i in 0..m {
            let mut row = 0.0;
            for j in 0..m {
                row += s.get(i, j) * z[j];
            }
            f += 0.5 * z[i] * row - pr.amp * c[i] * z[i];
            f += w[i] * pr.laws[i].value(pr.v_prev[i] + (z[i] - pr.p[i]).abs());
        }
        f
    }
}

/// `a` is preferred to `b`: lower energy, then lexicographically smaller
/// distance from `p`.
fn preferred(fa: f64, za: &[f64], fb: f64, zb: &[f64], p: &[f64]) -> bool {
    if fa != fb {
        return fa < fb;
    }
    for e in 0..p.len() {
        let (da, db) = ((za[e] - p[e]).abs(), (zb[e] - p[e]).abs());
        if da != db {
            return da < db;
        }
    }
    false
}

/// Best few grid points, kept pairwise apart so that zooming explores
/// distinct basins.
struct Shortlist {
    keep: usize,
    separation: f64,
    items: Vec<(f64, Vec<f64>)>,
}

impl Shortlist {
    fn offer(&mut self, f: f64, z: &[f64], p: &[f64]) {
        let near = self.items.iter().position(|(_, y)| {
            y.iter()
                .zip(z)
                .all(|(a, b)| (a - b).abs() <= self.separation)
        });
        match near {
            Some(k) => {
                if preferred(f, z, self.items[k].0, &self.items[k].1, p) {
                    self.items[k] = (f, z.to_vec());
                }
            }
            None => {
                if self.items.len() < self.keep {
                    self.items.push((f, z.to_vec()));
                } else {
                    let worst = (0..self.items.len())
                        .reduce(|a, b| {
                            if preferred(
                                self.items[a].0,
                                &self.items[a].1,
                                self.items[b].0,
                                &self.items[b].1,
                                p,
                            ) {
                                b
                            } else {
                                a
                            }
                        })
                        .unwrap();
                    if preferred(f, z, self.items[worst].0, &self.items[worst].1, p) {
                        self.items[worst] = (f, z.to_vec());
                    }
                }
            }
        }
    }
}

/// Visits every point of the grid `anchor_e + j·dz`, `j ∈ [jlo_e, jhi_e]`,
/// in lexicographic order.
fn scan(ranges: &[(i64, i64)], anchor: &[f64], dz: f64, mut visit: impl FnMut(&[f64])) {
    let m = ranges.len();
    let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    let mut z: Vec<f64> = (0..m).map(|e| anchor[e] + idx[e] as f64 * dz).collect();
    loop {
        visit(&z);
        let mut e = m;
        loop {
            if e == 0 {
                return;
            }
            e -= 1;
            if idx[e] < ranges[e].1 {
                idx[e] += 1;
                z[e] = anchor[e] + idx[e] as f64 * dz;
                break;
            }
            idx[e] = ranges[e].0;
            z[e] = anchor[e] + idx[e] as f64 * dz;
        }
    }
}

const SHORTLIST: usize = 8;
const ZOOM_POINTS: i64 = 10;
const ZOOM_FACTOR: f64 = 5.0;
const ZOOM_FLOOR: f64 = 1e-10;

/// Exhaustive minimization of the step objective for `m ≤ 3`.
///
/// The full tensor grid is scanned, the best few well-separated points are
/// refined by successively finer local grids, then each coordinate gets one
/// golden-section polish. Ties go to the smallest `|z − p|` in
/// lexicographic order.
pub fn brute_force_step(
    problem: &StepProblem<'_>,
    grid: &GridSpec,
) -> Result<OracleSolution, OracleError> {
    let m = problem.len();
    if m > MAX_ORACLE_NODES {
        return Err(OracleError::TooManyNodes(m));
    }
    if grid.lo.len() != m || grid.hi.len() != m {
        return Err(OracleError::Dimension {
            expected: m,
            got: grid.lo.len().min(grid.hi.len()),
        });
    }
    if !(grid.dz > 0.0) || (0..m).any(|e| !(grid.hi[e] >= grid.lo[e])) {
        return Err(OracleError::Grid);
    }
    let p = problem.p.clone();
    let needed = grid.count(&p);
    if needed > grid.budget {
        return Err(OracleError::Budget {
            needed,
            budget: grid.budget,
        });
    }
    let objective = Objective { problem };
    let mut evaluations = 0u64;

    let ranges: Vec<(i64, i64)> = (0..m).map(|e| grid.axis(e, p[e])).collect();
    let mut shortlist = Shortlist {
        keep: SHORTLIST,
        separation: 2.0 * grid.dz,
        items: Vec::new(),
    };
    scan(&ranges, &p, grid.dz, |z| {
        evaluations += 1;
        shortlist.offer(objective.eval(z), z, &p);
    });

    let mut best: Option<(f64, Vec<f64>)> = None;
    let consider = |f: f64, z: Vec<f64>, best: &mut Option<(f64, Vec<f64>)>| {
        if best
            .as_ref()
            .is_none_or(|(fb, zb)| preferred(f, &z, *fb, zb, &p))
        {
            *best = Some((f, z));
        }
    };
    for (f_start, z_start) in shortlist.items {
        let (mut f_loc, mut z_loc) = (f_start, z_start);
        let mut dz = grid.dz;
        let floor = ZOOM_FLOOR * (1.0 + z_loc.iter().fold(0.0f64, |a, x| a.max(x.abs())));
        while dz > floor {
            dz /= ZOOM_FACTOR;
            let local = vec![(-ZOOM_POINTS, ZOOM_POINTS); m];
            let centre = z_loc.clone();
            let mut step_best = (f_loc, z_loc.clone());
            scan(&local, &centre, dz, |z| {
                evaluations += 1;
                let f = objective.eval(z);
                if preferred(f, z, step_best.0, &step_best.1, &p) {
                    step_best = (f, z.to_vec());
                }
            });
            (f_loc, z_loc) = step_best;
        }
        // snap coordinates onto their kinks
        for mask in 1u32..(1 << m) {
            let z: Vec<f64> = (0..m)
                .map(|e| if mask & (1 << e) != 0 { p[e] } else { z_loc[e] })
                .collect();
            evaluations += 1;
            let f = objective.eval(&z);
            if preferred(f, &z, f_loc, &z_loc, &p) {
                (f_loc, z_loc) = (f, z);
            }
        }
        for e in 0..m {
            let (f, z) = golden_polish(&objective, &z_loc, e, 4.0 * dz, &mut evaluations);
            if preferred(f, &z, f_loc, &z_loc, &p) {
                (f_loc, z_loc) = (f, z);
            }
        }
        consider(f_loc, z_loc, &mut best);
    }
    let (energy, z) = best.expect("grid is nonempty");
    Ok(OracleSolution {
        z,
        energy,
        evaluations,
    })
}

/// Golden-section search along coordinate `e` on `[z_e − half, z_e + half]`.
fn golden_polish(
    objective: &Objective<'_, '_>,
    z: &[f64],
    e: usize,
    half: f64,
    evaluations: &mut u64,
) -> (f64, Vec<f64>) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut point = z.to_vec();
    let mut f_at = |x: f64, point: &mut Vec<f64>| {
        *evaluations += 1;
        point[e] = x;
        objective.eval(point)
    };
    let (mut a, mut b) = (z[e] - half, z[e] + half);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f_at(x1, &mut point);
    let mut f2 = f_at(x2, &mut point);
    for _ in 0..80 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f_at(x1, &mut point);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f_at(x2, &mut point);
        }
    }
    let x = if f1 <= f2 { x1 } else { x2 };
    let f = f_at(x, &mut point);
    (f, point)
}

/// Exhaustive scan of a scalar function on `lo, lo + dz, …, ≥ hi`; the
/// first minimum in scan order wins.
pub fn brute_force_scalar(f: impl Fn(f64) -> f64, lo: f64, hi: f64, dz: f64) -> (f64, f64) {
    let n = ((hi - lo) / dz).ceil().max(0.0) as u64;
    let mut best = (lo, f(lo));
    for j in 1..=n {
        let x = lo + j as f64 * dz;
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleState {
    /// Jump at the positive peak.
    pub z_up: f64,
    /// Jump at the negative peak.
    pub z_down: f64,
    /// Jump and variation at the end of the cycle, back at zero load.
    pub z_end: f64,
    pub v_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FatigueRecursion {
    pub cycles: Vec<CycleState>,
    /// `false` when `g'(V0) ≥ s·A`: nothing can ever slip.
    pub slips: bool,
}

impl FatigueRecursion {
    /// First cycle (1-based) at the end of which `g(V) ≥ level`.
    pub fn first_cycle_reaching(&self, law: &CohesiveLaw, level: f64) -> Option<usize> {
        self.cycles
            .iter()
            .position(|c| law.value(c.v_end) >= level)
            .map(|i| i + 1)
    }
}

/// Bisection for the decreasing `phi` on `[0, hi]` with `phi(0) > 0 ≥ phi(hi)`.
fn bisect_decreasing(phi: impl Fn(f64) -> f64, hi: f64) -> f64 {
    let (mut a, mut b) = (0.0, hi);
    while b - a > 1e-12 {
        let mid = 0.5 * (a + b);
        if phi(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Quasistatic leg from the state `(z, v)` to the load `target`: slip
/// happens only once the traction `s·(amp − z)` reaches `±g'(V)`, and stops
/// on the threshold.
fn leg(law: &CohesiveLaw, s: f64, z: f64, v: f64, target: f64) -> (f64, f64) {
    let t = s * (target - z);
    if t > law.slope(v) {
        let d = bisect_decreasing(|d| s * (target - z - d) - law.slope(v + d), target - z);
        (z + d, v + d)
    } else if -t > law.slope(v) {
        let d = bisect_decreasing(|d| s * (z - d - target) - law.slope(v + d), z - target);
        (z - d, v + d)
    } else {
        (z, v)
    }
}

/// Cycle map of a uniformly loaded interface with unit-length stiffness
/// `s` under the triangle wave `0 → A → 0 → −A → 0`.
pub fn scalar_fatigue_recursion(
    law: &CohesiveLaw,
    s: f64,
    amplitude: f64,
    v0: f64,
    n_cycles: usize,
) -> Result<FatigueRecursion, OracleError> {
    if !(s > 0.0) {
        return Err(OracleError::Stiffness(s));
    }
    let slips = law.slope(v0) < s * amplitude;
    let (mut z, mut v) = (0.0, v0);
    let mut cycles = Vec::with_capacity(n_cycles);
    for _ in 0..n_cycles {
        (z, v) = leg(law, s, z, v, amplitude);
        let z_up = z;
        (z, v) = leg(law, s, z, v, -amplitude);
        let z_down = z;
        (z, v) = leg(law, s, z, v, 0.0);
        cycles.push(CycleState {
            z_up,
            z_down,
            z_end: z,
            v_end: v,
        });
    }
    Ok(FatigueRecursion { cycles, slips })
}
