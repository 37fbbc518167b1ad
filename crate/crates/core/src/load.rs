//! Proportional boundary loading `w(t) = amp(t)·ŵ` with piecewise-linear
//! amplitude.

use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoadError {
    #[error("load program needs at least two breakpoints, got {0}")]
    TooFewBreakpoints(usize),
    #[error("first breakpoint must be at t = 0, got {0}")]
    StartTime(f64),
    #[error("breakpoint times must strictly increase (index {index})")]
    NotIncreasing { index: usize },
    #[error("breakpoint {index} is not finite")]
    NotFinite { index: usize },
    #[error("triangle wave needs positive period and at least one cycle")]
    Wave,
    #[error("step count must be at least 1")]
    NoSteps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadProgram {
    breakpoints: Vec<(f64, f64)>,
}

impl LoadProgram {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self, LoadError> {
        if breakpoints.len() < 2 {
            return Err(LoadError::TooFewBreakpoints(breakpoints.len()));
        }
        for (index, &(t, a)) in breakpoints.iter().enumerate() {
            if !t.is_finite() || !a.is_finite() {
                return Err(LoadError::NotFinite { index });
            }
        }
        if breakpoints[0].0 != 0.0 {
            return Err(LoadError::StartTime(breakpoints[0].0));
        }
        if let Some(index) =
            (1..breakpoints.len()).find(|&i| !(breakpoints[i].0 > breakpoints[i - 1].0))
        {
            return Err(LoadError::NotIncreasing { index });
        }
        Ok(LoadProgram { breakpoints })
    }

    /// `amp(t) = rate·t` on `[0, horizon]`.
    pub fn linear(rate: f64, horizon: f64) -> Result<Self, LoadError> {
        Self::new(alloc::vec![(0.0, 0.0), (horizon, rate * horizon)])
    }

    pub fn constant(amp: f64, horizon: f64) -> Result<Self, LoadError> {
        Self::new(alloc::vec![(0.0, amp), (horizon, amp)])
    }

    /// Symmetric triangle wave `0 → A → 0 → −A → 0`, repeated `cycles` times.
    pub fn triangle_wave(amplitude: f64, period: f64, cycles: usize) -> Result<Self, LoadError> {
        if !(period > 0.0) || cycles == 0 {
            return Err(LoadError::Wave);
        }
        let quarter = 0.25 * period;
        let mut points = Vec::with_capacity(4 * cycles + 1);
        points.push((0.0, 0.0));
        for c in 0..cycles {
            let t0 = c as f64 * period;
            points.push((t0 + quarter, amplitude));
            points.push((t0 + 2.0 * quarter, 0.0));
            points.push((t0 + 3.0 * quarter, -amplitude));
            points.push(((c + 1) as f64 * period, 0.0));
        }
        Self::new(points)
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn horizon(&self) -> f64 {
        self.breakpoints.last().unwrap().0
    }

    /// Index of the segment containing `t`, clamped to the program.
    fn segment(&self, t: f64) -> usize {
        let n = self.breakpoints.len();
        match self
            .breakpoints
            .binary_search_by(|bp| bp.0.partial_cmp(&t).unwrap())
        {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    pub fn amp(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let (t0, a0) = self.breakpoints[i];
        let (t1, a1) = self.breakpoints[i + 1];
        if t <= t0 {
            return a0;
        }
        if t >= t1 {
            return a1;
        }
        a0 + (a1 - a0) * ((t - t0) / (t1 - t0))
    }

    /// `∫_{t0}^{t1} |amp'(s)| ds` for `t0 ≤ t1`.
    pub fn variation(&self, t0: f64, t1: f64) -> f64 {
        let mut total = 0.0;
        for w in self.breakpoints.windows(2) {
            let (s0, a0) = w[0];
            let (s1, a1) = w[1];
            let lo = s0.max(t0);
            let hi = s1.min(t1);
            if hi > lo {
                total += (a1 - a0).abs() / (s1 - s0) * (hi - lo);
            }
        }
        total
    }

    pub fn total_variation(&self) -> f64 {
        self.variation(0.0, self.horizon())
    }

    /// Uniform partition `t_i = T·i/k`.
    pub fn times(&self, k: usize) -> Vec<f64> {
        let horizon = self.horizon();
        (0..=k).map(|i| horizon * i as f64 / k as f64).collect()
    }
}

/// Bound on the discrete energy drift:
///
/// ```text
/// η_k = ½ · (max_i ∫_{t_{i−1}}^{t_i} |amp'|·‖∇ŵ‖) · (∫_0^T |amp'|·‖∇ŵ‖)
/// ```
///
/// `lift_norm` is `‖∇ŵ‖_{L²}`.
pub fn eta_bound(load: &LoadProgram, lift_norm: f64, k: usize) -> Result<f64, LoadError> {
    if k == 0 {
        return Err(LoadError::NoSteps);
    }
    let times = load.times(k);
    let max_step = times
        .windows(2)
        .map(|w| load.variation(w[0], w[1]))
        .fold(0.0f64, f64::max);
    Ok(0.5 * max_step * lift_norm * load.total_variation() * lift_norm)
}
