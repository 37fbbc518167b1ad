//! Cohesive surface energy densities.
//!
//! A density `g(ξ)` maps the cumulated jump variation `ξ ≥ 0` to dissipated
//! energy per unit length of the crack line. Every shipped law satisfies
//! `g(0) = 0`, is nondecreasing and concave, saturates at `κ`, and has a
//! finite initial slope `g'(0)`.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

/// Relative half-width of the band around a finite saturation threshold in
/// which stationarity checks are skipped (the capped linear law has a kink
/// there).
pub const GUARD_BAND_REL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum LawError {
    #[error("opening variation must be a nonnegative number, got {0}")]
    Domain(f64),
    #[error("invalid law parameter `{name}` = {value} (must be positive and finite)")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("law field has {got} nodes, the interface has {expected}")]
    NodeCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LawKind {
    /// `g(ξ) = κ·min(ξ/θ, 1)`; `scale` is the saturation opening θ.
    CappedLinear,
    /// `g(ξ) = κ·(1 − e^(−ξ/δ))`; `scale` is the decay length δ.
    Exponential,
}

impl LawKind {
    pub fn name(self) -> &'static str {
        match self {
            LawKind::CappedLinear => "capped_linear",
            LawKind::Exponential => "exponential",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohesiveLaw {
    pub kind: LawKind,
    pub kappa: f64,
    pub scale: f64,
}

impl CohesiveLaw {
    pub fn new(kind: LawKind, kappa: f64, scale: f64) -> Result<Self, LawError> {
        let law = CohesiveLaw { kind, kappa, scale };
        law.check_parameters()?;
        Ok(law)
    }

    pub fn capped_linear(kappa: f64, theta: f64) -> Result<Self, LawError> {
        Self::new(LawKind::CappedLinear, kappa, theta)
    }

    pub fn exponential(kappa: f64, delta: f64) -> Result<Self, LawError> {
        Self::new(LawKind::Exponential, kappa, delta)
    }

    pub fn check_parameters(&self) -> Result<(), LawError> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(LawError::InvalidParameter {
                name: "kappa",
                value: self.kappa,
            });
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(LawError::InvalidParameter {
                name: "scale",
                value: self.scale,
            });
        }
        Ok(())
    }

    /// Energy density `g(ξ)`; `ξ = ∞` is allowed and yields `κ`.
    pub fn evaluate(&self, xi: f64) -> Result<f64, LawError> {
        check_xi(xi)?;
        Ok(self.value(xi))
    }

    /// Slope `g'(ξ)`. At the capped linear kink the right value (0) is used.
    pub fn derivative(&self, xi: f64) -> Result<f64, LawError> {
        check_xi(xi)?;
        Ok(self.slope(xi))
    }

    /// Unchecked `g(ξ)` for hot loops; callers guarantee `ξ ≥ 0`.
    #[inline]
    pub fn value(&self, xi: f64) -> f64 {
        debug_assert!(xi >= 0.0, "negative opening variation {xi}");
        match self.kind {
            LawKind::CappedLinear => {
                if xi >= self.scale {
                    self.kappa
                } else {
                    self.kappa * (xi / self.scale)
                }
            }
            LawKind::Exponential => -self.kappa * (-xi / self.scale).exp_m1(),
        }
    }

    /// Unchecked `g'(ξ)`.
    #[inline]
    pub fn slope(&self, xi: f64) -> f64 {
        debug_assert!(xi >= 0.0, "negative opening variation {xi}");
        match self.kind {
            LawKind::CappedLinear => {
                if xi < self.scale {
                    self.kappa / self.scale
                } else {
                    0.0
                }
            }
            LawKind::Exponential => self.kappa / self.scale * (-xi / self.scale).exp(),
        }
    }

    pub fn initial_slope(&self) -> f64 {
        self.slope(0.0)
    }

    /// Saturation threshold `inf{ξ > 0 : g(ξ) = κ}`; infinite for strictly
    /// increasing laws.
    pub fn threshold(&self) -> f64 {
        match self.kind {
            LawKind::CappedLinear => self.scale,
            LawKind::Exponential => f64::INFINITY,
        }
    }

    pub fn is_broken(&self, v: f64) -> bool {
        v >= self.threshold()
    }

    /// `true` when `v` lies within the kink guard band around a finite θ.
    pub fn in_guard_band(&self, v: f64) -> bool {
        let theta = self.threshold();
        theta.is_finite() && (v - theta).abs() < GUARD_BAND_REL * theta
    }

    /// Left limit of the slope, `lim g'(η)` as `η ↑ ξ`; differs from
    /// [`slope`](Self::slope) only at the capped linear kink.
    #[inline]
    pub fn slope_left(&self, xi: f64) -> f64 {
        match self.kind {
            LawKind::CappedLinear if xi > 0.0 && xi <= self.scale => self.kappa / self.scale,
            _ => self.slope(xi),
        }
    }

    /// `g''(ξ)` away from kinks.
    #[inline]
    pub fn curvature(&self, xi: f64) -> f64 {
        match self.kind {
            LawKind::CappedLinear => 0.0,
            LawKind::Exponential => {
                let d = self.scale;
                -self.kappa / (d * d) * (-xi / d).exp()
            }
        }
    }

    /// Offsets `s ≥ 0` (measured from the current variation `v`) on which
    /// `φ(s) = curvature·s + g'(v + s)` is continuous and nondecreasing.
    ///
    /// Outside these windows `φ` is decreasing or jumps down, so a local
    /// minimum of `½a·s² + … + w·g(v + s)` with `curvature = a/w` can only
    /// sit inside one of them.
    pub fn nondecreasing_slope_windows(&self, v: f64, curvature: f64) -> [Option<SlopeWindow>; 2] {
        debug_assert!(curvature > 0.0);
        match self.kind {
            LawKind::CappedLinear => {
                let gap = self.scale - v;
                if gap > 0.0 {
                    [
                        Some(SlopeWindow {
                            lo: 0.0,
                            hi: gap,
                            constant_slope: true,
                        }),
                        Some(SlopeWindow {
                            lo: gap,
                            hi: f64::INFINITY,
                            constant_slope: true,
                        }),
                    ]
                } else {
                    [
                        Some(SlopeWindow {
                            lo: 0.0,
                            hi: f64::INFINITY,
                            constant_slope: true,
                        }),
                        None,
                    ]
                }
            }
            LawKind::Exponential => {
                if v.is_infinite() {
                    return [
                        Some(SlopeWindow {
                            lo: 0.0,
                            hi: f64::INFINITY,
                            constant_slope: true,
                        }),
                        None,
                    ];
                }
                // g''(ξ) = −(κ/δ²)e^(−ξ/δ) crosses −curvature at ξ*
                let delta = self.scale;
                let xi_star = delta * (self.kappa / (curvature * delta * delta)).ln();
                let lo = (xi_star - v).max(0.0);
                [
                    Some(SlopeWindow {
                        lo,
                        hi: f64::INFINITY,
                        constant_slope: false,
                    }),
                    None,
                ]
            }
        }
    }

    /// Numerical audit of the density axioms on a geometric sample grid.
    pub fn validate(&self) -> Result<LawAudit, LawError> {
        self.check_parameters()?;
        let kappa = self.kappa;
        let scale = self.scale;
        let tol = 1e-12 * kappa;
        let theta = self.threshold();

        let mut grid = Vec::with_capacity(92);
        grid.push(0.0);
        // 1e-6·scale … 1e3·scale, ten points per decade
        for j in 0..=90 {
            grid.push(scale * 10f64.powf(-6.0 + j as f64 / 10.0));
        }

        let mut failures = Vec::new();
        let g0 = self.value(0.0);
        if g0 != 0.0 {
            failures.push(LawAuditFailure::NonzeroAtOrigin(g0));
        }
        if self.value(f64::INFINITY) != kappa {
            failures.push(LawAuditFailure::ExceedsCap {
                xi: f64::INFINITY,
                value: self.value(f64::INFINITY),
            });
        }
        let values: Vec<f64> = grid.iter().map(|&xi| self.value(xi)).collect();
        for (j, (&xi, &gv)) in grid.iter().zip(&values).enumerate() {
            if gv > kappa + tol || gv < -tol {
                failures.push(LawAuditFailure::ExceedsCap { xi, value: gv });
            }
            if j > 0 && gv < values[j - 1] - tol {
                failures.push(LawAuditFailure::Decreasing { xi });
            }
            if j > 0 {
                let a = grid[j - 1];
                let mid = self.value(0.5 * (a + xi));
                if mid < 0.5 * (values[j - 1] + gv) - tol {
                    failures.push(LawAuditFailure::NotConcave { lo: a, hi: xi });
                }
            }
            if xi > 0.0 {
                let h = (0.5 * xi).min(1e-4 * scale);
                if theta.is_finite() && (xi - theta).abs() <= 2.0 * h + GUARD_BAND_REL * theta {
                    continue;
                }
                let fd = (self.value(xi + h) - self.value(xi - h)) / (2.0 * h);
                let exact = self.slope(xi);
                // relative tolerance plus the rounding floor of the difference quotient
                let allowed = 1e-6 * exact.abs() + 8.0 * f64::EPSILON * kappa / h;
                if (fd - exact).abs() > allowed {
                    failures.push(LawAuditFailure::SlopeMismatch {
                        xi,
                        finite_difference: fd,
                        slope: exact,
                    });
                }
            }
        }
        Ok(LawAudit {
            samples: grid.len(),
            failures,
        })
    }
}

fn check_xi(xi: f64) -> Result<(), LawError> {
    if xi >= 0.0 {
        Ok(())
    } else {
        Err(LawError::Domain(xi))
    }
}

/// Interval of opening offsets on which the branch derivative is
/// nondecreasing; `constant_slope` marks windows where `g'` is constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeWindow {
    pub lo: f64,
    pub hi: f64,
    pub constant_slope: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LawAuditFailure {
    NonzeroAtOrigin(f64),
    ExceedsCap {
        xi: f64,
        value: f64,
    },
    Decreasing {
        xi: f64,
    },
    NotConcave {
        lo: f64,
        hi: f64,
    },
    SlopeMismatch {
        xi: f64,
        finite_difference: f64,
        slope: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LawAudit {
    pub samples: usize,
    pub failures: Vec<LawAuditFailure>,
}

impl LawAudit {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// One cohesive law per interface node.
#[derive(Debug, Clone, PartialEq)]
pub struct LawField {
    laws: Vec<CohesiveLaw>,
}

impl LawField {
    pub fn uniform(law: CohesiveLaw, nodes: usize) -> Self {
        LawField {
            laws: alloc::vec![law; nodes],
        }
    }

    pub fn from_nodes(laws: Vec<CohesiveLaw>) -> Result<Self, LawError> {
        for law in &laws {
            law.check_parameters()?;
        }
        Ok(LawField { laws })
    }

    pub fn check_len(&self, expected: usize) -> Result<(), LawError> {
        if self.laws.len() == expected {
            Ok(())
        } else {
            Err(LawError::NodeCount {
                expected,
                got: self.laws.len(),
            })
        }
    }

    pub fn len(&self) -> usize {
        self.laws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.laws.is_empty()
    }

    pub fn get(&self, node: usize) -> &CohesiveLaw {
        &self.laws[node]
    }

    pub fn iter(&self) -> core::slice::Iter<'_, CohesiveLaw> {
        self.laws.iter()
    }

    pub fn max_scale(&self) -> f64 {
        self.laws.iter().map(|l| l.scale).fold(0.0, f64::max)
    }
}

impl core::ops::Index<usize> for LawField {
    type Output = CohesiveLaw;
    fn index(&self, node: usize) -> &CohesiveLaw {
        &self.laws[node]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn capped() -> CohesiveLaw {
        CohesiveLaw::capped_linear(0.5, 1.0).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(capped().evaluate(0.0).unwrap(), 0.0);
        assert_eq!(capped().evaluate(2.0).unwrap(), 0.5);
        let e = CohesiveLaw::exponential(1.0, 1.0).unwrap();
        assert!((e.evaluate(1.0).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((e.evaluate(1.0).unwrap() - 0.632_120_558_828_557_7).abs() < 1e-15);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(capped().derivative(0.3).unwrap(), 0.5);
        assert_eq!(capped().derivative(1.2).unwrap(), 0.0);
        assert_eq!(capped().derivative(1.0).unwrap(), 0.0);
        let e = CohesiveLaw::exponential(1.0, 5.0).unwrap();
        assert!((e.derivative(0.0).unwrap() - 0.2).abs() < 1e-16);
    }

    #[test]
    fn negative_opening_is_a_domain_error() {
        assert_eq!(capped().evaluate(-1e-3), Err(LawError::Domain(-1e-3)));
        assert!(matches!(
            capped().derivative(-2.0),
            Err(LawError::Domain(_))
        ));
        assert!(capped().evaluate(f64::NAN).is_err());
    }

    #[test]
    fn thresholds() {
        assert_eq!(capped().threshold(), 1.0);
        assert_eq!(
            CohesiveLaw::exponential(1.0, 1.0).unwrap().threshold(),
            f64::INFINITY
        );
        assert_eq!(
            CohesiveLaw::capped_linear(2.0, 0.5).unwrap().threshold(),
            0.5
        );
    }

    #[test]
    fn infinite_variation_gives_cap() {
        assert_eq!(capped().evaluate(f64::INFINITY).unwrap(), 0.5);
        let e = CohesiveLaw::exponential(1.3, 0.7).unwrap();
        assert_eq!(e.evaluate(f64::INFINITY).unwrap(), 1.3);
        assert_eq!(e.derivative(f64::INFINITY).unwrap(), 0.0);
    }

    #[test]
    fn validate_shipped_laws() {
        assert!(capped().validate().unwrap().passed());
        assert!(CohesiveLaw::exponential(1.0, 2.0)
            .unwrap()
            .validate()
            .unwrap()
            .passed());
        assert!(CohesiveLaw::exponential(1.0, 5.0)
            .unwrap()
            .validate()
            .unwrap()
            .passed());
        let bad = CohesiveLaw {
            kind: LawKind::CappedLinear,
            kappa: -1.0,
            scale: 1.0,
        };
        assert_eq!(
            bad.validate(),
            Err(LawError::InvalidParameter {
                name: "kappa",
                value: -1.0
            })
        );
        assert!(CohesiveLaw::exponential(1.0, 0.0).is_err());
    }

    #[test]
    fn guard_band() {
        let law = capped();
        assert!(law.in_guard_band(1.0));
        assert!(law.in_guard_band(1.0 + 5e-9));
        assert!(!law.in_guard_band(1.0 + 2e-8));
        assert!(!CohesiveLaw::exponential(1.0, 1.0)
            .unwrap()
            .in_guard_band(1.0));
    }

    #[test]
    fn law_field_length() {
        let f = LawField::uniform(capped(), 3);
        assert!(f.check_len(3).is_ok());
        assert_eq!(
            f.check_len(4),
            Err(LawError::NodeCount {
                expected: 4,
                got: 3
            })
        );
    }

    fn any_law() -> impl Strategy<Value = CohesiveLaw> {
        (prop::bool::ANY, 0.01f64..10.0, 0.01f64..10.0).prop_map(|(capped, kappa, scale)| {
            let kind = if capped {
                LawKind::CappedLinear
            } else {
                LawKind::Exponential
            };
            CohesiveLaw::new(kind, kappa, scale).unwrap()
        })
    }

    proptest! {
        #[test]
        fn concavity_inequality(law in any_law(), a in 0.0f64..50.0, d in 0.0f64..50.0) {
            let b = a + d;
            let lhs = law.value(b) - law.value(a);
            let rhs = law.slope(a) * (b - a) + 1e-12 * law.kappa;
            prop_assert!(lhs <= rhs, "g(b)-g(a)={lhs} > {rhs}");
        }

        #[test]
        fn slope_nonincreasing_and_value_bounded(law in any_law(), a in 0.0f64..50.0, d in 0.0f64..50.0) {
            prop_assert!(law.slope(a) >= law.slope(a + d));
            let v = law.value(a);
            prop_assert!((0.0..=law.kappa).contains(&v));
            prop_assert!(law.slope(a) <= law.initial_slope());
        }
    }
}
