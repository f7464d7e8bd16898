//! Independent numerical evaluator for any convergent family member.
//!
//! The substitution `z = x/(x+c)`, `x = c z/(1-z)` maps the semi-infinite
//! axis onto the unit interval; the mapped integrand is then integrated
//! with a composite 5-point closed Newton-Cotes (Boole) rule on a uniform
//! grid, doubling the panel count until the change between refinements
//! drops below the requested absolute error.
//!
//! This module is deliberately independent of the closed-form machinery:
//! it touches neither the coefficient tables nor the polygamma kernels,
//! which is what makes it usable as a verification oracle for them.

use crate::error::{Error, Result};
use crate::family::{IntegralSpec, Sign};

/// Controls for the panel-doubling refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Substitution tuning parameter; the kernel maximum lands near
    /// `z = 0.5` when `c` is close to the kernel's peak position.
    pub c: f64,
    /// Absolute error target for the refinement loop.
    pub epsilon: f64,
    /// Level `L` uses `2^L` Boole panels; refinement stops here at the latest.
    pub max_levels: u32,
    /// First level computed; deltas are only trusted past this point.
    pub min_levels: u32,
}

impl QuadratureConfig {
    pub const DEFAULT_EPSILON: f64 = 1e-10;
    pub const DEFAULT_MAX_LEVELS: u32 = 24;
    pub const DEFAULT_MIN_LEVELS: u32 = 4;

    pub fn new(c: f64, epsilon: f64) -> Result<Self> {
        let cfg = QuadratureConfig {
            c,
            epsilon,
            max_levels: Self::DEFAULT_MAX_LEVELS,
            min_levels: Self::DEFAULT_MIN_LEVELS,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Configuration with the spec-derived default `c` (see [`default_c`]).
    pub fn for_spec(spec: &IntegralSpec, epsilon: f64) -> Result<Self> {
        Self::new(default_c(spec), epsilon)
    }

    pub fn with_levels(mut self, min_levels: u32, max_levels: u32) -> Result<Self> {
        self.min_levels = min_levels;
        self.max_levels = max_levels;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::domain(format!("c must be positive, got {}", self.c)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::domain(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_levels <= self.min_levels {
            return Err(Error::domain(format!(
                "maxLevels ({}) must exceed minLevels ({})",
                self.max_levels, self.min_levels
            )));
        }
        Ok(())
    }
}

/// Result of one adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Magnitude of the last refinement delta. A heuristic estimate, not a
    /// rigorous bound.
    pub err_estimate: f64,
    /// Level at which the refinement stopped.
    pub levels: u32,
}

/// Default substitution parameter.
///
/// For `j >= 1` the kernel peak sits near `sqrt(b*mu)`; for `j <= 0`
/// (no damping denominator) the peak of `x^(n-2j) e^(-mu x)` sits near
/// `(n + 1 - 2j)/mu`. Both are clamped to `[1e-2, 1e3]`.
pub fn default_c(spec: &IntegralSpec) -> f64 {
    let c = if spec.j >= 1 {
        (spec.b * spec.mu).sqrt()
    } else {
        (f64::from(spec.n + 1 - 2 * spec.j) / spec.mu).max(1.0)
    };
    c.clamp(1e-2, 1e3)
}

/// Integrand value at a point `x > 0` of the original axis.
///
/// The minus kernel is computed as `(x/(e^(mu x)-1))^s * x^(n-s)`, which
/// stays well-conditioned down to the origin where both factors of the
/// naive form underflow. Beyond `mu x > 700` the exponential dwarfs every
/// polynomial factor and the kernel is taken as zero.
fn kernel(spec: &IntegralSpec, x: f64) -> f64 {
    let q = spec.mu * x;
    if q > 700.0 {
        return 0.0;
    }
    let poly = (x * x + spec.b * spec.b).powi(-spec.j);
    match spec.sign {
        Sign::Minus => {
            let ratio = x / q.exp_m1();
            ratio.powi(spec.s) * x.powi(spec.n - spec.s) * poly
        }
        Sign::Plus => x.powi(spec.n) * poly / (q.exp() + 1.0).powi(spec.s),
    }
}

/// Mapped integrand `g(z) = f(c z / (1-z)) * c / (1-z)^2` with its limit
/// values at the interval ends.
fn mapped(spec: &IntegralSpec, c: f64, z: f64) -> f64 {
    if z <= 0.0 {
        // x -> 0+: the minus kernel tends to b^(-2j) mu^(-s) when n = s
        // (zero when n > s); the plus kernel to b^(-2j) 2^(-s) when n = 0.
        let poly0 = spec.b.powi(-2 * spec.j);
        return match spec.sign {
            Sign::Minus if spec.n == spec.s => c * poly0 * spec.mu.powi(-spec.s),
            Sign::Plus if spec.n == 0 => c * poly0 * 0.5f64.powi(spec.s),
            _ => 0.0,
        };
    }
    if z >= 1.0 {
        return 0.0;
    }
    let x = c * z / (1.0 - z);
    kernel(spec, x) * c / ((1.0 - z) * (1.0 - z))
}

/// Composite Boole rule over `2^level` panels of the mapped integrand.
fn boole_level(spec: &IntegralSpec, c: f64, level: u32) -> f64 {
    let panels: u64 = 1 << level;
    let n_points = 4 * panels; // grid 0..=4*panels
    let h = 1.0 / n_points as f64;

    // Composite weights on the uniform grid: ends 7, panel joints 14,
    // odd nodes 32, panel midpoints 12, all times 2h/45.
    let mut s32 = CompensatedSum::default();
    let mut s12 = CompensatedSum::default();
    let mut s14 = CompensatedSum::default();
    for i in 1..n_points {
        let g = mapped(spec, c, i as f64 * h);
        match i % 4 {
            1 | 3 => s32.add(g),
            2 => s12.add(g),
            _ => s14.add(g),
        }
    }
    let ends = mapped(spec, c, 0.0) + mapped(spec, c, 1.0);
    (2.0 * h / 45.0) * (7.0 * ends + 32.0 * s32.value() + 12.0 * s12.value() + 14.0 * s14.value())
}

/// Successive refinements `(level, value)` starting at `min_levels`;
/// exposed for convergence-order diagnostics.
pub fn refinement_values(
    spec: &IntegralSpec,
    cfg: &QuadratureConfig,
    through_level: u32,
) -> Result<Vec<(u32, f64)>> {
    spec.require_convergent()?;
    cfg.validate()?;
    Ok((cfg.min_levels..=through_level)
        .map(|level| (level, boole_level(spec, cfg.c, level)))
        .collect())
}

/// Adaptive evaluation of a convergent family member.
///
/// Doubles the panel count until the difference between successive
/// refinements is at most `cfg.epsilon`; the final delta is reported as
/// the error estimate. Divergent specs are rejected up front; hitting
/// `max_levels` without convergence is an error carrying the last two
/// iterates.
pub fn integrate(spec: &IntegralSpec, cfg: &QuadratureConfig) -> Result<Quadrature> {
    spec.require_convergent()?;
    cfg.validate()?;

    let mut previous = boole_level(spec, cfg.c, cfg.min_levels);
    for level in (cfg.min_levels + 1)..=cfg.max_levels {
        let value = boole_level(spec, cfg.c, level);
        let delta = (value - previous).abs();
        if delta <= cfg.epsilon {
            return Ok(Quadrature {
                value,
                err_estimate: delta,
                levels: level,
            });
        }
        previous = value;
    }
    let last = previous;
    let second_last = boole_level(spec, cfg.c, cfg.max_levels - 1);
    Err(Error::QuadratureStalled {
        last,
        previous: second_last,
        delta: (last - second_last).abs(),
        levels: cfg.max_levels,
        target: cfg.epsilon,
    })
}

/// Convenience wrapper: integrate with the default `c` for the spec.
pub fn integrate_default(spec: &IntegralSpec, epsilon: f64) -> Result<Quadrature> {
    integrate(spec, &QuadratureConfig::for_spec(spec, epsilon)?)
}

#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TAU: f64 = std::f64::consts::TAU;

    fn quad(sign: Sign, n: i32, j: i32, s: i32, b: f64, mu: f64, eps: f64) -> f64 {
        let spec = IntegralSpec::new(sign, n, j, s, b, mu).unwrap();
        integrate_default(&spec, eps).unwrap().value
    }

    #[test]
    fn bose_moments_match_zeta() {
        // ∫ x^n/(e^x - 1) = n! zeta(n+1); j = 0 removes b entirely
        let zeta = [
            1.6449340668482264,
            1.2020569031595943,
            1.0823232337111382,
            1.0369277551433699,
            1.0173430619844492,
            1.008349277381923,
        ];
        let mut fact = 1.0;
        for n in 1..=6i32 {
            fact *= n as f64;
            let want = fact * zeta[(n - 1) as usize];
            let got = quad(Sign::Minus, n, 0, 1, 7.3, 1.0, 1e-11);
            assert!(
                (got - want).abs() <= 1e-9,
                "n={n}: got {got:.15e} want {want:.15e}"
            );
        }
    }

    #[test]
    fn fermi_zero_moment_is_ln2() {
        let got = quad(Sign::Plus, 0, 0, 1, 1.0, 1.0, 1e-11);
        assert!((got - std::f64::consts::LN_2).abs() <= 1e-10, "got {got}");
    }

    #[test]
    fn residual_anchor_value() {
        // ∫ x^2/((x^2+1)(e^x - 1)), the canonical residual member
        let got = quad(Sign::Minus, 2, 1, 1, 1.0, 1.0, 1e-11);
        assert!((got - 0.582041199209851).abs() <= 1e-10, "got {got:.15}");
    }

    /// Coarse trapezoid evaluation, written independently of the Boole
    /// machinery, as a second opinion on the residual anchor.
    #[test]
    fn residual_anchor_vs_trapezoid_oracle() {
        let f = |x: f64| {
            if x == 0.0 {
                0.0
            } else {
                x * x / ((x * x + 1.0) * x.exp_m1())
            }
        };
        let (a, b, n) = (0.0, 60.0, 600_000);
        let h = (b - a) / n as f64;
        let mut sum = 0.5 * (f(a) + f(b));
        for i in 1..n {
            sum += f(a + i as f64 * h);
        }
        let trapezoid = sum * h;
        let boole = quad(Sign::Minus, 2, 1, 1, 1.0, 1.0, 1e-11);
        assert!(
            (trapezoid - boole).abs() <= 1e-4,
            "trapezoid {trapezoid} vs boole {boole}"
        );
    }

    #[test]
    fn negative_j_polynomial_numerator() {
        // ∫ x (x^2+1)/(e^x - 1) = zeta(2) + 6 zeta(4)
        let got = quad(Sign::Minus, 1, -1, 1, 1.0, 1.0, 1e-11);
        assert!((got - 8.138873469115056).abs() <= 1e-9, "got {got:.15}");
    }

    #[test]
    fn default_c_heuristic() {
        let spec = IntegralSpec::minus(1, 1, 1, 1.0, TAU).unwrap();
        assert!((default_c(&spec) - TAU.sqrt()).abs() < 1e-15);
        // clamp at the lower bound
        let spec = IntegralSpec::minus(1, 1, 1, 1e-6, 1.0).unwrap();
        assert_eq!(default_c(&spec), 1e-2);
        // j = 0 places the kernel peak mid-interval
        let spec = IntegralSpec::minus(3, 0, 1, 1.0, 1.0).unwrap();
        assert_eq!(default_c(&spec), 4.0);
    }

    #[test]
    fn endpoints_are_finite_across_grid() {
        for n in 0..=8 {
            for j in -2..=4 {
                for s in 1..=4 {
                    for sign in [Sign::Minus, Sign::Plus] {
                        let spec = IntegralSpec::new(sign, n, j, s, 1.0, 1.0).unwrap();
                        if !spec.converges() {
                            continue;
                        }
                        let c = default_c(&spec);
                        let g0 = mapped(&spec, c, 0.0);
                        let g1 = mapped(&spec, c, 1.0);
                        assert!(g0.is_finite(), "{spec} at z=0: {g0}");
                        assert_eq!(g1, 0.0, "{spec} at z=1");
                        // n = s limit for the minus kernel is finite nonzero
                        if sign == Sign::Minus && n == s {
                            assert!(g0 > 0.0, "{spec} should have nonzero origin limit");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn refinement_contracts_at_boole_order() {
        // deltas shrink by >= 16x per halving once past the early levels
        let spec = IntegralSpec::minus(1, 1, 1, TAU, 1.0).unwrap();
        let cfg = QuadratureConfig::for_spec(&spec, 1e-10).unwrap();
        let vals = refinement_values(&spec, &cfg, 9).unwrap();
        let deltas: Vec<f64> = vals.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
        let mut checked = 0;
        for pair in deltas.windows(2) {
            if pair[1] < 1e-16 {
                break; // rounding floor reached
            }
            assert!(
                pair[1] <= pair[0] / 16.0,
                "deltas {:?} contract too slowly",
                deltas
            );
            checked += 1;
        }
        assert!(checked >= 1, "not enough usable refinement levels: {deltas:?}");
    }

    #[test]
    fn divergent_rejected_up_front() {
        let spec = IntegralSpec::minus(1, 1, 2, 1.0, 1.0).unwrap();
        let cfg = QuadratureConfig::for_spec(&spec, 1e-10).unwrap();
        assert!(matches!(integrate(&spec, &cfg), Err(Error::Divergent(_))));
    }

    #[test]
    fn stalled_refinement_reports_iterates() {
        let spec = IntegralSpec::minus(1, 1, 1, 1.0, 1.0).unwrap();
        // an unreachable target with a tiny level budget
        let cfg = QuadratureConfig::new(1.0, 1e-300)
            .unwrap()
            .with_levels(4, 6)
            .unwrap();
        match integrate(&spec, &cfg) {
            Err(Error::QuadratureStalled { last, previous, levels, .. }) => {
                assert_eq!(levels, 6);
                assert!((last - previous).abs() > 0.0);
                assert!((last - 0.8228962870562976).abs() < 1e-6);
            }
            other => panic!("expected stall, got {other:?}"),
        }
    }

    #[test]
    fn config_invariants() {
        assert!(QuadratureConfig::new(0.0, 1e-10).is_err());
        assert!(QuadratureConfig::new(1.0, 0.0).is_err());
        assert!(QuadratureConfig::new(1.0, 1e-10)
            .unwrap()
            .with_levels(8, 8)
            .is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// Substitution-parameter independence: c and 2c agree within 10 eps.
        #[test]
        fn prop_c_independence(
            n in 1i32..=5,
            j in 0i32..=3,
            s in 1i32..=3,
            c in 0.4f64..4.0,
        ) {
            let spec = IntegralSpec::minus(n.max(s), j, s, 1.0, 1.0).unwrap();
            let eps = 1e-10;
            let q1 = integrate(&spec, &QuadratureConfig::new(c, eps).unwrap()).unwrap();
            let q2 = integrate(&spec, &QuadratureConfig::new(2.0 * c, eps).unwrap()).unwrap();
            prop_assert!(
                (q1.value - q2.value).abs() <= 10.0 * eps,
                "{spec}: c={c}: {} vs {}", q1.value, q2.value
            );
        }
    }
}
