//! The integral family and its basic algebra.
//!
//! A family member is
//!
//! ```text
//! I^±_{n,j,s}(b, mu) = ∫_0^∞ x^n / ((x^2 + b^2)^j (e^(mu x) ± 1)^s) dx
//! ```
//!
//! with integer exponents `n >= 0`, `s >= 1`, signed `j` (negative `j` means
//! the polynomial moves to the numerator) and real parameters `b, mu > 0`.
//! Substituting `x -> x/mu` shows that only the product `t = b*mu` matters:
//!
//! ```text
//! I^±_{n,j,s}(b, mu) = mu^(2j-n-1) * I^±_{n,j,s}(b*mu, 1)
//! ```
//!
//! so every evaluator in this crate works on the normal form `I(t, 1)` and
//! applies the scale factor at the end.

use crate::error::{Error, Result};

/// Sign in the exponential factor: `Minus` is the Bose-type kernel
/// `(e^(mu x) - 1)^s`, `Plus` the Fermi-type `(e^(mu x) + 1)^s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn symbol(self) -> char {
        match self {
            Sign::Minus => '-',
            Sign::Plus => '+',
        }
    }
}

/// One member of the integral family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralSpec {
    pub sign: Sign,
    pub n: i32,
    pub j: i32,
    pub s: i32,
    pub b: f64,
    pub mu: f64,
}

impl IntegralSpec {
    /// Builds a spec, validating the structural invariants `n >= 0`,
    /// `s >= 1`, `b > 0`, `mu > 0` (convergence is a separate question,
    /// see [`IntegralSpec::converges`]).
    pub fn new(sign: Sign, n: i32, j: i32, s: i32, b: f64, mu: f64) -> Result<Self> {
        if n < 0 {
            return Err(Error::domain(format!("n must be >= 0, got {n}")));
        }
        if s < 1 {
            return Err(Error::domain(format!("s must be >= 1, got {s}")));
        }
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::domain(format!("b must be positive and finite, got {b}")));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::domain(format!(
                "mu must be positive and finite, got {mu}"
            )));
        }
        Ok(IntegralSpec { sign, n, j, s, b, mu })
    }

    pub fn minus(n: i32, j: i32, s: i32, b: f64, mu: f64) -> Result<Self> {
        Self::new(Sign::Minus, n, j, s, b, mu)
    }

    pub fn plus(n: i32, j: i32, s: i32, b: f64, mu: f64) -> Result<Self> {
        Self::new(Sign::Plus, n, j, s, b, mu)
    }

    /// The scale-invariant argument `t = b * mu`.
    pub fn t(&self) -> f64 {
        self.b * self.mu
    }

    /// `I(b, mu) = normal_scale() * I(t, 1)`.
    pub fn normal_scale(&self) -> f64 {
        self.mu.powi(2 * self.j - self.n - 1)
    }

    /// The same member in normal form (`mu = 1`, `b = t`).
    pub fn normalized(&self) -> IntegralSpec {
        IntegralSpec {
            b: self.t(),
            mu: 1.0,
            ..*self
        }
    }

    /// Decides convergence from the exponents alone (`b > 0` is an
    /// invariant of the type).
    ///
    /// The minus kernel behaves like `x^(n-s)` at the origin, so it needs
    /// `n >= s`; the plus kernel has no origin singularity and converges
    /// for every `n >= 0`. Exponential decay settles the upper limit for
    /// both, whatever the sign of `j`.
    pub fn converges(&self) -> bool {
        match self.sign {
            Sign::Minus => self.n >= self.s,
            Sign::Plus => self.n >= 0,
        }
    }

    /// `None` if convergent, otherwise a human-readable reason.
    pub fn divergence_reason(&self) -> Option<String> {
        if self.converges() {
            None
        } else {
            Some(format!(
                "I{}({},{},{}) requires n >= s for the minus kernel",
                self.sign.symbol(),
                self.n,
                self.j,
                self.s
            ))
        }
    }

    /// Errs with [`Error::Divergent`] unless the member converges.
    pub fn require_convergent(&self) -> Result<()> {
        match self.divergence_reason() {
            None => Ok(()),
            Some(reason) => Err(Error::divergent(reason)),
        }
    }
}

impl std::fmt::Display for IntegralSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "I{}({},{},{}; b={}, mu={})",
            self.sign.symbol(),
            self.n,
            self.j,
            self.s,
            self.b,
            self.mu
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convergence_predicate() {
        let m = |n, j, s| IntegralSpec::minus(n, j, s, 1.0, 1.0).unwrap();
        let p = |n, j, s| IntegralSpec::plus(n, j, s, 1.0, 1.0).unwrap();
        // the fundamental member exists
        assert!(m(1, 1, 1).converges());
        // kernel ~ 1/x at the origin
        assert!(!m(1, 1, 2).converges());
        assert!(p(0, 0, 1).converges());
        assert!(m(4, -2, 4).converges());
        assert!(!m(3, 0, 4).converges());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(IntegralSpec::minus(-1, 1, 1, 1.0, 1.0).is_err());
        assert!(IntegralSpec::minus(1, 1, 0, 1.0, 1.0).is_err());
        assert!(IntegralSpec::minus(1, 1, 1, 0.0, 1.0).is_err());
        assert!(IntegralSpec::minus(1, 1, 1, 1.0, -2.0).is_err());
        assert!(IntegralSpec::minus(1, 1, 1, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn normalization_scale() {
        let spec = IntegralSpec::minus(1, 2, 1, 0.5, 3.0).unwrap();
        assert_eq!(spec.t(), 1.5);
        // 2j - n - 1 = 2
        assert_eq!(spec.normal_scale(), 9.0);
        let norm = spec.normalized();
        assert_eq!(norm.b, 1.5);
        assert_eq!(norm.mu, 1.0);
    }

    #[test]
    fn divergence_reason_names_condition() {
        let spec = IntegralSpec::minus(1, 1, 2, 1.0, 1.0).unwrap();
        let reason = spec.divergence_reason().unwrap();
        assert!(reason.contains("n >= s"), "reason was: {reason}");
        assert!(spec.require_convergent().is_err());
    }
}
