//! Exact closed forms for the family members that reduce completely.
//!
//! A [`ClosedExpr`] is a linear combination with exact rational
//! coefficients times integer powers of `t = b*mu` and of `pi`, over the
//! atoms `1`, `log(t/2pi)`, `psi^(i)(t/2pi)` (optionally shifted by 1/2)
//! and `zeta(k)`. Everything here is expressed in normal form (`mu = 1`);
//! callers de-normalize with the scale factor `mu^(2j-n-1)`.
//!
//! Covered members:
//!
//! * `Î^-_{1,j,1}`: for `j = 1` the half-bracket `log - pi/t - psi` form;
//!   for `j >= 2` the gamma-minus expansion
//!   `Î^-_{1,j,1} = -g_{j,-1} pi t^(1-2j) - g_{j,0} t^(2-2j)
//!    - sum_i (-1)^i g_{j,i} t^(i+2-2j) pi^(-i) psi^(i)(t/2pi)`.
//! * `Î^+_{1,j,1}`: the analogous expansion over half-shifted polygammas,
//!   with no `pi/t` pole term and the opposite overall orientation.
//! * `Î^-_{n,0,1} = n! zeta(n+1)`.
//! * `Î^-_{n,0,s}`: triangular elimination through the alpha table,
//!   yielding an exact zeta-combination.
//! * Sum-rule right-hand sides for the first two denominator powers,
//!   used by the verification suites.

use crate::coefficients::{self, alpha, factorial, gamma_minus, gamma_plus, rat, Rational, MAX_GAMMA_J};
use crate::error::{Error, Result};
use crate::special::{self, PolygammaOrder, ZetaArg};

use num::traits::Zero;
use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

/// Transcendental atom of a closed-form term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Atom {
    /// The constant 1.
    One,
    /// `log(t / 2pi)`.
    LogOverTwoPi,
    /// `psi^(order)(t/2pi + shift)` with shift 0 or 1/2.
    Polygamma { order: u32, half_shift: bool },
    /// `zeta(k)`, `k >= 2`.
    Zeta { k: u32 },
}

/// One term `coeff * t^t_pow * pi^pi_pow * atom`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: Rational,
    pub t_pow: i32,
    pub pi_pow: i32,
    pub atom: Atom,
}

/// A closed-form expression in the normalized variable `t = b*mu`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClosedExpr {
    terms: Vec<Term>,
}

impl ClosedExpr {
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    fn push(&mut self, coeff: Rational, t_pow: i32, pi_pow: i32, atom: Atom) {
        if !coeff.is_zero() {
            self.terms.push(Term { coeff, t_pow, pi_pow, atom });
        }
    }

    /// Evaluates at `t > 0`. Polygamma atoms are computed once per
    /// distinct `(order, shift)` pair; terms are combined with
    /// compensated summation.
    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(self.eval_with_magnitude(t)?.0)
    }

    /// Returns `(value, sum of |term|)`; the magnitude sum feeds the
    /// cancellation-aware error heuristic of the evaluator: the absolute
    /// error of the returned value is of order `1e-12 * magnitude`.
    pub fn eval_with_magnitude(&self, t: f64) -> Result<(f64, f64)> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("t must be positive, got {t}")));
        }
        let mut polygamma_cache: HashMap<(u32, bool), f64> = HashMap::new();
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        let mut magnitude = 0.0f64;
        for term in &self.terms {
            let atom = match term.atom {
                Atom::One => 1.0,
                Atom::LogOverTwoPi => (t / TAU).ln(),
                Atom::Polygamma { order, half_shift } => {
                    match polygamma_cache.entry((order, half_shift)) {
                        std::collections::hash_map::Entry::Occupied(e) => *e.get(),
                        std::collections::hash_map::Entry::Vacant(e) => {
                            let x = t / TAU + if half_shift { 0.5 } else { 0.0 };
                            let v = special::polygamma(PolygammaOrder::new(order)?, x)?;
                            *e.insert(v)
                        }
                    }
                }
                Atom::Zeta { k } => special::zeta_int(ZetaArg::new(k)?)?,
            };
            let value = coefficients::to_f64(&term.coeff)
                * t.powi(term.t_pow)
                * PI.powi(term.pi_pow)
                * atom;
            magnitude += value.abs();
            // Neumaier step
            let s = sum + value;
            if sum.abs() >= value.abs() {
                comp += (sum - s) + value;
            } else {
                comp += (value - s) + sum;
            }
            sum = s;
        }
        Ok((sum + comp, magnitude))
    }

    /// Exact coefficient lookup, mostly for tests: the sum of coefficients
    /// over terms matching `(t_pow, pi_pow, atom)`.
    pub fn coeff_of(&self, t_pow: i32, pi_pow: i32, atom: Atom) -> Rational {
        self.terms
            .iter()
            .filter(|term| term.t_pow == t_pow && term.pi_pow == pi_pow && term.atom == atom)
            .map(|term| term.coeff.clone())
            .sum()
    }
}

fn check_j_1j1(j: i32) -> Result<()> {
    if (1..=MAX_GAMMA_J).contains(&j) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "closed form for (1,j,1) needs j in [1, {MAX_GAMMA_J}], got {j}"
        )))
    }
}

/// `Î^-_{1,j,1}` as a closed expression, `1 <= j <= 12`.
pub fn closed_minus_1j1(j: i32) -> Result<ClosedExpr> {
    check_j_1j1(j)?;
    let mut expr = ClosedExpr::default();
    if j == 1 {
        // (log(t/2pi) - pi/t - psi(t/2pi)) / 2
        expr.push(rat(1, 2), 0, 0, Atom::LogOverTwoPi);
        expr.push(rat(-1, 2), -1, 1, Atom::One);
        expr.push(rat(-1, 2), 0, 0, Atom::Polygamma { order: 0, half_shift: false });
        return Ok(expr);
    }
    expr.push(-gamma_minus(j, -1)?, 1 - 2 * j, 1, Atom::One);
    expr.push(-gamma_minus(j, 0)?, 2 - 2 * j, 0, Atom::One);
    for i in 1..=(j - 1) {
        let sign = if i % 2 == 0 { rat(-1, 1) } else { rat(1, 1) };
        expr.push(
            sign * gamma_minus(j, i)?,
            i + 2 - 2 * j,
            -i,
            Atom::Polygamma { order: i as u32, half_shift: false },
        );
    }
    Ok(expr)
}

/// `Î^+_{1,j,1}` as a closed expression, `1 <= j <= 12`.
pub fn closed_plus_1j1(j: i32) -> Result<ClosedExpr> {
    check_j_1j1(j)?;
    let mut expr = ClosedExpr::default();
    if j == 1 {
        // (psi(t/2pi + 1/2) - log(t/2pi)) / 2
        expr.push(rat(1, 2), 0, 0, Atom::Polygamma { order: 0, half_shift: true });
        expr.push(rat(-1, 2), 0, 0, Atom::LogOverTwoPi);
        return Ok(expr);
    }
    expr.push(gamma_plus(j, 0)?, 2 - 2 * j, 0, Atom::One);
    for i in 1..=(j - 1) {
        let sign = if i % 2 == 0 { rat(1, 1) } else { rat(-1, 1) };
        expr.push(
            sign * gamma_plus(j, i)?,
            i + 2 - 2 * j,
            -i,
            Atom::Polygamma { order: i as u32, half_shift: true },
        );
    }
    Ok(expr)
}

/// `Î^-_{n,0,1} = n! zeta(n+1)`, `n >= 1`.
pub fn closed_minus_n01(n: i32) -> Result<ClosedExpr> {
    if n < 1 {
        return Err(Error::divergent(
            "I-(n,0,1) needs n >= 1: the kernel behaves like x^(n-1) at the origin".to_string(),
        ));
    }
    let mut expr = ClosedExpr::default();
    expr.push(factorial(n as u32), 0, 0, Atom::Zeta { k: n as u32 + 1 });
    Ok(expr)
}

/// `Î^-_{n,0,s}` as an exact zeta-combination, `n >= s >= 1`.
///
/// Solved from the triangular system
/// `sum_{k=1..l+1} alpha(l+1, k) Î^-_{n,0,k} = n! zeta(n-l+1)` for
/// `l = 0 .. s-1`: each new relation involves exactly one new unknown.
pub fn closed_minus_n0s(n: i32, s: i32) -> Result<ClosedExpr> {
    if s < 1 {
        return Err(Error::domain(format!("s must be >= 1, got {s}")));
    }
    if n < s {
        return Err(Error::divergent(format!(
            "I-({n},0,{s}) requires n >= s"
        )));
    }
    // zeta-coefficient vectors, index k -> coefficient of zeta(k)
    let mut solved: Vec<HashMap<u32, Rational>> = Vec::new();
    let nf = factorial(n as u32);
    for l in 0..s {
        let mut rhs: HashMap<u32, Rational> = HashMap::new();
        rhs.insert((n - l + 1) as u32, nf.clone());
        for (k0, prev) in solved.iter().enumerate() {
            let a = alpha(l + 1, k0 as i32 + 1)?;
            for (&z, c) in prev {
                *rhs.entry(z).or_insert_with(|| rat(0, 1)) -= &a * c;
            }
        }
        let lead = alpha(l + 1, l + 1)?;
        for c in rhs.values_mut() {
            *c /= &lead;
        }
        solved.push(rhs);
    }
    let mut expr = ClosedExpr::default();
    let mut keys: Vec<u32> = solved[s as usize - 1].keys().copied().collect();
    keys.sort_unstable();
    for k in keys {
        expr.push(solved[s as usize - 1][&k].clone(), 0, 0, Atom::Zeta { k });
    }
    Ok(expr)
}

/// Normalized right-hand side of the sum rule
/// `sum_{s=1..n} alpha(n,s) Î^-_{n,j,s} = rhs(n, j)` for `j in {1, 2}`.
///
/// `j = 1`:
/// `-(n-2)!/2 - pi (n-1)!/(2t) + (-1)^n (1/2) (t/2pi)^(n-1) psi^(n-1)(t/2pi)`;
/// `j = 2` is its `b`-derivative divided by `-2b`, carrying `psi^(n-1)`
/// and `psi^(n)` atoms. Used for verification only.
pub fn sum_rule_rhs(n: i32, j: i32) -> Result<ClosedExpr> {
    if n < 2 {
        return Err(Error::domain(format!("sum rule needs n >= 2, got {n}")));
    }
    if n as u32 > crate::special::MAX_POLYGAMMA_ORDER {
        return Err(Error::domain(format!(
            "sum rule rhs for n = {n} needs polygamma orders beyond the supported cap"
        )));
    }
    let sign = if n % 2 == 0 { rat(1, 1) } else { rat(-1, 1) };
    let two_pow = |p: i32| -> Rational {
        // exact 2^(-p) for p >= 0
        Rational::from_integer(num::BigInt::from(1) << p as usize).recip()
    };
    let mut expr = ClosedExpr::default();
    match j {
        1 => {
            expr.push(-factorial(n as u32 - 2) * rat(1, 2), 0, 0, Atom::One);
            expr.push(-factorial(n as u32 - 1) * rat(1, 2), -1, 1, Atom::One);
            // (-1)^n (1/2) (t/2pi)^(n-1) psi^(n-1)
            expr.push(
                sign * rat(1, 2) * two_pow(n - 1),
                n - 1,
                -(n - 1),
                Atom::Polygamma { order: n as u32 - 1, half_shift: false },
            );
        }
        2 => {
            expr.push(-factorial(n as u32 - 1) * rat(1, 4), -3, 1, Atom::One);
            // -(-1)^n (n-1)/4 * t^(n-3)/(2pi)^(n-1) psi^(n-1)
            expr.push(
                -sign.clone() * rat(i64::from(n - 1), 4) * two_pow(n - 1),
                n - 3,
                -(n - 1),
                Atom::Polygamma { order: n as u32 - 1, half_shift: false },
            );
            // -(-1)^n /4 * t^(n-2)/(2pi)^n psi^(n)
            expr.push(
                -sign * rat(1, 4) * two_pow(n),
                n - 2,
                -n,
                Atom::Polygamma { order: n as u32, half_shift: false },
            );
        }
        _ => {
            return Err(Error::domain(format!(
                "sum rule rhs implemented for j in {{1, 2}}, got {j}"
            )))
        }
    }
    Ok(expr)
}

/// Left-hand-side weights of the same sum rule: `(s, alpha(n,s))` pairs.
pub fn sum_rule_weights(n: i32) -> Result<Vec<(i32, Rational)>> {
    (1..=n).map(|s| Ok((s, alpha(n, s)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::rat_int;

    const T2P: f64 = std::f64::consts::TAU;

    #[test]
    fn minus_j1_anchor() {
        // (gamma - 1/2)/2 at t = 2pi, confirmed against quadrature
        let expr = closed_minus_1j1(1).unwrap();
        let v = expr.eval(T2P).unwrap();
        assert!((v - 0.03860783245076643).abs() < 1e-14, "got {v:.17}");
        let v1 = expr.eval(1.0).unwrap();
        assert!((v1 - 0.8228962870562976).abs() < 1e-13, "got {v1:.17}");
    }

    #[test]
    fn minus_j2_anchor() {
        // (zeta(2) - 3/2)/(16 pi^2) at t = 2pi
        let v = closed_minus_1j1(2).unwrap().eval(T2P).unwrap();
        assert!((v - 0.0009178057001975006).abs() < 1e-15, "got {v:.17}");
    }

    #[test]
    fn minus_j3_expression_shape() {
        let expr = closed_minus_1j1(3).unwrap();
        assert_eq!(expr.coeff_of(-5, 1, Atom::One), rat(-3, 16));
        assert_eq!(expr.coeff_of(-4, 0, Atom::One), rat(-1, 8));
        assert_eq!(
            expr.coeff_of(-3, -1, Atom::Polygamma { order: 1, half_shift: false }),
            rat(1, 32)
        );
        assert_eq!(
            expr.coeff_of(-2, -2, Atom::Polygamma { order: 2, half_shift: false }),
            rat(-1, 64)
        );
        assert_eq!(expr.terms().len(), 4);
    }

    #[test]
    fn plus_j1_anchor() {
        // psi(3/2)/2 at t = 2pi
        let v = closed_plus_1j1(1).unwrap().eval(T2P).unwrap();
        assert!((v - 0.01824498698928826).abs() < 1e-15, "got {v:.17}");
        let v1 = closed_plus_1j1(1).unwrap().eval(1.0).unwrap();
        assert!((v1 - 0.2482085395273703).abs() < 1e-14, "got {v1:.17}");
    }

    #[test]
    fn plus_j2_anchor() {
        // (1 - psi'(3/2))/(16 pi^2) with psi'(3/2) = pi^2/2 - 4, at t = 2pi
        let v = closed_plus_1j1(2).unwrap().eval(T2P).unwrap();
        assert!((v - 0.00041286988823055357).abs() < 1e-15, "got {v:.17}");
    }

    #[test]
    fn plus_j6_leading_term() {
        let expr = closed_plus_1j1(6).unwrap();
        assert_eq!(expr.coeff_of(-10, 0, Atom::One), rat(1, 20));
        // highest-derivative term carries pi^-5 (the exponent follows the
        // general pattern, pi^-i with the order i)
        assert_eq!(
            expr.coeff_of(-5, -5, Atom::Polygamma { order: 5, half_shift: true }),
            rat(-1, 245760)
        );
    }

    #[test]
    fn shift_half_only_in_plus() {
        for j in 1..=6 {
            for term in closed_minus_1j1(j).unwrap().terms() {
                if let Atom::Polygamma { half_shift, .. } = term.atom {
                    assert!(!half_shift);
                }
            }
            for term in closed_plus_1j1(j).unwrap().terms() {
                if let Atom::Polygamma { half_shift, .. } = term.atom {
                    assert!(half_shift);
                }
            }
        }
    }

    #[test]
    fn j_out_of_range() {
        assert!(closed_minus_1j1(0).is_err());
        assert!(closed_minus_1j1(13).is_err());
        assert!(closed_plus_1j1(-2).is_err());
    }

    #[test]
    fn bose_moment_values() {
        // n = 1 -> zeta(2) = pi^2/6; n = 3 -> 6 zeta(4) = pi^4/15
        let pi = std::f64::consts::PI;
        let v1 = closed_minus_n01(1).unwrap().eval(1.0).unwrap();
        assert!((v1 - pi * pi / 6.0).abs() < 1e-15);
        let v3 = closed_minus_n01(3).unwrap().eval(1.0).unwrap();
        assert!((v3 - pi.powi(4) / 15.0).abs() < 1e-14);
        assert!(matches!(closed_minus_n01(0), Err(Error::Divergent(_))));
    }

    #[test]
    fn zeta_combination_for_higher_s() {
        // (2,2): 2 zeta(2) - 2 zeta(3)
        let expr = closed_minus_n0s(2, 2).unwrap();
        assert_eq!(expr.coeff_of(0, 0, Atom::Zeta { k: 2 }), rat_int(2));
        assert_eq!(expr.coeff_of(0, 0, Atom::Zeta { k: 3 }), rat_int(-2));
        let v = expr.eval(1.0).unwrap();
        assert!((v - 0.8857543273772643).abs() < 1e-15, "got {v:.17}");

        // (4,2): 24 zeta(4) - 24 zeta(5)
        let expr = closed_minus_n0s(4, 2).unwrap();
        assert_eq!(expr.coeff_of(0, 0, Atom::Zeta { k: 4 }), rat_int(24));
        assert_eq!(expr.coeff_of(0, 0, Atom::Zeta { k: 5 }), rat_int(-24));

        // (5,3) against the independently solved value
        let v = closed_minus_n0s(5, 3).unwrap().eval(1.0).unwrap();
        assert!((v - 0.3735655349956015).abs() < 1e-14, "got {v:.17}");
    }

    #[test]
    fn s_one_equals_n01() {
        // s = 1 must coincide with the plain zeta form as an expression
        for n in 1..=6 {
            assert_eq!(
                closed_minus_n0s(n, 1).unwrap(),
                closed_minus_n01(n).unwrap(),
                "n = {n}"
            );
        }
    }

    #[test]
    fn n0s_divergent_inputs() {
        assert!(matches!(closed_minus_n0s(1, 2), Err(Error::Divergent(_))));
        assert!(matches!(closed_minus_n0s(3, 4), Err(Error::Divergent(_))));
        assert!(closed_minus_n0s(0, 1).is_err());
    }

    #[test]
    fn sum_rule_rhs_n2_shape() {
        // -1/2 - pi/t + (1/2)(t/2pi) psi'(t/2pi)
        let expr = sum_rule_rhs(2, 1).unwrap();
        assert_eq!(expr.coeff_of(0, 0, Atom::One), rat(-1, 2));
        assert_eq!(expr.coeff_of(-1, 1, Atom::One), rat(-1, 2));
        assert_eq!(
            expr.coeff_of(1, -1, Atom::Polygamma { order: 1, half_shift: false }),
            rat(1, 4)
        );
    }

    #[test]
    fn sum_rule_rhs_j2_shape() {
        let expr = sum_rule_rhs(2, 2).unwrap();
        assert_eq!(expr.coeff_of(-3, 1, Atom::One), rat(-1, 4));
        assert_eq!(
            expr.coeff_of(-1, -1, Atom::Polygamma { order: 1, half_shift: false }),
            rat(-1, 8)
        );
        assert_eq!(
            expr.coeff_of(0, -2, Atom::Polygamma { order: 2, half_shift: false }),
            rat(-1, 16)
        );
        assert!(sum_rule_rhs(2, 3).is_err());
        assert!(sum_rule_rhs(1, 1).is_err());
    }

    #[test]
    fn positivity_and_domination() {
        for t in [0.5, 1.0, std::f64::consts::PI, T2P, 10.0] {
            let mut prev_minus = f64::INFINITY;
            let mut prev_plus = f64::INFINITY;
            for j in 1..=6 {
                let vm = closed_minus_1j1(j).unwrap().eval(t).unwrap();
                let vp = closed_plus_1j1(j).unwrap().eval(t).unwrap();
                assert!(vm > 0.0, "minus j={j} t={t}: {vm}");
                assert!(vp > 0.0, "plus j={j} t={t}: {vp}");
                // kernel inequality: I_{1,j+1,1} <= I_{1,j,1} / t^2
                assert!(
                    vm <= prev_minus / (t * t) * (1.0 + 1e-12),
                    "domination fails: minus j={j} t={t}"
                );
                assert!(
                    vp <= prev_plus / (t * t) * (1.0 + 1e-12),
                    "domination fails: plus j={j} t={t}"
                );
                prev_minus = vm;
                prev_plus = vp;
            }
        }
    }

    #[test]
    fn large_t_asymptotics() {
        // t^2 * Î^-_{1,1,1}(t) -> zeta(2); within 1% at t = 100
        let v = closed_minus_1j1(1).unwrap().eval(100.0).unwrap();
        let z2 = 1.6449340668482264;
        assert!((v * 1e4 - z2).abs() / z2 < 0.01, "got {}", v * 1e4);
    }

    #[test]
    fn eval_rejects_bad_t() {
        let expr = closed_minus_1j1(1).unwrap();
        assert!(expr.eval(0.0).is_err());
        assert!(expr.eval(-1.0).is_err());
        assert!(expr.eval(f64::NAN).is_err());
    }
}
