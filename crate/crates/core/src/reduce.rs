//! Rewrites any convergent family member into a linear combination of
//! terminal atoms and evaluates it.
//!
//! The rewrite rules, all exact:
//!
//! * numerator lowering (partial fractions, steps of two):
//!   `I_{n,j,s} = I_{n-2,j-1,s} - b^2 I_{n-2,j,s}` for `n >= s+2`, `j >= 1`;
//! * binomial expansion for `j <= 0` (polynomial numerators) into `j = 0`
//!   atoms;
//! * two `s`-lowering rules obtained from partial integration, solved for
//!   their last term:
//!   type A rewrites `I^-_{m,j,m}`, type B rewrites `I^-_{m,j,m-1}`,
//!   each into three atoms with `s` lowered by one;
//! * the plus-to-minus factorization
//!   `I^+_{n,j,1}(b, mu) = I^-_{n,j,1}(b, mu) - 2 I^-_{n,j,1}(b, 2mu)`.
//!
//! Terminal atoms are either exact leaves (`j = 0` zeta combinations and
//! the polygamma closed forms `Î^-_{1,j,1}`) or numeric leaves handed to
//! the quadrature module: the residual members `I^-_{2,j,1}`, which the
//! rule set cannot close, plus anything outside the closed machinery's
//! caps. Coefficients stay exact rationals with symbolic `b`/`mu` powers
//! until the final evaluation.

use std::collections::HashMap;
use std::sync::Mutex;

use num::traits::Zero;

use crate::closed_form;
use crate::coefficients::{rat, rat_int, to_f64, Rational, MAX_GAMMA_J};
use crate::error::{Error, Result};
use crate::family::{IntegralSpec, Sign};
use crate::quadrature;

/// Engine caps; members beyond them are evaluated wholly by quadrature.
pub const MAX_S: i32 = 8;
pub const MAX_J: i32 = 12;
pub const MIN_J: i32 = -24;
pub const MAX_N: i32 = 24;

/// Rewrite-step budget (bug guard, not a tunable).
const MAX_REWRITE_STEPS: usize = 100_000;

/// A family member inside a [`LinearForm`], sharing the ambient `(b, mu)`
/// up to an exact integer multiplier on `mu` (the plus-to-minus rule
/// doubles `mu`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FormAtom {
    pub sign: Sign,
    pub n: i32,
    pub j: i32,
    pub s: i32,
    pub mu_scale: u32,
}

impl FormAtom {
    fn minus(n: i32, j: i32, s: i32) -> Self {
        FormAtom { sign: Sign::Minus, n, j, s, mu_scale: 1 }
    }

    /// The atom as a standalone spec at ambient parameters `(b, mu)`.
    pub fn spec(&self, b: f64, mu: f64) -> IntegralSpec {
        IntegralSpec {
            sign: self.sign,
            n: self.n,
            j: self.j,
            s: self.s,
            b,
            mu: mu * f64::from(self.mu_scale),
        }
    }

    fn converges(&self) -> bool {
        match self.sign {
            Sign::Minus => self.n >= self.s,
            Sign::Plus => self.n >= 0,
        }
    }
}

impl std::fmt::Display for FormAtom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "I{}({},{},{})", self.sign.symbol(), self.n, self.j, self.s)?;
        if self.mu_scale != 1 {
            write!(f, "@{}mu", self.mu_scale)?;
        }
        Ok(())
    }
}

/// `coeff * b^b_pow * mu^mu_pow * atom`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormTerm {
    pub coeff: Rational,
    pub b_pow: i32,
    pub mu_pow: i32,
    pub atom: FormAtom,
}

/// A rational-coefficient linear combination of family atoms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearForm {
    terms: Vec<FormTerm>,
}

impl LinearForm {
    fn from_terms(terms: Vec<FormTerm>) -> Self {
        LinearForm { terms }.canonical()
    }

    pub fn terms(&self) -> &[FormTerm] {
        &self.terms
    }

    /// Merges duplicate atoms (same atom and same `b`/`mu` monomial) and
    /// sorts terms into a deterministic order.
    pub fn canonical(mut self) -> Self {
        let mut merged: HashMap<(FormAtom, i32, i32), Rational> = HashMap::new();
        for term in self.terms.drain(..) {
            *merged
                .entry((term.atom, term.b_pow, term.mu_pow))
                .or_insert_with(|| rat_int(0)) += term.coeff;
        }
        let mut terms: Vec<FormTerm> = merged
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|((atom, b_pow, mu_pow), coeff)| FormTerm { coeff, b_pow, mu_pow, atom })
            .collect();
        terms.sort_by(|a, b| {
            (a.atom, a.b_pow, a.mu_pow).cmp(&(b.atom, b.b_pow, b.mu_pow))
        });
        LinearForm { terms }
    }

    /// Splits leaf terms into closed-form and quadrature classes.
    pub fn census(&self) -> LeafCensus {
        let mut census = LeafCensus::default();
        for term in &self.terms {
            match leaf_kind(&term.atom) {
                Some(LeafKind::ZetaCombination) | Some(LeafKind::PolygammaClosed) => {
                    census.closed += 1
                }
                Some(LeafKind::ResidualQuadrature) | Some(LeafKind::QuadratureFallback) => {
                    census.quadrature += 1
                }
                None => census.unreduced += 1,
            }
        }
        census
    }
}

impl std::fmt::Display for LinearForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, term) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({})", term.coeff)?;
            if term.b_pow != 0 {
                write!(f, " b^{}", term.b_pow)?;
            }
            if term.mu_pow != 0 {
                write!(f, " mu^{}", term.mu_pow)?;
            }
            write!(f, " {}", term.atom)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LeafCensus {
    pub closed: usize,
    pub quadrature: usize,
    pub unreduced: usize,
}

/// How a terminal atom gets its number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafKind {
    /// `I^-_{n,0,s}`: exact zeta combination.
    ZetaCombination,
    /// `Î^-_{1,j,1}`, `1 <= j <= 12`: polygamma closed form.
    PolygammaClosed,
    /// `I^-_{2,j,1}`: entangled residual, evaluated numerically.
    ResidualQuadrature,
    /// Anything the closed machinery cannot touch (plus kernels with
    /// `s >= 2` or `n = 0`, and leaves past the polygamma order cap).
    QuadratureFallback,
}

/// Classification of a terminal atom; `None` if the atom is reducible.
pub fn leaf_kind(atom: &FormAtom) -> Option<LeafKind> {
    match atom.sign {
        Sign::Minus => {
            if atom.j == 0 {
                Some(LeafKind::ZetaCombination)
            } else if atom.s == 1 && atom.n == 1 && atom.j >= 1 {
                if atom.j <= MAX_GAMMA_J {
                    Some(LeafKind::PolygammaClosed)
                } else {
                    Some(LeafKind::QuadratureFallback)
                }
            } else if atom.s == 1 && atom.n == 2 && atom.j >= 1 {
                Some(LeafKind::ResidualQuadrature)
            } else {
                None
            }
        }
        Sign::Plus => {
            if atom.s >= 2 || atom.n == 0 {
                Some(LeafKind::QuadratureFallback)
            } else {
                None
            }
        }
    }
}

fn check(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::domain(msg.into()))
    }
}

/// Partial-fraction numerator lowering:
/// `I_{n,j,s} = I_{n-2,j-1,s} - b^2 I_{n-2,j,s}`, needs `n >= s+2`, `j >= 1`.
pub fn lower_n(spec: &IntegralSpec) -> Result<LinearForm> {
    check(
        spec.n >= spec.s + 2,
        format!("numerator lowering needs n >= s+2, got n={}, s={}", spec.n, spec.s),
    )?;
    check(spec.j >= 1, format!("numerator lowering needs j >= 1, got j={}", spec.j))?;
    let at = |n, j, s| FormAtom { sign: spec.sign, n, j, s, mu_scale: 1 };
    Ok(LinearForm::from_terms(vec![
        FormTerm { coeff: rat_int(1), b_pow: 0, mu_pow: 0, atom: at(spec.n - 2, spec.j - 1, spec.s) },
        FormTerm { coeff: rat_int(-1), b_pow: 2, mu_pow: 0, atom: at(spec.n - 2, spec.j, spec.s) },
    ]))
}

/// Binomial expansion of a polynomial numerator (`j <= 0`):
/// `I_{n,-J,s} = sum_l C(J,l) b^(2(J-l)) I_{n+2l,0,s}`. `j = 0` is the
/// identity. Requires a convergent input.
pub fn expand_negative_j(spec: &IntegralSpec) -> Result<LinearForm> {
    check(spec.j <= 0, format!("binomial expansion needs j <= 0, got j={}", spec.j))?;
    spec.require_convergent()?;
    let big_j = -spec.j;
    let mut terms = Vec::new();
    for l in 0..=big_j {
        terms.push(FormTerm {
            coeff: crate::coefficients::binomial(big_j as u32, l as u32),
            b_pow: 2 * (big_j - l),
            mu_pow: 0,
            atom: FormAtom { sign: spec.sign, n: spec.n + 2 * l, j: 0, s: spec.s, mu_scale: 1 },
        });
    }
    Ok(LinearForm::from_terms(terms))
}

/// Type-A `s`-lowering, for members of shape `I^-_{m,j,m}` (`m >= 2`,
/// `j >= 1`):
///
/// ```text
/// I^-_{m,j,m} = [ -2j I^-_{m+1,j+1,m-1} - (m-1) mu I^-_{m,j,m-1}
///                 + m I^-_{m-1,j,m-1} ] / ((m-1) mu)
/// ```
///
/// Every produced atom is convergent.
pub fn lower_s_type_a(m: i32, j: i32) -> Result<LinearForm> {
    check(m >= 2, format!("type-A lowering needs m >= 2, got {m}"))?;
    check(j >= 1, format!("type-A lowering needs j >= 1, got {j}"))?;
    let d = i64::from(m - 1);
    let form = LinearForm::from_terms(vec![
        FormTerm {
            coeff: rat(i64::from(-2 * j), d),
            b_pow: 0,
            mu_pow: -1,
            atom: FormAtom::minus(m + 1, j + 1, m - 1),
        },
        FormTerm { coeff: rat_int(-1), b_pow: 0, mu_pow: 0, atom: FormAtom::minus(m, j, m - 1) },
        FormTerm {
            coeff: rat(i64::from(m), d),
            b_pow: 0,
            mu_pow: -1,
            atom: FormAtom::minus(m - 1, j, m - 1),
        },
    ]);
    debug_assert!(form.terms().iter().all(|t| t.atom.converges()));
    Ok(form)
}

/// Type-B `s`-lowering, for members of shape `I^-_{m,j,m-1}` (`m >= 3`,
/// `j >= 1`):
///
/// ```text
/// I^-_{m,j,m-1} = [ -2j I^-_{m+1,j+1,m-2} - (m-2) mu I^-_{m,j,m-2}
///                   + m I^-_{m-1,j,m-2} ] / ((m-2) mu)
/// ```
pub fn lower_s_type_b(m: i32, j: i32) -> Result<LinearForm> {
    check(m >= 3, format!("type-B lowering needs m >= 3 (the m-2 weight vanishes), got {m}"))?;
    check(j >= 1, format!("type-B lowering needs j >= 1, got {j}"))?;
    let d = i64::from(m - 2);
    let form = LinearForm::from_terms(vec![
        FormTerm {
            coeff: rat(i64::from(-2 * j), d),
            b_pow: 0,
            mu_pow: -1,
            atom: FormAtom::minus(m + 1, j + 1, m - 2),
        },
        FormTerm { coeff: rat_int(-1), b_pow: 0, mu_pow: 0, atom: FormAtom::minus(m, j, m - 2) },
        FormTerm {
            coeff: rat(i64::from(m), d),
            b_pow: 0,
            mu_pow: -1,
            atom: FormAtom::minus(m - 1, j, m - 2),
        },
    ]);
    debug_assert!(form.terms().iter().all(|t| t.atom.converges()));
    Ok(form)
}

/// Plus-to-minus factorization for `s = 1`:
/// `I^+_{n,j,1}(b, mu) = I^-_{n,j,1}(b, mu) - 2 I^-_{n,j,1}(b, 2mu)`.
///
/// Needs `n >= 1`: at `n = 0` the plus member converges but both minus
/// members diverge individually, so the identity is unusable.
pub fn plus_to_minus(spec: &IntegralSpec) -> Result<LinearForm> {
    check(spec.sign == Sign::Plus, "plus-to-minus needs a plus-kernel spec".to_string())?;
    check(
        spec.s == 1,
        format!("plus-to-minus factorization only applies at s = 1, got s={}", spec.s),
    )?;
    check(
        spec.n >= 1,
        "plus-to-minus needs n >= 1 (the minus members diverge at n = 0)".to_string(),
    )?;
    Ok(LinearForm::from_terms(vec![
        FormTerm {
            coeff: rat_int(1),
            b_pow: 0,
            mu_pow: 0,
            atom: FormAtom { sign: Sign::Minus, n: spec.n, j: spec.j, s: 1, mu_scale: 1 },
        },
        FormTerm {
            coeff: rat_int(-2),
            b_pow: 0,
            mu_pow: 0,
            atom: FormAtom { sign: Sign::Minus, n: spec.n, j: spec.j, s: 1, mu_scale: 2 },
        },
    ]))
}

/// True when the member must be evaluated wholly by quadrature.
pub fn outside_caps(spec: &IntegralSpec) -> bool {
    spec.s > MAX_S || spec.j > MAX_J || spec.j < MIN_J || spec.n > MAX_N
}

/// One rewrite of a single non-terminal atom into its linear form.
fn step(atom: &FormAtom) -> Result<LinearForm> {
    let ambient = |a: &FormAtom| IntegralSpec {
        sign: a.sign,
        n: a.n,
        j: a.j,
        s: a.s,
        // placeholder parameters: the rules only read the exponents
        b: 1.0,
        mu: 1.0,
    };
    match atom.sign {
        Sign::Plus => plus_to_minus(&ambient(atom)),
        Sign::Minus => {
            if atom.j < 0 {
                expand_negative_j(&ambient(atom))
            } else if atom.n >= atom.s + 2 {
                lower_n(&ambient(atom))
            } else if atom.s >= 2 && atom.n == atom.s {
                lower_s_type_a(atom.s, atom.j)
            } else if atom.s >= 2 && atom.n == atom.s + 1 {
                lower_s_type_b(atom.s + 1, atom.j)
            } else {
                Err(Error::domain(format!("no rewrite applies to {atom}")))
            }
        }
    }
}

/// Rewrites a convergent member to a linear form over terminal atoms.
///
/// Strategy, applied per atom until terminal: expand polynomial
/// numerators; route `j = 0` to the zeta solver; lower `n` while
/// `n >= s+2`; lower `s` for the shapes `(s,j,s)` and `(s+1,j,s)`;
/// at `s = 1`, `n = 1` is a closed leaf and `n = 2` a numeric residual.
/// Terminates because `(s, n)` decreases lexicographically under the
/// `s`- and `n`-lowering rules. Members outside the engine caps come
/// back as a single quadrature-fallback term.
pub fn reduce(spec: &IntegralSpec) -> Result<LinearForm> {
    spec.require_convergent()?;
    let root = FormTerm {
        coeff: rat_int(1),
        b_pow: 0,
        mu_pow: 0,
        atom: FormAtom {
            sign: spec.sign,
            n: spec.n,
            j: spec.j,
            s: spec.s,
            mu_scale: 1,
        },
    };
    if outside_caps(spec) {
        return Ok(LinearForm::from_terms(vec![root]));
    }

    let mut queue = vec![root];
    let mut done: Vec<FormTerm> = Vec::new();
    let mut steps = 0usize;
    while let Some(term) = queue.pop() {
        if leaf_kind(&term.atom).is_some() {
            done.push(term);
            continue;
        }
        steps += 1;
        if steps > MAX_REWRITE_STEPS {
            return Err(Error::DepthExceeded(MAX_REWRITE_STEPS));
        }
        let replacement = step(&term.atom)?;
        let k = term.atom.mu_scale;
        for sub in replacement.terms() {
            // the rule is stated at the atom's own mu' = k*mu: fold the
            // exact k^mu_pow into the coefficient
            let scale_adjust = scale_power(k, sub.mu_pow);
            queue.push(FormTerm {
                coeff: &term.coeff * &sub.coeff * scale_adjust,
                b_pow: term.b_pow + sub.b_pow,
                mu_pow: term.mu_pow + sub.mu_pow,
                atom: FormAtom {
                    mu_scale: k * sub.atom.mu_scale,
                    ..sub.atom
                },
            });
        }
    }
    Ok(LinearForm::from_terms(done))
}

/// Exact `k^p` for integer `p` of either sign.
fn scale_power(k: u32, p: i32) -> Rational {
    let base = rat_int(i64::from(k));
    if p >= 0 {
        num::traits::Pow::pow(base, p as u64)
    } else {
        num::traits::Pow::pow(base, (-p) as u64).recip()
    }
}

/// Result of [`evaluate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub value: f64,
    /// Heuristic absolute-error bound: quadrature leaf estimates enter
    /// linearly with their weights; closed leaves contribute
    /// `1e-12 * (sum of term magnitudes)`, reflecting the kernel accuracy.
    pub abs_error: f64,
    pub leaf_report: LeafReport,
}

/// How the value was assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LeafReport {
    pub closed_leaves: usize,
    pub quadrature_leaves: usize,
    /// True when the member bypassed reduction entirely (engine caps, or
    /// a plus kernel with no reduction path).
    pub whole_integral_fallback: bool,
}

/// Numeric leaf cache: normalized quadrature values per
/// `(n, j, s, sign, t, epsilon)`.
static LEAF_CACHE: Mutex<Option<HashMap<(i32, i32, i32, bool, u64, u64), (f64, f64)>>> =
    Mutex::new(None);

fn cached_leaf_quadrature(atom: &FormAtom, t: f64, eps: f64) -> Result<(f64, f64)> {
    let key = (
        atom.n,
        atom.j,
        atom.s,
        atom.sign == Sign::Plus,
        t.to_bits(),
        eps.to_bits(),
    );
    if let Some(hit) = LEAF_CACHE
        .lock()
        .unwrap()
        .get_or_insert_with(HashMap::new)
        .get(&key)
    {
        return Ok(*hit);
    }
    let normalized = IntegralSpec {
        sign: atom.sign,
        n: atom.n,
        j: atom.j,
        s: atom.s,
        b: t,
        mu: 1.0,
    };
    let q = quadrature::integrate_default(&normalized, eps)?;
    let entry = (q.value, q.err_estimate);
    LEAF_CACHE
        .lock()
        .unwrap()
        .get_or_insert_with(HashMap::new)
        .insert(key, entry);
    Ok(entry)
}

/// Evaluates a convergent member to absolute accuracy about `epsilon`.
///
/// Closed leaves go through the polygamma/zeta closed forms; numeric
/// leaves go to quadrature with the budget split as
/// `epsilon / (count * |weight|)` per leaf, so that the leaf errors sum
/// to at most `epsilon`. Quadrature failures propagate.
pub fn evaluate(spec: &IntegralSpec, epsilon: f64) -> Result<EvalResult> {
    if !(epsilon > 0.0) {
        return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
    }
    spec.require_convergent()?;
    if outside_caps(spec) {
        // single normalized quadrature, scaled back
        let scale = spec.normal_scale();
        let atom = FormAtom {
            sign: spec.sign,
            n: spec.n,
            j: spec.j,
            s: spec.s,
            mu_scale: 1,
        };
        let (v, err) = cached_leaf_quadrature(&atom, spec.t(), epsilon / scale.abs())?;
        return Ok(EvalResult {
            value: scale * v,
            abs_error: err * scale.abs(),
            leaf_report: LeafReport {
                closed_leaves: 0,
                quadrature_leaves: 1,
                whole_integral_fallback: true,
            },
        });
    }
    let form = reduce(spec)?;
    evaluate_form(&form, spec, epsilon)
}

fn evaluate_form(form: &LinearForm, spec: &IntegralSpec, epsilon: f64) -> Result<EvalResult> {
    let (b, mu) = (spec.b, spec.mu);
    let mut report = LeafReport::default();

    // weight of each term = coeff * b^bp * mu^mp * (k mu)^(2j - n - 1)
    let weight = |term: &FormTerm| -> f64 {
        let leaf_scale =
            (f64::from(term.atom.mu_scale) * mu).powi(2 * term.atom.j - term.atom.n - 1);
        to_f64(&term.coeff) * b.powi(term.b_pow) * mu.powi(term.mu_pow) * leaf_scale
    };

    let quad_count = form
        .terms()
        .iter()
        .filter(|t| {
            matches!(
                leaf_kind(&t.atom),
                Some(LeafKind::ResidualQuadrature) | Some(LeafKind::QuadratureFallback)
            )
        })
        .count();

    let mut value = 0.0f64;
    let mut comp = 0.0f64;
    let mut abs_error = 0.0f64;
    for term in form.terms() {
        let w = weight(term);
        let t_leaf = b * f64::from(term.atom.mu_scale) * mu;
        let kind = leaf_kind(&term.atom)
            .ok_or_else(|| Error::domain(format!("unreduced atom {} in evaluation", term.atom)))?;
        let contribution = match kind {
            LeafKind::ZetaCombination => {
                let expr = closed_form::closed_minus_n0s(term.atom.n, term.atom.s)?;
                let (v, mag) = expr.eval_with_magnitude(t_leaf)?;
                report.closed_leaves += 1;
                abs_error += 1e-12 * mag * w.abs();
                w * v
            }
            LeafKind::PolygammaClosed => {
                let expr = closed_form::closed_minus_1j1(term.atom.j)?;
                let (v, mag) = expr.eval_with_magnitude(t_leaf)?;
                report.closed_leaves += 1;
                abs_error += 1e-12 * mag * w.abs();
                w * v
            }
            LeafKind::ResidualQuadrature | LeafKind::QuadratureFallback => {
                report.quadrature_leaves += 1;
                if kind == LeafKind::QuadratureFallback && form.terms().len() == 1 {
                    report.whole_integral_fallback = true;
                }
                if w == 0.0 {
                    0.0
                } else {
                    let leaf_eps = epsilon / (quad_count.max(1) as f64 * w.abs());
                    let (v, err) = cached_leaf_quadrature(&term.atom, t_leaf, leaf_eps)?;
                    abs_error += err * w.abs();
                    w * v
                }
            }
        };
        // Neumaier accumulation of contributions
        let s = value + contribution;
        if value.abs() >= contribution.abs() {
            comp += (value - s) + contribution;
        } else {
            comp += (contribution - s) + value;
        }
        value = s;
    }
    Ok(EvalResult {
        value: value + comp,
        abs_error,
        leaf_report: report,
    })
}
