//! Exact rational coefficient tables.
//!
//! Three recursively-built tables drive the symbolic machinery:
//!
//! * `gamma_minus(j, i)` / `gamma_plus(j, i)` — expansion coefficients of
//!   the normalized members `Î^±_{1,j,1}` over polygamma atoms (see
//!   [`crate::closed_form`] for the expansion shape);
//! * `alpha(l, k)` — the positive integers relating mu-derivatives of
//!   `(e^(mu x) ∓ 1)^-1` to higher powers of the same factor,
//!   `alpha(l, k) = (k-1)! * S2(l, k)` with `S2` the Stirling numbers of
//!   the second kind.
//!
//! All entries are arbitrary-precision rationals, reduced and with
//! positive denominators. Tables are built eagerly on first access and
//! immutable afterwards, so concurrent reads are free.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num::bigint::BigInt;
use num::rational::Ratio;
use num::traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact fraction with arbitrary-precision integer parts, always reduced,
/// denominator always positive.
pub type Rational = Ratio<BigInt>;

/// Largest `j` served by the gamma tables (matches the polygamma order cap:
/// `Î_{1,j,1}` needs derivative orders through `j - 1`).
pub const MAX_GAMMA_J: i32 = 12;

/// Largest `l` served by the alpha table.
pub const MAX_ALPHA_L: i32 = 32;

/// `p/q` as a [`Rational`].
pub fn rat(p: i64, q: i64) -> Rational {
    Ratio::new(BigInt::from(p), BigInt::from(q))
}

/// Integer `n` as a [`Rational`].
pub fn rat_int(n: i64) -> Rational {
    Ratio::from_integer(BigInt::from(n))
}

/// `n!` as a [`Rational`].
pub fn factorial(n: u32) -> Rational {
    let mut f = BigInt::one();
    for i in 2..=n {
        f *= BigInt::from(i);
    }
    Ratio::from_integer(f)
}

/// Binomial coefficient as a [`Rational`].
pub fn binomial(n: u32, k: u32) -> Rational {
    Ratio::from_integer(num::integer::binomial(BigInt::from(n), BigInt::from(k)))
}

/// Nearest f64 to an exact rational.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().expect("rational out of f64 range")
}

/// Which of the two gamma tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaVariant {
    Minus,
    Plus,
}

/// One fully-built gamma table. Index range per `j`: `i in [-1, j-1]` for
/// the minus variant, `i in [0, j-1]` for plus.
#[derive(Debug)]
pub struct GammaTable {
    variant: GammaVariant,
    entries: BTreeMap<(i32, i32), Rational>,
}

impl GammaTable {
    fn build(variant: GammaVariant) -> Self {
        let mut entries = BTreeMap::new();
        let lo = match variant {
            GammaVariant::Minus => -1,
            GammaVariant::Plus => 0,
        };
        // seeds at j = 2
        if variant == GammaVariant::Minus {
            entries.insert((2, -1), rat(1, 4));
        }
        entries.insert((2, 0), rat(1, 4));
        entries.insert((2, 1), rat(1, 8));
        for j in 3..=MAX_GAMMA_J {
            for i in lo..=(j - 1) {
                let prev = |ii: i32| entries.get(&(j - 1, ii)).cloned().unwrap_or_default();
                let value = if i == -1 {
                    rat(i64::from(2 * j - 3), i64::from(2 * j - 2)) * prev(-1)
                } else if i == 0 {
                    rat(i64::from(j - 2), i64::from(j - 1)) * prev(0)
                } else if i == 1 {
                    rat(i64::from(2 * j - i - 4), i64::from(2 * j - 2)) * prev(1)
                } else if i < j - 1 {
                    rat(i64::from(2 * j - i - 4), i64::from(2 * j - 2)) * prev(i)
                        + rat(1, i64::from(4 * (j - 1))) * prev(i - 1)
                } else {
                    rat(1, i64::from(4 * (j - 1))) * prev(i - 1)
                };
                entries.insert((j, i), value);
            }
        }
        GammaTable { variant, entries }
    }

    pub fn variant(&self) -> GammaVariant {
        self.variant
    }

    pub fn get(&self, j: i32, i: i32) -> Result<Rational> {
        let lo = match self.variant {
            GammaVariant::Minus => -1,
            GammaVariant::Plus => 0,
        };
        if !(2..=MAX_GAMMA_J).contains(&j) || i < lo || i > j - 1 {
            return Err(Error::domain(format!(
                "gamma{} index (j={j}, i={i}) outside j in [2, {MAX_GAMMA_J}], i in [{lo}, j-1]",
                match self.variant {
                    GammaVariant::Minus => "-",
                    GammaVariant::Plus => "+",
                }
            )));
        }
        Ok(self.entries[&(j, i)].clone())
    }

    /// All `(j, i, value)` rows in index order, for table dumps.
    pub fn rows(&self) -> impl Iterator<Item = (i32, i32, &Rational)> {
        self.entries.iter().map(|(&(j, i), v)| (j, i, v))
    }
}

/// The alpha table with rows `l in [1, MAX_ALPHA_L]`, `k in [1, l]`.
#[derive(Debug)]
pub struct AlphaTable {
    entries: Vec<Vec<Rational>>, // entries[l-1][k-1]
}

impl AlphaTable {
    fn build() -> Self {
        let mut entries = Vec::new();
        for l in 1..=MAX_ALPHA_L {
            let mut row = Vec::new();
            for k in 1..=l {
                row.push(alpha_sum(l as u32, k as u32));
            }
            entries.push(row);
        }
        let table = AlphaTable { entries };
        table.assert_stirling_identity();
        table
    }

    /// Construction-time cross-check of the closed-form sum against the
    /// standard Stirling-triangle recurrence S2(l,k) = k S2(l-1,k) + S2(l-1,k-1).
    fn assert_stirling_identity(&self) {
        let mut s2: Vec<BigInt> = vec![BigInt::one()]; // row l=1, index k-1
        for l in 1..=MAX_ALPHA_L as usize {
            if l > 1 {
                let old = |k: usize| -> BigInt {
                    if (1..=l - 1).contains(&k) {
                        s2[k - 1].clone()
                    } else {
                        BigInt::zero()
                    }
                };
                s2 = (1..=l)
                    .map(|k| BigInt::from(k) * old(k) + old(k - 1))
                    .collect();
            }
            let mut kfact = BigInt::one();
            for k in 1..=l {
                if k >= 2 {
                    kfact *= BigInt::from(k - 1);
                }
                let expected = Ratio::from_integer(&s2[k - 1] * &kfact);
                assert_eq!(
                    self.entries[l - 1][k - 1], expected,
                    "alpha({l},{k}) disagrees with (k-1)! * S2(l,k)"
                );
            }
        }
    }

    pub fn get(&self, l: i32, k: i32) -> Result<Rational> {
        if !(1..=MAX_ALPHA_L).contains(&l) || k < 1 || k > l {
            return Err(Error::domain(format!(
                "alpha index (l={l}, k={k}) outside l in [1, {MAX_ALPHA_L}], k in [1, l]"
            )));
        }
        Ok(self.entries[(l - 1) as usize][(k - 1) as usize].clone())
    }

    pub fn rows(&self) -> impl Iterator<Item = (i32, i32, &Rational)> {
        self.entries.iter().enumerate().flat_map(|(l0, row)| {
            row.iter()
                .enumerate()
                .map(move |(k0, v)| (l0 as i32 + 1, k0 as i32 + 1, v))
        })
    }
}

/// alpha(l, k) = (1/k) * sum_{i=0..k} (-1)^(k-i) C(k, i) i^l, evaluated
/// exactly. The division by `k` is always exact; a remainder would mean a
/// broken table and panics.
fn alpha_sum(l: u32, k: u32) -> Rational {
    let mut acc = BigInt::zero();
    for i in 0..=k {
        let term = num::integer::binomial(BigInt::from(k), BigInt::from(i))
            * BigInt::from(i).pow(l);
        if (k - i) % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    let r = Ratio::new(acc, BigInt::from(k));
    assert!(r.is_integer(), "alpha({l},{k}) is not an integer");
    assert!(r.is_positive(), "alpha({l},{k}) is not positive");
    r
}

fn gamma_minus_table() -> &'static GammaTable {
    static TABLE: OnceLock<GammaTable> = OnceLock::new();
    TABLE.get_or_init(|| GammaTable::build(GammaVariant::Minus))
}

fn gamma_plus_table() -> &'static GammaTable {
    static TABLE: OnceLock<GammaTable> = OnceLock::new();
    TABLE.get_or_init(|| GammaTable::build(GammaVariant::Plus))
}

fn alpha_table() -> &'static AlphaTable {
    static TABLE: OnceLock<AlphaTable> = OnceLock::new();
    TABLE.get_or_init(AlphaTable::build)
}

/// Shared access to a fully-built table.
pub fn table(variant: GammaVariant) -> &'static GammaTable {
    match variant {
        GammaVariant::Minus => gamma_minus_table(),
        GammaVariant::Plus => gamma_plus_table(),
    }
}

/// Shared access to the alpha table.
pub fn alpha_rows() -> &'static AlphaTable {
    alpha_table()
}

/// gamma^-_{j,i} for `j in [2, 12]`, `i in [-1, j-1]`.
pub fn gamma_minus(j: i32, i: i32) -> Result<Rational> {
    gamma_minus_table().get(j, i)
}

/// gamma^+_{j,i} for `j in [2, 12]`, `i in [0, j-1]`.
pub fn gamma_plus(j: i32, i: i32) -> Result<Rational> {
    gamma_plus_table().get(j, i)
}

/// alpha_{l,k} for `l in [1, 32]`, `k in [1, l]`; always integer-valued.
pub fn alpha(l: i32, k: i32) -> Result<Rational> {
    alpha_table().get(l, k)
}
