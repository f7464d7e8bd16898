//! Evaluation of the integral family
//!
//! ```text
//! I^±_{n,j,s}(b, mu) = ∫_0^∞ x^n / ((x^2 + b^2)^j (e^(mu x) ± 1)^s) dx
//! ```
//!
//! by exact symbolic reduction to polygamma/zeta closed forms wherever the
//! family's recurrences reach, with adaptive quadrature as fallback and as
//! an independent verification oracle.

pub mod closed_form;
pub mod coefficients;
pub mod error;
pub mod family;
pub mod quadrature;
pub mod reduce;
pub mod special;

pub use error::{Error, Result};
pub use family::{IntegralSpec, Sign};
pub use reduce::{evaluate, EvalResult, LeafReport};
