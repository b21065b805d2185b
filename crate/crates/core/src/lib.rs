//! Pull-in voltage and touchdown solutions for the radial MEMS problem
//!
//! ```text
//! φ(r, −u'(r)) = λ ∫₀^r f(s) / g(u(s)) ds,   0 < u < 1 on (0, 1),   u(1) = 0.
//! ```

// NaN-rejecting guards are written as !(x > a).
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod func;
pub mod model;
pub mod monotone;
pub mod pullin;
pub mod quadrature;
pub mod shooter;

pub use error::{Error, Result};
