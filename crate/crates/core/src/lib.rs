//! Numerical tools for Bank-Laine functions and the linear differential
//! equation `y'' + A(z) y = 0`.
//!
//! * [`expr`]: a small grammar for closed-form functions of `z`, evaluated
//!   with third-order jets.
//! * [`contour`]: adaptive quadrature and linear ODE integration along
//!   paths in the complex plane, plus branch-continuous square roots.
//! * [`zeros`]: argument-principle zero counting, zero location and the
//!   integrated counting function.
//! * [`banklaine`]: coefficient extraction, Schwarzians and Bank-Laine
//!   verification.
//! * [`asymptotics`]: critical rays, the Liouville map, decay-path tracing
//!   and the Picard construction of ray solutions.
//! * [`nevanlinna`]: proximity, characteristic, deficiency, order and
//!   exponent of convergence on finite radius ranges.
//! * [`gallery`]: worked examples that verify themselves.

pub mod analytic;
pub mod asymptotics;
pub mod banklaine;
pub mod contour;
pub mod error;
pub mod expr;
pub mod gallery;
pub mod json;
pub mod nevanlinna;
pub mod sum;
pub mod zeros;

pub use analytic::{Analytic, Native, Polynomial, Shifted};
pub use error::{Error, Result};
pub use expr::{Expr, Jet, ScaledJet};
pub use num_complex::Complex64;
