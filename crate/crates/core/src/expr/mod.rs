//! Closed-form functions of one complex variable: parsing, printing and
//! evaluation of values together with their first three derivatives.

mod eval;
mod jet;
mod parse;

pub use eval::parse_complex;
pub use jet::{Jet, ScaledJet, MAX_ORDER};
pub use parse::{parse, BinOp, Constant, Expr, Func};

use num_complex::Complex64;

use crate::error::Result;

/// Free-function form of [`Expr::eval_jet`].
pub fn eval_jet(f: &Expr, z: Complex64, order: usize) -> Result<Jet> {
    f.eval_jet(z, order)
}
