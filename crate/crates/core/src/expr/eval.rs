use num_complex::Complex64;

use super::jet::{Jet, ScaledJet};
use super::parse::{BinOp, Expr, Func};
use crate::error::{DomainKind, Error, Result};

type C = Complex64;

/// Exponents that are literal integers up to this size use repeated multiplication.
const MAX_INTEGER_POWER: f64 = 4096.0;

fn integer_exponent(e: &Expr) -> Option<i64> {
    match e {
        Expr::Num(c) if c.im == 0.0 && c.re.fract() == 0.0 && c.re.abs() <= MAX_INTEGER_POWER => {
            Some(c.re as i64)
        }
        Expr::Neg(inner) => integer_exponent(inner).map(|n| -n),
        _ => None,
    }
}

fn check(v: C, z: C) -> Result<C> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(DomainKind::NotFinite, z))
    }
}

fn check_log_arg(w: C, z: C) -> Result<()> {
    if w == C::new(0.0, 0.0) {
        return Err(Error::domain(DomainKind::Pole, z));
    }
    if w.im == 0.0 && w.re < 0.0 {
        return Err(Error::domain(DomainKind::BranchCut, z));
    }
    Ok(())
}

impl Expr {
    /// Value, derivatives and scale of the function at `z`.
    pub fn eval_scaled(&self, z: C, order: usize) -> Result<ScaledJet> {
        let j = self.scaled(z, order)?;
        if j.is_finite() {
            Ok(j)
        } else {
            Err(Error::domain(DomainKind::NotFinite, z))
        }
    }

    /// Jet of the function at `z`, exact up to rounding.
    pub fn eval_jet(&self, z: C, order: usize) -> Result<Jet> {
        self.eval_scaled(z, order)?.to_jet(z)
    }

    fn scaled(&self, z: C, order: usize) -> Result<ScaledJet> {
        Ok(match self {
            Expr::Num(c) => ScaledJet::constant(*c),
            Expr::Const(k) => ScaledJet::constant(k.value()),
            Expr::Var => ScaledJet::variable(z).with_order(order),
            Expr::Neg(a) => a.scaled(z, order)?.neg(),
            Expr::Bin(op, a, b) => {
                if *op == BinOp::Pow {
                    let base = a.scaled(z, order)?;
                    return match integer_exponent(b) {
                        Some(n) => base.powi(n, z),
                        None => {
                            let ex = b.scaled(z, order)?;
                            base.ln(z)?.mul(&ex).exp(z)
                        }
                    };
                }
                let (x, y) = (a.scaled(z, order)?, b.scaled(z, order)?);
                match op {
                    BinOp::Add => x.add(&y),
                    BinOp::Sub => x.sub(&y),
                    BinOp::Mul => x.mul(&y),
                    BinOp::Div => x.div(&y, z)?,
                    BinOp::Pow => unreachable!(),
                }
            }
            Expr::Call(f, a) => {
                let w = a.scaled(z, order)?;
                match f {
                    Func::Exp => w.exp(z)?,
                    Func::Log => w.ln(z)?,
                    Func::Sin => w.sin(z)?,
                    Func::Cos => w.cos(z)?,
                    Func::Tan => w.tan(z)?,
                    Func::Sinh => w.sinh(z)?,
                    Func::Cosh => w.cosh(z)?,
                    Func::Sqrt => w.sqrt(z)?,
                }
            }
        })
    }

    /// Plain complex value; cheaper than a jet and used for ODE coefficients.
    pub fn eval_value(&self, z: C) -> Result<C> {
        check(self.value_unchecked(z)?, z)
    }

    fn value_unchecked(&self, z: C) -> Result<C> {
        Ok(match self {
            Expr::Num(c) => *c,
            Expr::Const(k) => k.value(),
            Expr::Var => z,
            Expr::Neg(a) => -a.value_unchecked(z)?,
            Expr::Bin(op, a, b) => {
                let x = a.value_unchecked(z)?;
                if *op == BinOp::Pow {
                    return match integer_exponent(b) {
                        Some(n) => {
                            if n < 0 && x == C::new(0.0, 0.0) {
                                return Err(Error::domain(DomainKind::Pole, z));
                            }
                            Ok(powi(x, n))
                        }
                        None => {
                            let y = b.value_unchecked(z)?;
                            check_log_arg(x, z)?;
                            Ok((y * x.ln()).exp())
                        }
                    };
                }
                let y = b.value_unchecked(z)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == C::new(0.0, 0.0) {
                            return Err(Error::domain(DomainKind::Pole, z));
                        }
                        x / y
                    }
                    BinOp::Pow => unreachable!(),
                }
            }
            Expr::Call(f, a) => {
                let w = a.value_unchecked(z)?;
                match f {
                    Func::Exp => w.exp(),
                    Func::Log => {
                        check_log_arg(w, z)?;
                        w.ln()
                    }
                    Func::Sin => w.sin(),
                    Func::Cos => w.cos(),
                    Func::Tan => {
                        if w.cos() == C::new(0.0, 0.0) {
                            return Err(Error::domain(DomainKind::Pole, z));
                        }
                        w.tan()
                    }
                    Func::Sinh => w.sinh(),
                    Func::Cosh => w.cosh(),
                    Func::Sqrt => {
                        if w.im == 0.0 && w.re < 0.0 {
                            return Err(Error::domain(DomainKind::BranchCut, z));
                        }
                        w.sqrt()
                    }
                }
            }
        })
    }

    /// Evaluates a `z`-free expression (CLI arguments such as `1+2i`).
    pub fn constant_value(&self) -> Result<C> {
        if !self.is_constant() {
            return Err(Error::invalid(format!("`{self}` is not a constant")));
        }
        self.eval_value(C::new(0.0, 0.0))
    }
}

fn powi(x: C, n: i64) -> C {
    let mut out = C::new(1.0, 0.0);
    let mut base = x;
    let mut k = n.unsigned_abs();
    while k > 0 {
        if k & 1 == 1 {
            out *= base;
        }
        base *= base;
        k >>= 1;
    }
    if n < 0 {
        out.inv()
    } else {
        out
    }
}

/// Parses a complex number written in the expression grammar (`-1.5+2i`, `pi*i`).
pub fn parse_complex(s: &str) -> Result<C> {
    Expr::parse(s)?.constant_value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: C, b: C, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn square_jet() {
        let e = Expr::parse("z^2").unwrap();
        let j = e.eval_jet(C::new(1.0, 1.0), 3).unwrap();
        assert!(close(j.d0, C::new(0.0, 2.0), 1e-15));
        assert!(close(j.d1, C::new(2.0, 2.0), 1e-15));
        assert!(close(j.d2, C::new(2.0, 0.0), 1e-15));
        assert!(close(j.d3, C::new(0.0, 0.0), 1e-15));
        assert_eq!(j.order, 3);
    }

    #[test]
    fn exp_jet_at_origin() {
        let j = Expr::parse("exp(z)").unwrap().eval_jet(C::new(0.0, 0.0), 3).unwrap();
        for k in 0..4 {
            assert!(close(j.get(k), C::new(1.0, 0.0), 1e-15));
        }
    }

    #[test]
    fn e2_at_integer() {
        let e = Expr::parse("exp(2*pi*i*z^2)*sin(pi*z)/pi").unwrap();
        let j = e.eval_jet(C::new(1.0, 0.0), 1).unwrap();
        assert!(j.d0.norm() < 1e-15);
        assert!((j.d1.norm() - 1.0).abs() < 1e-13);
        assert!(close(j.d1, C::new(-1.0, 0.0), 1e-12));
    }

    #[test]
    fn domain_errors() {
        let z0 = C::new(0.0, 0.0);
        assert!(matches!(
            Expr::parse("1/z").unwrap().eval_jet(z0, 0),
            Err(Error::Domain { kind: DomainKind::Pole, .. })
        ));
        assert!(matches!(
            Expr::parse("log(z)").unwrap().eval_jet(C::new(-1.0, 0.0), 0),
            Err(Error::Domain { kind: DomainKind::BranchCut, .. })
        ));
        assert!(Expr::parse("sqrt(z)").unwrap().eval_jet(z0, 1).is_err());
        assert!(Expr::parse("sqrt(z)").unwrap().eval_jet(z0, 0).is_ok());
        assert!(Expr::parse("1/z").unwrap().eval_value(z0).is_err());
    }

    #[test]
    fn value_matches_jet() {
        let e = Expr::parse("exp(-z)*cosh(z/3) + sqrt(z+4)^3 - tan(z)/(2+z^2) + 2^z").unwrap();
        for z in [C::new(0.3, 0.1), C::new(-1.2, 0.7), C::new(2.0, -1.0)] {
            let v = e.eval_value(z).unwrap();
            let j = e.eval_jet(z, 0).unwrap();
            assert!(close(v, j.d0, 1e-13));
        }
    }

    #[test]
    fn general_power_uses_principal_branch() {
        let e = Expr::parse("z^(1/2)").unwrap();
        let z = C::new(-1.0, 1e-300);
        let v = e.eval_value(z).unwrap();
        assert!(close(v, C::new(0.0, 1.0), 1e-12));
        let j = e.eval_jet(C::new(4.0, 0.0), 1).unwrap();
        assert!(close(j.d0, C::new(2.0, 0.0), 1e-15));
        assert!(close(j.d1, C::new(0.25, 0.0), 1e-15));
    }

    #[test]
    fn constants() {
        assert!(close(parse_complex("1+2i").unwrap(), C::new(1.0, 2.0), 0.0));
        assert!(close(parse_complex("-pi").unwrap(), C::new(-PI, 0.0), 0.0));
        assert!(parse_complex("z").is_err());
    }
}
