//! The evaluation interface shared by parsed expressions, polynomials and
//! native (e.g. quadrature-defined) functions.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expr::{BinOp, Expr, Jet, ScaledJet};

type C = Complex64;

/// A function analytic near the points where it is evaluated.
pub trait Analytic: Send + Sync {
    /// Value and derivatives up to `order`, with the magnitude factored out.
    fn scaled_jet(&self, z: C, order: usize) -> Result<ScaledJet>;

    fn jet(&self, z: C, order: usize) -> Result<Jet> {
        self.scaled_jet(z, order)?.to_jet(z)
    }

    fn value(&self, z: C) -> Result<C> {
        Ok(self.jet(z, 0)?.d0)
    }
}

impl Analytic for Expr {
    fn scaled_jet(&self, z: C, order: usize) -> Result<ScaledJet> {
        self.eval_scaled(z, order)
    }

    fn jet(&self, z: C, order: usize) -> Result<Jet> {
        self.eval_jet(z, order)
    }

    fn value(&self, z: C) -> Result<C> {
        self.eval_value(z)
    }
}

impl<T: Analytic + ?Sized> Analytic for &T {
    fn scaled_jet(&self, z: C, order: usize) -> Result<ScaledJet> {
        (**self).scaled_jet(z, order)
    }
    fn jet(&self, z: C, order: usize) -> Result<Jet> {
        (**self).jet(z, order)
    }
    fn value(&self, z: C) -> Result<C> {
        (**self).value(z)
    }
}

impl<T: Analytic + ?Sized> Analytic for Box<T> {
    fn scaled_jet(&self, z: C, order: usize) -> Result<ScaledJet> {
        (**self).scaled_jet(z, order)
    }
    fn jet(&self, z: C, order: usize) -> Result<Jet> {
        (**self).jet(z, order)
    }
    fn value(&self, z: C) -> Result<C> {
        (**self).value(z)
    }
}

impl<T: Analytic + ?Sized> Analytic for Arc<T> {
    fn scaled_jet(&self, z: C, order: usize) -> Result<ScaledJet> {
        (**self).scaled_jet(z, order)
    }
    fn jet(&self, z: C, order: usize) -> Result<Jet> {
        (**self).jet(z, order)
    }
    fn value(&self, z: C) -> Result<C> {
        (**self).value(z)
    }
}

/// A function given by a closure returning plain jets.
pub struct Native<F> {
    f: F,
}

impl<F> Native<F>
where
    F: Fn(C, usize) -> Result<Jet> + Send + Sync,
{
    pub fn new(f: F) -> Self {
        Native { f }
    }
}

impl<F> Analytic for Native<F>
where
    F: Fn(C, usize) -> Result<Jet> + Send + Sync,
{
    fn scaled_jet(&self, z: C, order: usize) -> Result<ScaledJet> {
        Ok(ScaledJet::from_jet((self.f)(z, order)?))
    }

    fn jet(&self, z: C, order: usize) -> Result<Jet> {
        (self.f)(z, order)
    }
}

/// `f - a` for a constant `a`.
pub struct Shifted<F> {
    pub f: F,
    pub a: C,
}

impl<F: Analytic> Analytic for Shifted<F> {
    fn scaled_jet(&self, z: C, order: usize) -> Result<ScaledJet> {
        let j = self.f.scaled_jet(z, order)?;
        Ok(j.sub(&ScaledJet::constant(self.a)))
    }
}

/// Polynomial with ascending complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub coeffs: Vec<C>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<C>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == C::new(0.0, 0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(C::new(0.0, 0.0));
        }
        Polynomial { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> C {
        *self.coeffs.last().unwrap()
    }

    /// Expands a parsed expression that is a polynomial in `z`.
    pub fn from_expr(e: &Expr) -> Result<Polynomial> {
        expand(e)
            .map(Polynomial::new)
            .ok_or_else(|| Error::invalid(format!("`{e}` is not a polynomial in z")))
    }

    pub fn eval_jet(&self, z: C) -> Jet {
        // Horner on value and first three derivatives.
        let zero = C::new(0.0, 0.0);
        let (mut p0, mut p1, mut p2, mut p3) = (zero, zero, zero, zero);
        for &c in self.coeffs.iter().rev() {
            p3 = p3 * z + 3.0 * p2;
            p2 = p2 * z + 2.0 * p1;
            p1 = p1 * z + p0;
            p0 = p0 * z + c;
        }
        Jet::from_array([p0, p1, p2, p3], 3)
    }
}

impl Analytic for Polynomial {
    fn scaled_jet(&self, z: C, order: usize) -> Result<ScaledJet> {
        Ok(ScaledJet::from_jet(self.eval_jet(z).with_order(order)))
    }

    fn jet(&self, z: C, order: usize) -> Result<Jet> {
        Ok(self.eval_jet(z).with_order(order))
    }

    fn value(&self, z: C) -> Result<C> {
        let mut p = C::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            p = p * z + c;
        }
        Ok(p)
    }
}

fn poly_mul(a: &[C], b: &[C]) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[C], b: &[C], sign: f64) -> Vec<C> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| {
            let x = a.get(k).copied().unwrap_or_default();
            let y = b.get(k).copied().unwrap_or_default();
            x + sign * y
        })
        .collect()
}

fn expand(e: &Expr) -> Option<Vec<C>> {
    if e.is_constant() {
        return e.constant_value().ok().map(|c| vec![c]);
    }
    match e {
        Expr::Var => Some(vec![C::new(0.0, 0.0), C::new(1.0, 0.0)]),
        Expr::Neg(a) => Some(expand(a)?.into_iter().map(|c| -c).collect()),
        Expr::Bin(op, a, b) => match op {
            BinOp::Add => Some(poly_add(&expand(a)?, &expand(b)?, 1.0)),
            BinOp::Sub => Some(poly_add(&expand(a)?, &expand(b)?, -1.0)),
            BinOp::Mul => Some(poly_mul(&expand(a)?, &expand(b)?)),
            BinOp::Div => {
                if !b.is_constant() {
                    return None;
                }
                let d = b.constant_value().ok()?;
                Some(expand(a)?.into_iter().map(|c| c / d).collect())
            }
            BinOp::Pow => {
                let n = b.constant_value().ok()?;
                if n.im != 0.0 || n.re < 0.0 || n.re.fract() != 0.0 || n.re > 64.0 {
                    return None;
                }
                let base = expand(a)?;
                let mut out = vec![C::new(1.0, 0.0)];
                for _ in 0..n.re as usize {
                    out = poly_mul(&out, &base);
                }
                Some(out)
            }
        },
        _ => None,
    }
}
