//! Bank-Laine structure: the coefficient `A` recovered from a product
//! `E = f1 f2`, Schwarzian derivatives, the zero-sign test and the
//! special form `E' = BE + 1`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::Analytic;
use crate::error::{Error, Result};
use crate::expr::{Jet, ScaledJet};
use crate::zeros::{locate_zeros, ZeroRecord};

type C = Complex64;

/// Samples where `|E|` is below this are skipped by coefficient checks.
pub const MIN_SAMPLE_MODULUS: f64 = 1e-3;

/// `A = ((E')^2 - 2 E'' E - 1) / (4 E^2)` from a jet of order at least 2.
pub fn coefficient_from_product(e: &Jet) -> Result<C> {
    coefficient_from_scaled(&ScaledJet::from_jet(*e))
}

/// Same as [`coefficient_from_product`] for a scaled jet, so very large or
/// very small `E` is handled through ratios.
pub fn coefficient_from_scaled(e: &ScaledJet) -> Result<C> {
    if e.order < 2 {
        return Err(Error::invalid("coefficient extraction needs E, E', E''"));
    }
    if e.is_zero_value() {
        return Err(Error::Singular("E vanishes at the point"));
    }
    let r1 = e.ratio(1);
    let r2 = e.ratio(2);
    let inv = (-e.log_scale).exp() / e.d[0];
    Ok((r1 * r1 - 2.0 * r2 - inv * inv) / 4.0)
}

/// `S(U) = U'''/U' - (3/2)(U''/U')^2`.
pub fn schwarzian(u: &Jet) -> Result<C> {
    if u.order < 3 {
        return Err(Error::invalid("the Schwarzian needs a third-order jet"));
    }
    if u.d1 == C::new(0.0, 0.0) {
        return Err(Error::Singular("critical point: U' = 0"));
    }
    let p = u.d2 / u.d1;
    Ok(u.d3 / u.d1 - 1.5 * p * p)
}

/// `B = (E' - 1)/E`.
pub fn special_b(e: &Jet) -> Result<C> {
    if e.d0 == C::new(0.0, 0.0) {
        return Err(Error::Singular("E vanishes at the point"));
    }
    Ok((e.d1 - 1.0) / e.d0)
}

/// `|E''' + 4 A E' + 2 A' E|` at `z`.
pub fn third_order_residual<E, A>(e: &E, a: &A, z: C) -> Result<f64>
where
    E: Analytic + ?Sized,
    A: Analytic + ?Sized,
{
    let ej = e.jet(z, 3)?;
    let aj = a.jet(z, 1)?;
    Ok((ej.d3 + 4.0 * aj.d0 * ej.d1 + 2.0 * aj.d1 * ej.d0).norm())
}

/// The coefficient `A` of the equation whose solution product is `E`,
/// evaluated through jets of `E`. Derivatives of `A` beyond the first are
/// not available.
pub struct ExtractedCoefficient<F> {
    pub e: F,
}

impl<F: Analytic> Analytic for ExtractedCoefficient<F> {
    fn scaled_jet(&self, z: C, order: usize) -> Result<ScaledJet> {
        let ej = self.e.scaled_jet(z, if order == 0 { 2 } else { 3 })?;
        let a = coefficient_from_scaled(&ej)?;
        let mut out = Jet::constant(a).with_order(order.min(1));
        if order >= 1 {
            // Differentiating the product equation gives E''' + 4AE' + 2A'E = 0.
            out.d1 = -(ej.ratio(3) + 4.0 * a * ej.ratio(1)) / 2.0;
        }
        Ok(ScaledJet::from_jet(out))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BankLaineReport {
    pub zeros: Vec<ZeroRecord>,
    /// `+1` or `-1` per zero (`0` for a multiple zero).
    pub signs: Vec<i32>,
    #[serde(with = "crate::json::vec")]
    pub derivatives: Vec<C>,
    pub is_bank_laine: bool,
    pub is_special: bool,
    /// Largest `|E'(zero) - sign|` over simple zeros.
    pub max_sign_error: f64,
    pub tol: f64,
    pub reasons: Vec<String>,
}

/// Compact printing of a point, dropping rounding noise.
pub fn format_point(z: C) -> String {
    let clean = |x: f64| if x.abs() < 1e-9 { 0.0 } else { (x * 1e9).round() / 1e9 };
    let (re, im) = (clean(z.re), clean(z.im));
    match (re == 0.0, im == 0.0) {
        (_, true) => format!("{re}"),
        (true, false) => format!("{im}i"),
        (false, false) if im > 0.0 => format!("{re}+{im}i"),
        _ => format!("{re}{im}i"),
    }
}

/// Locates the zeros of `E` in the disc and checks `E' = ±1` at each.
pub fn verify_bank_laine<E: Analytic + ?Sized>(e: &E, center: C, radius: f64, tol: f64) -> Result<BankLaineReport> {
    let zeros = locate_zeros(e, center, radius, tol.min(1e-10))?;
    let derivs: Vec<Result<C>> = zeros.par_iter().map(|z| Ok(e.jet(z.location, 1)?.d1)).collect();
    let derivatives = derivs.into_iter().collect::<Result<Vec<C>>>()?;
    let mut signs = Vec::with_capacity(zeros.len());
    let mut reasons = Vec::new();
    let mut max_sign_error: f64 = 0.0;
    for (z, d) in zeros.iter().zip(&derivatives) {
        if z.multiplicity > 1 || z.cluster {
            signs.push(0);
            reasons.push(format!("multiple zero at {}", format_point(z.location)));
            continue;
        }
        let s = if d.re >= 0.0 { 1 } else { -1 };
        let err = (d - s as f64).norm();
        max_sign_error = max_sign_error.max(err);
        if err > tol {
            reasons.push(format!("E' = {} at zero {}", format_point(*d), format_point(z.location)));
        }
        signs.push(s);
    }
    let is_bank_laine = reasons.is_empty();
    let is_special = is_bank_laine && signs.iter().all(|&s| s == 1);
    Ok(BankLaineReport {
        zeros,
        signs,
        derivatives,
        is_bank_laine,
        is_special,
        max_sign_error,
        tol,
        reasons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn standard_example_at_origin() {
        let j = e("exp(z)").eval_jet(c(0.0, 0.0), 2).unwrap();
        assert!((coefficient_from_product(&j).unwrap() - (-0.5)).norm() < 1e-15);
    }

    #[test]
    fn sine_gives_quarter() {
        for z in [c(0.3, 0.1), c(-2.0, 0.5), c(1.0, -1.0)] {
            let j = e("sin(z)").eval_jet(z, 2).unwrap();
            assert!((coefficient_from_product(&j).unwrap() - 0.25).norm() < 1e-12);
        }
    }

    #[test]
    fn schwarzian_examples() {
        let z = c(0.4, -0.2);
        let s = schwarzian(&e("exp(3*z)").eval_jet(z, 3).unwrap()).unwrap();
        assert!((s + 4.5).norm() < 1e-12);
        let s = schwarzian(&e("tan(z)").eval_jet(z, 3).unwrap()).unwrap();
        assert!((s - 2.0).norm() < 1e-12);
        assert!(schwarzian(&e("z^2").eval_jet(c(0.0, 0.0), 3).unwrap()).is_err());
    }

    #[test]
    fn special_b_examples() {
        let z = c(1.0, 0.0);
        let b = special_b(&e("z*exp(z)").eval_jet(z, 1).unwrap()).unwrap();
        let en = 1f64.exp();
        assert!((b - (2.0 * en - 1.0) / en).norm() < 1e-14);
        assert!(special_b(&e("z").eval_jet(c(0.0, 0.0), 1).unwrap()).is_err());
    }

    #[test]
    fn third_order() {
        let r = third_order_residual(&e("sin(z)"), &e("0.25"), c(0.7, 0.0)).unwrap();
        assert!(r <= 1e-12);
        let r = third_order_residual(&e("exp(z)"), &e("0"), c(0.0, 0.0)).unwrap();
        assert!((r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn extracted_coefficient_derivative() {
        let a = ExtractedCoefficient { e: e("exp(z)") };
        let exact = e("-(1 + exp(-2*z))/4");
        let z = c(0.3, 0.8);
        let (got, want) = (a.jet(z, 1).unwrap(), exact.eval_jet(z, 1).unwrap());
        assert!((got.d0 - want.d0).norm() < 1e-14);
        assert!((got.d1 - want.d1).norm() < 1e-13);
    }

    #[test]
    fn sine_is_bank_laine() {
        let r = verify_bank_laine(&e("sin(z)"), c(0.0, 0.0), 7.0, 1e-8).unwrap();
        assert_eq!(r.zeros.len(), 5);
        assert!(r.is_bank_laine);
        assert!(!r.is_special);
        // E'(k pi) = cos(k pi)
        assert_eq!(r.signs, vec![1, -1, 1, -1, 1]);
    }

    #[test]
    fn square_is_not() {
        let r = verify_bank_laine(&e("z^2"), c(0.0, 0.0), 1.0, 1e-8).unwrap();
        assert!(!r.is_bank_laine);
        assert_eq!(r.reasons, vec!["multiple zero at 0".to_string()]);
    }

    #[test]
    fn specialness() {
        let r = verify_bank_laine(&e("exp(z) - 1"), c(0.0, 0.0), 7.0, 1e-8).unwrap();
        assert!(r.is_special);
        let r = verify_bank_laine(&e("exp(z) + 1"), c(0.0, 0.0), 7.0, 1e-8).unwrap();
        assert!(r.is_bank_laine && !r.is_special);
        assert!(r.signs.iter().all(|&s| s == -1));
    }
}
