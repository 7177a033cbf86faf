//! Worked examples that verify themselves.
//!
//! Each entry bundles the functions of one example (`E`, `A` and, where
//! relevant, a solution `f`) with machine-checkable assertions. Every
//! assertion names the library operation it exercises and records the
//! measured value next to its bound.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::Analytic;
use crate::asymptotics::tail_integral;
use crate::banklaine::{coefficient_from_product, special_b, third_order_residual, verify_bank_laine};
use crate::contour::adaptive;
use crate::error::{Error, Result};
use crate::expr::{Expr, Jet, ScaledJet};
use crate::nevanlinna::{convergence_exponent, default_radii, deficiency_estimate, order_estimate, Target};
use crate::zeros::{count_zeros_disc, counting_function, locate_zeros, newton, COUNT_TOL};

type C = Complex64;

/// Seed for the sample points used by every entry.
pub const GALLERY_SEED: u64 = 7;

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub operation: &'static str,
    pub description: String,
    pub measured: f64,
    pub bound: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GalleryReport {
    pub name: &'static str,
    pub provenance: &'static str,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
}

#[derive(Clone, Serialize)]
pub struct GalleryEntry {
    pub name: &'static str,
    pub summary: &'static str,
    /// Where the example comes from, in words.
    pub provenance: &'static str,
    /// Closed forms where they exist; `None` for quadrature-defined functions.
    pub e_expr: Option<&'static str>,
    pub a_expr: Option<&'static str>,
    pub f_expr: Option<&'static str>,
    /// Operations named by the assertions.
    pub operations: &'static [&'static str],
    #[serde(skip)]
    run: fn() -> Vec<Assertion>,
}

impl std::fmt::Debug for GalleryEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GalleryEntry").field("name", &self.name).finish()
    }
}

impl GalleryEntry {
    pub fn verify(&self) -> GalleryReport {
        let assertions = (self.run)();
        GalleryReport {
            name: self.name,
            provenance: self.provenance,
            passed: assertions.iter().all(|a| a.passed),
            assertions,
        }
    }

    /// `E` as an evaluator, closed-form or native.
    pub fn e(&self) -> Option<Arc<dyn Analytic>> {
        match self.name {
            "sec9" => Some(Arc::new(Sec9::E)),
            _ => self.e_expr.map(|s| Arc::new(expr(s)) as Arc<dyn Analytic>),
        }
    }

    /// `A` as an evaluator, closed-form or native.
    pub fn a(&self) -> Option<Arc<dyn Analytic>> {
        match self.name {
            "sec9" => Some(Arc::new(Sec9::A)),
            _ => self.a_expr.map(|s| Arc::new(expr(s)) as Arc<dyn Analytic>),
        }
    }
}

fn expr(s: &str) -> Expr {
    Expr::parse(s).expect("gallery expressions parse")
}

pub fn entries() -> Vec<GalleryEntry> {
    vec![
        GalleryEntry {
            name: "exp-bl",
            summary: "E = e^{2z} + 1/2, a member of the family e^{az+b} + c with ac = 1; A = -a^2/4 = -1",
            provenance: "exponential Bank-Laine family with constant coefficient",
            e_expr: Some("exp(2*z) + 1/2"),
            a_expr: Some("-1"),
            f_expr: None,
            operations: &["coefficient_from_product", "third_order_residual", "verify_bank_laine", "locate_zeros"],
            run: run_exp_bl,
        },
        GalleryEntry {
            name: "e2",
            summary: "E2 = exp(2 pi i z^2) sin(pi z) / pi: zeros at the integers with E2'(k) = (-1)^k; order 2, exponent of convergence 1",
            provenance: "Bank-Laine function of order 2 whose zeros have exponent of convergence 1",
            e_expr: Some("exp(2*pi*i*z^2)*sin(pi*z)/pi"),
            a_expr: None,
            f_expr: None,
            operations: &["verify_bank_laine", "locate_zeros", "order_estimate", "convergence_exponent"],
            run: run_e2,
        },
        GalleryEntry {
            name: "standardex",
            summary: "E = e^z with A = -(1 + e^{-2z})/4",
            provenance: "simplest zero-free Bank-Laine function",
            e_expr: Some("exp(z)"),
            a_expr: Some("-(1 + exp(-2*z))/4"),
            f_expr: None,
            operations: &["coefficient_from_product", "third_order_residual", "verify_bank_laine", "locate_zeros"],
            run: run_standardex,
        },
        GalleryEntry {
            name: "defexample",
            summary: "f = exp(e^z) solves y'' + A y = 0 with A = -e^{2z} - e^z; delta(0, A) = 1/2 and delta(0, f'/f) = 1",
            provenance: "coefficient with deficient value 0",
            e_expr: None,
            a_expr: Some("-exp(2*z) - exp(z)"),
            f_expr: Some("exp(exp(z))"),
            operations: &["eval_jet", "deficiency_estimate", "locate_zeros"],
            run: run_defexample,
        },
        GalleryEntry {
            name: "special",
            summary: "E = e^z - 1 satisfies E' = B E + 1 with B = 1; every zero has E' = +1",
            provenance: "special Bank-Laine function",
            e_expr: Some("exp(z) - 1"),
            a_expr: Some("-1/4"),
            f_expr: None,
            operations: &["special_b", "verify_bank_laine", "coefficient_from_product", "locate_zeros"],
            run: run_special,
        },
        GalleryEntry {
            name: "sine",
            summary: "E = sin z with A = 1/4: alternating signs, deficiency 0 at 0, exponent of convergence 1",
            provenance: "Bank-Laine function with real zeros",
            e_expr: Some("sin(z)"),
            a_expr: Some("1/4"),
            f_expr: None,
            operations: &["verify_bank_laine", "coefficient_from_product", "deficiency_estimate", "convergence_exponent", "locate_zeros"],
            run: run_sine,
        },
        GalleryEntry {
            name: "sec9",
            summary: "E = e^h with h = int_1^z (1 - e^{-t})/t dt + int_1^inf e^{-t}/t dt: zero-free, infinite order, A decays faster than any power on the positive axis",
            provenance: "zero-free Bank-Laine function of infinite order with rapidly decaying coefficient",
            e_expr: None,
            a_expr: None,
            f_expr: None,
            operations: &["tail_integral", "coefficient_from_product", "locate_zeros"],
            run: run_sec9,
        },
    ]
}

pub fn names() -> Vec<&'static str> {
    entries().iter().map(|e| e.name).collect()
}

pub fn entry(name: &str) -> Result<GalleryEntry> {
    entries().into_iter().find(|e| e.name == name).ok_or_else(|| Error::UnknownEntry(name.to_string()))
}

pub fn verify_example(name: &str) -> Result<GalleryReport> {
    Ok(entry(name)?.verify())
}

/// All entries, verified concurrently and reported in registration order.
pub fn verify_all() -> Vec<GalleryReport> {
    entries().par_iter().map(GalleryEntry::verify).collect()
}

fn le(operation: &'static str, description: impl Into<String>, measured: f64, bound: f64) -> Assertion {
    Assertion {
        operation,
        description: description.into(),
        measured,
        bound: format!("<= {bound:e}"),
        passed: measured <= bound,
        error: None,
    }
}

fn within(operation: &'static str, description: impl Into<String>, measured: f64, target: f64, tol: f64) -> Assertion {
    Assertion {
        operation,
        description: description.into(),
        measured,
        bound: format!("{target} ± {tol}"),
        passed: (measured - target).abs() <= tol,
        error: None,
    }
}

fn holds(operation: &'static str, description: impl Into<String>, ok: bool) -> Assertion {
    Assertion {
        operation,
        description: description.into(),
        measured: if ok { 1.0 } else { 0.0 },
        bound: "true".into(),
        passed: ok,
        error: None,
    }
}

fn failed(operation: &'static str, description: impl Into<String>, e: Error) -> Assertion {
    Assertion {
        operation,
        description: description.into(),
        measured: f64::NAN,
        bound: String::new(),
        passed: false,
        error: Some(e.to_string()),
    }
}

/// Runs `f`, turning an error into a failed assertion.
fn attempt(operation: &'static str, description: &str, f: impl FnOnce() -> Result<Vec<Assertion>>) -> Vec<Assertion> {
    f().unwrap_or_else(|e| vec![failed(operation, description, e)])
}

/// Seeded points, uniform in the disc `|z| <= radius`.
pub fn seeded_points(n: usize, radius: f64, seed: u64) -> Vec<C> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let (u, v): (f64, f64) = (rng.gen(), rng.gen());
            C::from_polar(radius * u.sqrt(), 2.0 * PI * v)
        })
        .collect()
}

/// Largest `|A_E - A| / max(1, |A|)` over seeded points with `|E| >= 1e-3`,
/// where `A_E` is the coefficient extracted from `E`.
pub fn bank_laine_residual(e: &dyn Analytic, a: &dyn Analytic, points: &[C]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &z in points {
        let j = e.jet(z, 2)?;
        if j.d0.norm() < 1e-3 {
            continue;
        }
        let got = coefficient_from_product(&j)?;
        let want = a.value(z)?;
        worst = worst.max((got - want).norm() / want.norm().max(1.0));
    }
    Ok(worst)
}

/// Points with `|E| >= 1e-3`, drawn until `n` are found.
fn usable_points(e: &dyn Analytic, n: usize, radius: f64) -> Result<Vec<C>> {
    let mut out = Vec::with_capacity(n);
    for z in seeded_points(4 * n, radius, GALLERY_SEED) {
        if e.value(z)?.norm() >= 1e-3 {
            out.push(z);
            if out.len() == n {
                break;
            }
        }
    }
    Ok(out)
}

fn residual_assertion(e: &dyn Analytic, a: &dyn Analytic, radius: f64) -> Vec<Assertion> {
    let desc = format!("A extracted from E matches A at 50 seeded points in |z| <= {radius}");
    attempt("coefficient_from_product", &desc, || {
        let pts = usable_points(e, 50, radius)?;
        Ok(vec![le("coefficient_from_product", desc.clone(), bank_laine_residual(e, a, &pts)?, 1e-8)])
    })
}

fn third_order_assertion(e: &dyn Analytic, a: &dyn Analytic, radius: f64) -> Vec<Assertion> {
    let desc = format!("E''' + 4AE' + 2A'E vanishes at 20 seeded points in |z| <= {radius}");
    attempt("third_order_residual", &desc, || {
        let mut worst: f64 = 0.0;
        for z in seeded_points(20, radius, GALLERY_SEED + 1) {
            worst = worst.max(third_order_residual(&e, &a, z)?);
        }
        Ok(vec![le("third_order_residual", desc.clone(), worst, 1e-9)])
    })
}

/// The located multiplicities add up to the argument-principle count.
fn multiplicity_assertion(f: &dyn Analytic, radius: f64) -> Vec<Assertion> {
    let desc = format!("multiplicities of located zeros in |z| < {radius} sum to the argument-principle count");
    attempt("locate_zeros", &desc, || {
        let count = count_zeros_disc(&f, C::new(0.0, 0.0), radius, COUNT_TOL)?;
        let zeros = locate_zeros(&f, C::new(0.0, 0.0), radius, 1e-10)?;
        let total: usize = zeros.iter().map(|z| z.multiplicity).sum();
        Ok(vec![holds("locate_zeros", format!("{desc} ({total} vs {count})"), total == count)])
    })
}

fn bank_laine_assertions(e: &dyn Analytic, radius: f64, zeros: usize, sign: impl Fn(C) -> i32, special: bool) -> Vec<Assertion> {
    let desc = format!("Bank-Laine on |z| <= {radius}");
    attempt("verify_bank_laine", &desc, || {
        let r = verify_bank_laine(&e, C::new(0.0, 0.0), radius, 1e-8)?;
        let signs_ok = r.zeros.iter().zip(&r.signs).all(|(z, &s)| s == sign(z.location));
        Ok(vec![
            holds("verify_bank_laine", format!("{desc}: {} zeros found, {zeros} expected", r.zeros.len()), r.is_bank_laine && r.zeros.len() == zeros),
            le("verify_bank_laine", format!("{desc}: max ||E'| - 1| at the zeros"), r.max_sign_error, 1e-8),
            holds("verify_bank_laine", format!("{desc}: signs of E' at the zeros"), signs_ok),
            holds("verify_bank_laine", format!("{desc}: special = {special}"), r.is_special == special),
        ])
    })
}

fn run_exp_bl() -> Vec<Assertion> {
    let e = expr("exp(2*z) + 1/2");
    let a = expr("-1");
    let mut out = attempt("coefficient_from_product", "A = -1 at 20 seeded points", || {
        let mut worst: f64 = 0.0;
        for z in usable_points(&e, 20, 3.0)? {
            worst = worst.max((coefficient_from_product(&e.jet(z, 2)?)? + 1.0).norm());
        }
        Ok(vec![le("coefficient_from_product", "max |A + 1| at 20 seeded points in |z| <= 3", worst, 1e-10)])
    });
    out.extend(residual_assertion(&e, &a, 3.0));
    out.extend(third_order_assertion(&e, &a, 3.0));
    out.extend(bank_laine_assertions(&e, 5.0, 4, |_| -1, false));
    out.extend(multiplicity_assertion(&e, 5.0));
    out
}

/// `E2'`, written out for the critical-point search.
const E2_PRIME: &str = "exp(2*pi*i*z^2)*(4*i*z*sin(pi*z) + cos(pi*z))";

fn run_e2() -> Vec<Assertion> {
    let e = expr("exp(2*pi*i*z^2)*sin(pi*z)/pi");
    let mut out = bank_laine_assertions(&e, 5.5, 11, |z| if (z.re.round() as i64) % 2 == 0 { 1 } else { -1 }, false);
    out.extend(multiplicity_assertion(&e, 5.5));
    out.extend(attempt("eval_jet", "critical point near z = 10", || {
        let de = expr(E2_PRIME);
        let probe = C::new(0.7, 0.2);
        let consistent = (de.value(probe)? - e.jet(probe, 1)?.d1).norm() <= 1e-12 * (1.0 + de.value(probe)?.norm());
        let (c, _, ok) = newton(&de, C::new(10.0, 0.008), 1, 1e-13)?;
        let size = e.value(c)?.norm();
        Ok(vec![
            holds("eval_jet", "closed-form E2' agrees with the jet derivative", consistent),
            holds("eval_jet", format!("Newton converges to a critical point near 10 (found {c})"), ok && (c - 10.0).norm() < 0.1),
            le("eval_jet", "|E2| at the critical point near 10", size, 0.05),
        ])
    }));
    out.extend(attempt("eval_jet", "|E2| on the path x + i/sqrt(x)", || {
        let mut worst: f64 = 0.0;
        for k in 0..=750 {
            let x = 25.0 + 0.1 * k as f64;
            worst = worst.max(e.value(C::new(x, 1.0 / x.sqrt()))?.norm());
        }
        Ok(vec![le("eval_jet", "max |E2(x + i/sqrt(x))| for 25 <= x <= 100", worst, 1e-12)])
    }));
    out.extend(attempt("order_estimate", "order of E2", || {
        Ok(vec![within("order_estimate", "order of E2 over radii up to 64", order_estimate(&e, &default_radii(64.0))?, 2.0, 0.05)])
    }));
    out.extend(attempt("convergence_exponent", "exponent of convergence of E2", || {
        let c = convergence_exponent(&counting_function(&e, &default_radii(400.0))?)?;
        Ok(vec![within("convergence_exponent", "exponent of convergence of E2 over radii up to 400", c.lambda, 1.0, 0.05)])
    }));
    out
}

fn run_standardex() -> Vec<Assertion> {
    let e = expr("exp(z)");
    let a = expr("-(1 + exp(-2*z))/4");
    let mut out = attempt("coefficient_from_product", "A at 0", || {
        let v = coefficient_from_product(&e.jet(C::new(0.0, 0.0), 2)?)?;
        Ok(vec![le("coefficient_from_product", "|A(0) + 1/2|", (v + 0.5).norm(), 1e-14)])
    });
    out.extend(attempt("coefficient_from_product", "A at 100 seeded points", || {
        let pts = seeded_points(100, 5.0, GALLERY_SEED + 2);
        Ok(vec![le("coefficient_from_product", "relative error of A at 100 seeded points in |z| <= 5", bank_laine_residual(&e, &a, &pts)?, 1e-10)])
    }));
    out.extend(residual_assertion(&e, &a, 5.0));
    out.extend(third_order_assertion(&e, &a, 3.0));
    out.extend(bank_laine_assertions(&e, 5.0, 0, |_| 1, true));
    out.extend(multiplicity_assertion(&e, 5.0));
    out
}

fn run_defexample() -> Vec<Assertion> {
    let f = expr("exp(exp(z))");
    let a = expr("-exp(2*z) - exp(z)");
    let radii = [10.0, 20.0, 40.0];
    let zero = Target::Finite(C::new(0.0, 0.0));
    let mut out = attempt("eval_jet", "f''/f = e^{2z} + e^z", || {
        let mut worst: f64 = 0.0;
        for z in seeded_points(20, 3.0, GALLERY_SEED + 3) {
            let j = f.jet(z, 2)?;
            let want = -a.value(z)?;
            worst = worst.max((j.d2 / j.d0 - want).norm() / want.norm().max(1.0));
        }
        Ok(vec![le("eval_jet", "relative error of f''/f + A at 20 seeded points in |z| <= 3", worst, 1e-10)])
    });
    out.extend(attempt("deficiency_estimate", "delta(0, A)", || {
        let d = deficiency_estimate(&a, zero, &radii)?;
        Ok(vec![within("deficiency_estimate", "delta(0, A) on radii {10, 20, 40}", d.delta, 0.5, 0.05)])
    }));
    out.extend(attempt("deficiency_estimate", "delta(0, f'/f)", || {
        let d = deficiency_estimate(&expr("exp(z)"), zero, &radii)?;
        Ok(vec![within("deficiency_estimate", "delta(0, f'/f) = delta(0, e^z) on radii {10, 20, 40}", d.delta, 1.0, 0.02)])
    }));
    out.extend(multiplicity_assertion(&a, 12.0));
    out
}

fn run_special() -> Vec<Assertion> {
    let e = expr("exp(z) - 1");
    let a = expr("-1/4");
    let mut out = attempt("special_b", "B = 1", || {
        let mut worst: f64 = 0.0;
        for z in usable_points(&e, 20, 3.0)? {
            worst = worst.max((special_b(&e.jet(z, 1)?)? - 1.0).norm());
        }
        Ok(vec![le("special_b", "max |B - 1| at 20 seeded points in |z| <= 3", worst, 1e-10)])
    });
    out.extend(bank_laine_assertions(&e, 20.0, 7, |_| 1, true));
    out.extend(residual_assertion(&e, &a, 3.0));
    out.extend(multiplicity_assertion(&e, 20.0));
    out
}

fn run_sine() -> Vec<Assertion> {
    let e = expr("sin(z)");
    let a = expr("1/4");
    let mut out = bank_laine_assertions(&e, 10.0, 7, |z| if ((z.re / PI).round() as i64) % 2 == 0 { 1 } else { -1 }, false);
    out.extend(residual_assertion(&e, &a, 3.0));
    out.extend(third_order_assertion(&e, &a, 3.0));
    out.extend(attempt("deficiency_estimate", "delta(0, sin)", || {
        let d = deficiency_estimate(&e, Target::Finite(C::new(0.0, 0.0)), &default_radii(40.0))?;
        Ok(vec![within("deficiency_estimate", "delta(0, sin z) over radii up to 40", d.delta, 0.0, 0.05)])
    }));
    out.extend(attempt("convergence_exponent", "exponent of convergence of sin(pi z)", || {
        let c = convergence_exponent(&counting_function(&expr("sin(pi*z)"), &default_radii(400.0))?)?;
        Ok(vec![within("convergence_exponent", "exponent of convergence of sin(pi z) over radii up to 400", c.lambda, 1.0, 0.05)])
    }));
    out.extend(multiplicity_assertion(&e, 10.0));
    out
}

/// `∫_1^∞ e^{-t}/t dt`, computed once.
pub fn exp_integral_one() -> f64 {
    static VALUE: OnceLock<f64> = OnceLock::new();
    *VALUE.get_or_init(|| {
        // The integrand is below e^{-80} past t = 80.
        let q = adaptive(|t| Ok(C::new((-t).exp() / t, 0.0)), 1.0, 80.0, 1e-15).expect("smooth integrand");
        q.value.re
    })
}

/// The functions of the quadrature-defined example.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sec9 {
    /// `h(z) = ∫_1^z (1 - e^{-t})/t dt + ∫_1^∞ e^{-t}/t dt`.
    H,
    /// `E = e^h`.
    E,
    /// `A = -(h'^2 + 2h'' + e^{-2h})/4`.
    A,
}

/// `φ = h' = (1 - e^{-z})/z` and its first three derivatives.
fn h_prime_jet(z: C) -> [C; 4] {
    if z.norm() < 0.5 {
        // φ = Σ (-z)^n / (n+1)!, differentiated termwise.
        let mut d = [C::new(0.0, 0.0); 4];
        let mut fact = [1.0f64; 40];
        for n in 1..40 {
            fact[n] = fact[n - 1] * n as f64;
        }
        for n in 0..36 {
            for (k, slot) in d.iter_mut().enumerate() {
                if n >= k {
                    let coeff = if n % 2 == 0 { 1.0 } else { -1.0 } / fact[n + 1] * fact[n] / fact[n - k];
                    *slot += coeff * z.powi((n - k) as i32);
                }
            }
        }
        return d;
    }
    let e = (-z).exp();
    let u = [1.0 - e, e, -e, e];
    let (z1, z2, z3, z4) = (z, z * z, z * z * z, z * z * z * z);
    [
        u[0] / z1,
        u[1] / z1 - u[0] / z2,
        u[2] / z1 - 2.0 * u[1] / z2 + 2.0 * u[0] / z3,
        u[3] / z1 - 3.0 * u[2] / z2 + 6.0 * u[1] / z3 - 6.0 * u[0] / z4,
    ]
}

impl Sec9 {
    /// `h(z)` by quadrature along the segment from 1.
    pub fn h(z: C) -> Result<C> {
        let d = z - 1.0;
        let q = if d.norm() == 0.0 {
            C::new(0.0, 0.0)
        } else {
            adaptive(|s| Ok(h_prime_jet(1.0 + d * s)[0] * d), 0.0, 1.0, 1e-13 * (1.0 + d.norm()))?.value
        };
        Ok(q + exp_integral_one())
    }

    fn jet_at(self, z: C, order: usize) -> Result<Jet> {
        let p = h_prime_jet(z);
        let h = Sec9::h(z)?;
        let hj = Jet::from_array([h, p[0], p[1], p[2]], order.min(3));
        match self {
            Sec9::H => Ok(hj),
            Sec9::E => Ok(hj.exp()),
            Sec9::A => {
                if order > 2 {
                    return Err(Error::invalid("the native coefficient provides derivatives up to order 2"));
                }
                let w = (-2.0 * h).exp();
                let a0 = -(p[0] * p[0] + 2.0 * p[1] + w) / 4.0;
                let a1 = -(2.0 * p[0] * p[1] + 2.0 * p[2] - 2.0 * p[0] * w) / 4.0;
                let a2 = -(2.0 * p[1] * p[1] + 2.0 * p[0] * p[2] + 2.0 * p[3] + (4.0 * p[0] * p[0] - 2.0 * p[1]) * w) / 4.0;
                Ok(Jet::from_array([a0, a1, a2, C::new(0.0, 0.0)], order))
            }
        }
    }

    /// `g1(x) = exp((h(x) - log x + ∫_x^∞ G)/2)` with `G = e^{-h} - 1/t`, for real `x > 0`.
    pub fn g1(x: f64) -> Result<f64> {
        // G(t) = expm1(-(h(t) - log t)) / t is below e^{-t}/t^2.
        let g = |t: f64| -> Result<f64> { Ok((-(Sec9::h(C::new(t, 0.0))?.re - t.ln())).exp_m1() / t) };
        let tail = adaptive(|t| Ok(C::new(g(t)?, 0.0)), x, x + 60.0, 1e-13)?.value.re;
        Ok(((Sec9::h(C::new(x, 0.0))?.re - x.ln() + tail) / 2.0).exp())
    }
}

impl Analytic for Sec9 {
    fn scaled_jet(&self, z: C, order: usize) -> Result<ScaledJet> {
        Ok(ScaledJet::from_jet(self.jet_at(z, order)?))
    }

    fn jet(&self, z: C, order: usize) -> Result<Jet> {
        self.jet_at(z, order)
    }
}

fn run_sec9() -> Vec<Assertion> {
    let mut out = vec![le(
        "tail_integral",
        "|∫_1^∞ e^{-t}/t dt - E1(1)| against the tabulated E1(1) = 0.219383934395520",
        (exp_integral_one() - 0.219383934395520).abs(),
        1e-13,
    )];
    for x in [10.0f64, 20.0, 30.0] {
        out.extend(attempt("eval_jet", "coefficient decay", || {
            let a = Sec9::A.value(C::new(x, 0.0))?.norm();
            Ok(vec![le("eval_jet", format!("|A({x})| <= {x}^-6 = {:e}", x.powi(-6)), a, x.powi(-6))])
        }));
        out.extend(attempt("eval_jet", "solution close to 1", || {
            Ok(vec![le("eval_jet", format!("|g1({x}) - 1|"), (Sec9::g1(x)? - 1.0).abs(), 1e-3)])
        }));
    }
    out.extend(attempt("tail_integral", "tail condition", || {
        let t = tail_integral(&Sec9::A, 0.0, 5.0, 60.0)?;
        Ok(vec![le("tail_integral", "∫_5^60 r|A(r)| dr < 1/2", t.value, 0.5)])
    }));
    out.extend(residual_assertion(&Sec9::E, &Sec9::A, 3.0));
    out.extend(multiplicity_assertion(&Sec9::E, 3.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry() {
        let n = names();
        assert_eq!(n, vec!["exp-bl", "e2", "standardex", "defexample", "special", "sine", "sec9"]);
        assert!(matches!(verify_example("nope"), Err(Error::UnknownEntry(_))));
        for e in entries() {
            assert!(!e.operations.is_empty());
            assert!(e.e().is_some() || e.a().is_some());
        }
    }

    #[test]
    fn native_h_matches_closed_form_on_the_axis() {
        // On the positive axis h(x) = log x + E1(x); E1(2) = 0.04890051070806112.
        let h = Sec9::h(C::new(2.0, 0.0)).unwrap();
        assert!((h.re - (2f64.ln() + 0.04890051070806112)).abs() < 1e-13);
        assert!(h.im.abs() < 1e-15);
    }

    #[test]
    fn native_jets_agree_with_differences() {
        let z = C::new(1.3, 0.7);
        let step = 1e-4;
        for f in [Sec9::H, Sec9::E, Sec9::A] {
            let j = f.jet(z, 2).unwrap();
            let v = |w: C| f.value(w).unwrap();
            let d1 = (v(z + step) - v(z - step)) / (2.0 * step);
            let d2 = (v(z + step) - 2.0 * v(z) + v(z - step)) / (step * step);
            assert!((j.d1 - d1).norm() < 1e-7 * (1.0 + d1.norm()), "{f:?}");
            assert!((j.d2 - d2).norm() < 1e-4 * (1.0 + d2.norm()), "{f:?}");
        }
        // The series branch joins the closed form.
        let (a, b) = (h_prime_jet(C::new(0.4999, 0.0)), h_prime_jet(C::new(0.5001, 0.0)));
        for k in 0..4 {
            assert!((a[k] - b[k]).norm() < 1e-3);
        }
    }

    #[test]
    fn exp_bl_entry_passes() {
        let r = verify_example("exp-bl").unwrap();
        assert!(r.passed, "{r:#?}");
    }
}
