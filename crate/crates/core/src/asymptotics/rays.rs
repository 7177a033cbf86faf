use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::analytic::{Analytic, Polynomial};
use crate::contour::{branch_sqrt, dopri5, OdeOptions, PathSpec, Piece, Sign, ZERO_THRESHOLD};
use crate::error::{Error, Result};

type C = Complex64;

/// The `n + 2` directions `θ` with `a_n e^{i(n+2)θ} > 0`, sorted in `[0, 2π)`.
pub fn critical_rays(a: &Polynomial) -> Result<Vec<f64>> {
    let n = a.degree();
    if n == 0 {
        return Err(Error::invalid("critical rays need a polynomial of degree at least 1"));
    }
    let m = (n + 2) as f64;
    let base = -a.leading().arg();
    let mut rays: Vec<f64> = (0..n + 2)
        .map(|k| {
            let t = ((base + TAU * k as f64) / m).rem_euclid(TAU);
            if t >= TAU {
                0.0
            } else {
                t
            }
        })
        .collect();
    rays.sort_by(f64::total_cmp);
    Ok(rays)
}

/// `Z = ∫ sqrt(A) dt` along `path` (prefixed by a segment from `z0` when it
/// starts elsewhere), with the principal root at `z0` continued along the path.
pub fn liouville_map<F: Analytic + ?Sized>(a: &F, z0: C, path: &PathSpec, tol: f64) -> Result<C> {
    liouville_map_with(a, z0, path, Sign::Plus, tol)
}

pub fn liouville_map_with<F: Analytic + ?Sized>(a: &F, z0: C, path: &PathSpec, sign: Sign, tol: f64) -> Result<C> {
    let path = path.starting_from(z0)?;
    branch_sqrt(a, &path, sign)?.integral(a, tol)
}

#[derive(Debug, Clone)]
pub struct TraceOptions {
    pub tol: f64,
    /// Largest arc-length step between stored points.
    pub max_step: f64,
    /// Stop once `|z|` reaches this value.
    pub stop_modulus: Option<f64>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { tol: 1e-10, max_step: 1.0, stop_modulus: None }
    }
}

/// A curve on which `Z` moves along a horizontal line.
#[derive(Debug, Clone, Serialize)]
pub struct TracedPath {
    pub path: PathSpec,
    /// Arc length at each point.
    pub s: Vec<f64>,
    /// The Liouville variable at each point, `Z(start) = 0`.
    #[serde(with = "crate::json::vec")]
    pub z_map: Vec<C>,
    /// Direction sign chosen at the start.
    pub eta: f64,
    pub length: f64,
    /// Why tracing ended early, if it did.
    pub aborted: Option<String>,
}

/// Follows `dz/ds = η |sqrt A| / sqrt A` from `start` for `arc_length`
/// (unit speed, so `dZ/ds = η |sqrt A|` is real and positive).
///
/// `η` maximizes `d|z|/ds` at the start, `+1` on ties. The branch of
/// `sqrt A` is carried as part of the state through `w' = A' z' / (2w)`.
pub fn trace_decay_path<F: Analytic + ?Sized>(a: &F, start: C, arc_length: f64, tol: f64) -> Result<TracedPath> {
    trace_decay_path_with(a, start, arc_length, &TraceOptions { tol, ..Default::default() })
}

pub fn trace_decay_path_with<F: Analytic + ?Sized>(
    a: &F,
    start: C,
    arc_length: f64,
    opts: &TraceOptions,
) -> Result<TracedPath> {
    if !(arc_length > 0.0 && arc_length.is_finite()) {
        return Err(Error::invalid("arc length must be positive"));
    }
    let a0 = a.value(start)?;
    if a0.norm() < ZERO_THRESHOLD {
        return Err(Error::ZeroOnPath { z: start });
    }
    let w0 = a0.sqrt();
    let dir = w0.conj() / w0.norm();
    let eta = if (start.conj() * dir).re >= 0.0 { 1.0 } else { -1.0 };

    // The independent variable is s, carried on a dummy real segment.
    let pieces = [Piece::Segment { a: C::new(0.0, 0.0), b: C::new(arc_length, 0.0) }];
    let near_zero = std::cell::Cell::new(None::<C>);
    let rhs = |_s: C, y: &[C], dy: &mut [C]| -> Result<()> {
        let (z, w) = (y[0], y[1]);
        let j = a.jet(z, 1)?;
        if j.d0.norm() < ZERO_THRESHOLD {
            near_zero.set(Some(z));
            return Err(Error::ZeroOnPath { z });
        }
        let dz = eta * w.conj() / w.norm();
        dy[0] = dz;
        dy[1] = j.d1 * dz / (2.0 * w);
        dy[2] = w * dz;
        Ok(())
    };
    let ode = OdeOptions { max_step: Some(opts.max_step), ..OdeOptions::with_tol(opts.tol) };
    let mut points = Vec::new();
    let mut s = Vec::new();
    let mut zmap = Vec::new();
    let result = dopri5(&pieces, &[start, w0, C::new(0.0, 0.0)], rhs, &ode, |ev| {
        // The carried root must still square to A; near a turning point it does not.
        let av = a.value(ev.y[0])?;
        if av.norm() < ZERO_THRESHOLD || (ev.y[1] * ev.y[1] - av).norm() > 1e-6 * av.norm() {
            near_zero.set(Some(ev.y[0]));
            return Ok(false);
        }
        points.push(ev.y[0]);
        s.push(ev.s);
        zmap.push(ev.y[2]);
        Ok(opts.stop_modulus.is_none_or(|m| ev.y[0].norm() < m))
    });
    let aborted = match result {
        Ok(_) if near_zero.get().is_some() => Some(format!("approached a zero of A near {}", near_zero.get().unwrap())),
        Ok(_) => None,
        Err(Error::ZeroOnPath { z }) => Some(format!("approached a zero of A near {z}")),
        Err(e) if near_zero.get().is_some() => Some(e.to_string()),
        Err(Error::StepUnderflow { z }) => Some(format!("step size underflow near {z}")),
        Err(e) => return Err(e),
    };
    if points.len() < 2 {
        return Err(Error::ZeroOnPath { z: start });
    }
    let length = *s.last().unwrap();
    Ok(TracedPath { path: PathSpec::Sampled { points }, s, z_map: zmap, eta, length, aborted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use std::f64::consts::PI;

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn rays() {
        let r = critical_rays(&Polynomial::from_expr(&e("z")).unwrap()).unwrap();
        assert_eq!(r, vec![0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0]);
        let r = critical_rays(&Polynomial::from_expr(&e("-4*z^2")).unwrap()).unwrap();
        for (got, want) in r.iter().zip([0.25, 0.75, 1.25, 1.75]) {
            assert!((got - want * PI).abs() < 1e-15);
        }
        assert!(critical_rays(&Polynomial::from_expr(&e("5")).unwrap()).is_err());
    }

    #[test]
    fn liouville_examples() {
        let z = liouville_map(&e("z"), C::new(1.0, 0.0), &PathSpec::real_segment(1.0, 4.0), 1e-12).unwrap();
        assert!((z - 14.0 / 3.0).norm() < 1e-10);
        let x: f64 = 3.0;
        let z = liouville_map(&e("exp(z)"), C::new(0.0, 0.0), &PathSpec::real_segment(0.0, x), 1e-12).unwrap();
        assert!((z - 2.0 * ((x / 2.0).exp() - 1.0)).norm() < 1e-10);
        let p = PathSpec::segment(C::new(0.0, 0.0), C::new(0.0, 1.0));
        let z = liouville_map(&e("1"), C::new(0.0, 0.0), &p, 1e-12).unwrap();
        assert!((z - C::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn traces_along_axes() {
        let t = trace_decay_path(&e("z"), C::new(1.0, 0.0), 50.0, 1e-10).unwrap();
        let PathSpec::Sampled { points } = &t.path else { panic!() };
        assert!(points.iter().all(|p| p.im.abs() <= 1e-8));
        assert!((points.last().unwrap().re - 51.0).abs() < 1e-8);
        let t = trace_decay_path(&e("exp(z)"), C::new(1.0, 0.0), 20.0, 1e-10).unwrap();
        let PathSpec::Sampled { points } = &t.path else { panic!() };
        assert!(points.iter().all(|p| p.im.abs() <= 1e-8));
        let t = trace_decay_path(&e("1"), C::new(0.0, 0.0), 7.5, 1e-10).unwrap();
        let PathSpec::Sampled { points } = &t.path else { panic!() };
        assert!((points.last().unwrap() - 7.5).norm() < 1e-12);
        assert_eq!(t.eta, 1.0);
    }

    #[test]
    fn aborts_near_zero_of_a() {
        // From 10 + e^{2πi/3} the outward flow of A = z - 10 runs straight into the turning point.
        let start = C::new(10.0, 0.0) + C::from_polar(1.0, 2.0 * PI / 3.0);
        let t = trace_decay_path(&e("z - 10"), start, 5.0, 1e-10).unwrap();
        assert!(t.aborted.is_some());
        let PathSpec::Sampled { points } = &t.path else { panic!() };
        assert!((points.last().unwrap() - 10.0).norm() < 1e-2);
    }
}
