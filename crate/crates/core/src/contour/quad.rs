use std::f64::consts::PI;

use num_complex::Complex64;

use super::path::{PathSpec, Piece};
use crate::analytic::Analytic;
use crate::error::{Error, Result};

type C = Complex64;

// 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
const MAX_PANELS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: C,
    pub error: f64,
    pub evaluations: usize,
    /// Magnitude of the integral over the last accepted panel.
    pub last_panel: f64,
}

struct Panel {
    kronrod: C,
    error: f64,
    abs: f64,
}

fn gk15<F: FnMut(f64) -> Result<C>>(f: &mut F, a: f64, b: f64) -> Result<Panel> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut abs = fc.norm() * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx)?, f(c + dx)?);
        k += (f1 + f2) * WGK[j];
        abs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            g += (f1 + f2) * WG[j / 2];
        }
    }
    Ok(Panel { kronrod: k * h, error: ((k - g) * h).norm(), abs: abs * h.abs() })
}

/// Adaptive G7-K15 on `[a, b]`, processed left to right so that integrands
/// may carry state (such as a square-root branch) along the interval.
///
/// A panel is accepted once its error is below `tol * width / total_width`
/// or at the rounding floor of its absolute integral.
pub fn adaptive<F: FnMut(f64) -> Result<C>>(mut f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    adaptive_inner(&mut f, a, b, tol, (b - a).abs(), 1)
}

fn adaptive_inner<F: FnMut(f64) -> Result<C>>(
    f: &mut F,
    a: f64,
    b: f64,
    tol: f64,
    total_width: f64,
    initial: usize,
) -> Result<Quadrature> {
    let mut out = Quadrature { value: C::new(0.0, 0.0), error: 0.0, evaluations: 0, last_panel: 0.0 };
    if a == b {
        return Ok(out);
    }
    let mut stack: Vec<(f64, Option<Panel>)> =
        (1..=initial).rev().map(|k| (if k == initial { b } else { a + (b - a) * k as f64 / initial as f64 }, None)).collect();
    let mut left = a;
    let mut panels = 0usize;
    let min_width = 1e-13 * total_width.max(a.abs()).max(b.abs());
    while let Some((right, cached)) = stack.pop() {
        if panels > MAX_PANELS {
            return Err(Error::QuadratureNonConvergence { estimate: out.value, error: f64::INFINITY, tol });
        }
        let p = match cached {
            Some(p) => p,
            None => {
                out.evaluations += 15;
                gk15(f, left, right)?
            }
        };
        panels += 1;
        let width = (right - left).abs();
        let local = tol * width / total_width;
        let floor = 64.0 * f64::EPSILON * p.abs;
        if p.error <= local.max(floor) || width <= min_width {
            out.value += p.kronrod;
            out.error += p.error;
            out.last_panel = p.kronrod.norm();
            left = right;
        } else {
            let mid = 0.5 * (left + right);
            stack.push((right, None));
            stack.push((mid, None));
        }
    }
    // Panels accepted at the width floor may leave the total above the target.
    if out.error > tol.max(64.0 * f64::EPSILON * out.value.norm()) {
        return Err(Error::QuadratureNonConvergence { estimate: out.value, error: out.error, tol });
    }
    Ok(out)
}

/// Integrates `g(s, z, dz/ds)` against `ds` along the path, where `s` is
/// arc length from the start. Returns the combined estimate.
pub fn integrate_path_with<G>(path: &PathSpec, tol: f64, mut g: G) -> Result<Quadrature>
where
    G: FnMut(f64, C, C) -> Result<C>,
{
    let pieces = path.pieces()?;
    integrate_pieces_with(&pieces, tol, &mut g)
}

fn integrate_pieces_with<G>(pieces: &[Piece], tol: f64, g: &mut G) -> Result<Quadrature>
where
    G: FnMut(f64, C, C) -> Result<C>,
{
    let total: f64 = pieces.iter().map(Piece::length).sum();
    let mut out = Quadrature { value: C::new(0.0, 0.0), error: 0.0, evaluations: 0, last_panel: 0.0 };
    let mut offset = 0.0;
    for p in pieces {
        let len = p.length();
        let mut integrand = |t: f64| {
            let z = p.point(t);
            let dz = p.tangent(t);
            Ok(g(offset + t, z, dz)? * dz)
        };
        // Features of unit size in z stay visible to the first panels.
        let initial = ((len / PI).ceil() as usize).clamp(1, 1 << 16);
        let q = adaptive_inner(&mut integrand, 0.0, len, tol * len / total, len, initial)?;
        out.value += q.value;
        out.error += q.error;
        out.evaluations += q.evaluations;
        out.last_panel = q.last_panel;
        offset += len;
    }
    Ok(out)
}

/// `∫_path f(z) dz` with estimated absolute error at most `tol`.
pub fn integrate_along_path<F: Analytic + ?Sized>(f: &F, path: &PathSpec, tol: f64) -> Result<C> {
    Ok(integrate_along_path_detailed(f, path, tol)?.value)
}

pub fn integrate_along_path_detailed<F: Analytic + ?Sized>(f: &F, path: &PathSpec, tol: f64) -> Result<Quadrature> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    integrate_path_with(path, tol, |_, z, _| f.value(z))
}
