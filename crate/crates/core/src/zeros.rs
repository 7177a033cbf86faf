//! Zeros of analytic functions: argument-principle counts on discs and
//! boxes, location by quadrisection with Newton refinement, and the
//! integrated counting function `N(r, 1/f)`.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::Analytic;
use crate::contour::{integrate_path_with, PathSpec};
use crate::error::{DomainKind, Error, Result};

type C = Complex64;

/// Radius perturbations tried, in order, when a zero sits on the circle.
pub const RADIUS_PERTURBATIONS: [f64; 6] = [0.0, 0.003, -0.003, 0.007, -0.007, 0.01];
/// Quadrature tolerance for argument-principle integrals (absolute, on `∮ f'/f`).
pub const COUNT_TOL: f64 = 1e-6;
const MAX_ROUNDING: f64 = 0.1;
const NEWTON_MAX_ITER: usize = 50;
const MAX_DEPTH: usize = 40;
const MIN_BOX: f64 = 1e-9;
/// Off-centre split fractions, so that lattice-aligned zeros avoid box edges.
const SPLITS: [(f64, f64); 5] = [(0.5123, 0.4871), (0.4871, 0.5123), (0.5371, 0.4629), (0.4629, 0.5371), (0.5, 0.5)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroRecord {
    #[serde(with = "crate::json")]
    pub location: C,
    pub multiplicity: usize,
    /// `|f|` at the refined point.
    pub residual: f64,
    /// Set when subdivision bottomed out before separating the zeros.
    pub cluster: bool,
}

/// An argument-principle count together with the contour actually used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscCount {
    pub count: usize,
    /// `(1/2πi) ∮ f'/f`, before rounding.
    pub raw: C,
    pub radius: f64,
}

/// `(1/2πi) ∮ f'/f dz` along a closed path; fails when a zero lies on or
/// very near the contour.
fn winding_integral<F: Analytic + ?Sized>(f: &F, path: &PathSpec, scale: f64, tol: f64) -> Result<C> {
    let mut min_newton = f64::INFINITY;
    let q = integrate_path_with(path, tol, |_, z, _| {
        let j = f.scaled_jet(z, 1)?;
        if j.is_zero_value() {
            return Err(Error::domain(DomainKind::Pole, z));
        }
        let r = j.log_derivative();
        min_newton = min_newton.min(1.0 / r.norm());
        Ok(r)
    })?;
    if min_newton < 1e-8 * scale {
        return Err(Error::BoundaryZero { center: path.start()?, radius: scale });
    }
    Ok(q.value / C::new(0.0, TAU))
}

fn round_count(raw: C) -> Result<usize> {
    let n = raw.re.round();
    if (raw - n).norm() >= MAX_ROUNDING || n < 0.0 {
        return Err(Error::NonIntegerCount { value: raw.re });
    }
    Ok(n as usize)
}

fn boundary_problem(e: &Error) -> bool {
    matches!(
        e,
        Error::Domain { .. } | Error::BoundaryZero { .. } | Error::NonIntegerCount { .. } | Error::QuadratureNonConvergence { .. }
    )
}

/// Number of zeros (with multiplicity) of `f` in `|z - center| < radius`.
pub fn count_zeros_disc<F: Analytic + ?Sized>(f: &F, center: C, radius: f64, tol: f64) -> Result<usize> {
    Ok(count_zeros_disc_detailed(f, center, radius, tol)?.count)
}

/// As [`count_zeros_disc`], also reporting the (possibly perturbed) radius.
pub fn count_zeros_disc_detailed<F: Analytic + ?Sized>(f: &F, center: C, radius: f64, tol: f64) -> Result<DiscCount> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid("radius must be positive"));
    }
    let mut last = None;
    for dp in RADIUS_PERTURBATIONS {
        let r = radius * (1.0 + dp);
        let circle = PathSpec::circle(center, r);
        match winding_integral(f, &circle, r, tol).and_then(|raw| Ok((raw, round_count(raw)?))) {
            Ok((raw, count)) => return Ok(DiscCount { count, raw, radius: r }),
            Err(e) if boundary_problem(&e) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    match last {
        Some(Error::QuadratureNonConvergence { estimate, error, tol }) => {
            Err(Error::QuadratureNonConvergence { estimate, error, tol })
        }
        _ => Err(Error::BoundaryZero { center, radius }),
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    lo: C,
    hi: C,
}

impl Rect {
    fn size(&self) -> f64 {
        (self.hi.re - self.lo.re).max(self.hi.im - self.lo.im)
    }

    fn center(&self) -> C {
        (self.lo + self.hi) * 0.5
    }

    fn contains(&self, z: C, slack: f64) -> bool {
        z.re >= self.lo.re - slack && z.re <= self.hi.re + slack && z.im >= self.lo.im - slack && z.im <= self.hi.im + slack
    }

    fn boundary(&self) -> PathSpec {
        let (a, b) = (self.lo, self.hi);
        PathSpec::Polyline { points: vec![a, C::new(b.re, a.im), b, C::new(a.re, b.im), a] }
    }

    fn split(&self, fx: f64, fy: f64) -> [Rect; 4] {
        let m = C::new(self.lo.re + fx * (self.hi.re - self.lo.re), self.lo.im + fy * (self.hi.im - self.lo.im));
        let (a, b) = (self.lo, self.hi);
        [
            Rect { lo: a, hi: m },
            Rect { lo: C::new(m.re, a.im), hi: C::new(b.re, m.im) },
            Rect { lo: C::new(a.re, m.im), hi: C::new(m.re, b.im) },
            Rect { lo: m, hi: b },
        ]
    }

    fn count<F: Analytic + ?Sized>(&self, f: &F) -> Result<usize> {
        round_count(winding_integral(f, &self.boundary(), self.size(), COUNT_TOL)?)
    }
}

/// Damped (modified, for multiplicity `m`) Newton iteration from `z0`.
/// Returns the final point and `|f|` there.
pub fn newton<F: Analytic + ?Sized>(f: &F, z0: C, m: usize, tol: f64) -> Result<(C, f64, bool)> {
    let mut z = z0;
    let mut j = f.scaled_jet(z, 1)?;
    for _ in 0..NEWTON_MAX_ITER {
        if j.is_zero_value() {
            return Ok((z, 0.0, true));
        }
        let step = -(m as f64) / j.log_derivative();
        if !(step.re.is_finite() && step.im.is_finite()) {
            break;
        }
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let zn = z + step * lambda;
            if let Ok(jn) = f.scaled_jet(zn, 1) {
                if jn.is_zero_value() || jn.ln_abs() < j.ln_abs() {
                    accepted = Some((zn, jn));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((zn, jn)) = accepted else { break };
        let moved = (zn - z).norm();
        z = zn;
        j = jn;
        if moved <= 4.0 * f64::EPSILON * (1.0 + z.norm()) {
            break;
        }
    }
    let residual = if j.is_zero_value() { 0.0 } else { j.ln_abs().exp() };
    let step_small = j.is_zero_value() || (m as f64 / j.log_derivative().norm()) <= 1e-10 * (1.0 + z.norm());
    Ok((z, residual, residual <= tol || step_small))
}

/// Whether all `m` zeros of the box sit in a small disc about `z`. A small
/// residual alone is not enough where `f` underflows. Rounding noise near a
/// multiple zero can spoil the count on the smallest disc, so larger ones are
/// tried until a count succeeds.
fn confirm_multiplicity<F: Analytic + ?Sized>(f: &F, z: C, m: usize, rect: &Rect) -> bool {
    let inside = (z.re - rect.lo.re).min(rect.hi.re - z.re).min(z.im - rect.lo.im).min(rect.hi.im - z.im);
    for scale in [1e-4, 1e-3, 1e-2] {
        let rho = (scale * (1.0 + z.norm())).min(0.9 * inside);
        if rho <= 0.0 {
            return false;
        }
        match winding_integral(f, &PathSpec::circle(z, rho), rho, COUNT_TOL).and_then(round_count) {
            Ok(k) => return k == m,
            Err(_) if rho < 0.9 * inside => continue,
            Err(_) => return false,
        }
    }
    false
}

fn refine_box<F: Analytic + ?Sized>(f: &F, rect: Rect, m: usize, depth: usize, tol: f64) -> Result<Vec<ZeroRecord>> {
    if m == 0 {
        return Ok(Vec::new());
    }
    let c = rect.center();
    let slack = 1e-12 * (1.0 + c.norm());
    if let Ok((z, residual, ok)) = newton(f, c, m, tol) {
        if ok && rect.contains(z, slack) {
            if confirm_multiplicity(f, z, m, &rect) {
                return Ok(vec![ZeroRecord { location: z, multiplicity: m, residual, cluster: false }]);
            }
        }
    }
    if depth >= MAX_DEPTH || rect.size() < MIN_BOX {
        let (z, residual) = newton(f, c, m, tol).map(|(z, r, _)| (z, r)).unwrap_or((c, f64::NAN));
        let z = if rect.contains(z, slack) { z } else { c };
        return Ok(vec![ZeroRecord { location: z, multiplicity: m, residual, cluster: true }]);
    }
    for (fx, fy) in SPLITS {
        let kids = rect.split(fx, fy);
        let counts: Vec<Result<usize>> = kids.par_iter().map(|k| k.count(f)).collect();
        if counts.iter().any(|c| c.is_err()) {
            continue;
        }
        let counts: Vec<usize> = counts.into_iter().map(|c| c.unwrap()).collect();
        if counts.iter().sum::<usize>() != m {
            continue;
        }
        let parts: Vec<Result<Vec<ZeroRecord>>> = kids
            .par_iter()
            .zip(counts.par_iter())
            .map(|(k, &n)| refine_box(f, *k, n, depth + 1, tol))
            .collect();
        let mut out = Vec::new();
        for p in parts {
            out.extend(p?);
        }
        return Ok(out);
    }
    Err(Error::BoundaryZero { center: c, radius: rect.size() })
}

/// Orders by real part, treating real parts within rounding as equal.
fn sort_records(v: &mut [ZeroRecord]) {
    v.sort_by(|a, b| {
        let (x, y) = (a.location, b.location);
        let eps = 1e-9 * (1.0 + x.norm().max(y.norm()));
        if (x.re - y.re).abs() > eps {
            x.re.total_cmp(&y.re)
        } else {
            x.im.total_cmp(&y.im)
        }
    });
}

/// All zeros of `f` in `|z - center| < radius`, refined until `|f| <= tol`
/// (or to rounding level). Multiplicities come from argument-principle
/// counts, and their sum equals [`count_zeros_disc`].
pub fn locate_zeros<F: Analytic + ?Sized>(f: &F, center: C, radius: f64, tol: f64) -> Result<Vec<ZeroRecord>> {
    let disc = count_zeros_disc_detailed(f, center, radius, COUNT_TOL)?;
    if disc.count == 0 {
        return Ok(Vec::new());
    }
    let mut records = None;
    for grow in [1.0173, 1.0311, 1.0529] {
        let h = disc.radius * grow;
        let root = Rect { lo: center - C::new(h, h), hi: center + C::new(h, h) };
        let Ok(m) = root.count(f) else { continue };
        records = Some(refine_box(f, root, m, 0, tol)?);
        break;
    }
    let mut records = records.ok_or(Error::BoundaryZero { center, radius })?;
    records.retain(|r| (r.location - center).norm() < disc.radius);
    sort_records(&mut records);
    let total: usize = records.iter().map(|r| r.multiplicity).sum();
    if total != disc.count {
        return Err(Error::Estimate(format!(
            "located multiplicities sum to {total} but the disc count is {}",
            disc.count
        )));
    }
    Ok(records)
}

/// `n(r)` on a grid and the integrated counting function `N(r)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingData {
    pub radii: Vec<f64>,
    pub n_values: Vec<usize>,
    /// Multiplicity of the zero at the origin.
    pub n0: usize,
    #[serde(rename = "N_values")]
    pub big_n_values: Vec<f64>,
    /// The refined grid used for the integral, with counts.
    pub grid: Vec<f64>,
    pub grid_counts: Vec<usize>,
}

impl CountingData {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["r", "n", "N"])?;
        for i in 0..self.radii.len() {
            wr.write_record([self.radii[i].to_string(), self.n_values[i].to_string(), self.big_n_values[i].to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CountingOptions {
    /// Ratio of consecutive grid radii.
    pub ratio: f64,
    pub t_start: f64,
    pub origin_radius: f64,
}

impl Default for CountingOptions {
    fn default() -> Self {
        CountingOptions { ratio: 2f64.powf(1.0 / 16.0), t_start: 1e-6, origin_radius: 1e-7 }
    }
}

/// The refined geometric grid up to the largest requested radius, with the
/// requested radii merged in.
pub fn counting_grid(radii: &[f64], opts: &CountingOptions) -> Result<Vec<f64>> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] < 1.0 {
        return Err(Error::invalid("radii must be increasing and at least 1"));
    }
    let rmax = *radii.last().unwrap();
    let mut grid = Vec::new();
    let mut t = opts.t_start;
    while t < rmax {
        grid.push(t);
        t *= opts.ratio;
    }
    grid.extend_from_slice(radii);
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * *b);
    Ok(grid)
}

/// Builds [`CountingData`] from a counter `n(t)` evaluated on the refined grid.
pub fn counting_from_counts(radii: &[f64], n0: usize, grid: Vec<f64>, counts: Vec<usize>) -> CountingData {
    // N(t) = ∫ (n - n0) d(log t) + n0 log t, trapezoid in log t.
    let mut big_n_grid = vec![0.0; grid.len()];
    let mut acc = 0.0;
    for i in 1..grid.len() {
        let dl = (grid[i] / grid[i - 1]).ln();
        let a = counts[i - 1].saturating_sub(n0) as f64;
        let b = counts[i].saturating_sub(n0) as f64;
        acc += 0.5 * (a + b) * dl;
        big_n_grid[i] = acc;
    }
    let mut n_values = Vec::with_capacity(radii.len());
    let mut big_n = Vec::with_capacity(radii.len());
    for &r in radii {
        let i = grid.iter().position(|&t| (t - r).abs() <= 1e-12 * r).expect("radius on grid");
        n_values.push(counts[i]);
        big_n.push(big_n_grid[i] + n0 as f64 * r.ln());
    }
    CountingData { radii: radii.to_vec(), n_values, n0, big_n_values: big_n, grid, grid_counts: counts }
}

/// `n(r)` and `N(r) = ∫_0^r (n(t) - n0)/t dt + n0 log r` for zeros of `f`
/// about the origin.
pub fn counting_function<F: Analytic + ?Sized>(f: &F, radii: &[f64]) -> Result<CountingData> {
    counting_function_with(f, radii, &CountingOptions::default())
}

pub fn counting_function_with<F: Analytic + ?Sized>(f: &F, radii: &[f64], opts: &CountingOptions) -> Result<CountingData> {
    let origin = C::new(0.0, 0.0);
    let grid = counting_grid(radii, opts)?;
    let n0 = count_zeros_disc(f, origin, opts.origin_radius, COUNT_TOL)?;
    let counts: Vec<Result<usize>> = grid.par_iter().map(|&t| count_zeros_disc(f, origin, t, COUNT_TOL)).collect();
    let counts = counts.into_iter().collect::<Result<Vec<usize>>>()?;
    // A perturbed radius can pick up a zero just outside; enforce monotonicity.
    let mut counts = counts;
    for i in (0..counts.len().saturating_sub(1)).rev() {
        counts[i] = counts[i].min(counts[i + 1]);
    }
    Ok(counting_from_counts(radii, n0, grid, counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::Polynomial;
    use crate::expr::Expr;

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    const O: C = C::new(0.0, 0.0);

    #[test]
    fn disc_counts() {
        assert_eq!(count_zeros_disc(&e("sin(pi*z)"), O, 3.5, 1e-8).unwrap(), 7);
        assert_eq!(count_zeros_disc(&e("exp(z)"), O, 20.0, 1e-8).unwrap(), 0);
        assert_eq!(count_zeros_disc(&e("z^2 + 1"), O, 2.0, 1e-8).unwrap(), 2);
    }

    #[test]
    fn boundary_zero_is_perturbed() {
        let d = count_zeros_disc_detailed(&e("sin(pi*z)"), O, 3.0, 1e-8).unwrap();
        assert_eq!(d.count, 7);
        assert!((d.radius - 3.009).abs() < 1e-12);
    }

    #[test]
    fn locate_e2() {
        let z = locate_zeros(&e("exp(2*pi*i*z^2)*sin(pi*z)/pi"), O, 3.5, 1e-10).unwrap();
        assert_eq!(z.len(), 7);
        for (k, r) in z.iter().enumerate() {
            assert!((r.location - (k as f64 - 3.0)).norm() < 1e-10);
            assert_eq!(r.multiplicity, 1);
            assert!(!r.cluster);
        }
    }

    #[test]
    fn underflow_is_not_a_zero() {
        // exp(2 pi i z^2) is below 1e-40 near 8.87 + 0.82i.
        let z = locate_zeros(&e("exp(2*pi*i*z^2)*sin(pi*z)/pi"), O, 10.5, 1e-10).unwrap();
        assert_eq!(z.len(), 21);
        assert!(z.iter().all(|r| (r.location - r.location.re.round()).norm() < 1e-10));
    }

    #[test]
    fn locate_triple_zero() {
        let z = locate_zeros(&e("z^3"), O, 1.0, 1e-10).unwrap();
        assert_eq!(z.len(), 1);
        assert_eq!(z[0].multiplicity, 3);
        assert!(z[0].location.norm() < 1e-6);
    }

    #[test]
    fn locate_exp_minus_one() {
        let z = locate_zeros(&e("exp(z) - 1"), O, 7.0, 1e-10).unwrap();
        let want = [C::new(0.0, -TAU), O, C::new(0.0, TAU)];
        assert_eq!(z.len(), 3);
        for (r, w) in z.iter().zip(want) {
            assert!((r.location - w).norm() < 1e-10, "{:?}", r);
        }
    }

    #[test]
    fn counting_of_z() {
        let d = counting_function(&e("z"), &[1.0, 1f64.exp(), 2f64.exp()]).unwrap();
        assert_eq!(d.n0, 1);
        for (got, want) in d.big_n_values.iter().zip([0.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let d = counting_function(&e("exp(z)"), &[1.0, 5.0]).unwrap();
        assert!(d.big_n_values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn counting_of_sine() {
        let d = counting_function(&e("sin(pi*z)"), &[1.5, 4.5, 7.5]).unwrap();
        assert_eq!(d.n_values, vec![3, 9, 15]);
        // Exact: sum over zeros k != 0 of log(r/|k|). The trapezoid rule on a
        // step function is off by at most half a log-step per jump.
        let exact = |r: f64| (1..=r.floor() as usize).map(|k| 2.0 * (r / k as f64).ln()).sum::<f64>() + r.ln();
        let h = 2f64.ln() / 16.0;
        for (i, &r) in d.radii.iter().enumerate() {
            let bound = (d.n_values[i] - d.n0) as f64 * h / 2.0;
            assert!((d.big_n_values[i] - exact(r)).abs() <= bound, "r={r} N={} exact={}", d.big_n_values[i], exact(r));
        }
    }

    #[test]
    fn polynomial_clusters_close_roots() {
        // Two roots 1e-12 apart cannot be separated in double precision.
        let p = Polynomial::new(vec![C::new(-0.25 + 1e-24, 0.0), C::new(1.0, 0.0), C::new(-1.0, 0.0)]);
        let z = locate_zeros(&p, O, 1.0, 1e-12).unwrap();
        assert_eq!(z.iter().map(|r| r.multiplicity).sum::<usize>(), 2);
    }

    #[test]
    fn large_circle_sees_axis_crossings() {
        // Integer zeros of sin(pi z) strictly inside |z| < 241.02.
        assert_eq!(count_zeros_disc(&e("sin(pi*z)"), O, 241.0209, COUNT_TOL).unwrap(), 483);
    }
}
