//! Nevanlinna functionals on finite radius ranges.
//!
//! Circle means are computed with a periodic trapezoid rule whose node count
//! doubles until successive estimates agree. In `log⁺` integrands the kink
//! where `|g| = 1` is located by linear interpolation inside each cell.
//! Functions known only through `y'' + A y = 0` are sampled by integrating
//! outward along rays, with checkpoints on every requested circle.
//!
//! Limits in `r` are replaced by minima and slopes over the largest radii
//! supplied, so every estimate here is a finite-range estimate.

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::sync::Mutex;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::analytic::{Analytic, Shifted};
use crate::asymptotics::linear_fit;
use crate::contour::{solve_linear_ode_multi, OdeOptions, PathSpec, Record};
use crate::error::{Error, Result};
use crate::expr::{Jet, ScaledJet};
use crate::sum::NeumaierSum;
use crate::zeros::{counting_function, CountingData};

type C = Complex64;

/// Near zeros of `f - a`, `log|f - a|` is clamped to `[-LOG_CAP, ∞)`.
pub const LOG_CAP: f64 = 18.420680743952367;
pub const FINITE_RANGE_NOTE: &str = "finite-range estimate";

/// The value `a` in `m(r, 1/(f - a))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Finite(C),
    Infinity,
}

impl Target {
    pub fn parse(s: &str) -> Result<Target> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Target::Infinity),
            other => Ok(Target::Finite(crate::expr::parse_complex(other)?)),
        }
    }
}

impl Serialize for Target {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Target::Infinity => s.serialize_str("infinity"),
            Target::Finite(z) => crate::json::serialize(z, s),
        }
    }
}

/// Anything that can be sampled on circles about the origin.
pub trait CircleFunction: Sync {
    /// Order-1 jets at `r e^{iθ}`, indexed `[radius][angle]`.
    fn circle_jets(&self, radii: &[f64], thetas: &[f64]) -> Result<Vec<Vec<ScaledJet>>>;

    /// Jet at the origin (order up to 3).
    fn origin_jet(&self) -> Result<Jet>;

    /// Zeros of `f - a`; by default through Jensen's formula on the circles.
    fn zero_counting(&self, a: C, radii: &[f64], quad: &CircleQuadrature) -> Result<CountingData> {
        jensen_counting(self, a, radii, quad)
    }

    /// Whether [`CircleFunction::zero_counting`] goes through Jensen's formula.
    fn counts_by_jensen(&self) -> bool {
        true
    }

    /// Poles, or `None` for entire functions.
    fn pole_counting(&self, _radii: &[f64]) -> Result<Option<CountingData>> {
        Ok(None)
    }
}

/// Closed-form functions are treated as entire; their zeros are counted
/// with the argument principle.
impl<T: Analytic> CircleFunction for T {
    fn circle_jets(&self, radii: &[f64], thetas: &[f64]) -> Result<Vec<Vec<ScaledJet>>> {
        radii
            .iter()
            .map(|&r| thetas.par_iter().map(|&t| self.scaled_jet(C::from_polar(r, t), 1)).collect())
            .collect()
    }

    fn origin_jet(&self) -> Result<Jet> {
        self.jet(C::new(0.0, 0.0), 3)
    }

    fn zero_counting(&self, a: C, radii: &[f64], _quad: &CircleQuadrature) -> Result<CountingData> {
        counting_function(&Shifted { f: self, a }, radii)
    }

    fn counts_by_jensen(&self) -> bool {
        false
    }
}

/// `E = f1 f2` for the solutions of `y'' + A y = 0` with `f1(0) = 1`,
/// `f1'(0) = 0`, `f2(0) = 0`, `f2'(0) = 1`.
pub struct OdeProduct<A> {
    pub coeff: A,
    pub tol: f64,
    drift: Mutex<f64>,
}

impl<A: Analytic> OdeProduct<A> {
    pub fn new(coeff: A) -> Self {
        Self::with_tol(coeff, 1e-11)
    }

    pub fn with_tol(coeff: A, tol: f64) -> Self {
        OdeProduct { coeff, tol, drift: Mutex::new(0.0) }
    }

    /// Largest `|W - 1| / (|f1 f2'| + |f1' f2|)` seen so far. The scaling is
    /// the size of the terms whose difference is `W`.
    pub fn max_wronskian_drift(&self) -> f64 {
        *self.drift.lock().unwrap()
    }

    fn ray(&self, theta: f64, radii: &[f64]) -> Result<Vec<ScaledJet>> {
        let one = C::new(1.0, 0.0);
        let zero = C::new(0.0, 0.0);
        let rmax = *radii.last().unwrap();
        let path = PathSpec::RaySegment { theta, t0: 0.0, t1: rmax };
        let opts = OdeOptions { checkpoints: radii.to_vec(), record: Record::CheckpointsOnly, ..OdeOptions::with_tol(self.tol) };
        let coeff: &dyn Analytic = &self.coeff;
        let traj = solve_linear_ode_multi(&[coeff], 2, &path, &[vec![one, zero], vec![zero, one]], &opts)?;
        let mut out = Vec::with_capacity(radii.len());
        let mut drift: f64 = 0.0;
        for &r in radii {
            let i = traj[0]
                .nodes
                .iter()
                .position(|n| (n.s - r).abs() <= 1e-9 * r)
                .ok_or_else(|| Error::Estimate(format!("no checkpoint at radius {r}")))?;
            let (u, v) = (&traj[0].nodes[i].y, &traj[1].nodes[i].y);
            let e = u[0] * v[0];
            let de = u[1] * v[0] + u[0] * v[1];
            let terms = (u[0] * v[1]).norm() + (u[1] * v[0]).norm();
            drift = drift.max((u[0] * v[1] - u[1] * v[0] - one).norm() / terms.max(1.0));
            out.push(ScaledJet::from_jet(Jet::from_array([e, de, zero, zero], 1)));
        }
        let mut d = self.drift.lock().unwrap();
        *d = d.max(drift);
        Ok(out)
    }
}

impl<A: Analytic> CircleFunction for OdeProduct<A> {
    fn circle_jets(&self, radii: &[f64], thetas: &[f64]) -> Result<Vec<Vec<ScaledJet>>> {
        let rays: Vec<Vec<ScaledJet>> = thetas.par_iter().map(|&t| self.ray(t, radii)).collect::<Result<_>>()?;
        Ok((0..radii.len()).map(|i| rays.iter().map(|ray| ray[i]).collect()).collect())
    }

    fn origin_jet(&self) -> Result<Jet> {
        // E = f1 f2 with E'' = 2 f1' f2' - 2 A f1 f2 and E''' = -4 A E' - 2 A' E.
        let a = self.coeff.jet(C::new(0.0, 0.0), 0)?;
        let zero = C::new(0.0, 0.0);
        Ok(Jet::from_array([zero, C::new(1.0, 0.0), zero, -4.0 * a.d0], 3))
    }
}

/// Node counts and tolerance for circle means.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CircleQuadrature {
    pub nodes: usize,
    pub max_nodes: usize,
    /// Target `|I_{2K} - I_K| ≤ tol (1 + |I|)`.
    pub tol: f64,
}

impl Default for CircleQuadrature {
    fn default() -> Self {
        CircleQuadrature { nodes: 256, max_nodes: 1 << 16, tol: 1e-4 }
    }
}

impl CircleQuadrature {
    pub fn with_nodes(nodes: usize) -> Self {
        CircleQuadrature { nodes, ..Default::default() }
    }
}

/// Circle means of one function at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircleMeans {
    pub r: f64,
    /// `m(r, f)`.
    pub m_infinity: f64,
    /// `m(r, 1/(f - a))`, with `log|f - a|` clamped at `-LOG_CAP` near zeros.
    pub m_target: f64,
    /// Mean of `log|f - a|`.
    pub mean_log: f64,
    /// `(1/2πi) ∮ f'/(f - a) dz` by the same rule.
    pub winding: f64,
    pub nodes: usize,
    /// Largest change in the last doubling.
    pub error: f64,
}

/// `log|g|`, clamped at `-LOG_CAP` only near a zero of `g`: within
/// `1e-3 r` by the Newton distance `|g/g'|`.
fn log_abs(j: &ScaledJet, r: f64) -> f64 {
    if j.is_zero_value() {
        return -LOG_CAP;
    }
    let l = j.ln_abs();
    if l < -LOG_CAP && 1.0 / j.log_derivative().norm() < 1e-3 * r {
        -LOG_CAP
    } else {
        l
    }
}

/// `(1/2π) ∫ max(L, 0) dθ` from samples of `L` at equally spaced angles,
/// with the zero crossing inside each cell placed by linear interpolation.
fn mean_positive_part(l: &[f64]) -> f64 {
    let n = l.len();
    let mut acc = NeumaierSum::new();
    for k in 0..n {
        let (a, b) = (l[k], l[(k + 1) % n]);
        let cell = if a >= 0.0 && b >= 0.0 {
            0.5 * (a + b)
        } else if a <= 0.0 && b <= 0.0 {
            0.0
        } else {
            let t = a / (a - b);
            if a > 0.0 {
                0.5 * t * a
            } else {
                0.5 * (1.0 - t) * b
            }
        };
        acc.add(cell);
    }
    acc.value() / n as f64
}

fn mean(l: &[f64]) -> f64 {
    crate::sum::sum(l.iter().copied()) / l.len() as f64
}

struct Samples {
    /// `log|f|`, `log|f - a|` and `Re(z f'/(f - a))` per angle, in angle order.
    log_f: Vec<f64>,
    log_g: Vec<f64>,
    wind: Vec<f64>,
}

impl Samples {
    fn from_jets(jets: &[ScaledJet], thetas: &[f64], r: f64, a: C) -> Samples {
        let shift = ScaledJet::constant(a);
        let mut s = Samples { log_f: Vec::new(), log_g: Vec::new(), wind: Vec::new() };
        for (j, &t) in jets.iter().zip(thetas) {
            let g = j.sub(&shift);
            s.log_f.push(log_abs(j, r));
            s.log_g.push(log_abs(&g, r));
            let w = if g.is_zero_value() { C::new(0.0, 0.0) } else { C::from_polar(r, t) * g.log_derivative() };
            s.wind.push(w.re);
        }
        s
    }

    /// Merges samples at the midpoints (`other`) into a twice-finer set.
    fn interleave(&self, other: &Samples) -> Samples {
        let zip = |a: &[f64], b: &[f64]| a.iter().zip(b).flat_map(|(x, y)| [*x, *y]).collect();
        Samples {
            log_f: zip(&self.log_f, &other.log_f),
            log_g: zip(&self.log_g, &other.log_g),
            wind: zip(&self.wind, &other.wind),
        }
    }

    fn means(&self, r: f64) -> CircleMeans {
        let neg: Vec<f64> = self.log_g.iter().map(|l| -l).collect();
        CircleMeans {
            r,
            m_infinity: mean_positive_part(&self.log_f),
            m_target: mean_positive_part(&neg),
            mean_log: mean(&self.log_g),
            winding: mean(&self.wind),
            nodes: self.log_f.len(),
            error: f64::INFINITY,
        }
    }
}

fn change(a: &CircleMeans, b: &CircleMeans) -> f64 {
    let rel = |x: f64, y: f64| (x - y).abs() / (1.0 + y.abs());
    rel(a.m_infinity, b.m_infinity).max(rel(a.m_target, b.m_target)).max(rel(a.mean_log, b.mean_log))
}

/// Circle means at each radius, doubling the node count until every mean
/// changes by at most `quad.tol (1 + |value|)` or `quad.max_nodes` is hit.
pub fn circle_means<F: CircleFunction + ?Sized>(f: &F, radii: &[f64], a: C, quad: &CircleQuadrature) -> Result<Vec<CircleMeans>> {
    if quad.nodes < 64 {
        return Err(Error::invalid("at least 64 circle nodes are required"));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("radii must be positive and increasing"));
    }
    let angles = |k: usize, offset: f64| -> Vec<f64> { (0..k).map(|i| (i as f64 + offset) * TAU / k as f64).collect() };
    let mut k = quad.nodes;
    let thetas = angles(k, 0.0);
    let jets = f.circle_jets(radii, &thetas)?;
    let mut samples: Vec<Samples> = radii.iter().zip(&jets).map(|(&r, j)| Samples::from_jets(j, &thetas, r, a)).collect();
    let mut current: Vec<CircleMeans> = samples.iter().zip(radii).map(|(s, &r)| s.means(r)).collect();
    let mut active: Vec<usize> = (0..radii.len()).collect();
    while !active.is_empty() && 2 * k <= quad.max_nodes {
        let mids = angles(k, 0.5);
        let sub: Vec<f64> = active.iter().map(|&i| radii[i]).collect();
        let jets = f.circle_jets(&sub, &mids)?;
        for (slot, &i) in active.iter().enumerate() {
            let half = Samples::from_jets(&jets[slot], &mids, radii[i], a);
            samples[i] = samples[i].interleave(&half);
            let next = samples[i].means(radii[i]);
            let err = change(&next, &current[i]);
            current[i] = CircleMeans { error: err, ..next };
        }
        k *= 2;
        active.retain(|&i| current[i].error > quad.tol);
    }
    Ok(current)
}

/// `m(r, f)` for `a = ∞`, otherwise `m(r, 1/(f - a))`.
pub fn proximity<F: CircleFunction + ?Sized>(f: &F, r: f64, a: Target, nodes: usize) -> Result<f64> {
    if r < 1.0 {
        return Err(Error::invalid("proximity needs r >= 1"));
    }
    let quad = CircleQuadrature::with_nodes(nodes);
    let shift = match a {
        Target::Finite(c) => c,
        Target::Infinity => C::new(0.0, 0.0),
    };
    let m = circle_means(f, &[r], shift, &quad)?[0];
    Ok(match a {
        Target::Infinity => m.m_infinity,
        Target::Finite(_) => m.m_target,
    })
}

/// `T(r, f) = m(r, f) + N(r, f)`.
pub fn characteristic<F: CircleFunction + ?Sized>(f: &F, r: f64) -> Result<f64> {
    Ok(characteristic_values(f, &[r], &CircleQuadrature::default())?[0])
}

fn characteristic_values<F: CircleFunction + ?Sized>(f: &F, radii: &[f64], quad: &CircleQuadrature) -> Result<Vec<f64>> {
    let means = circle_means(f, radii, C::new(0.0, 0.0), quad)?;
    let poles = f.pole_counting(radii)?;
    Ok(means
        .iter()
        .enumerate()
        .map(|(i, m)| m.m_infinity + poles.as_ref().map_or(0.0, |p| p.big_n_values[i]))
        .collect())
}

/// `N(r, 1/(f - a))` from Jensen's formula,
/// `mean log|f - a| = log|c| + N(r)` with `c` the leading Taylor
/// coefficient of `f - a` at the origin.
pub fn jensen_counting<F: CircleFunction + ?Sized>(f: &F, a: C, radii: &[f64], quad: &CircleQuadrature) -> Result<CountingData> {
    let means = circle_means(f, radii, a, quad)?;
    jensen_from_means(f, a, &means)
}

fn jensen_from_means<F: CircleFunction + ?Sized>(f: &F, a: C, means: &[CircleMeans]) -> Result<CountingData> {
    let j = f.origin_jet()?;
    let scale = 1.0 + a.norm();
    let coeffs = [j.d0 - a, j.d1, j.d2 / 2.0, j.d3 / 6.0];
    let n0 = coeffs
        .iter()
        .take(j.order + 1)
        .position(|c| c.norm() > 1e-13 * scale)
        .ok_or_else(|| Error::Estimate("zero of order above 3 at the origin".into()))?;
    let lead = coeffs[n0].norm().ln();
    Ok(CountingData {
        radii: means.iter().map(|m| m.r).collect(),
        n_values: means.iter().map(|m| m.winding.round().max(0.0) as usize).collect(),
        n0,
        big_n_values: means.iter().map(|m| m.mean_log - lead).collect(),
        grid: Vec::new(),
        grid_counts: Vec::new(),
    })
}

fn check_increasing(radii: &[f64], min: usize) -> Result<()> {
    if radii.len() < min {
        return Err(Error::invalid(format!("at least {min} radii are required")));
    }
    if radii[0] < 1.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("radii must be increasing and at least 1"));
    }
    Ok(())
}

/// Indices of the radii in `[r_max / 10, r_max]`.
fn top_decade(radii: &[f64]) -> Vec<usize> {
    let rmax = *radii.last().unwrap();
    (0..radii.len()).filter(|&i| radii[i] >= rmax / 10.0 * (1.0 - 1e-12)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DeficiencyEstimate {
    /// Minimum of `m(r, 1/(f - a)) / T(r, f)` over the upper half of the radii.
    pub delta: f64,
    /// Last ratio minus first ratio.
    pub trend: f64,
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    pub note: &'static str,
}

/// Estimates `δ(a, f) = liminf m(r, 1/(f - a)) / T(r, f)`.
pub fn deficiency_estimate<F: CircleFunction + ?Sized>(f: &F, a: Target, radii: &[f64]) -> Result<DeficiencyEstimate> {
    deficiency_estimate_with(f, a, radii, &CircleQuadrature::default())
}

pub fn deficiency_estimate_with<F: CircleFunction + ?Sized>(
    f: &F,
    a: Target,
    radii: &[f64],
    quad: &CircleQuadrature,
) -> Result<DeficiencyEstimate> {
    check_increasing(radii, 3)?;
    if radii.last().unwrap() / radii[0] < 4.0 * (1.0 - 1e-12) {
        return Err(Error::invalid("radii must span at least a factor of 4"));
    }
    let t = characteristic_values(f, radii, quad)?;
    let m: Vec<f64> = match a {
        Target::Infinity => t.clone(),
        Target::Finite(c) => circle_means(f, radii, c, quad)?.iter().map(|m| m.m_target).collect(),
    };
    let start = radii.len() / 2;
    if let Some(i) = (start..radii.len()).find(|&i| t[i] < 1.0) {
        return Err(Error::Estimate(format!("T(r, f) = {} < 1 at r = {}", t[i], radii[i])));
    }
    let ratios: Vec<f64> = m.iter().zip(&t).map(|(m, t)| m / t).collect();
    let delta = ratios[start..].iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(DeficiencyEstimate {
        delta,
        trend: ratios.last().unwrap() - ratios[0],
        radii: radii.to_vec(),
        ratios,
        note: FINITE_RANGE_NOTE,
    })
}

fn log_log_slope(radii: &[f64], values: &[f64], what: &str) -> Result<f64> {
    let idx = top_decade(radii);
    if idx.len() < 2 {
        return Err(Error::Estimate("fewer than two radii in the top decade".into()));
    }
    if let Some(&i) = idx.iter().find(|&&i| values[i] <= 0.0) {
        return Err(Error::Estimate(format!("{what} = {} is not positive at r = {}", values[i], radii[i])));
    }
    let x: Vec<f64> = idx.iter().map(|&i| radii[i].ln()).collect();
    let y: Vec<f64> = idx.iter().map(|&i| values[i].ln()).collect();
    Ok(linear_fit(&x, &y).0)
}

/// Slope of `log T(r, f)` against `log r` over the top decade of a
/// geometric grid of at least five radii.
pub fn order_estimate<F: CircleFunction + ?Sized>(f: &F, radii: &[f64]) -> Result<f64> {
    order_estimate_with(f, radii, &CircleQuadrature::default())
}

pub fn order_estimate_with<F: CircleFunction + ?Sized>(f: &F, radii: &[f64], quad: &CircleQuadrature) -> Result<f64> {
    check_increasing(radii, 5)?;
    let q0 = radii[1] / radii[0];
    if radii.windows(2).any(|w| ((w[1] / w[0]) / q0 - 1.0).abs() > 1e-6) {
        return Err(Error::invalid("order estimates need a geometric grid of radii"));
    }
    let t = characteristic_values(f, radii, quad)?;
    log_log_slope(radii, &t, "T(r, f)")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceExponent {
    pub lambda: f64,
    pub zero_free: bool,
}

/// Slope of `log N(r)` against `log r` over the top decade.
pub fn convergence_exponent(counting: &CountingData) -> Result<ConvergenceExponent> {
    if counting.radii.is_empty() {
        return Err(Error::invalid("empty counting data"));
    }
    if counting.n0 == 0 && counting.n_values.iter().all(|&n| n == 0) {
        return Ok(ConvergenceExponent { lambda: 0.0, zero_free: true });
    }
    let lambda = log_log_slope(&counting.radii, &counting.big_n_values, "N(r)")?;
    Ok(ConvergenceExponent { lambda, zero_free: false })
}

/// Geometric radii with ratio `√2`, ending at `r_max` and starting at the
/// smallest such radius that is at least 1.
pub fn default_radii(r_max: f64) -> Vec<f64> {
    let step = |k: i32| if k % 2 == 0 { 2f64.powi(k / 2) } else { 2f64.sqrt() * 2f64.powi(k / 2) };
    let mut out = Vec::new();
    let mut k = 0;
    while r_max / step(k) >= 1.0 - 1e-12 {
        out.push(r_max / step(k));
        k += 1;
    }
    out.reverse();
    out
}

/// Nevanlinna functions of `f` for one target value on a radius grid.
#[derive(Debug, Clone, Serialize)]
pub struct NevanProfile {
    pub target: Target,
    pub radii: Vec<f64>,
    /// `m(r, 1/(f - a))`, or `m(r, f)` for `a = ∞`.
    pub m_values: Vec<f64>,
    /// `N(r, 1/(f - a))`, or the pole counting function for `a = ∞`.
    #[serde(rename = "N_values")]
    pub big_n_values: Vec<f64>,
    /// `m + N`, the characteristic of `1/(f - a)` (of `f` when `a = ∞`).
    #[serde(rename = "T_values")]
    pub t_values: Vec<f64>,
    /// `T(r, f)`.
    pub characteristic: Vec<f64>,
    pub fitted_order: Option<f64>,
    pub fitted_lambda: Option<f64>,
    pub zero_free: bool,
    pub delta_estimate: f64,
    pub quadrature: CircleQuadrature,
    pub note: &'static str,
}

pub fn nevanlinna_profile<F: CircleFunction + ?Sized>(f: &F, target: Target, radii: &[f64], quad: &CircleQuadrature) -> Result<NevanProfile> {
    check_increasing(radii, 2)?;
    let a = match target {
        Target::Finite(c) => c,
        Target::Infinity => C::new(0.0, 0.0),
    };
    let means = circle_means(f, radii, a, quad)?;
    let poles = f.pole_counting(radii)?;
    let pole_n: Vec<f64> = poles.as_ref().map_or(vec![0.0; radii.len()], |p| p.big_n_values.clone());
    let characteristic: Vec<f64> = means.iter().zip(&pole_n).map(|(m, n)| m.m_infinity + n).collect();
    let (m_values, big_n, counting) = match target {
        Target::Infinity => (means.iter().map(|m| m.m_infinity).collect::<Vec<_>>(), pole_n.clone(), poles),
        Target::Finite(c) => {
            let z = if f.counts_by_jensen() { jensen_from_means(f, c, &means)? } else { f.zero_counting(c, radii, quad)? };
            (means.iter().map(|m| m.m_target).collect(), z.big_n_values.clone(), Some(z))
        }
    };
    let t_values: Vec<f64> = m_values.iter().zip(&big_n).map(|(m, n)| m + n).collect();
    let geometric = radii.len() >= 5 && {
        let q0 = radii[1] / radii[0];
        radii.windows(2).all(|w| ((w[1] / w[0]) / q0 - 1.0).abs() <= 1e-6)
    };
    let fitted_order = if geometric { log_log_slope(radii, &characteristic, "T(r, f)").ok() } else { None };
    let (fitted_lambda, zero_free) = match counting.as_ref().map(convergence_exponent) {
        Some(Ok(c)) => (Some(c.lambda), c.zero_free),
        Some(Err(_)) => (None, false),
        None => (Some(0.0), true),
    };
    let start = radii.len() / 2;
    let delta_estimate = (start..radii.len())
        .map(|i| if characteristic[i] > 0.0 { m_values[i] / characteristic[i] } else { f64::NAN })
        .fold(f64::INFINITY, f64::min);
    Ok(NevanProfile {
        target,
        radii: radii.to_vec(),
        m_values,
        big_n_values: big_n,
        t_values,
        characteristic,
        fitted_order,
        fitted_lambda,
        zero_free,
        delta_estimate,
        quadrature: *quad,
        note: FINITE_RANGE_NOTE,
    })
}

impl NevanProfile {
    /// CSV with columns `r, m, N, T`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["r", "m", "N", "T"])?;
        for i in 0..self.radii.len() {
            wr.write_record([
                self.radii[i].to_string(),
                self.m_values[i].to_string(),
                self.big_n_values[i].to_string(),
                self.t_values[i].to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Smallest second difference of `T(r, f)` in `log r`, normalised by the
    /// squared spacing; negative values indicate a loss of convexity.
    pub fn min_log_convexity(&self) -> f64 {
        let x: Vec<f64> = self.radii.iter().map(|r| r.ln()).collect();
        let t = &self.characteristic;
        (1..t.len().saturating_sub(1))
            .map(|i| {
                let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                2.0 * ((t[i + 1] - t[i]) / h1 - (t[i] - t[i - 1]) / h0) / (h0 + h1)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// `r/π`, the characteristic of `e^z`, for reference in reports.
pub fn exp_characteristic(r: f64) -> f64 {
    r / PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use std::f64::consts::E;

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn positive_part_handles_crossings() {
        // max(cos θ, 0) has mean 1/π.
        let l: Vec<f64> = (0..1024).map(|k| (k as f64 * TAU / 1024.0).cos()).collect();
        assert!((mean_positive_part(&l) - 1.0 / PI).abs() < 1e-6);
    }

    #[test]
    fn proximity_examples() {
        let m = proximity(&e("exp(z)"), 10.0, Target::Infinity, 256).unwrap();
        assert!((m - 10.0 / PI).abs() < 0.01);
        let m = proximity(&e("z"), E, Target::Infinity, 64).unwrap();
        assert!((m - 1.0).abs() < 1e-9);
        let m = proximity(&e("z"), 2.0, Target::Finite(C::new(0.0, 0.0)), 64).unwrap();
        assert_eq!(m, 0.0);
        assert!(proximity(&e("z"), 0.5, Target::Infinity, 64).is_err());
        assert!(proximity(&e("z"), 2.0, Target::Infinity, 32).is_err());
    }

    #[test]
    fn characteristic_examples() {
        assert!((characteristic(&e("exp(z)"), 20.0).unwrap() - 20.0 / PI).abs() < 0.02);
        assert!((characteristic(&e("exp(z^2)"), 5.0).unwrap() - 25.0 / PI).abs() < 0.05);
        assert!((characteristic(&e("z"), E * E).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn jensen_matches_argument_principle() {
        let f = e("sin(pi*z)");
        let radii = [1.5, 3.5, 7.5];
        let q = CircleQuadrature::default();
        let j = jensen_counting(&f, C::new(0.0, 0.0), &radii, &q).unwrap();
        let ap = counting_function(&f, &radii).unwrap();
        assert_eq!(j.n0, 1);
        assert_eq!(j.n_values, ap.n_values);
        // Exact: N(r) = log r + 2 Σ_{k ≤ r} log(r/k) and the leading coefficient is π.
        for (i, &r) in radii.iter().enumerate() {
            let exact = r.ln() + 2.0 * (1..=r.floor() as usize).map(|k| (r / k as f64).ln()).sum::<f64>();
            assert!((j.big_n_values[i] - exact).abs() < 1e-6, "{} {exact}", j.big_n_values[i]);
            // The argument-principle route integrates n(t) by the trapezoid rule in log t.
            let bias = ap.n_values[i] as f64 * (2f64.ln() / 16.0) / 2.0;
            assert!((ap.big_n_values[i] - exact).abs() <= bias + 1e-6);
        }
    }

    #[test]
    fn exponential_is_zero_free() {
        let radii = default_radii(20.0);
        let d = deficiency_estimate(&e("exp(z)"), Target::Finite(C::new(0.0, 0.0)), &[5.0, 10.0, 20.0]).unwrap();
        assert!((d.delta - 1.0).abs() < 0.02);
        assert_eq!(d.note, FINITE_RANGE_NOTE);
        let c = counting_function(&e("exp(z)"), &radii).unwrap();
        assert!(convergence_exponent(&c).unwrap().zero_free);
        assert!((order_estimate(&e("exp(z)"), &radii).unwrap() - 1.0).abs() < 0.05);
    }

    #[test]
    fn order_of_gaussian_exponential() {
        let radii = default_radii(8.0);
        assert!((order_estimate(&e("exp(z^2)"), &radii).unwrap() - 2.0).abs() < 0.05);
        assert!(order_estimate(&e("exp(z^2)"), &[1.0, 2.0, 3.0, 4.0, 5.0]).is_err());
    }

    #[test]
    fn preconditions() {
        let f = e("exp(z)");
        let zero = Target::Finite(C::new(0.0, 0.0));
        assert!(deficiency_estimate(&f, zero, &[10.0, 20.0]).is_err());
        assert!(deficiency_estimate(&f, zero, &[10.0, 20.0, 30.0]).is_err());
        assert!(matches!(deficiency_estimate(&e("z"), zero, &[1.0, 2.0, 4.0]), Err(Error::Estimate(_))));
    }

    #[test]
    fn ode_product_for_constant_coefficient() {
        // A = 1: f1 = cos z, f2 = sin z, E = sin(2z)/2.
        let p = OdeProduct::new(e("1"));
        let radii = [1.0, 2.0, 4.0];
        let thetas = [0.3, 1.9, 4.0];
        let jets = p.circle_jets(&radii, &thetas).unwrap();
        for (i, &r) in radii.iter().enumerate() {
            for (k, &t) in thetas.iter().enumerate() {
                let z = C::from_polar(r, t);
                let j = jets[i][k].to_jet(z).unwrap();
                assert!((j.d0 - (2.0 * z).sin() / 2.0).norm() < 1e-8 * (1.0 + j.d0.norm()));
                assert!((j.d1 - (2.0 * z).cos()).norm() < 1e-8 * (1.0 + j.d1.norm()));
            }
        }
        assert!(p.max_wronskian_drift() < 1e-8);
        let exact = e("sin(2*z)/2");
        let a = p.origin_jet().unwrap();
        let b = exact.jet(C::new(0.0, 0.0), 3).unwrap();
        assert!((a.d3 - b.d3).norm() < 1e-14 && a.d0 == b.d0 && a.d1 == b.d1);
    }

    #[test]
    fn profile_and_csv() {
        let radii = default_radii(8.0);
        let p = nevanlinna_profile(&e("exp(z)"), Target::Infinity, &radii, &CircleQuadrature::default()).unwrap();
        assert!((p.fitted_order.unwrap() - 1.0).abs() < 0.05);
        assert!(p.min_log_convexity() >= -1e-3);
        for i in 0..radii.len() {
            assert!((p.t_values[i] - p.m_values[i] - p.big_n_values[i]).abs() < 1e-12);
        }
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("r,m,N,T\n"));
        let r = default_radii(4.0);
        assert_eq!(r.len(), 5);
        assert!((r[0] - 1.0).abs() < 1e-15 && r[4] == 4.0);
        let r = default_radii(40.0);
        assert!(r[0] >= 1.0 && r[0] < 2f64.sqrt() && *r.last().unwrap() == 40.0);
    }
}
