use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analytic::Analytic;
use crate::contour::{adaptive, branch_sqrt, solve_linear_ode_multi, OdeOptions, PathSpec, Piece, Sign};
use crate::error::{Error, Result};

type C = Complex64;

const ONE: C = C::new(1.0, 0.0);
const ZERO: C = C::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayModel {
    /// `log envelope` linear in `log |z|`.
    PowerLaw,
    /// `log envelope` linear in `Re z` (or arc length when `Re z` is constant).
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayMethod {
    RungeKutta,
    LiouvilleMagnus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecaySample {
    pub s: f64,
    #[serde(with = "crate::json")]
    pub z: C,
    /// Largest `|y|` over the basis solutions.
    pub envelope: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub path: PathSpec,
    pub samples: Vec<DecaySample>,
    pub model: DecayModel,
    /// Slope of `log envelope` against the model variable after burn-in.
    pub fitted_rate: f64,
    /// Slope of `log |A|^{-1/4}` against the same variable.
    pub predicted_rate: f64,
    /// R² of the `log |A|` regression that selected the model.
    pub model_r_squared: f64,
    pub verdict: bool,
    pub burn_in: f64,
    /// Largest `|y_random| / envelope` over the random initial conditions.
    pub basis_sufficiency: f64,
    pub wronskian_drift: f64,
    pub method: DecayMethod,
    pub n_ic: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct DecayOptions {
    pub n_ic: usize,
    pub tol: f64,
    pub seed: u64,
    /// Fraction of arc length discarded before fitting.
    pub burn_in: f64,
    /// Relative rise allowed in the envelope before the verdict fails.
    pub slack: f64,
    /// Above this many radians of total phase the Liouville-frame integrator is used.
    pub liouville_threshold: f64,
    pub r_squared: f64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions {
            n_ic: 4,
            tol: 1e-10,
            seed: 20240601,
            burn_in: 0.25,
            slack: 0.1,
            liouville_threshold: 5e3,
            r_squared: 0.99,
        }
    }
}

/// Least-squares line through `(x, y)`: `(slope, intercept, r²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r2 = if sxx > 0.0 && syy > 0.0 { sxy * sxy / (sxx * syy) } else { 0.0 };
    (slope, my - slope * mx, r2)
}

fn random_ics(n: usize, seed: u64) -> Vec<Vec<C>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let v: Vec<C> = (0..2).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
            v.into_iter().map(|c| c / norm).collect()
        })
        .collect()
}

fn piece_at(pieces: &[Piece], s: f64) -> (usize, f64) {
    let mut off = 0.0;
    for (i, p) in pieces.iter().enumerate() {
        let len = p.length();
        if s <= off + len || i + 1 == pieces.len() {
            return (i, (s - off).clamp(0.0, len));
        }
        off += len;
    }
    unreachable!()
}

fn nearest_root(a: C, reference: C) -> C {
    let r = a.sqrt();
    if (r - reference).norm_sqr() <= (r + reference).norm_sqr() {
        r
    } else {
        -r
    }
}

/// Phase length `∫ |sqrt A| |dz|` and `Z` at each arc-length node.
fn phase_at_nodes<F: Analytic + ?Sized>(a: &F, pieces: &[Piece], nodes: &[f64], w0: C) -> Result<Vec<(f64, C)>> {
    let mut out = vec![(0.0, ZERO)];
    let mut w = w0;
    let (mut phase, mut zacc) = (0.0, ZERO);
    for pair in nodes.windows(2) {
        let (i0, t0) = piece_at(pieces, pair[0]);
        let (i1, t1) = piece_at(pieces, pair[1]);
        let (piece, t0) = if i1 == i0 { (&pieces[i0], t0) } else { (&pieces[i1], 0.0) };
        if t1 > t0 {
            let mut last = w;
            let q = adaptive(
                |t| {
                    let wv = nearest_root(a.value(piece.point(t))?, last);
                    last = wv;
                    Ok(C::new(wv.norm(), 0.0))
                },
                t0,
                t1,
                1e-9 * (t1 - t0),
            )?;
            let mut last2 = w;
            let qz = adaptive(
                |t| {
                    let wv = nearest_root(a.value(piece.point(t))?, last2);
                    last2 = wv;
                    Ok(wv * piece.tangent(t))
                },
                t0,
                t1,
                1e-9 * (t1 - t0) * (1.0 + w.norm()),
            )?;
            phase += q.value.re;
            zacc += qz.value;
            w = nearest_root(a.value(piece.point(t1))?, w);
        }
        out.push((phase, zacc));
    }
    Ok(out)
}

/// Integrates `y'' + A y = 0` along the path for the basis `(1,0)`, `(0,1)`
/// and `n_ic` seeded random unit initial conditions, and fits the decay of
/// the basis envelope against the amplitude law `|A|^{-1/4}`.
pub fn verify_decay<F: Analytic + ?Sized>(a: &F, path: &PathSpec, n_ic: usize, tol: f64) -> Result<DecayReport> {
    verify_decay_with(a, path, &DecayOptions { n_ic, tol, ..Default::default() })
}

pub fn verify_decay_with<F: Analytic + ?Sized>(a: &F, path: &PathSpec, opts: &DecayOptions) -> Result<DecayReport> {
    let pieces = path.pieces()?;
    let length: f64 = pieces.iter().map(Piece::length).sum();
    let branch = branch_sqrt(a, path, Sign::Plus)?;
    let total_phase: f64 = branch.samples.windows(2).map(|p| 0.5 * (p[0].w.norm() + p[1].w.norm()) * (p[1].s - p[0].s)).sum();

    let mut ics = vec![vec![ONE, ZERO], vec![ZERO, ONE]];
    ics.extend(random_ics(opts.n_ic, opts.seed));

    let (samples, sufficiency, drift, method) = if total_phase > opts.liouville_threshold {
        let run = liouville_magnus(a, &pieces, &ics, opts.tol)?;
        (run.samples, run.sufficiency, run.drift, DecayMethod::LiouvilleMagnus)
    } else {
        let (samples, suff, drift) = runge_kutta_envelope(a, path, &pieces, &ics, opts, branch.samples[0].w)?;
        (samples, suff, drift, DecayMethod::RungeKutta)
    };

    let burn = opts.burn_in * length;
    let tail: Vec<&DecaySample> = samples.iter().filter(|p| p.s >= burn).collect();
    if tail.len() < 3 {
        return Err(Error::Estimate("too few envelope samples after burn-in".into()));
    }

    // Model selection from log|A| along the path.
    let mut la = Vec::new();
    let mut xs_re = Vec::new();
    let mut xs_s = Vec::new();
    let mut xs_log = Vec::new();
    for p in &tail {
        la.push(a.value(p.z)?.norm().ln());
        xs_re.push(p.z.re);
        xs_s.push(p.s);
        xs_log.push(p.z.norm().max(1e-300).ln());
    }
    let re_span = xs_re.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - xs_re.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_exp = if re_span > 1e-6 * length { &xs_re } else { &xs_s };
    let (slope_exp, _, r2_exp) = linear_fit(x_exp, &la);
    let (slope_pow, _, r2_pow) = linear_fit(&xs_log, &la);
    let la_span = la.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - la.iter().cloned().fold(f64::INFINITY, f64::min);
    let (model, xvar, a_slope, model_r2) = if la_span < 1e-9 {
        (DecayModel::Exponential, x_exp, 0.0, 1.0)
    } else if r2_exp >= opts.r_squared && r2_exp > r2_pow {
        (DecayModel::Exponential, x_exp, slope_exp, r2_exp)
    } else {
        (DecayModel::PowerLaw, &xs_log, slope_pow, r2_pow)
    };
    let log_env: Vec<f64> = tail.iter().map(|p| p.envelope.ln()).collect();
    let (fitted_rate, _, _) = linear_fit(xvar, &log_env);

    let mut running = f64::INFINITY;
    let mut verdict = true;
    for p in &tail {
        if p.envelope > (1.0 + opts.slack) * running {
            verdict = false;
        }
        running = running.min(p.envelope);
    }

    Ok(DecayReport {
        path: path.clone(),
        samples,
        model,
        fitted_rate,
        predicted_rate: -0.25 * a_slope,
        model_r_squared: model_r2,
        verdict,
        burn_in: burn,
        basis_sufficiency: sufficiency,
        wronskian_drift: drift,
        method,
        n_ic: opts.n_ic,
        seed: opts.seed,
    })
}

/// Bin-max envelope over windows of `2π` in phase, from adaptive RK.
fn runge_kutta_envelope<F: Analytic + ?Sized>(
    a: &F,
    path: &PathSpec,
    pieces: &[Piece],
    ics: &[Vec<C>],
    opts: &DecayOptions,
    w0: C,
) -> Result<(Vec<DecaySample>, f64, f64)> {
    let ode = OdeOptions::with_tol(opts.tol);
    let coeff = &a;
    let traj = solve_linear_ode_multi(&[coeff as &dyn Analytic], 2, path, ics, &ode)?;
    let drift = crate::contour::wronskian_drift(&traj[0], &traj[1])?;
    let nodes: Vec<f64> = traj[0].nodes.iter().map(|n| n.s).collect();
    let phase = phase_at_nodes(a, pieces, &nodes, w0)?;
    let mut samples: Vec<DecaySample> = Vec::new();
    let mut sufficiency: f64 = 0.0;
    let mut current = usize::MAX;
    for i in 0..nodes.len() {
        let env = traj[0].nodes[i].y[0].norm().max(traj[1].nodes[i].y[0].norm());
        for t in &traj[2..] {
            sufficiency = sufficiency.max(t.nodes[i].y[0].norm() / env);
        }
        let bin = (phase[i].0 / TAU).floor() as usize;
        let sample = DecaySample { s: nodes[i], z: traj[0].nodes[i].z, envelope: env };
        if bin != current {
            samples.push(sample);
            current = bin;
        } else if env > samples.last().unwrap().envelope {
            *samples.last_mut().unwrap() = sample;
        }
    }
    // The last window is usually incomplete.
    if samples.len() > 2 {
        samples.pop();
    }
    Ok((samples, sufficiency, drift))
}

struct MagnusRun {
    samples: Vec<DecaySample>,
    sufficiency: f64,
    drift: f64,
}

/// `G = (4 A A'' - 5 A'^2) / (16 A^3)` at `z`.
fn liouville_g<F: Analytic + ?Sized>(a: &F, z: C) -> Result<C> {
    let j = a.scaled_jet(z, 2)?;
    if j.is_zero_value() {
        return Err(Error::ZeroOnPath { z });
    }
    let (r1, r2) = (j.ratio(1), j.ratio(2));
    let inv = (-j.log_scale).exp() / j.d[0];
    Ok((4.0 * r2 - 5.0 * r1 * r1) * inv / 16.0)
}

/// `∫_0^U p(u) e^{λ u} du` for `p(u) = c0 + c1 u + c2 u^2`.
fn poly_exp_moment(c: [C; 3], lambda: C, u: C) -> C {
    let lu = lambda * u;
    if lu.norm() < 1.0 {
        // 8-point Gauss-Legendre on the straight segment [0, U].
        const X: [f64; 4] = [0.183434642495649805, 0.525532409916328986, 0.796666477413626740, 0.960289856497536232];
        const W: [f64; 4] = [0.362683783378361983, 0.313706645877887287, 0.222381034453374471, 0.101228536290376259];
        let mut acc = ZERO;
        for k in 0..4 {
            for sgn in [-1.0, 1.0] {
                let t = u * (0.5 + 0.5 * sgn * X[k]);
                acc += W[k] * (c[0] + c[1] * t + c[2] * t * t) * (lambda * t).exp();
            }
        }
        return acc * u * 0.5;
    }
    let e = lu.exp();
    let i0 = (e - 1.0) / lambda;
    let i1 = (u * e - i0) / lambda;
    let i2 = (u * u * e - 2.0 * i1) / lambda;
    c[0] * i0 + c[1] * i1 + c[2] * i2
}

/// Quadratic through `(0, g0)`, `(um, gm)`, `(u1, g1)` as coefficients in `u`.
fn quadratic(g: [C; 3], um: C, u1: C) -> [C; 3] {
    let d1 = (g[1] - g[0]) / um;
    let d2 = ((g[2] - g[0]) / u1 - d1) / (u1 - um);
    [g[0], d1 - d2 * um, d2]
}

struct StepGeom {
    z: [C; 3],
    zz: [C; 3],
    g: [C; 3],
    w_end: C,
}

/// One first-order Magnus step for `X = (a, b)` with `W = a e^{iZ} + b e^{-iZ}`.
fn magnus_matrix(geom: &StepGeom) -> [[C; 2]; 2] {
    let z0 = geom.zz[0];
    let (um, u1) = (geom.zz[1] - z0, geom.zz[2] - z0);
    let c = quadratic(geom.g, um, u1);
    let i = C::new(0.0, 1.0);
    let g0 = poly_exp_moment(c, ZERO, u1);
    let gm = poly_exp_moment(c, -2.0 * i, u1) * (-2.0 * i * z0).exp();
    let gp = poly_exp_moment(c, 2.0 * i, u1) * (2.0 * i * z0).exp();
    let om = [[0.5 * i * g0, 0.5 * i * gm], [-0.5 * i * gp, -0.5 * i * g0]];
    let d2 = om[0][0] * om[0][0] + om[0][1] * om[1][0];
    let d = d2.sqrt();
    let (ch, sh) = if d.norm() < 1e-8 { (ONE + d2 / 2.0, ONE + d2 / 6.0) } else { (d.cosh(), d.sinh() / d) };
    [[ch + sh * om[0][0], sh * om[0][1]], [sh * om[1][0], ch + sh * om[1][1]]]
}

fn apply(m: &[[C; 2]; 2], x: [C; 2]) -> [C; 2] {
    [m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]]
}

fn mat_mul(a: &[[C; 2]; 2], b: &[[C; 2]; 2]) -> [[C; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Integrates the Liouville-frame equation `W'' + (1 + G) W = 0` in
/// modulated form, where `W = A^{1/4} y` and `' = d/dZ`.
///
/// Each step over `[t0, t1]` of a path piece interpolates `G` quadratically
/// in `Z` and integrates the oscillatory factors `e^{±2iZ}` exactly, so the
/// step length is limited by the variation of `G`, not by the oscillation.
/// Errors are controlled by step doubling.
fn liouville_magnus<F: Analytic + ?Sized>(a: &F, pieces: &[Piece], ics: &[Vec<C>], tol: f64) -> Result<MagnusRun> {
    let z_start = pieces[0].start();
    let a0 = a.jet(z_start, 1)?;
    let w0 = a0.d0.sqrt();
    let q0 = w0.sqrt();
    let ratio0 = a0.d1 / a0.d0;
    let mut states: Vec<[C; 2]> = ics
        .iter()
        .map(|ic| {
            let wv = q0 * ic[0];
            let wz = (ic[1] + 0.25 * ratio0 * ic[0]) / q0;
            let i = C::new(0.0, 1.0);
            [(wv - i * wz) / 2.0, (wv + i * wz) / 2.0]
        })
        .collect();
    let det = |x: &[C; 2], y: &[C; 2]| x[0] * y[1] - x[1] * y[0];
    let det0 = det(&states[0], &states[1]);
    // W(y1, y2) = -2i det(X); drift is relative to max(1, |W|).
    let wscale = (2.0 * det0.norm()).max(1.0);

    let mut samples = Vec::new();
    let mut sufficiency: f64 = 0.0;
    let mut drift: f64 = 0.0;
    let envelope_of = |x: &[C; 2], zz: C, amod: f64| -> f64 {
        let e = (-zz.im).exp();
        (x[0].norm() * e + x[1].norm() / e) / amod.powf(0.25)
    };
    let mut record = |s: f64, z: C, zz: C, states: &[[C; 2]]| {
        let amod = a.value(z).map(|v| v.norm()).unwrap_or(f64::NAN);
        let env = envelope_of(&states[0], zz, amod).max(envelope_of(&states[1], zz, amod));
        for x in &states[2..] {
            sufficiency = sufficiency.max(envelope_of(x, zz, amod) / env);
        }
        drift = drift.max(2.0 * (det(&states[0], &states[1]) - det0).norm() / wscale);
        samples.push(DecaySample { s, z, envelope: env });
    };
    record(0.0, z_start, ZERO, &states);

    let mut zz = ZERO;
    let mut w = w0;
    let mut s_off = 0.0;
    for piece in pieces {
        let len = piece.length();
        let mut t = 0.0;
        // Start with a step of roughly one radian of phase.
        let mut h = (1.0 / w.norm()).min(len);
        let geometry = |t0: f64, t1: f64, zz0: C, w0: C| -> Result<StepGeom> {
            let tm = 0.5 * (t0 + t1);
            let mut z = [piece.point(t0), piece.point(tm), piece.point(t1)];
            z[0] = piece.point(t0);
            let mut zz = [zz0, ZERO, ZERO];
            let mut wr = w0;
            for (k, (ta, tb)) in [(t0, tm), (tm, t1)].into_iter().enumerate() {
                let mut last = wr;
                let q = adaptive(
                    |t| {
                        let v = nearest_root(a.value(piece.point(t))?, last);
                        last = v;
                        Ok(v * piece.tangent(t))
                    },
                    ta,
                    tb,
                    1e-13 * (1.0 + zz0.norm()),
                )?;
                zz[k + 1] = zz[k] + q.value;
                wr = nearest_root(a.value(z[k + 1])?, wr);
            }
            let g = [liouville_g(a, z[0])?, liouville_g(a, z[1])?, liouville_g(a, z[2])?];
            Ok(StepGeom { z, zz, g, w_end: wr })
        };
        while t < len {
            let t1 = (t + h).min(len);
            let full = geometry(t, t1, zz, w)?;
            let half1 = geometry(t, 0.5 * (t + t1), zz, w)?;
            let half2 = geometry(0.5 * (t + t1), t1, half1.zz[2], half1.w_end)?;
            let m_full = magnus_matrix(&full);
            let m_half = mat_mul(&magnus_matrix(&half2), &magnus_matrix(&half1));
            let mut err: f64 = 0.0;
            let mut scale: f64 = 1.0;
            for x in &states {
                let (p, q) = (apply(&m_full, *x), apply(&m_half, *x));
                err = err.max((p[0] - q[0]).norm().max((p[1] - q[1]).norm()));
                scale = scale.max(x[0].norm().max(x[1].norm()));
            }
            let ratio = err / (tol * scale);
            if ratio <= 1.0 || t1 - t <= 1e-12 * (1.0 + len) {
                for x in states.iter_mut() {
                    *x = apply(&m_half, *x);
                }
                t = t1;
                zz = half2.zz[2];
                w = half2.w_end;
                record(s_off + t, full.z[2], zz, &states);
                let fac = 0.9 * ratio.max(1e-12).powf(-1.0 / 3.0);
                h = (h * fac.clamp(0.2, 4.0)).min(len);
            } else {
                h *= (0.9 * ratio.powf(-1.0 / 3.0)).clamp(0.1, 0.9);
            }
        }
        s_off += len;
    }
    Ok(MagnusRun { samples, sufficiency, drift })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn moments_match_quadrature() {
        let c = [C::new(1.0, 0.5), C::new(-0.3, 0.0), C::new(0.2, 0.1)];
        for (lambda, u) in [(C::new(0.0, 2.0), C::new(7.0, 0.0)), (C::new(0.0, -2.0), C::new(0.1, 0.05)), (ZERO, C::new(3.0, 0.0))] {
            let got = poly_exp_moment(c, lambda, u);
            let q = adaptive(|t| {
                let x = u * t;
                Ok((c[0] + c[1] * x + c[2] * x * x) * (lambda * x).exp() * u)
            }, 0.0, 1.0, 1e-13)
            .unwrap();
            assert!((got - q.value).norm() < 1e-11, "{got} {}", q.value);
        }
    }

    #[test]
    fn constant_coefficient_has_no_decay() {
        let r = verify_decay(&e("1"), &PathSpec::real_segment(0.0, 100.0), 2, 1e-10).unwrap();
        assert_eq!(r.model, DecayModel::Exponential);
        assert!(r.fitted_rate.abs() <= 0.02, "{}", r.fitted_rate);
        assert!(r.basis_sufficiency <= 2.0 * 2f64.sqrt());
        assert!(r.verdict);
    }

    #[test]
    fn magnus_agrees_with_runge_kutta() {
        // A moderately oscillatory case that both integrators can handle.
        let a = e("exp(z)");
        let path = PathSpec::real_segment(4.0, 12.0);
        let opts = DecayOptions { n_ic: 1, ..Default::default() };
        let rk = verify_decay_with(&a, &path, &opts).unwrap();
        let lm = verify_decay_with(&a, &path, &DecayOptions { liouville_threshold: 0.0, ..opts }).unwrap();
        assert_eq!(rk.method, DecayMethod::RungeKutta);
        assert_eq!(lm.method, DecayMethod::LiouvilleMagnus);
        assert!((rk.fitted_rate - lm.fitted_rate).abs() < 0.02, "{} {}", rk.fitted_rate, lm.fitted_rate);
        assert!(lm.wronskian_drift < 1e-10);
    }
}
