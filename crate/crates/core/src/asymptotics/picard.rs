use num_complex::Complex64;
use serde::Serialize;

use crate::analytic::Analytic;
use crate::contour::adaptive;
use crate::error::{Error, Result};

type C = Complex64;

/// Spacing of the internal quadrature grid.
pub const PICARD_STEP: f64 = 0.01;
pub const MAX_PICARD_ITERATIONS: usize = 200;
/// Number of decay scales of `r|A|` kept beyond the last output point.
const CUTOFF_SCALES: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailIntegral {
    pub value: f64,
    pub error: f64,
    /// Magnitude of the last accepted quadrature panel.
    pub last_panel: f64,
}

/// `∫_X^cutoff r |A(r e^{iθ})| dr`.
pub fn tail_integral<F: Analytic + ?Sized>(a: &F, theta: f64, x: f64, cutoff: f64) -> Result<TailIntegral> {
    if !(cutoff > x) {
        return Err(Error::invalid(format!("cutoff {cutoff} must exceed X = {x}")));
    }
    let dir = C::from_polar(1.0, theta);
    let q = adaptive(|r| Ok(C::new(r * a.value(dir * r)?.norm(), 0.0)), x, cutoff, 1e-11)?;
    Ok(TailIntegral { value: q.value.re, error: q.error, last_panel: q.last_panel })
}

#[derive(Debug, Clone, Serialize)]
pub struct PicardSolution {
    pub theta: f64,
    pub x_grid: Vec<f64>,
    #[serde(with = "crate::json::vec")]
    pub u_values: Vec<C>,
    /// Second solution `v = u (X + ∫_X^x u^{-2})`, asymptotic to `x`.
    #[serde(with = "crate::json::vec")]
    pub v_values: Vec<C>,
    pub iterations: usize,
    /// `∫_X^∞ r|A|`, with the truncated part bounded separately.
    pub contraction_bound: f64,
    /// Largest ratio of successive sup-norm differences of iterates.
    pub observed_ratio: f64,
    /// Sup-norm differences `|u_j - u_{j-1}|` for `j = 1, 2, ...`.
    pub differences: Vec<f64>,
    /// `max |u'' + A u|` on interior points plus twice the truncated tail.
    pub residual: f64,
    pub cutoff: f64,
}

/// Integrals `∫_{x_i}^{x_N} f` on a uniform grid, fourth order per cell.
fn cumulative_from_right(f: &[C], h: f64) -> Vec<C> {
    let n = f.len() - 1;
    let mut out = vec![C::new(0.0, 0.0); n + 1];
    let w = h / 24.0;
    for i in (0..n).rev() {
        let cell = if i == 0 {
            w * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if i == n - 1 {
            w * (f[n - 3] - 5.0 * f[n - 2] + 19.0 * f[n - 1] + 9.0 * f[n])
        } else {
            w * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2])
        };
        out[i] = out[i + 1] + cell;
    }
    out
}

/// Cubic interpolation on the uniform grid `x0 + k h`.
fn interpolate(values: &[C], x0: f64, h: f64, x: f64) -> C {
    let n = values.len();
    let k = (((x - x0) / h).floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let mut acc = C::new(0.0, 0.0);
    for i in 0..4 {
        let xi = x0 + (k + i) as f64 * h;
        let mut l = 1.0;
        for j in 0..4 {
            if j != i {
                let xj = x0 + (k + j) as f64 * h;
                l *= (x - xj) / (xi - xj);
            }
        }
        acc += values[k + i] * l;
    }
    acc
}

/// Iterates `u_j(x) = 1 + ∫_x^∞ (x - r) A(r) u_{j-1}(r) dr` along the ray
/// `arg z = θ`, where `A(r)` stands for `e^{2iθ} A(r e^{iθ})`, starting from
/// `u_0 = 0`.
///
/// The infinite upper limit is replaced by `max(x_grid) + 10 L`, `L` being
/// the decay length of `r|A|` at `max(x_grid)`. The neglected tail enters
/// both the contraction bound and the residual.
pub fn picard_ray_solution<F: Analytic + ?Sized>(a: &F, theta: f64, x: f64, x_grid: &[f64], tol: f64) -> Result<PicardSolution> {
    if x_grid.is_empty() || x_grid.windows(2).any(|w| w[1] <= w[0]) || x_grid[0] < x {
        return Err(Error::invalid("x_grid must be increasing and start at or after X"));
    }
    let dir = C::from_polar(1.0, theta);
    let rot = dir * dir;
    let a_ray = |r: f64| -> Result<C> { Ok(rot * a.value(dir * r)?) };
    let xmax = *x_grid.last().unwrap();

    let weight = |r: f64| -> Result<f64> { Ok(r * a_ray(r)?.norm()) };
    let (w0, w1) = (weight(xmax)?, weight(xmax + 1e-3)?);
    let scale = if w0 > 0.0 && w1 > 0.0 {
        let slope = (w1.ln() - w0.ln()) / 1e-3;
        if slope < 0.0 {
            (-1.0 / slope).min(1e3)
        } else {
            return Err(Error::ContractionViolated { tail: f64::INFINITY });
        }
    } else {
        0.0
    };
    let cutoff = xmax + CUTOFF_SCALES * scale.max(PICARD_STEP);
    let tail = tail_integral(a, theta, x, cutoff)?;
    // Mass of r|A| past the cutoff, integrated over a further 40 decay lengths.
    let beyond = if scale > 0.0 { tail_integral(a, theta, cutoff, cutoff + 40.0 * scale)?.value } else { 0.0 };
    let bound = tail.value + beyond;
    if bound >= 0.5 {
        return Err(Error::ContractionViolated { tail: bound });
    }

    let n = (((cutoff - x) / PICARD_STEP).ceil() as usize).max(8);
    let h = (cutoff - x) / n as f64;
    let rs: Vec<f64> = (0..=n).map(|i| x + i as f64 * h).collect();
    let av: Vec<C> = rs.iter().map(|&r| a_ray(r)).collect::<Result<_>>()?;

    let mut u = vec![C::new(1.0, 0.0); n + 1];
    let mut differences = vec![1.0];
    let mut iterations = 1;
    loop {
        if differences.last().unwrap() <= &tol {
            break;
        }
        if iterations >= MAX_PICARD_ITERATIONS {
            return Err(Error::NotConverged { iterations, last_change: *differences.last().unwrap() });
        }
        let f0: Vec<C> = av.iter().zip(&u).map(|(a, u)| a * u).collect();
        let f1: Vec<C> = f0.iter().zip(&rs).map(|(f, r)| f * r).collect();
        let (i0, i1) = (cumulative_from_right(&f0, h), cumulative_from_right(&f1, h));
        let next: Vec<C> = (0..=n).map(|i| 1.0 + rs[i] * i0[i] - i1[i]).collect();
        let d = next.iter().zip(&u).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        u = next;
        differences.push(d);
        iterations += 1;
    }
    // The last difference is below tol by construction; with A = 0 the first iterate is already the fixed point.
    if differences.len() >= 2 && differences[differences.len() - 1] <= tol {
        iterations -= 1;
    }

    let floor = 1e3 * f64::EPSILON;
    let observed_ratio = differences
        .windows(2)
        .filter(|w| w[1] > floor && w[0] > floor)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max);

    let last = rs.iter().position(|&r| r > xmax + 2.0 * h).unwrap_or(n - 2).min(n - 2);
    let mut residual: f64 = 0.0;
    for i in 2..=last {
        let upp = (-u[i - 2] + 16.0 * u[i - 1] - 30.0 * u[i] + 16.0 * u[i + 1] - u[i + 2]) / (12.0 * h * h);
        residual = residual.max((upp + av[i] * u[i]).norm());
    }
    residual += 2.0 * beyond;

    let inv2: Vec<C> = u.iter().map(|u| 1.0 / (u * u)).collect();
    let from_right = cumulative_from_right(&inv2, h);
    let v: Vec<C> = (0..=n).map(|i| u[i] * (x + from_right[0] - from_right[i])).collect();

    Ok(PicardSolution {
        theta,
        x_grid: x_grid.to_vec(),
        u_values: x_grid.iter().map(|&g| interpolate(&u, x, h, g)).collect(),
        v_values: x_grid.iter().map(|&g| interpolate(&v, x, h, g)).collect(),
        iterations,
        contraction_bound: bound,
        observed_ratio,
        differences,
        residual,
        cutoff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
    }

    #[test]
    fn tail_integral_examples() {
        // ∫_3^60 r e^{-r} dr = 4e^{-3} - 61 e^{-60}.
        let t = tail_integral(&e("exp(-z)"), 0.0, 3.0, 60.0).unwrap();
        assert!((t.value - 4.0 * (-3f64).exp()).abs() < 1e-10);
        assert!(t.last_panel < 1e-12);
        assert_eq!(tail_integral(&e("0"), 0.0, 1.0, 5.0).unwrap().value, 0.0);
        assert!((tail_integral(&e("1"), 0.0, 1.0, 3.0).unwrap().value - 4.0).abs() < 1e-12);
        assert!(tail_integral(&e("1"), 0.0, 3.0, 1.0).is_err());
    }

    #[test]
    fn cumulative_rule_is_exact_for_cubics() {
        let h = 0.1;
        let f: Vec<C> = (0..=20).map(|i| {
            let x = i as f64 * h;
            C::new(x * x * x - 2.0 * x, 0.0)
        }).collect();
        let c = cumulative_from_right(&f, h);
        let prim = |x: f64| x.powi(4) / 4.0 - x * x;
        for i in 0..=20 {
            let x = i as f64 * h;
            assert!((c[i].re - (prim(2.0) - prim(x))).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_coefficient_is_fixed_point() {
        let s = picard_ray_solution(&e("0"), 0.0, 1.0, &grid(1.0, 10.0, 9), 1e-12).unwrap();
        assert_eq!(s.iterations, 1);
        assert!(s.u_values.iter().all(|u| (u - 1.0).norm() < 1e-15));
        assert!(s.residual < 1e-9);
    }

    #[test]
    fn decaying_exponential() {
        let s = picard_ray_solution(&e("exp(-z)"), 0.0, 3.0, &grid(3.0, 40.0, 37), 1e-13).unwrap();
        assert!((s.u_values.last().unwrap() - 1.0).norm() <= 1e-5);
        assert!(s.residual <= 1e-6, "{}", s.residual);
        assert!(s.contraction_bound < 0.2);
        assert!(s.observed_ratio <= 0.21);
        assert!((s.v_values.last().unwrap() / 40.0 - 1.0).norm() <= 0.05);
        // u(x) - 1 = -e^{-x} + O(e^{-2x}) for A = e^{-z}.
        assert!((s.u_values[0] - (1.0 - (-3f64).exp())).norm() < 3e-3);
    }

    #[test]
    fn large_tail_is_rejected() {
        let r = picard_ray_solution(&e("exp(-z)"), 0.0, 0.1, &grid(0.1, 5.0, 10), 1e-12);
        assert!(matches!(r, Err(Error::ContractionViolated { .. })));
    }
}
