#![allow(dead_code)]

use banklaine_core::analytic::Polynomial;
use banklaine_core::gallery::seeded_points;
use banklaine_core::zeros::{count_zeros_disc, locate_zeros, COUNT_TOL};
use banklaine_core::{Analytic, Complex64, Expr};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C = Complex64;

pub fn expr(s: &str) -> Expr {
    Expr::parse(s).unwrap()
}

/// Functions checked against finite differences: expression, sampling
/// radius clear of singularities, and a bound on `|f'/f|` over the disc
/// that sets the stencil step.
pub const JET_SUITE: [(&str, f64, f64); 8] = [
    ("exp(z)*sin(z)", 1.5, 1.0),
    ("z^3 - 2*z + 1", 2.0, 1.0),
    ("1/(z^2 + 4)", 1.4, 2.0),
    ("sqrt(z + 3)", 2.0, 1.0),
    ("log(z + 3)", 2.0, 1.0),
    ("tan(z/2)", 2.0, 1.0),
    ("sinh(z)*cosh(z/3) - i*z", 2.0, 1.0),
    ("exp(2*pi*i*z^2)*sin(pi*z)/pi", 1.2, 4.0 * std::f64::consts::PI * 1.2 + std::f64::consts::PI),
];

/// Allowed |jet - difference| for derivative order k = 1, 2, 3, relative to
/// `max(1, M w^k)` with `M` the largest |f| on the stencil and `w` the
/// frequency from [`JET_SUITE`].
pub const JET_BOUNDS: [f64; 3] = [1e-9, 1e-7, 1e-6];

/// Worst ratio of error to bound over derivative orders 1..=3 at `z`.
/// Differences are central and fourth order: step 1e-3/w for the first two
/// derivatives and 1e-2/w for the third.
pub fn jet_error_ratio(f: &dyn Analytic, z: C, w: f64) -> f64 {
    let j = f.jet(z, 3).unwrap();
    let v = |k: f64, h: f64| f.value(z + k * h).unwrap();
    let h = 1e-3 / w;
    let (m2, m1, p1, p2) = (v(-2.0, h), v(-1.0, h), v(1.0, h), v(2.0, h));
    let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    let d2 = (-m2 + 16.0 * m1 - 30.0 * j.d0 + 16.0 * p1 - p2) / (12.0 * h * h);
    let g = 1e-2 / w;
    let s: Vec<C> = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0].iter().map(|&k| v(k, g)).collect();
    let d3 = (s[0] - 8.0 * s[1] + 13.0 * s[2] - 13.0 * s[3] + 8.0 * s[4] - s[5]) / (8.0 * g * g * g);
    let m = s.iter().chain([m2, m1, p1, p2].iter()).map(|x| x.norm()).fold(0.0, f64::max);
    let errors = [(j.d1 - d1).norm(), (j.d2 - d2).norm(), (j.d3 - d3).norm()];
    (0..3).map(|k| errors[k] / (JET_BOUNDS[k] * (m * w.powi(k as i32 + 1)).max(1.0))).fold(0.0, f64::max)
}

/// Worst ratio over the whole suite at `n` seeded points per function.
pub fn jet_suite_worst(n: usize, seed: u64) -> (f64, &'static str) {
    let mut worst = (0.0, "");
    for (k, (s, radius, w)) in JET_SUITE.iter().enumerate() {
        let f = expr(s);
        for z in seeded_points(n, *radius, seed + k as u64) {
            let r = jet_error_ratio(&f, z, *w);
            if r > worst.0 {
                worst = (r, *s);
            }
        }
    }
    worst
}

/// A polynomial with known roots and multiplicities.
pub struct SeededPolynomial {
    pub poly: Polynomial,
    pub roots: Vec<(C, usize)>,
}

impl SeededPolynomial {
    /// Zeros in `|z| < r`, with multiplicity.
    pub fn count_inside(&self, r: f64) -> usize {
        self.roots.iter().filter(|(z, _)| z.norm() < r).map(|(_, m)| m).sum()
    }
}

fn expand(roots: &[(C, usize)]) -> Polynomial {
    let mut coeffs = vec![C::new(1.0, 0.0)];
    for &(r, m) in roots {
        for _ in 0..m {
            let mut next = vec![C::new(0.0, 0.0); coeffs.len() + 1];
            for (i, c) in coeffs.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= r * c;
            }
            coeffs = next;
        }
    }
    Polynomial::new(coeffs)
}

/// Roots inside `|z| < 0.85` or in `1.2 < |z| < 2`, pairwise at least 0.15
/// apart, with multiplicities 1 to 3.
pub fn seeded_polynomials(n: usize, seed: u64) -> Vec<SeededPolynomial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let k = rng.gen_range(1..=4);
            let mut roots: Vec<(C, usize)> = Vec::new();
            while roots.len() < k {
                let r = if rng.gen_bool(0.75) { 0.85 * rng.gen::<f64>().sqrt() } else { rng.gen_range(1.2..2.0) };
                let z = C::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU));
                if roots.iter().all(|(w, _)| (z - w).norm() >= 0.15) {
                    roots.push((z, rng.gen_range(1..=3)));
                }
            }
            SeededPolynomial { poly: expand(&roots), roots }
        })
        .collect()
}

/// `(located multiplicity sum, argument-principle count)` in `|z - c| < r`.
pub fn multiplicity_check(f: &dyn Analytic, c: C, r: f64) -> (usize, usize) {
    let count = count_zeros_disc(&f, c, r, COUNT_TOL).unwrap();
    let located: usize = locate_zeros(&f, c, r, 1e-10).unwrap().iter().map(|z| z.multiplicity).sum();
    (located, count)
}
