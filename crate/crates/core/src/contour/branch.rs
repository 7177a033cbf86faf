use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use super::path::{PathSpec, Piece};
use super::quad::adaptive;
use crate::analytic::Analytic;
use crate::error::{Error, Result};

type C = Complex64;

/// `|A|` below this aborts branch tracking.
pub const ZERO_THRESHOLD: f64 = 1e-12;
/// Angular jump (as a fraction of pi/2) that triggers step halving.
const JUMP_LIMIT: f64 = 0.98 * FRAC_PI_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchSample {
    pub piece: usize,
    /// Arc length within the piece.
    pub t: f64,
    /// Arc length from the path start.
    pub s: f64,
    pub z: C,
    pub w: C,
}

/// A continuous choice of `sqrt(A)` along a path, stored at the continuation nodes.
#[derive(Debug, Clone)]
pub struct BranchSqrt {
    pub pieces: Vec<Piece>,
    pub samples: Vec<BranchSample>,
}

fn nearest_root(a: C, reference: C) -> C {
    let r = a.sqrt();
    if (r - reference).norm_sqr() <= (r + reference).norm_sqr() {
        r
    } else {
        -r
    }
}

fn angle_between(a: C, b: C) -> f64 {
    (b / a).arg().abs()
}

/// Tracks `sqrt(A)` along the path by nearest-root continuation, starting
/// from `initial * principal sqrt(A(start))`.
pub fn branch_sqrt<F: Analytic + ?Sized>(a: &F, path: &PathSpec, initial: Sign) -> Result<BranchSqrt> {
    let pieces = path.pieces()?;
    let z0 = pieces[0].start();
    let a0 = a.value(z0)?;
    if a0.norm() < ZERO_THRESHOLD {
        return Err(Error::ZeroOnPath { z: z0 });
    }
    let mut w = a0.sqrt() * initial.factor();
    let mut samples = vec![BranchSample { piece: 0, t: 0.0, s: 0.0, z: z0, w }];
    let mut offset = 0.0;
    for (idx, p) in pieces.iter().enumerate() {
        let len = p.length();
        let min_step = 1e-12 * len.max(1.0);
        let max_step = len / 16.0;
        let mut h = len / 64.0;
        let mut t = 0.0;
        while t < len {
            let t_next = if t + h >= len * (1.0 - 1e-14) { len } else { t + h };
            let z = p.point(t_next);
            let av = a.value(z)?;
            if av.norm() < ZERO_THRESHOLD {
                return Err(Error::ZeroOnPath { z });
            }
            let wn = nearest_root(av, w);
            let jump = angle_between(w, wn);
            if jump > JUMP_LIMIT {
                h *= 0.5;
                if h < min_step {
                    return Err(Error::ZeroOnPath { z });
                }
                continue;
            }
            t = t_next;
            w = wn;
            samples.push(BranchSample { piece: idx, t, s: offset + t, z, w });
            if jump < FRAC_PI_2 / 8.0 {
                h = (h * 1.5).min(max_step);
            }
        }
        offset += len;
    }
    Ok(BranchSqrt { pieces, samples })
}

impl BranchSqrt {
    pub fn terminal(&self) -> C {
        self.samples.last().unwrap().w
    }

    /// The branch at arc length `s`, re-evaluating `A` there.
    pub fn at<F: Analytic + ?Sized>(&self, a: &F, s: f64) -> Result<C> {
        let k = match self.samples.binary_search_by(|p| p.s.total_cmp(&s)) {
            Ok(k) => return Ok(self.samples[k].w),
            Err(k) => k.clamp(1, self.samples.len() - 1),
        };
        let (lo, hi) = (&self.samples[k - 1], &self.samples[k]);
        let u = ((s - lo.s) / (hi.s - lo.s)).clamp(0.0, 1.0);
        let piece = &self.pieces[hi.piece];
        let t = if hi.piece == lo.piece { lo.t + u * (hi.t - lo.t) } else { u * hi.t };
        let z = piece.point(t);
        Ok(nearest_root(a.value(z)?, lo.w + (hi.w - lo.w) * u))
    }

    /// `Z` at every sample, with `Z(start) = 0`, from `∫ sqrt(A) dz` on each
    /// continuation interval.
    pub fn cumulative_integral<F: Analytic + ?Sized>(&self, a: &F, tol: f64) -> Result<Vec<C>> {
        let total = self.samples.last().unwrap().s;
        let mut out = Vec::with_capacity(self.samples.len());
        let mut acc = C::new(0.0, 0.0);
        out.push(acc);
        for pair in self.samples.windows(2) {
            let (lo, hi) = (&pair[0], &pair[1]);
            let piece = &self.pieces[hi.piece];
            let t0 = if hi.piece == lo.piece { lo.t } else { 0.0 };
            let (w0, w1) = (lo.w, hi.w);
            let width = hi.t - t0;
            if width <= 0.0 {
                out.push(acc);
                continue;
            }
            let q = adaptive(
                |t| {
                    let u = (t - t0) / width;
                    let z = piece.point(t);
                    Ok(nearest_root(a.value(z)?, w0 + (w1 - w0) * u) * piece.tangent(t))
                },
                t0,
                hi.t,
                tol * width / total,
            )?;
            acc += q.value;
            out.push(acc);
        }
        Ok(out)
    }

    /// `∫ sqrt(A) dz` along the whole path with this branch.
    pub fn integral<F: Analytic + ?Sized>(&self, a: &F, tol: f64) -> Result<C> {
        Ok(*self.cumulative_integral(a, tol)?.last().unwrap())
    }
}
