use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use super::path::{PathSpec, Piece};
use crate::analytic::Analytic;
use crate::error::{Error, Result};

type C = Complex64;

pub const DEFAULT_ODE_TOL: f64 = 1e-10;

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Which accepted steps are stored in a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Record {
    EveryStep,
    CheckpointsOnly,
}

#[derive(Debug, Clone)]
pub struct OdeOptions {
    /// Local error bound, applied as `tol * (1 + |y_i|)` per component.
    pub tol: f64,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
    /// Arc-length positions where a step must end (sorted internally).
    pub checkpoints: Vec<f64>,
    pub record: Record,
    pub max_step: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            tol: DEFAULT_ODE_TOL,
            max_steps: 5_000_000,
            initial_step: None,
            checkpoints: Vec::new(),
            record: Record::EveryStep,
            max_step: None,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions { tol, ..Default::default() }
    }
}

/// Summary of one integration run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
    /// Sum of the scaled local error estimates of accepted steps.
    pub accumulated_error: f64,
}

/// One accepted step as seen by an observer.
pub struct StepEvent<'a> {
    pub s: f64,
    pub z: C,
    pub y: &'a [C],
    pub error: f64,
    pub checkpoint: bool,
}

fn scaled_error(y: &[C], ynew: &[C], err: &[C]) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..y.len() {
        let sc = 1.0 + y[i].norm().max(ynew[i].norm());
        m = m.max(err[i].norm() / sc);
    }
    m
}

/// Integrates `dy/dz = rhs(z, y)` along the path pieces with an adaptive
/// Dormand-Prince 5(4) pair under PI step-size control.
///
/// The observer sees the initial state and then every accepted step, and
/// stops the integration early by returning `false`. Steps end exactly on
/// piece boundaries and on the requested checkpoints.
pub fn dopri5<R, O>(pieces: &[Piece], y0: &[C], mut rhs: R, opts: &OdeOptions, mut observer: O) -> Result<OdeStats>
where
    R: FnMut(C, &[C], &mut [C]) -> Result<()>,
    O: FnMut(StepEvent<'_>) -> Result<bool>,
{
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let n = y0.len();
    let total: f64 = pieces.iter().map(Piece::length).sum();
    let mut stops: Vec<(f64, bool)> = opts
        .checkpoints
        .iter()
        .filter(|&&c| c > 0.0 && c < total)
        .map(|&c| (c, true))
        .collect();
    let mut off = 0.0;
    for p in pieces {
        off += p.length();
        stops.push((off.min(total), false));
    }
    stops.push((total, true));
    stops.sort_by(|a, b| a.0.total_cmp(&b.0));
    stops.dedup_by(|later, kept| {
        if later.0 == kept.0 {
            kept.1 |= later.1;
            true
        } else {
            false
        }
    });

    let mut stats = OdeStats::default();
    let mut y = y0.to_vec();
    let mut ynew = vec![C::new(0.0, 0.0); n];
    let mut ytmp = vec![C::new(0.0, 0.0); n];
    let mut errv = vec![C::new(0.0, 0.0); n];
    let mut k: Vec<Vec<C>> = vec![vec![C::new(0.0, 0.0); n]; 7];

    let z0 = pieces[0].start();
    if !observer(StepEvent { s: 0.0, z: z0, y: &y, error: 0.0, checkpoint: true })? {
        return Ok(stats);
    }

    let mut s = 0.0;
    let mut h = opts.initial_step.unwrap_or(0.0);
    let mut err_old: f64 = 1e-4;
    let mut piece_idx = 0usize;
    let mut piece_off = 0.0;
    let mut stop_idx = 0usize;
    let mut fsal_valid = false;

    let eval = |rhs: &mut R, p: &Piece, t: f64, y: &[C], out: &mut [C]| -> Result<()> {
        let z = p.point(t);
        rhs(z, y, out)?;
        let dz = p.tangent(t);
        for v in out.iter_mut() {
            *v *= dz;
        }
        Ok(())
    };

    while stop_idx < stops.len() {
        // Skip stops already reached (duplicates or the current position).
        if stops[stop_idx].0 <= s {
            stop_idx += 1;
            continue;
        }
        while piece_idx + 1 < pieces.len() && s >= piece_off + pieces[piece_idx].length() {
            piece_off += pieces[piece_idx].length();
            piece_idx += 1;
            fsal_valid = false;
        }
        let piece = &pieces[piece_idx];
        let piece_end = piece_off + piece.length();
        if !fsal_valid {
            eval(&mut rhs, piece, s - piece_off, &y, &mut k[0])?;
            stats.rhs_evaluations += 1;
            fsal_valid = true;
        }
        if h <= 0.0 {
            let d0 = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let d1 = k[0].iter().map(|v| v.norm()).fold(0.0, f64::max);
            h = if d1 > 1e-12 { 0.01 * (1.0 + d0) / d1 } else { 1e-2 };
            h = h.min(0.1 * total).max(1e-8 * total);
        }
        if let Some(m) = opts.max_step {
            h = h.min(m);
        }
        let (target, is_ckpt) = stops[stop_idx];
        let target = target.min(piece_end);
        let is_ckpt = is_ckpt && target == stops[stop_idx].0;
        let mut landing = false;
        let mut hstep = h;
        if s + hstep * (1.0 + 1e-9) >= target {
            hstep = target - s;
            landing = true;
        }
        let t = s - piece_off;

        for i in 0..n {
            ytmp[i] = y[i] + hstep * A21 * k[0][i];
        }
        eval(&mut rhs, piece, t + C2 * hstep, &ytmp, &mut k[1])?;
        for i in 0..n {
            ytmp[i] = y[i] + hstep * (A31 * k[0][i] + A32 * k[1][i]);
        }
        eval(&mut rhs, piece, t + C3 * hstep, &ytmp, &mut k[2])?;
        for i in 0..n {
            ytmp[i] = y[i] + hstep * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        eval(&mut rhs, piece, t + C4 * hstep, &ytmp, &mut k[3])?;
        for i in 0..n {
            ytmp[i] = y[i] + hstep * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        eval(&mut rhs, piece, t + C5 * hstep, &ytmp, &mut k[4])?;
        for i in 0..n {
            ytmp[i] = y[i]
                + hstep * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
        }
        let t_end = if landing { target - piece_off } else { t + hstep };
        eval(&mut rhs, piece, t_end, &ytmp, &mut k[5])?;
        for i in 0..n {
            ynew[i] = y[i] + hstep * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
        }
        eval(&mut rhs, piece, t_end, &ynew, &mut k[6])?;
        stats.rhs_evaluations += 6;
        for i in 0..n {
            errv[i] = hstep
                * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
        }
        let err = scaled_error(&y, &ynew, &errv);
        let ratio = err / opts.tol;
        if !ratio.is_finite() {
            h = hstep * 0.2;
        } else if ratio <= 1.0 {
            stats.accepted += 1;
            stats.accumulated_error += err;
            s = if landing { target } else { s + hstep };
            std::mem::swap(&mut y, &mut ynew);
            k.swap(0, 6);
            let z = piece.point(s - piece_off);
            if !observer(StepEvent { s, z, y: &y, error: err, checkpoint: landing && is_ckpt })? {
                return Ok(stats);
            }
            let fac = 0.9 * ratio.max(1e-10).powf(-0.17) * (err_old / opts.tol).max(1e-10).powf(0.04);
            let hn = hstep * fac.clamp(0.2, 5.0);
            // A step shortened only to land keeps the controller's previous proposal.
            h = if landing { hn.max(h) } else { hn };
            err_old = err.max(1e-4 * opts.tol);
            if landing {
                stop_idx += 1;
            }
        } else {
            stats.rejected += 1;
            h = hstep * (0.9 * ratio.powf(-0.2)).clamp(0.1, 0.9);
        }
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::MaxSteps { max_steps: opts.max_steps, z: piece.point(s - piece_off) });
        }
        if h < 1e-14 * (1.0 + s.abs()) {
            return Err(Error::StepUnderflow { z: piece.point(s - piece_off) });
        }
    }
    Ok(stats)
}

/// A stored state along a solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeNode {
    /// Arc length from the path start.
    pub s: f64,
    #[serde(with = "crate::json")]
    pub z: C,
    /// `(y, y', ...)` up to the system dimension.
    #[serde(with = "crate::json::vec")]
    pub y: Vec<C>,
    pub step_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OdeTrajectory {
    pub path: PathSpec,
    pub dim: usize,
    pub tol: f64,
    pub nodes: Vec<OdeNode>,
    pub accumulated_error: f64,
    pub steps: usize,
    pub rejected: usize,
    pub wronskian_drift: Option<f64>,
}

impl OdeTrajectory {
    pub fn last(&self) -> &OdeNode {
        self.nodes.last().expect("trajectory has at least the initial node")
    }

    pub fn final_state(&self) -> &[C] {
        &self.last().y
    }

    /// CSV with columns `z.re, z.im, y.re, y.im, dy.re, dy.im, [ddy.re, ddy.im,] step_error`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let names = ["y", "dy", "ddy"];
        let mut header = vec!["z.re".to_string(), "z.im".to_string()];
        for name in names.iter().take(self.dim) {
            header.push(format!("{name}.re"));
            header.push(format!("{name}.im"));
        }
        header.push("step_error".into());
        wr.write_record(&header)?;
        for node in &self.nodes {
            let mut row = vec![node.z.re.to_string(), node.z.im.to_string()];
            for v in &node.y {
                row.push(v.re.to_string());
                row.push(v.im.to_string());
            }
            row.push(node.step_error.to_string());
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("trajectory serializes")
    }
}

fn check_linear(coeffs: &[&dyn Analytic], dim: usize) -> Result<()> {
    if dim != 2 && dim != 3 {
        return Err(Error::invalid(format!("dimension must be 2 or 3, got {dim}")));
    }
    if coeffs.len() > dim {
        return Err(Error::invalid(format!("{} coefficients for a dimension-{dim} equation", coeffs.len())));
    }
    Ok(())
}

/// Solves `y^(dim) + sum_k c_k(z) y^(k) = 0` along the path; `coeffs[k]` is `c_k`
/// and missing coefficients are zero. For `y'' + A y = 0` pass `[A]`.
pub fn solve_linear_ode(
    coeffs: &[&dyn Analytic],
    dim: usize,
    path: &PathSpec,
    y0: &[C],
    tol: f64,
) -> Result<OdeTrajectory> {
    let opts = OdeOptions::with_tol(tol);
    Ok(solve_linear_ode_multi(coeffs, dim, path, &[y0.to_vec()], &opts)?.remove(0))
}

/// Several initial conditions integrated as one system, so all trajectories
/// share the same node set.
pub fn solve_linear_ode_multi(
    coeffs: &[&dyn Analytic],
    dim: usize,
    path: &PathSpec,
    ics: &[Vec<C>],
    opts: &OdeOptions,
) -> Result<Vec<OdeTrajectory>> {
    check_linear(coeffs, dim)?;
    if ics.is_empty() || ics.iter().any(|ic| ic.len() != dim) {
        return Err(Error::invalid(format!("each initial condition needs {dim} components")));
    }
    let pieces = path.pieces()?;
    let m = ics.len();
    let y0: Vec<C> = ics.iter().flatten().copied().collect();
    let mut cvals = vec![C::new(0.0, 0.0); dim];
    let rhs = |z: C, y: &[C], dy: &mut [C]| -> Result<()> {
        for (k, c) in coeffs.iter().enumerate() {
            cvals[k] = c.value(z)?;
        }
        for j in 0..m {
            let base = j * dim;
            let mut top = C::new(0.0, 0.0);
            for k in 0..coeffs.len() {
                top -= cvals[k] * y[base + k];
            }
            for k in 0..dim - 1 {
                dy[base + k] = y[base + k + 1];
            }
            dy[base + dim - 1] = top;
        }
        Ok(())
    };
    let mut nodes: Vec<Vec<OdeNode>> = vec![Vec::new(); m];
    let record = opts.record;
    let stats = dopri5(&pieces, &y0, rhs, opts, |ev| {
        if record == Record::EveryStep || ev.checkpoint {
            for (j, list) in nodes.iter_mut().enumerate() {
                list.push(OdeNode { s: ev.s, z: ev.z, y: ev.y[j * dim..(j + 1) * dim].to_vec(), step_error: ev.error });
            }
        }
        Ok(true)
    })?;
    Ok(nodes
        .into_iter()
        .map(|nodes| OdeTrajectory {
            path: path.clone(),
            dim,
            tol: opts.tol,
            nodes,
            accumulated_error: stats.accumulated_error,
            steps: stats.accepted,
            rejected: stats.rejected,
            wronskian_drift: None,
        })
        .collect())
}

/// Integrates the basis `(1, 0)`, `(0, 1)` of `y'' + A y = 0` jointly and
/// records the Wronskian drift on both trajectories.
pub fn solve_pair(a: &dyn Analytic, path: &PathSpec, opts: &OdeOptions) -> Result<(OdeTrajectory, OdeTrajectory)> {
    let one = C::new(1.0, 0.0);
    let zero = C::new(0.0, 0.0);
    let mut v = solve_linear_ode_multi(&[a], 2, path, &[vec![one, zero], vec![zero, one]], opts)?;
    let t2 = v.pop().unwrap();
    let mut t1 = v.pop().unwrap();
    let drift = wronskian_drift(&t1, &t2)?;
    t1.wronskian_drift = Some(drift);
    let mut t2 = t2;
    t2.wronskian_drift = Some(drift);
    Ok((t1, t2))
}

pub fn wronskian(y1: &[C], y2: &[C]) -> C {
    y1[0] * y2[1] - y1[1] * y2[0]
}

/// `max |W(z) - W(start)| / max(1, |W(start)|)` over the shared nodes.
pub fn wronskian_drift(t1: &OdeTrajectory, t2: &OdeTrajectory) -> Result<f64> {
    if t1.dim != 2 || t2.dim != 2 {
        return Err(Error::MismatchedNodes("Wronskian drift needs second-order trajectories".into()));
    }
    if t1.nodes.len() != t2.nodes.len() {
        return Err(Error::MismatchedNodes(format!("{} vs {} nodes", t1.nodes.len(), t2.nodes.len())));
    }
    for (a, b) in t1.nodes.iter().zip(&t2.nodes) {
        if (a.z - b.z).norm() > 1e-12 * (1.0 + a.z.norm()) {
            return Err(Error::MismatchedNodes(format!("node {} differs from {}", a.z, b.z)));
        }
    }
    let w0 = wronskian(&t1.nodes[0].y, &t2.nodes[0].y);
    let scale = w0.norm().max(1.0);
    Ok(t1
        .nodes
        .iter()
        .zip(&t2.nodes)
        .map(|(a, b)| (wronskian(&a.y, &b.y) - w0).norm() / scale)
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use std::f64::consts::FRAC_PI_2;

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    const ZERO: C = C::new(0.0, 0.0);
    const ONE: C = C::new(1.0, 0.0);

    #[test]
    fn sine() {
        let t = solve_linear_ode(&[&e("1")], 2, &PathSpec::real_segment(0.0, FRAC_PI_2), &[ZERO, ONE], 1e-10).unwrap();
        assert!((t.final_state()[0] - 1.0).norm() < 1e-8);
        assert!(t.nodes.iter().all(|n| n.step_error <= 1e-10));
    }

    /// Taylor coefficients of y'' + z y = 0: (k+2)(k+1) a_{k+2} = -a_{k-1}.
    fn airy_series(z: C, y0: C, dy0: C) -> C {
        let mut a = vec![ZERO; 61];
        a[0] = y0;
        a[1] = dy0;
        for k in 0..59 {
            let prev = if k >= 1 { a[k - 1] } else { ZERO };
            a[k + 2] = -prev / ((k + 2) as f64 * (k + 1) as f64);
        }
        a.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    #[test]
    fn airy_type_matches_series() {
        let t = solve_linear_ode(&[&e("z")], 2, &PathSpec::real_segment(0.0, 2.0), &[ONE, ZERO], 1e-10).unwrap();
        let oracle = airy_series(C::new(2.0, 0.0), ONE, ZERO);
        assert!((t.final_state()[0] - oracle).norm() < 1e-8);
        let p = PathSpec::segment(ZERO, C::new(1.5, 1.0));
        let t = solve_linear_ode(&[&e("z")], 2, &p, &[ONE, C::new(0.5, 0.0)], 1e-10).unwrap();
        let oracle = airy_series(C::new(1.5, 1.0), ONE, C::new(0.5, 0.0));
        assert!((t.final_state()[0] - oracle).norm() < 1e-8);
    }

    #[test]
    fn linear_solution_complex_path() {
        let p = PathSpec::segment(ZERO, C::new(1.0, 1.0));
        let t = solve_linear_ode(&[], 2, &p, &[C::new(3.0, 0.0), C::new(2.0, 0.0)], 1e-10).unwrap();
        assert!((t.final_state()[0] - (3.0 + 2.0 * C::new(1.0, 1.0))).norm() < 1e-12);
    }

    #[test]
    fn third_order_exponential() {
        // y''' - y = 0 with y = e^z
        let t = solve_linear_ode(&[&e("-1")], 3, &PathSpec::real_segment(0.0, 2.0), &[ONE, ONE, ONE], 1e-10).unwrap();
        assert!((t.final_state()[0] - 2f64.exp()).norm() < 1e-8 * 2f64.exp());
        assert_eq!(t.nodes[0].y.len(), 3);
    }

    #[test]
    fn drift_of_cos_sin() {
        let (a, b) = solve_pair(&e("1"), &PathSpec::real_segment(0.0, 10.0), &OdeOptions::with_tol(1e-10)).unwrap();
        assert!(a.wronskian_drift.unwrap() <= 1e-9);
        assert!(wronskian_drift(&a, &b).unwrap() <= 1e-9);
    }

    #[test]
    fn drift_of_airy_pair() {
        let (a, _) = solve_pair(&e("z"), &PathSpec::real_segment(0.0, 20.0), &OdeOptions::with_tol(1e-10)).unwrap();
        assert!(a.wronskian_drift.unwrap() <= 1e-8, "{}", a.wronskian_drift.unwrap());
    }

    #[test]
    fn drift_rejects_different_paths() {
        let a = solve_linear_ode(&[&e("1")], 2, &PathSpec::real_segment(0.0, 1.0), &[ONE, ZERO], 1e-10).unwrap();
        let b = solve_linear_ode(&[&e("1")], 2, &PathSpec::real_segment(0.0, 2.0), &[ZERO, ONE], 1e-10).unwrap();
        assert!(matches!(wronskian_drift(&a, &b), Err(Error::MismatchedNodes(_))));
    }

    #[test]
    fn checkpoints_are_hit_exactly() {
        let opts = OdeOptions {
            checkpoints: vec![0.5, 1.25],
            record: Record::CheckpointsOnly,
            ..OdeOptions::with_tol(1e-10)
        };
        let t = solve_linear_ode_multi(&[&e("1")], 2, &PathSpec::real_segment(0.0, 2.0), &[vec![ZERO, ONE]], &opts)
            .unwrap()
            .remove(0);
        let s: Vec<f64> = t.nodes.iter().map(|n| n.s).collect();
        assert_eq!(s, vec![0.0, 0.5, 1.25, 2.0]);
        assert!((t.nodes[2].y[0] - 1.25f64.sin()).norm() < 1e-9);
    }

    #[test]
    fn circle_path() {
        let p = PathSpec::circle(ZERO, 2.0);
        let t = solve_linear_ode(&[&e("1")], 2, &p, &[ONE, ZERO], 1e-10).unwrap();
        // Solutions are entire, so a closed loop returns to the initial value.
        assert!((t.final_state()[0] - ONE).norm() < 1e-8);
    }

    #[test]
    fn csv_columns() {
        let t = solve_linear_ode(&[&e("1")], 2, &PathSpec::real_segment(0.0, 1.0), &[ZERO, ONE], 1e-10).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("z.re,z.im,y.re,y.im,dy.re,dy.im,step_error"));
    }
}
