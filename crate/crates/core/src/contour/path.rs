use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type C = Complex64;

/// An oriented, piecewise-smooth path in the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathSpec {
    Polyline {
        #[serde(with = "crate::json::vec")]
        points: Vec<C>,
    },
    /// `t e^{i theta}` for `t` from `t0` to `t1`.
    RaySegment { theta: f64, t0: f64, t1: f64 },
    /// Counter-clockwise when `arg1 > arg0`.
    CircleArc {
        #[serde(with = "crate::json")]
        center: C,
        radius: f64,
        arg0: f64,
        arg1: f64,
    },
    /// Output of path tracing; treated as a polyline.
    Sampled {
        #[serde(with = "crate::json::vec")]
        points: Vec<C>,
    },
}

/// One smooth piece, parametrized by arc length `t` in `[0, length]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    Segment { a: C, b: C },
    Arc { center: C, radius: f64, arg0: f64, arg1: f64 },
}

impl Piece {
    pub fn length(&self) -> f64 {
        match *self {
            Piece::Segment { a, b } => (b - a).norm(),
            Piece::Arc { radius, arg0, arg1, .. } => radius * (arg1 - arg0).abs(),
        }
    }

    pub fn point(&self, t: f64) -> C {
        match *self {
            Piece::Segment { a, b } => {
                let len = (b - a).norm();
                if t >= len {
                    b
                } else {
                    a + (b - a) * (t / len)
                }
            }
            Piece::Arc { center, radius, arg0, arg1 } => {
                let phi = arg0 + (arg1 - arg0).signum() * t / radius;
                center + C::from_polar(radius, phi)
            }
        }
    }

    /// Unit tangent `dz/dt`.
    pub fn tangent(&self, t: f64) -> C {
        match *self {
            Piece::Segment { a, b } => (b - a) / (b - a).norm(),
            Piece::Arc { radius, arg0, arg1, .. } => {
                let sg = (arg1 - arg0).signum();
                let phi = arg0 + sg * t / radius;
                C::new(0.0, sg) * C::from_polar(1.0, phi)
            }
        }
    }

    pub fn start(&self) -> C {
        self.point(0.0)
    }

    pub fn end(&self) -> C {
        match *self {
            Piece::Segment { b, .. } => b,
            Piece::Arc { center, radius, arg1, .. } => center + C::from_polar(radius, arg1),
        }
    }
}

impl PathSpec {
    pub fn segment(a: C, b: C) -> PathSpec {
        PathSpec::Polyline { points: vec![a, b] }
    }

    pub fn real_segment(a: f64, b: f64) -> PathSpec {
        PathSpec::segment(C::new(a, 0.0), C::new(b, 0.0))
    }

    pub fn circle(center: C, radius: f64) -> PathSpec {
        PathSpec::CircleArc { center, radius, arg0: 0.0, arg1: std::f64::consts::TAU }
    }

    /// Smooth pieces in path order; zero-length polyline segments are dropped.
    pub fn pieces(&self) -> Result<Vec<Piece>> {
        let pieces = match self {
            PathSpec::Polyline { points } | PathSpec::Sampled { points } => {
                if points.len() < 2 {
                    return Err(Error::invalid("a polyline path needs at least 2 points"));
                }
                if points.iter().any(|p| !(p.re.is_finite() && p.im.is_finite())) {
                    return Err(Error::invalid("path points must be finite"));
                }
                points
                    .windows(2)
                    .filter(|w| w[0] != w[1])
                    .map(|w| Piece::Segment { a: w[0], b: w[1] })
                    .collect()
            }
            &PathSpec::RaySegment { theta, t0, t1 } => {
                let u = C::from_polar(1.0, theta);
                vec![Piece::Segment { a: u * t0, b: u * t1 }]
            }
            &PathSpec::CircleArc { center, radius, arg0, arg1 } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(Error::invalid("circle radius must be positive"));
                }
                vec![Piece::Arc { center, radius, arg0, arg1 }]
            }
        };
        let pieces: Vec<Piece> = pieces;
        let total: f64 = pieces.iter().map(Piece::length).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::invalid("path has zero or non-finite length"));
        }
        Ok(pieces)
    }

    pub fn length(&self) -> Result<f64> {
        Ok(self.pieces()?.iter().map(Piece::length).sum())
    }

    pub fn start(&self) -> Result<C> {
        Ok(self.pieces()?[0].start())
    }

    pub fn end(&self) -> Result<C> {
        Ok(self.pieces()?.last().unwrap().end())
    }

    /// Same point set, opposite orientation.
    pub fn reversed(&self) -> PathSpec {
        match self {
            PathSpec::Polyline { points } => PathSpec::Polyline { points: points.iter().rev().copied().collect() },
            PathSpec::Sampled { points } => PathSpec::Sampled { points: points.iter().rev().copied().collect() },
            &PathSpec::RaySegment { theta, t0, t1 } => PathSpec::RaySegment { theta, t0: t1, t1: t0 },
            &PathSpec::CircleArc { center, radius, arg0, arg1 } => {
                PathSpec::CircleArc { center, radius, arg0: arg1, arg1: arg0 }
            }
        }
    }

    /// The point at arc length `s` from the start (clamped to the ends).
    pub fn point_at(&self, s: f64) -> Result<C> {
        let pieces = self.pieces()?;
        let mut rest = s.max(0.0);
        for p in &pieces {
            let len = p.length();
            if rest <= len {
                return Ok(p.point(rest));
            }
            rest -= len;
        }
        Ok(pieces.last().unwrap().end())
    }

    /// Prepends a segment from `z0` unless the path already starts there.
    pub fn starting_from(&self, z0: C) -> Result<PathSpec> {
        let start = self.start()?;
        if start == z0 {
            return Ok(self.clone());
        }
        match self {
            PathSpec::Polyline { points } | PathSpec::Sampled { points } => {
                let mut pts = vec![z0];
                pts.extend_from_slice(points);
                Ok(PathSpec::Polyline { points: pts })
            }
            _ => Err(Error::invalid("path does not start at the requested base point")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn arc_geometry() {
        let p = PathSpec::CircleArc { center: C::new(1.0, 0.0), radius: 2.0, arg0: 0.0, arg1: PI };
        let pc = p.pieces().unwrap();
        assert!((p.length().unwrap() - 2.0 * PI).abs() < 1e-14);
        assert!((pc[0].point(PI) - C::new(1.0, 2.0)).norm() < 1e-14);
        assert!((pc[0].tangent(0.0) - C::new(0.0, 1.0)).norm() < 1e-14);
        assert!((p.end().unwrap() - C::new(-1.0, 0.0)).norm() < 1e-14);
        let r = p.reversed().pieces().unwrap();
        assert!((r[0].tangent(0.0) - C::new(0.0, 1.0)).norm() < 1e-14);
        assert!((r[0].start() - C::new(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn invalid_paths() {
        assert!(PathSpec::Polyline { points: vec![C::new(0.0, 0.0)] }.pieces().is_err());
        assert!(PathSpec::segment(C::new(1.0, 1.0), C::new(1.0, 1.0)).pieces().is_err());
        assert!(PathSpec::RaySegment { theta: 0.0, t0: 2.0, t1: 2.0 }.pieces().is_err());
        assert!(PathSpec::CircleArc { center: C::new(0.0, 0.0), radius: -1.0, arg0: 0.0, arg1: 1.0 }
            .pieces()
            .is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = PathSpec::Sampled { points: vec![C::new(1.0, 2.0), C::new(3.0, -1.0)] };
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"re\""));
        let q: PathSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }
}
