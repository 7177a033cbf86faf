//! Truncated Taylor arithmetic up to the third derivative.
//!
//! A [`Jet`] carries `f, f', f'', f'''` at one point. [`ScaledJet`] is the
//! same data with a real exponent pulled out (`value = e^scale * d`), which
//! lets functions such as `exp(2*pi*i*z^2)` be evaluated far beyond the
//! range of `f64` as long as only ratios (`f'/f`, `log|f|`) are consumed.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{DomainKind, Error, Result};

type C = Complex64;

pub const MAX_ORDER: usize = 3;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Magnitudes outside this window are folded into the scale exponent.
const RESCALE_HI: f64 = 1e150;
const RESCALE_LO: f64 = 1e-150;

/// Value and derivatives up to order 3. Entries above `order` are not meaningful.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub d0: C,
    pub d1: C,
    pub d2: C,
    pub d3: C,
    pub order: usize,
}

impl Jet {
    pub fn from_array(d: [C; 4], order: usize) -> Self {
        Jet {
            d0: d[0],
            d1: d[1],
            d2: d[2],
            d3: d[3],
            order: order.min(MAX_ORDER),
        }
    }

    pub fn to_array(&self) -> [C; 4] {
        [self.d0, self.d1, self.d2, self.d3]
    }

    pub fn constant(c: C) -> Self {
        Jet::from_array([c, ZERO, ZERO, ZERO], MAX_ORDER)
    }

    /// The identity function `z` at `z0`.
    pub fn variable(z0: C) -> Self {
        Jet::from_array([z0, ONE, ZERO, ZERO], MAX_ORDER)
    }

    pub fn get(&self, k: usize) -> C {
        self.to_array()[k]
    }

    /// Jet of `f'`, one order shorter. `None` for an order-0 jet.
    pub fn derivative(&self) -> Option<Jet> {
        if self.order == 0 {
            return None;
        }
        Some(Jet::from_array(
            [self.d1, self.d2, self.d3, ZERO],
            self.order - 1,
        ))
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order.min(self.order);
        self
    }

    pub fn is_finite(&self) -> bool {
        self.to_array()[..=self.order]
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Applies an outer function whose derivatives at `self.d0` are `g`.
    pub fn compose(&self, g: [C; 4]) -> Jet {
        Jet::from_array(compose(g, self.to_array()), self.order)
    }

    pub fn exp(&self) -> Jet {
        let e = self.d0.exp();
        self.compose([e, e, e, e])
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = (self.d0.sin(), self.d0.cos());
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = (self.d0.sin(), self.d0.cos());
        self.compose([c, -s, -c, s])
    }

    pub fn ln(&self) -> Jet {
        let w = self.d0;
        let r = w.inv();
        self.compose([w.ln(), r, -r * r, 2.0 * r * r * r])
    }

    pub fn powi(&self, n: i32) -> Jet {
        let mut out = Jet::constant(ONE).with_order(self.order);
        let mut base = *self;
        let mut k = n.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                out = out * base;
            }
            base = base * base;
            k >>= 1;
        }
        if n < 0 {
            Jet::constant(ONE).with_order(self.order) / out
        } else {
            out
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let (a, b) = (self.to_array(), o.to_array());
        Jet::from_array(
            [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]],
            self.order.min(o.order),
        )
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet::from_array(
            [-self.d0, -self.d1, -self.d2, -self.d3],
            self.order,
        )
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet::from_array(
            mul(self.to_array(), o.to_array()),
            self.order.min(o.order),
        )
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        Jet::from_array(
            div(self.to_array(), o.to_array()),
            self.order.min(o.order),
        )
    }
}

impl Mul<C> for Jet {
    type Output = Jet;
    fn mul(self, c: C) -> Jet {
        Jet::from_array(
            [self.d0 * c, self.d1 * c, self.d2 * c, self.d3 * c],
            self.order,
        )
    }
}

impl Add<C> for Jet {
    type Output = Jet;
    fn add(self, c: C) -> Jet {
        let mut j = self;
        j.d0 += c;
        j
    }
}

pub(crate) fn mul(a: [C; 4], b: [C; 4]) -> [C; 4] {
    [
        a[0] * b[0],
        a[1] * b[0] + a[0] * b[1],
        a[2] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[2],
        a[3] * b[0] + 3.0 * a[2] * b[1] + 3.0 * a[1] * b[2] + a[0] * b[3],
    ]
}

pub(crate) fn div(a: [C; 4], b: [C; 4]) -> [C; 4] {
    let inv = b[0].inv();
    let q0 = a[0] * inv;
    let q1 = (a[1] - q0 * b[1]) * inv;
    let q2 = (a[2] - 2.0 * q1 * b[1] - q0 * b[2]) * inv;
    let q3 = (a[3] - 3.0 * q2 * b[1] - 3.0 * q1 * b[2] - q0 * b[3]) * inv;
    [q0, q1, q2, q3]
}

/// Faa di Bruno to third order: derivatives of `g(w(z))`.
pub(crate) fn compose(g: [C; 4], w: [C; 4]) -> [C; 4] {
    let (w1, w2, w3) = (w[1], w[2], w[3]);
    [
        g[0],
        g[1] * w1,
        g[2] * w1 * w1 + g[1] * w2,
        g[3] * w1 * w1 * w1 + 3.0 * g[2] * w1 * w2 + g[1] * w3,
    ]
}

fn max_abs(d: &[C; 4]) -> f64 {
    d.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// A jet whose true value is `exp(log_scale) * d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledJet {
    pub log_scale: f64,
    pub d: [C; 4],
    pub order: usize,
}

impl ScaledJet {
    pub fn from_jet(j: Jet) -> Self {
        ScaledJet {
            log_scale: 0.0,
            d: j.to_array(),
            order: j.order,
        }
        .normalized()
    }

    pub fn constant(c: C) -> Self {
        Self::from_jet(Jet::constant(c))
    }

    pub fn variable(z: C) -> Self {
        Self::from_jet(Jet::variable(z))
    }

    fn normalized(mut self) -> Self {
        let m = max_abs(&self.d);
        if m.is_finite() && m > 0.0 && !(RESCALE_LO..=RESCALE_HI).contains(&m) {
            let inv = 1.0 / m;
            for c in self.d.iter_mut() {
                *c *= inv;
            }
            self.log_scale += m.ln();
        }
        self
    }

    pub fn is_finite(&self) -> bool {
        self.log_scale.is_finite()
            && self.d[..=self.order]
                .iter()
                .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Converts back to plain numbers; fails if the value leaves `f64` range.
    pub fn to_jet(&self, z: C) -> Result<Jet> {
        let f = self.log_scale.exp();
        let d = if self.log_scale == 0.0 {
            self.d
        } else {
            [self.d[0] * f, self.d[1] * f, self.d[2] * f, self.d[3] * f]
        };
        let j = Jet::from_array(d, self.order);
        if j.is_finite() {
            Ok(j)
        } else {
            Err(Error::domain(DomainKind::Overflow, z))
        }
    }

    /// `log|f|`, finite unless `f = 0`.
    pub fn ln_abs(&self) -> f64 {
        self.log_scale + self.d[0].norm().ln()
    }

    /// `f^{(k)}/f`, independent of the scale.
    pub fn ratio(&self, k: usize) -> C {
        self.d[k] / self.d[0]
    }

    /// `f'/f`.
    pub fn log_derivative(&self) -> C {
        self.ratio(1)
    }

    pub fn is_zero_value(&self) -> bool {
        self.d[0] == ZERO
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = self.order.min(order);
        self
    }

    fn aligned(&self, other: &ScaledJet) -> (f64, [C; 4], [C; 4]) {
        if self.log_scale == other.log_scale {
            return (self.log_scale, self.d, other.d);
        }
        let s = self.log_scale.max(other.log_scale);
        let fa = (self.log_scale - s).exp();
        let fb = (other.log_scale - s).exp();
        let a = self.d.map(|c| c * fa);
        let b = other.d.map(|c| c * fb);
        (s, a, b)
    }

    pub fn add(&self, o: &ScaledJet) -> ScaledJet {
        let (s, a, b) = self.aligned(o);
        ScaledJet {
            log_scale: s,
            d: [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]],
            order: self.order.min(o.order),
        }
        .normalized()
    }

    pub fn neg(&self) -> ScaledJet {
        ScaledJet {
            log_scale: self.log_scale,
            d: self.d.map(|c| -c),
            order: self.order,
        }
    }

    pub fn sub(&self, o: &ScaledJet) -> ScaledJet {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &ScaledJet) -> ScaledJet {
        ScaledJet {
            log_scale: self.log_scale + o.log_scale,
            d: mul(self.d, o.d),
            order: self.order.min(o.order),
        }
        .normalized()
    }

    pub fn div(&self, o: &ScaledJet, z: C) -> Result<ScaledJet> {
        if o.d[0] == ZERO {
            return Err(Error::domain(DomainKind::Pole, z));
        }
        Ok(ScaledJet {
            log_scale: self.log_scale - o.log_scale,
            d: div(self.d, o.d),
            order: self.order.min(o.order),
        }
        .normalized())
    }

    pub fn scale_by(&self, c: C) -> ScaledJet {
        ScaledJet {
            log_scale: self.log_scale,
            d: self.d.map(|x| x * c),
            order: self.order,
        }
        .normalized()
    }

    /// `g(self)` where `g` has derivatives `exp(g_scale) * g` at the (unscaled) value.
    fn compose_scaled(w: &Jet, g: [C; 4], g_scale: f64) -> ScaledJet {
        ScaledJet {
            log_scale: g_scale,
            d: compose(g, w.to_array()),
            order: w.order,
        }
        .normalized()
    }

    pub fn exp(&self, z: C) -> Result<ScaledJet> {
        let w = self.to_jet(z)?;
        let (s, e) = if w.d0.re.abs() < 300.0 {
            (0.0, w.d0.exp())
        } else {
            (w.d0.re, C::from_polar(1.0, w.d0.im))
        };
        Ok(Self::compose_scaled(&w, [e, e, e, e], s))
    }

    /// `sin` and `cos` of `w`, both divided by `exp(t)`.
    fn sin_cos_scaled(w: C) -> (C, C, f64) {
        if w.im.abs() < 300.0 {
            return (w.sin(), w.cos(), 0.0);
        }
        let t = w.im.abs();
        let iw = C::new(-w.im, w.re);
        let p = (iw - t).exp();
        let m = (-iw - t).exp();
        let i2 = C::new(0.0, 2.0);
        ((p - m) / i2, (p + m) / 2.0, t)
    }

    fn sinh_cosh_scaled(w: C) -> (C, C, f64) {
        if w.re.abs() < 300.0 {
            return (w.sinh(), w.cosh(), 0.0);
        }
        let t = w.re.abs();
        let p = (w - t).exp();
        let m = (-w - t).exp();
        ((p - m) / 2.0, (p + m) / 2.0, t)
    }

    pub fn sin(&self, z: C) -> Result<ScaledJet> {
        let w = self.to_jet(z)?;
        let (s, c, t) = Self::sin_cos_scaled(w.d0);
        Ok(Self::compose_scaled(&w, [s, c, -s, -c], t))
    }

    pub fn cos(&self, z: C) -> Result<ScaledJet> {
        let w = self.to_jet(z)?;
        let (s, c, t) = Self::sin_cos_scaled(w.d0);
        Ok(Self::compose_scaled(&w, [c, -s, -c, s], t))
    }

    pub fn sinh(&self, z: C) -> Result<ScaledJet> {
        let w = self.to_jet(z)?;
        let (s, c, t) = Self::sinh_cosh_scaled(w.d0);
        Ok(Self::compose_scaled(&w, [s, c, s, c], t))
    }

    pub fn cosh(&self, z: C) -> Result<ScaledJet> {
        let w = self.to_jet(z)?;
        let (s, c, t) = Self::sinh_cosh_scaled(w.d0);
        Ok(Self::compose_scaled(&w, [c, s, c, s], t))
    }

    pub fn tan(&self, z: C) -> Result<ScaledJet> {
        let w = self.to_jet(z)?;
        let c = w.d0.cos();
        if c == ZERO {
            return Err(Error::domain(DomainKind::Pole, z));
        }
        let t = w.d0.tan();
        let sec2 = ONE + t * t;
        let g = [t, sec2, 2.0 * t * sec2, 2.0 * sec2 * (ONE + 3.0 * t * t)];
        Ok(Self::compose_scaled(&w, g, 0.0))
    }

    /// Principal logarithm; the negative real axis and the origin are rejected.
    pub fn ln(&self, z: C) -> Result<ScaledJet> {
        let v = self.d[0];
        if v == ZERO {
            return Err(Error::domain(DomainKind::Pole, z));
        }
        if v.im == 0.0 && v.re < 0.0 {
            return Err(Error::domain(DomainKind::BranchCut, z));
        }
        let r1 = self.ratio(1);
        let r2 = self.ratio(2);
        let r3 = self.ratio(3);
        let l0 = C::new(self.ln_abs(), v.arg());
        let l1 = r1;
        let l2 = r2 - r1 * r1;
        let l3 = r3 - 3.0 * r2 * r1 + 2.0 * r1 * r1 * r1;
        Ok(ScaledJet {
            log_scale: 0.0,
            d: [l0, l1, l2, l3],
            order: self.order,
        }
        .normalized())
    }

    /// Principal square root, same cut as [`ScaledJet::ln`].
    pub fn sqrt(&self, z: C) -> Result<ScaledJet> {
        let v = self.d[0];
        if v == ZERO {
            if self.order == 0 {
                return Ok(ScaledJet::constant(ZERO).with_order(0));
            }
            return Err(Error::domain(DomainKind::BranchCut, z));
        }
        if v.im == 0.0 && v.re < 0.0 {
            return Err(Error::domain(DomainKind::BranchCut, z));
        }
        // sqrt(f) = exp(log f / 2), done on ratios to stay scale-free.
        let r1 = self.ratio(1);
        let r2 = self.ratio(2);
        let r3 = self.ratio(3);
        let l1 = r1;
        let l2 = r2 - r1 * r1;
        let l3 = r3 - 3.0 * r2 * r1 + 2.0 * r1 * r1 * r1;
        let (h1, h2, h3) = (l1 * 0.5, l2 * 0.5, l3 * 0.5);
        // derivatives of exp(h) divided by exp(h)
        let e1 = h1;
        let e2 = h2 + h1 * h1;
        let e3 = h3 + 3.0 * h1 * h2 + h1 * h1 * h1;
        let root = v.sqrt();
        Ok(ScaledJet {
            log_scale: self.log_scale * 0.5,
            d: [root, root * e1, root * e2, root * e3],
            order: self.order,
        }
        .normalized())
    }

    /// `self^n` by repeated multiplication.
    pub fn powi(&self, n: i64, z: C) -> Result<ScaledJet> {
        let mut out = ScaledJet::constant(ONE).with_order(self.order);
        let mut base = *self;
        let mut k = n.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                out = out.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        if n < 0 {
            ScaledJet::constant(ONE).with_order(self.order).div(&out, z)
        } else {
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C, b: C, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn product_rule_on_polynomials() {
        let z = Jet::variable(C::new(1.0, 1.0));
        let sq = z * z;
        assert!(close(sq.d0, C::new(0.0, 2.0), 1e-15));
        assert!(close(sq.d1, C::new(2.0, 2.0), 1e-15));
        assert!(close(sq.d2, C::new(2.0, 0.0), 1e-15));
        assert!(close(sq.d3, ZERO, 1e-15));
    }

    #[test]
    fn quotient_rule_matches_powi() {
        let z = Jet::variable(C::new(0.3, -0.7));
        let a = Jet::constant(ONE) / (z * z * z);
        let b = z.powi(-3);
        for k in 0..4 {
            assert!(close(a.get(k), b.get(k), 1e-13));
        }
    }

    #[test]
    fn scaled_exp_survives_overflow() {
        let z = C::new(0.0, 0.0);
        let w = ScaledJet::constant(C::new(1000.0, 1.0));
        let e = w.exp(z).unwrap();
        assert!((e.ln_abs() - 1000.0).abs() < 1e-12);
        assert!(e.to_jet(z).is_err());
    }

    #[test]
    fn scaled_sin_matches_plain_in_range() {
        let zv = C::new(0.4, 2.0);
        let w = ScaledJet::variable(zv);
        let s = w.sin(zv).unwrap().to_jet(zv).unwrap();
        assert!(close(s.d0, zv.sin(), 1e-14));
        assert!(close(s.d1, zv.cos(), 1e-14));
        let big = C::new(0.4, 400.0);
        let sb = ScaledJet::variable(big).sin(big).unwrap();
        // |sin(x + iy)| ~ e^y / 2
        assert!((sb.ln_abs() - (400.0 - 2f64.ln())).abs() < 1e-10);
        // cot(x + iy) -> -i as y -> +inf, with error ~ e^{-2y}
        assert!(close(sb.log_derivative(), C::new(0.0, -1.0), 1e-12));
    }

    #[test]
    fn ln_rejects_cut() {
        let z = C::new(-2.0, 0.0);
        assert!(ScaledJet::variable(z).ln(z).is_err());
        assert!(ScaledJet::variable(C::new(0.0, 0.0)).ln(z).is_err());
    }

    #[test]
    fn sqrt_derivatives() {
        let zv = C::new(2.0, 1.0);
        let s = ScaledJet::variable(zv).sqrt(zv).unwrap().to_jet(zv).unwrap();
        let r = zv.sqrt();
        assert!(close(s.d0, r, 1e-15));
        assert!(close(s.d1, 0.5 / r, 1e-14));
        assert!(close(s.d2, -0.25 / (r * zv), 1e-14));
        assert!(close(s.d3, 0.375 / (r * zv * zv), 1e-14));
    }
}
