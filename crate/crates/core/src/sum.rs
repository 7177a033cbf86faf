//! Fixed-order compensated summation.
//!
//! Reductions in this crate always run through these helpers after the
//! terms have been collected in a deterministic order, so results do not
//! depend on how the terms were computed in parallel.

use num_complex::Complex64;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = NeumaierSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

pub fn sum_complex(xs: impl IntoIterator<Item = Complex64>) -> Complex64 {
    let mut re = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    for x in xs {
        re.add(x.re);
        im.add(x.im);
    }
    Complex64::new(re.value(), im.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_terms() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(sum(xs), 2.0);
        let naive: f64 = xs.iter().sum();
        assert_eq!(naive, 0.0);
    }
}
