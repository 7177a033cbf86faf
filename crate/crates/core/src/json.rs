//! Serde helpers: complex numbers travel as `{"re": .., "im": ..}`.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
struct ReIm {
    re: f64,
    im: f64,
}

pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    ReIm { re: z.re, im: z.im }.serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
    let v = ReIm::deserialize(d)?;
    Ok(Complex64::new(v.re, v.im))
}

pub mod vec {
    use super::ReIm;
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(zs: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<ReIm> = zs.iter().map(|z| ReIm { re: z.re, im: z.im }).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let v = Vec::<ReIm>::deserialize(d)?;
        Ok(v.into_iter().map(|p| Complex64::new(p.re, p.im)).collect())
    }
}

/// Builds the `{"re", "im"}` JSON value directly.
pub fn value(z: Complex64) -> serde_json::Value {
    serde_json::json!({ "re": z.re, "im": z.im })
}
