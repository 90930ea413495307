use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Rational transfer function with coefficients in ascending powers of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTf", into = "RawTf")]
pub struct RationalTf {
    num: Vec<f64>,
    den: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawTf {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl TryFrom<RawTf> for RationalTf {
    type Error = crate::error::Error;
    fn try_from(raw: RawTf) -> Result<Self> {
        RationalTf::new(raw.num, raw.den)
    }
}

impl From<RationalTf> for RawTf {
    fn from(tf: RationalTf) -> Self {
        RawTf { num: tf.num, den: tf.den }
    }
}

fn trim(mut v: Vec<f64>) -> Vec<f64> {
    while v.last() == Some(&0.0) {
        v.pop();
    }
    v
}

impl RationalTf {
    /// Builds a proper transfer function. Trailing zero coefficients are
    /// dropped; an all-zero numerator is the zero transfer function.
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if num.iter().chain(&den).any(|c| !c.is_finite()) {
            return invalid("transfer function coefficients must be finite");
        }
        let num = trim(num);
        let den = trim(den);
        if den.is_empty() {
            return invalid("denominator is identically zero");
        }
        if num.len() > den.len() {
            return invalid(format!(
                "improper transfer function: numerator degree {} > denominator degree {}",
                num.len() - 1,
                den.len() - 1
            ));
        }
        Ok(Self { num, den })
    }

    pub fn constant(k: f64) -> Self {
        Self::new(vec![k], vec![1.0]).expect("constant transfer function")
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn den_degree(&self) -> usize {
        self.den.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_empty()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.num.len() < self.den.len()
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        horner(&self.num, s) / horner(&self.den, s)
    }
}

pub(crate) fn horner(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trims_and_checks_properness() {
        let tf = RationalTf::new(vec![1.0, 0.0], vec![2.0, 1.0, 0.0]).unwrap();
        assert_eq!(tf.num(), &[1.0]);
        assert_eq!(tf.den(), &[2.0, 1.0]);
        assert!(tf.is_strictly_proper());
        assert!(RationalTf::new(vec![0.0, 0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(RationalTf::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn serde_record() {
        let tf = RationalTf::new(vec![1.0], vec![2.0, 1.0]).unwrap();
        let text = toml::to_string(&tf).unwrap();
        assert!(text.contains("num = [1.0]"));
        let back: RationalTf = toml::from_str(&text).unwrap();
        assert_eq!(back, tf);
        assert!(toml::from_str::<RationalTf>("num = [1.0, 1.0]\nden = [1.0]").is_err());
    }
}
