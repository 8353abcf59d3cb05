use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Dense complex polynomial in one variable, coefficients in ascending degree.
///
/// Trailing (leading-degree) zeros are trimmed at construction so the last
/// stored coefficient is nonzero unless the polynomial is identically zero,
/// in which case the coefficient list is empty.
#[derive(Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct UniPoly {
    coeffs: Vec<Complex64>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == Complex64::ZERO) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// The identity polynomial `z`.
    pub fn identity() -> Self {
        Self::from_real(&[0.0, 1.0])
    }

    /// `c * z^k`
    pub fn monomial(c: Complex64, k: usize) -> Self {
        let mut coeffs = vec![Complex64::ZERO; k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        roots.iter().fold(Self::constant(Complex64::ONE), |acc, &r| {
            &acc * &Self::new(vec![-r, Complex64::ONE])
        })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or(Complex64::ZERO)
    }

    /// Coefficient of `z^k`, zero past the degree.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(Complex64::ZERO)
    }

    /// Largest coefficient modulus.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::ZERO, |acc, &c| acc * z + c)
    }

    /// Value and first derivative in one Horner pass.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::ZERO;
        let mut dp = Complex64::ZERO;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// `Σ |a_i| |z|^i`, the scale against which rounding in `eval` is measured.
    pub fn abs_eval(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// `p ∘ q`, evaluated by Horner's scheme over polynomials.
    pub fn compose(&self, q: &UniPoly) -> UniPoly {
        self.coeffs
            .iter()
            .rev()
            .fold(UniPoly::zero(), |acc, &c| &(&acc * q) + &UniPoly::constant(c))
    }

    /// Taylor coefficients at `c`: `p(c + h) = Σ out[k] h^k`.
    pub fn taylor_shift(&self, c: Complex64) -> Vec<Complex64> {
        let mut a = self.coeffs.clone();
        let n = a.len();
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                let next = a[j + 1];
                a[j] += c * next;
            }
        }
        a
    }

    /// Largest coefficient difference, padding the shorter polynomial with zeros.
    pub fn max_coeff_diff(&self, other: &UniPoly) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n)
            .map(|k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, f64::max)
    }

    /// Zero out coefficients below `rel * max|coeff|` and re-trim.
    pub fn trimmed(&self, rel: f64) -> UniPoly {
        let cut = rel * self.max_abs_coeff();
        UniPoly::new(
            self.coeffs
                .iter()
                .map(|&c| if c.norm() <= cut { Complex64::ZERO } else { c })
                .collect(),
        )
    }
}

impl fmt::Debug for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UniPoly{:?}", self.coeffs)
    }
}

impl fmt::Display for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if *c == Complex64::ZERO {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})z")?,
                _ => write!(f, "({c})z^{k}")?,
            }
        }
        Ok(())
    }
}

impl From<Vec<[f64; 2]>> for UniPoly {
    fn from(pairs: Vec<[f64; 2]>) -> Self {
        UniPoly::new(pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

impl From<UniPoly> for Vec<[f64; 2]> {
    fn from(p: UniPoly) -> Self {
        p.coeffs.iter().map(|c| [c.re, c.im]).collect()
    }
}

impl Add for &UniPoly {
    type Output = UniPoly;
    fn add(self, rhs: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        UniPoly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &UniPoly {
    type Output = UniPoly;
    fn sub(self, rhs: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        UniPoly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Neg for &UniPoly {
    type Output = UniPoly;
    fn neg(self) -> UniPoly {
        self.scale(-Complex64::ONE)
    }
}

impl Mul for &UniPoly {
    type Output = UniPoly;
    fn mul(self, rhs: &UniPoly) -> UniPoly {
        if self.is_zero() || rhs.is_zero() {
            return UniPoly::zero();
        }
        let mut out = vec![Complex64::ZERO; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UniPoly::new(out)
    }
}

/// `p - c` for a constant `c`.
pub(crate) fn shift_constant(p: &UniPoly, c: Complex64) -> UniPoly {
    let mut coeffs = p.coeffs.clone();
    if coeffs.is_empty() {
        coeffs.push(Complex64::ZERO);
    }
    coeffs[0] -= c;
    UniPoly::new(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn eval_basic() {
        let p = UniPoly::from_real(&[-1.0, 0.0, 1.0]);
        assert_eq!(p.eval(c(2.0)), c(3.0));
        assert_eq!(UniPoly::zero().eval(c(5.0)), Complex64::ZERO);
    }

    #[test]
    fn eval_t3_matches_cosine_triple_angle() {
        let t3 = UniPoly::from_real(&[0.0, -3.0, 0.0, 4.0]);
        let v = t3.eval(c(0.3f64.cos()));
        assert!((v - c(0.9f64.cos())).norm() < 1e-12);
    }

    #[test]
    fn compose_examples() {
        let sq = UniPoly::from_real(&[0.0, 0.0, 1.0]);
        let shift = UniPoly::from_real(&[1.0, 1.0]);
        assert_eq!(sq.compose(&shift), UniPoly::from_real(&[1.0, 2.0, 1.0]));

        // (z^2 - z)^3 = z^6 - 3z^5 + 3z^4 - z^3
        let cube = UniPoly::from_real(&[0.0, 0.0, 0.0, 1.0]);
        let g = UniPoly::from_real(&[0.0, -1.0, 1.0]);
        assert_eq!(
            cube.compose(&g),
            UniPoly::from_real(&[0.0, 0.0, 0.0, -1.0, 3.0, -3.0, 1.0])
        );
    }

    #[test]
    fn zero_is_trimmed() {
        let p = UniPoly::from_real(&[0.0, 0.0]);
        assert!(p.is_zero());
        assert_eq!(p.degree(), 0);
        let q = UniPoly::from_real(&[1.0, 2.0, 0.0]);
        assert_eq!(q.degree(), 1);
    }

    #[test]
    fn taylor_shift_matches_derivatives() {
        let p = UniPoly::from_real(&[1.0, -2.0, 0.5, 3.0]);
        let at = Complex64::new(0.7, -0.2);
        let t = p.taylor_shift(at);
        assert!((t[0] - p.eval(at)).norm() < 1e-14);
        assert!((t[1] - p.derivative().eval(at)).norm() < 1e-13);
        assert!((t[2] - p.derivative().derivative().eval(at) / 2.0).norm() < 1e-13);
        assert!((t[3] - c(3.0)).norm() < 1e-14);
    }

    #[test]
    fn literal_round_trip() {
        let p = UniPoly::new(vec![Complex64::new(1.0, -1.0), Complex64::new(0.0, 2.0)]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[[1.0,-1.0],[0.0,2.0]]");
        let back: UniPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
