use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::uni::UniPoly;
use crate::error::{CorrError, Result};

/// Dense complex polynomial in two variables, `Σ c[i][j] x^i y^j`.
///
/// Stored row-major (`i` major). Construction trims all-zero top rows and
/// columns, so both partial degrees are attained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BiPolyLiteral", into = "BiPolyLiteral")]
pub struct BiPoly {
    deg_x: usize,
    deg_y: usize,
    coeffs: Vec<Complex64>,
}

/// Literal form: declared partial degrees plus a row-major `[re, im]` list.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BiPolyLiteral {
    pub deg_x: usize,
    pub deg_y: usize,
    pub coeffs: Vec<[f64; 2]>,
}

impl TryFrom<BiPolyLiteral> for BiPoly {
    type Error = CorrError;
    fn try_from(lit: BiPolyLiteral) -> Result<Self> {
        let expected = (lit.deg_x + 1) * (lit.deg_y + 1);
        if lit.coeffs.len() != expected {
            return Err(CorrError::invalid(format!(
                "bivariate literal with degrees ({}, {}) needs {expected} coefficients, got {}",
                lit.deg_x,
                lit.deg_y,
                lit.coeffs.len()
            )));
        }
        Ok(BiPoly::new(
            lit.deg_x,
            lit.deg_y,
            lit.coeffs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect(),
        ))
    }
}

impl From<BiPoly> for BiPolyLiteral {
    fn from(p: BiPoly) -> Self {
        BiPolyLiteral {
            deg_x: p.deg_x,
            deg_y: p.deg_y,
            coeffs: p.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

impl BiPoly {
    /// Row-major coefficients for the declared degrees; trailing zero rows
    /// and columns are trimmed.
    pub fn new(deg_x: usize, deg_y: usize, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), (deg_x + 1) * (deg_y + 1), "coefficient count");
        let mut p = BiPoly { deg_x, deg_y, coeffs };
        p.trim_zero_edges();
        p
    }

    pub fn from_fn(deg_x: usize, deg_y: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut coeffs = Vec::with_capacity((deg_x + 1) * (deg_y + 1));
        for i in 0..=deg_x {
            for j in 0..=deg_y {
                coeffs.push(f(i, j));
            }
        }
        Self::new(deg_x, deg_y, coeffs)
    }

    /// Sparse constructor from `(i, j, c)` terms.
    pub fn from_terms(terms: &[(usize, usize, Complex64)]) -> Self {
        let dx = terms.iter().map(|t| t.0).max().unwrap_or(0);
        let dy = terms.iter().map(|t| t.1).max().unwrap_or(0);
        let mut coeffs = vec![Complex64::ZERO; (dx + 1) * (dy + 1)];
        for &(i, j, c) in terms {
            coeffs[i * (dy + 1) + j] += c;
        }
        Self::new(dx, dy, coeffs)
    }

    /// `p(x) - q(y)`, the graph of `y`-level sets against `x`.
    pub fn separated(p: &UniPoly, q: &UniPoly) -> Self {
        let dx = p.degree();
        let dy = q.degree();
        Self::from_fn(dx, dy, |i, j| {
            let mut c = Complex64::ZERO;
            if j == 0 {
                c += p.coeff(i);
            }
            if i == 0 {
                c -= q.coeff(j);
            }
            c
        })
    }

    fn trim_zero_edges(&mut self) {
        loop {
            let dx = self.deg_x;
            let dy = self.deg_y;
            let top_row_zero = dx > 0 && (0..=dy).all(|j| self.get(dx, j) == Complex64::ZERO);
            if top_row_zero {
                self.coeffs.truncate(dx * (dy + 1));
                self.deg_x -= 1;
                continue;
            }
            let top_col_zero = dy > 0 && (0..=dx).all(|i| self.get(i, dy) == Complex64::ZERO);
            if top_col_zero {
                let mut next = Vec::with_capacity((dx + 1) * dy);
                for i in 0..=dx {
                    next.extend_from_slice(&self.coeffs[i * (dy + 1)..i * (dy + 1) + dy]);
                }
                self.coeffs = next;
                self.deg_y -= 1;
                continue;
            }
            break;
        }
    }

    pub fn deg_x(&self) -> usize {
        self.deg_x
    }

    pub fn deg_y(&self) -> usize {
        self.deg_y
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if i > self.deg_x || j > self.deg_y {
            return Complex64::ZERO;
        }
        self.coeffs[i * (self.deg_y + 1) + j]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::ZERO)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, x: Complex64, y: Complex64) -> Complex64 {
        self.specialize_x(x).eval(y)
    }

    /// `Σ |c_ij| |x|^i |y|^j`
    pub fn abs_eval(&self, x: Complex64, y: Complex64) -> f64 {
        let (rx, ry) = (x.norm(), y.norm());
        let mut acc = 0.0;
        for i in (0..=self.deg_x).rev() {
            let mut row = 0.0;
            for j in (0..=self.deg_y).rev() {
                row = row * ry + self.get(i, j).norm();
            }
            acc = acc * rx + row;
        }
        acc
    }

    /// `Q(x0, y)` as a polynomial in `y`.
    pub fn specialize_x(&self, x0: Complex64) -> UniPoly {
        let mut out = vec![Complex64::ZERO; self.deg_y + 1];
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = (0..=self.deg_x)
                .rev()
                .fold(Complex64::ZERO, |acc, i| acc * x0 + self.get(i, j));
        }
        UniPoly::new(out)
    }

    /// `Q(x, y0)` as a polynomial in `x`.
    pub fn specialize_y(&self, y0: Complex64) -> UniPoly {
        let mut out = vec![Complex64::ZERO; self.deg_x + 1];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = (0..=self.deg_y)
                .rev()
                .fold(Complex64::ZERO, |acc, j| acc * y0 + self.get(i, j));
        }
        UniPoly::new(out)
    }

    /// Coefficient of `y^deg_y`, as a polynomial in `x`.
    pub fn leading_in_y(&self) -> UniPoly {
        UniPoly::new((0..=self.deg_x).map(|i| self.get(i, self.deg_y)).collect())
    }

    /// Coefficient of `x^deg_x`, as a polynomial in `y`.
    pub fn leading_in_x(&self) -> UniPoly {
        UniPoly::new((0..=self.deg_y).map(|j| self.get(self.deg_x, j)).collect())
    }

    /// `Q(y, x)`.
    pub fn swapped(&self) -> BiPoly {
        BiPoly::from_fn(self.deg_y, self.deg_x, |i, j| self.get(j, i))
    }

    /// `Q(x, x)`.
    pub fn diagonal(&self) -> UniPoly {
        let mut out = vec![Complex64::ZERO; self.deg_x + self.deg_y + 1];
        for i in 0..=self.deg_x {
            for j in 0..=self.deg_y {
                out[i + j] += self.get(i, j);
            }
        }
        UniPoly::new(out)
    }

    pub fn d_dx(&self) -> BiPoly {
        if self.deg_x == 0 {
            return BiPoly::new(0, 0, vec![Complex64::ZERO]);
        }
        BiPoly::from_fn(self.deg_x - 1, self.deg_y, |i, j| self.get(i + 1, j) * (i + 1) as f64)
    }

    pub fn d_dy(&self) -> BiPoly {
        if self.deg_y == 0 {
            return BiPoly::new(0, 0, vec![Complex64::ZERO]);
        }
        BiPoly::from_fn(self.deg_x, self.deg_y - 1, |i, j| self.get(i, j + 1) * (j + 1) as f64)
    }

    pub fn scale(&self, s: Complex64) -> BiPoly {
        BiPoly::new(self.deg_x, self.deg_y, self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Zero coefficients below `rel * max|coeff|`, then trim edges.
    pub fn trimmed(&self, rel: f64) -> BiPoly {
        let cut = rel * self.max_abs_coeff();
        BiPoly::new(
            self.deg_x,
            self.deg_y,
            self.coeffs
                .iter()
                .map(|&c| if c.norm() <= cut { Complex64::ZERO } else { c })
                .collect(),
        )
    }

    /// Divide by the coefficient of `x^deg_x y^0`, or by the largest
    /// coefficient when that entry is zero.
    pub fn normalized_in_x(&self) -> BiPoly {
        let lead = self.get(self.deg_x, 0);
        let s = if lead != Complex64::ZERO {
            lead
        } else {
            *self
                .coeffs
                .iter()
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .unwrap_or(&Complex64::ONE)
        };
        self.scale(s.inv())
    }

    /// `min over s in {+1, -1, scale}` style comparison: the largest
    /// coefficient difference after matching the scale of `other`'s largest
    /// entry.
    pub fn distance_up_to_scale(&self, other: &BiPoly) -> f64 {
        let dx = self.deg_x.max(other.deg_x);
        let dy = self.deg_y.max(other.deg_y);
        let (mut bi, mut bj) = (0, 0);
        let mut best = 0.0;
        for i in 0..=dx {
            for j in 0..=dy {
                let v = other.get(i, j).norm();
                if v > best {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        }
        let mine = self.get(bi, bj);
        if mine == Complex64::ZERO || best == 0.0 {
            return f64::INFINITY;
        }
        let s = other.get(bi, bj) / mine;
        let mut worst: f64 = 0.0;
        for i in 0..=dx {
            for j in 0..=dy {
                worst = worst.max((self.get(i, j) * s - other.get(i, j)).norm());
            }
        }
        worst / best
    }
}
