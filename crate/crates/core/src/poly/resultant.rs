//! Resultant elimination by evaluation on roots-of-unity grids, a Sylvester
//! determinant per node, and inverse-DFT coefficient recovery.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use super::bi::BiPoly;
use super::linalg::Matrix;
use super::uni::UniPoly;
use crate::error::{CorrError, Result};

/// Coefficients below this fraction of the largest one are set to zero.
pub const TRIM_REL: f64 = 1e-9;
/// Off-grid relative mismatch above which the interpolant is flagged.
pub const ILL_CONDITIONED_REL: f64 = 1e-6;
// Grid values below this fraction of the Hadamard-type scale count as zero.
const DEGENERATE_REL: f64 = 1e-11;

/// Sylvester resultant of `a` and `b` (ascending coefficients) taken with
/// their *formal* degrees `a.len() - 1`, `b.len() - 1`.
pub fn sylvester_resultant(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let m = a.len().saturating_sub(1);
    let n = b.len().saturating_sub(1);
    if a.is_empty() || b.is_empty() {
        return Complex64::ZERO;
    }
    if m == 0 {
        return a[0].powu(n as u32);
    }
    if n == 0 {
        return b[0].powu(m as u32);
    }
    let size = m + n;
    let mut s = Matrix::zeros(size);
    for row in 0..n {
        for (k, &c) in a.iter().rev().enumerate() {
            s.set(row, row + k, c);
        }
    }
    for row in 0..m {
        for (k, &c) in b.iter().rev().enumerate() {
            s.set(n + row, row + k, c);
        }
    }
    s.determinant()
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Result of a bivariate elimination.
#[derive(Clone, Debug)]
pub struct Elimination {
    pub poly: BiPoly,
    /// Relative mismatch between the interpolant and direct Sylvester
    /// evaluation at off-grid check points.
    pub residual: f64,
    pub ill_conditioned: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct GridOptions {
    /// Node radius in `x` (the first output variable).
    pub radius_x: f64,
    /// Node radius in `y`.
    pub radius_y: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            radius_x: 1.0,
            radius_y: 1.0,
        }
    }
}

fn nodes(count: usize, radius: f64) -> Vec<Complex64> {
    (0..count)
        .map(|k| Complex64::from_polar(radius, TAU * k as f64 / count as f64))
        .collect()
}

fn pad(mut p: Vec<Complex64>, len: usize) -> Vec<Complex64> {
    p.resize(len, Complex64::ZERO);
    p
}

/// Inverse DFT along one axis with a fixed summation order.
fn inverse_dft(values: &[Complex64], radius: f64) -> Vec<Complex64> {
    let n = values.len();
    let twiddle: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(1.0, -TAU * k as f64 / n as f64))
        .collect();
    let mut out = Vec::with_capacity(n);
    let mut scale = 1.0 / n as f64;
    for i in 0..n {
        let mut acc = Complex64::ZERO;
        for (k, &v) in values.iter().enumerate() {
            acc += v * twiddle[(i * k) % n];
        }
        out.push(acc * scale);
        scale /= radius;
    }
    out
}

/// `Res_t(A(x, t), B(t, y))` as a polynomial in `(x, y)`.
///
/// `a` is read as a polynomial in `(x, t)` and `b` in `(t, y)`. Output degree
/// bounds are `deg_x A * deg_t B` and `deg_y B * deg_t A`.
pub fn resultant_elim(a: &BiPoly, b: &BiPoly) -> Result<Elimination> {
    resultant_elim_with(a, b, &GridOptions::default())
}

pub fn resultant_elim_with(a: &BiPoly, b: &BiPoly, opts: &GridOptions) -> Result<Elimination> {
    let deg_t_a = a.deg_y();
    let deg_t_b = b.deg_x();
    let bound_x = a.deg_x() * deg_t_b;
    let bound_y = b.deg_y() * deg_t_a;
    let xs = nodes(bound_x + 1, opts.radius_x);
    let ys = nodes(bound_y + 1, opts.radius_y);

    let a_rows: Vec<Vec<Complex64>> = xs
        .iter()
        .map(|&x| pad(a.specialize_x(x).coeffs().to_vec(), deg_t_a + 1))
        .collect();
    let b_cols: Vec<Vec<Complex64>> = ys
        .iter()
        .map(|&y| pad(b.specialize_y(y).coeffs().to_vec(), deg_t_b + 1))
        .collect();

    let grid: Vec<Vec<Complex64>> = a_rows
        .par_iter()
        .map(|ar| b_cols.iter().map(|bc| sylvester_resultant(ar, bc)).collect())
        .collect();

    let scale = a_rows
        .iter()
        .map(|r| norm2(r).powi(deg_t_b as i32))
        .fold(0.0, f64::max)
        * b_cols
            .iter()
            .map(|c| norm2(c).powi(deg_t_a as i32))
            .fold(0.0, f64::max);
    let peak = grid
        .iter()
        .flat_map(|row| row.iter().map(|v| v.norm()))
        .fold(0.0, f64::max);
    if !peak.is_finite() {
        return Err(CorrError::NonFinite("resultant grid"));
    }
    if peak <= DEGENERATE_REL * scale {
        return Err(CorrError::DegenerateResultant);
    }

    // Transform along y for every x-row, then along x for every y-index.
    let half: Vec<Vec<Complex64>> = grid.par_iter().map(|row| inverse_dft(row, opts.radius_y)).collect();
    let ny = bound_y + 1;
    let columns: Vec<Vec<Complex64>> = (0..ny)
        .into_par_iter()
        .map(|j| {
            let col: Vec<Complex64> = half.iter().map(|row| row[j]).collect();
            inverse_dft(&col, opts.radius_x)
        })
        .collect();
    let poly = BiPoly::from_fn(bound_x, bound_y, |i, j| columns[j][i]).trimmed(TRIM_REL);
    if poly.is_zero() {
        return Err(CorrError::DegenerateResultant);
    }

    let checks = [
        (Complex64::new(0.37, 0.61), Complex64::new(-0.53, 0.29)),
        (Complex64::new(-0.71, -0.18), Complex64::new(0.44, -0.83)),
    ];
    let mut residual: f64 = 0.0;
    for (cx, cy) in checks {
        let x = cx * opts.radius_x;
        let y = cy * opts.radius_y;
        let direct = sylvester_resultant(
            &pad(a.specialize_x(x).coeffs().to_vec(), deg_t_a + 1),
            &pad(b.specialize_y(y).coeffs().to_vec(), deg_t_b + 1),
        );
        let interp = poly.eval(x, y);
        let denom = poly.abs_eval(x, y).max(f64::MIN_POSITIVE);
        residual = residual.max((direct - interp).norm() / denom);
    }
    Ok(Elimination {
        poly,
        residual,
        ill_conditioned: residual > ILL_CONDITIONED_REL,
    })
}

/// `Res_s(A(s, z), B(s, z))` as a polynomial in `z`; both inputs are read as
/// polynomials in `(s, z)`.
pub fn eliminate_first(a: &BiPoly, b: &BiPoly) -> Result<UniPoly> {
    let (da, db) = (a.deg_x(), b.deg_x());
    let bound = a.deg_y() * db + b.deg_y() * da;
    let zs = nodes(bound + 1, 1.0);
    let mut scale: f64 = 0.0;
    let values: Vec<Complex64> = zs
        .iter()
        .map(|&z| {
            let pa = pad(a.specialize_y(z).coeffs().to_vec(), da + 1);
            let pb = pad(b.specialize_y(z).coeffs().to_vec(), db + 1);
            scale = scale.max(norm2(&pa).powi(db as i32) * norm2(&pb).powi(da as i32));
            sylvester_resultant(&pa, &pb)
        })
        .collect();
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak <= DEGENERATE_REL * scale {
        return Err(CorrError::DegenerateResultant);
    }
    Ok(UniPoly::new(inverse_dft(&values, 1.0)).trimmed(TRIM_REL))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn sylvester_matches_product_formula() {
        // Res((t-1)(t-2), (t-3)) = (1-3)(2-3) = 2 with monic inputs.
        let a = [r(2.0), r(-3.0), r(1.0)];
        let b = [r(-3.0), r(1.0)];
        let res = sylvester_resultant(&a, &b);
        assert!((res - r(2.0)).norm() < 1e-12, "{res}");
    }

    #[test]
    fn eliminates_square_root_against_cube_root() {
        // A = t^2 - x in (x, t); B = t^3 - y in (t, y); Res = ±(y^2 - x^3).
        let a = BiPoly::from_terms(&[(0, 2, r(1.0)), (1, 0, r(-1.0))]);
        let b = BiPoly::from_terms(&[(3, 0, r(1.0)), (0, 1, r(-1.0))]);
        let e = resultant_elim(&a, &b).unwrap();
        let expect = BiPoly::from_terms(&[(0, 2, r(1.0)), (3, 0, r(-1.0))]);
        assert!(e.poly.distance_up_to_scale(&expect) < 1e-12, "{:?}", e.poly);
        assert_eq!((e.poly.deg_x(), e.poly.deg_y()), (3, 2));
        assert!(!e.ill_conditioned);
    }

    #[test]
    fn substitution_case() {
        let a = BiPoly::from_terms(&[(0, 1, r(1.0)), (1, 0, r(-1.0))]);
        let b = BiPoly::from_terms(&[(2, 0, r(1.0)), (0, 1, r(-1.0))]);
        let e = resultant_elim(&a, &b).unwrap();
        let expect = BiPoly::from_terms(&[(0, 1, r(1.0)), (2, 0, r(-1.0))]);
        assert!(e.poly.distance_up_to_scale(&expect) < 1e-12);
    }

    #[test]
    fn shared_factor_is_degenerate() {
        // A = (t - 1)(t - x), B = (t - 1)(t - y): common factor t - 1.
        let a = BiPoly::from_terms(&[(0, 2, r(1.0)), (0, 1, r(-1.0)), (1, 1, r(-1.0)), (1, 0, r(1.0))]);
        let b = BiPoly::from_terms(&[(2, 0, r(1.0)), (1, 0, r(-1.0)), (1, 1, r(-1.0)), (0, 1, r(1.0))]);
        assert!(matches!(resultant_elim(&a, &b), Err(CorrError::DegenerateResultant)));
    }

    #[test]
    fn eliminate_first_gives_discriminant_values() {
        // Res_s(s^2 - z, 2s) = 4 * (-z) up to sign: the critical value of s^2 is 0.
        let a = BiPoly::from_terms(&[(2, 0, r(1.0)), (0, 1, r(-1.0))]);
        let b = BiPoly::from_terms(&[(1, 0, r(2.0))]);
        let p = eliminate_first(&a, &b).unwrap();
        assert_eq!(p.degree(), 1);
        assert!(p.coeff(0).norm() < 1e-12);
    }
}
