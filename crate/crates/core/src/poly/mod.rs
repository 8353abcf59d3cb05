//! Complex polynomial arithmetic: univariate and bivariate polynomials, the
//! all-roots solver and resultant elimination.

mod bi;
pub mod linalg;
mod resultant;
mod roots;
mod uni;

pub use bi::{BiPoly, BiPolyLiteral};
pub use resultant::{
    eliminate_first, resultant_elim, resultant_elim_with, sylvester_resultant, Elimination, GridOptions,
    ILL_CONDITIONED_REL, TRIM_REL,
};
pub use roots::{raw_roots, roots, roots_with, Root, RootOptions, RootSet};
pub use uni::UniPoly;
pub(crate) use uni::shift_constant;

use num_complex::Complex64;

/// Chebyshev polynomial `T_m`, from `T_{m+1} = 2z T_m - T_{m-1}`.
pub fn chebyshev(m: usize) -> UniPoly {
    let mut prev = UniPoly::constant(Complex64::ONE);
    if m == 0 {
        return prev;
    }
    let two_z = UniPoly::from_real(&[0.0, 2.0]);
    let mut cur = UniPoly::identity();
    for _ in 1..m {
        let next = &(&two_z * &cur) - &prev;
        prev = cur;
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_small() {
        assert_eq!(chebyshev(0), UniPoly::from_real(&[1.0]));
        assert_eq!(chebyshev(1), UniPoly::from_real(&[0.0, 1.0]));
        assert_eq!(chebyshev(2), UniPoly::from_real(&[-1.0, 0.0, 2.0]));
        assert_eq!(chebyshev(3), UniPoly::from_real(&[0.0, -3.0, 0.0, 4.0]));
    }

    #[test]
    fn chebyshev_cosine_identity() {
        for m in 0..12 {
            let t = chebyshev(m);
            for k in 0..7 {
                let theta = 0.37 * k as f64;
                let v = t.eval(Complex64::new(theta.cos(), 0.0));
                assert!((v.re - (m as f64 * theta).cos()).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn t3_after_t2_is_t6() {
        let lhs = chebyshev(3).compose(&chebyshev(2));
        assert!(lhs.max_coeff_diff(&chebyshev(6)) < 1e-12);
    }
}
