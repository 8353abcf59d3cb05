//! Named correspondences used throughout tests, benches and the CLI.

use num_complex::Complex64;

use crate::correspondence::Correspondence;
use crate::poly::{chebyshev, BiPoly, UniPoly};

/// `z ↦ z²` as the pair `(g, f) = (z, z²)`.
pub fn e1() -> Correspondence {
    Correspondence::parametrized(UniPoly::identity(), UniPoly::from_real(&[0.0, 0.0, 1.0]))
        .expect("valid")
        .with_name("e1")
}

/// `(g, f) = (z² - z, z³)`, degrees `(2, 3)`.
pub fn e2() -> Correspondence {
    Correspondence::parametrized(
        UniPoly::from_real(&[0.0, -1.0, 1.0]),
        UniPoly::from_real(&[0.0, 0.0, 0.0, 1.0]),
    )
    .expect("valid")
    .with_name("e2")
}

/// `(g, f) = (T₂, T₆)`; its graph is `(y - T₃(x))²`.
pub fn chebyshev_pair() -> Correspondence {
    Correspondence::parametrized(chebyshev(2), chebyshev(6))
        .expect("valid")
        .with_name("chebyshev_pair")
}

/// Implicit graph `y² - x³`.
pub fn cusp() -> Correspondence {
    let q = BiPoly::from_terms(&[(0, 2, Complex64::new(1.0, 0.0)), (3, 0, Complex64::new(-1.0, 0.0))]);
    Correspondence::implicit(q).expect("valid").with_name("cusp")
}

/// Look up a catalog entry by name.
pub fn by_name(name: &str) -> Option<Correspondence> {
    match name {
        "e1" => Some(e1()),
        "e2" => Some(e2()),
        "chebyshev_pair" => Some(chebyshev_pair()),
        "cusp" => Some(cusp()),
        _ => None,
    }
}

pub const NAMES: [&str; 4] = ["e1", "e2", "chebyshev_pair", "cusp"];
