//! Property tests for structural invariants that hold for every input.

use corrdyn::catalog;
use corrdyn::equilibrium::{preimage_tree, pullback_step, PointMeasure};
use corrdyn::exceptional::{find_e0, invariant_core, orbit};
use corrdyn::uniqueness::{factor_compose, hausdorff, poly_preimage_set, CompactSet};
use corrdyn::{Complex64, Correspondence, UniPoly};
use proptest::prelude::*;

fn point(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(a, b)| Complex64::new(a, b))
}

fn catalog_entry() -> impl Strategy<Value = Correspondence> {
    prop_oneof![
        Just(catalog::e1()),
        Just(catalog::e2()),
        Just(catalog::chebyshev_pair()),
        Just(catalog::cusp()),
    ]
}

/// Nonzero complex number with modulus in `[0.5, 2]`.
fn unit_scale() -> impl Strategy<Value = Complex64> {
    (0.5f64..2.0, 0.0..std::f64::consts::TAU).prop_map(|(r, th)| Complex64::from_polar(r, th))
}

fn affine(a: Complex64, b: Complex64, p: &UniPoly) -> UniPoly {
    let mut c: Vec<Complex64> = p.coeffs().iter().map(|&x| a * x).collect();
    c[0] += b;
    UniPoly::new(c)
}

/// `E2` conjugated by `z -> a z + b`.
fn conjugated_e2(a: Complex64, b: Complex64) -> Correspondence {
    let g = UniPoly::from_real(&[0.0, -1.0, 1.0]);
    let f = UniPoly::from_real(&[0.0, 0.0, 0.0, 1.0]);
    Correspondence::parametrized(affine(a, b, &g), affine(a, b, &f)).unwrap()
}

fn poly(max_deg: usize) -> impl Strategy<Value = UniPoly> {
    (1..=max_deg).prop_flat_map(|d| {
        (prop::collection::vec(point(1.0), d), unit_scale()).prop_map(|(mut c, lead)| {
            c.push(lead);
            UniPoly::new(c)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fibers_have_degree_many_points(f in catalog_entry(), z in point(3.0)) {
        let d = f.degrees();
        let pre = f.preimages(z).unwrap();
        let img = f.images(z).unwrap();
        prop_assert_eq!(pre.total(), d.d2);
        prop_assert_eq!(img.total(), d.d1);
    }

    #[test]
    fn preimages_map_forward_to_the_point(f in catalog_entry(), z in point(3.0)) {
        for x in f.preimages(z).unwrap().locations() {
            let best = f.images(x).unwrap().locations().map(|y| (y - z).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(best <= 1e-6 * (1.0 + z.norm()), "x = {x}, miss {best}");
        }
    }

    #[test]
    fn pullback_keeps_unit_mass(f in catalog_entry(), z in point(2.0), seed in any::<u64>()) {
        let mu = PointMeasure::dirac(z);
        let once = pullback_step(&f, &mu, 1000, seed).unwrap();
        let twice = pullback_step(&f, &once, 1000, seed).unwrap();
        prop_assert!((once.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!((twice.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn preimage_tree_has_unit_mass(f in catalog_entry(), z in point(2.0), n in 1usize..4) {
        let mu = preimage_tree(&f, z, n).unwrap();
        prop_assert!((mu.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!(mu.len() <= f.degrees().d2.pow(n as u32));
    }

    #[test]
    fn polynomial_preimage_counts(p in poly(4), n in 4usize..40) {
        let k = CompactSet::segment(n).unwrap();
        let pre = poly_preimage_set(&p, &k).unwrap();
        prop_assert_eq!(pre.len(), p.degree() * k.len());
        for &x in &pre.samples {
            let y = p.eval(x);
            let nearest = k.samples.iter().map(|s| (s - y).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(nearest < 1e-6 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn hausdorff_is_a_metric_on_samples(
        a in prop::collection::vec(point(2.0), 1..30),
        b in prop::collection::vec(point(2.0), 1..30),
        c in prop::collection::vec(point(2.0), 1..30),
    ) {
        let (ka, kb, kc) = (CompactSet::raw(a).unwrap(), CompactSet::raw(b).unwrap(), CompactSet::raw(c).unwrap());
        prop_assert_eq!(hausdorff(&ka, &ka), 0.0);
        prop_assert!((hausdorff(&ka, &kb) - hausdorff(&kb, &ka)).abs() < 1e-15);
        prop_assert!(hausdorff(&ka, &kc) <= hausdorff(&ka, &kb) + hausdorff(&kb, &kc) + 1e-12);
    }

    #[test]
    fn composite_factors_through_its_inner_polynomial(outer in poly(3), inner in poly(3)) {
        let f = outer.compose(&inner);
        let r = factor_compose(&f, &inner);
        prop_assert!(r.is_some(), "missed {:?}", outer);
        let r = r.unwrap();
        prop_assert_eq!(r.degree(), outer.degree());
        let scale = f.coeffs().iter().map(|c| c.norm()).fold(1.0, f64::max);
        for (x, y) in r.compose(&inner).coeffs().iter().zip(f.coeffs()) {
            prop_assert!((x - y).norm() <= 1e-6 * scale);
        }
    }

    #[test]
    fn factorization_is_sound(f in poly(6), g in poly(3)) {
        if let Some(r) = factor_compose(&f, &g) {
            let scale = f.coeffs().iter().map(|c| c.norm()).fold(1.0, f64::max);
            let rg = r.compose(&g);
            prop_assert_eq!(rg.degree(), f.degree());
            for (x, y) in rg.coeffs().iter().zip(f.coeffs()) {
                prop_assert!((x - y).norm() <= 1e-6 * scale);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn exceptional_set_moves_with_conjugation(a in unit_scale(), b in point(1.0)) {
        let f = conjugated_e2(a, b);
        let rep = find_e0(&f, 16).unwrap();
        prop_assert!(rep.certified);
        prop_assert_eq!(rep.e0.len(), 1);
        prop_assert!((rep.e0[0] - b).norm() < 1e-6, "e0 = {:?}, expected {b}", rep.e0);
        let again = invariant_core(&f, &rep.e0).unwrap();
        prop_assert_eq!(again.len(), 1);
        let orb = orbit(&f, &rep.e0, 1).unwrap();
        prop_assert!(orb.iter().any(|z| (z - b).norm() < 1e-6));
        prop_assert!(orb.iter().any(|z| (z - (a + b)).norm() < 1e-6));
    }
}
