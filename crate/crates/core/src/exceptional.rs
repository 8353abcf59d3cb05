//! The totally invariant finite set `ℰ₀`, its forward orbit `ℰ`, and a
//! per-point test comparing `μ^z_n` with an estimate of the equilibrium
//! measure.
//!
//! A point of `ℰ₀` has its whole preimage fiber inside `ℰ₀`. Such fibers are
//! collapsed, which forces critical coincidences, so candidates are drawn
//! from the fixed points, the critical values and two preimage layers of
//! those. The candidate set is then shrunk until it is totally invariant.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correspondence::{dedupe, merge_weighted, Correspondence, FIBER_CLUSTER};
use crate::poly::RootSet;
use crate::equilibrium::{measure_distance, preimage_tree, BBox, MeasureDistance, PointMeasure};
use crate::error::{CorrError, Result};
use crate::periodic::fixed_points;

/// Largest accepted `max_size` for [`find_e0`].
pub const MAX_E0: usize = 16;
/// Largest orbit truncation computed by [`orbit`].
pub const ORBIT_LIMIT: usize = 10_000;
/// A measure is flagged when its distance exceeds this multiple of the
/// baseline at the control point.
pub const FLAG_FACTOR: f64 = 3.0;
/// Generic control point for [`exceptional_test`].
pub const CONTROL_POINT: Complex64 = Complex64::new(0.4142, -0.3027);

const SEED_LAYERS: usize = 2;
const CONTAIN_REL: f64 = 1e-6;
const TEST_GRID: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalReport {
    pub e0: Vec<Complex64>,
    /// `∪_{k ≤ n} F^k(ℰ₀)` when requested, otherwise `ℰ₀` itself.
    pub orbit_truncation: Vec<Complex64>,
    /// Every fiber over `ℰ₀` re-verified to lie in `ℰ₀` with total
    /// multiplicity `d₂`.
    pub certified: bool,
    /// Number of candidates examined.
    pub seeds: usize,
}

impl ExceptionalReport {
    pub fn to_json(&self) -> serde_json::Value {
        let pts = |v: &[Complex64]| v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>();
        serde_json::json!({
            "e0": pts(&self.e0),
            "certified": self.certified,
            "orbit": pts(&self.orbit_truncation),
            "seeds": self.seeds,
        })
    }
}

/// Preimages of `z` with split multiple roots merged back. A `d₂`-fold root
/// perturbed by rounding splits by about `ε^{1/d₂}`; the weighted centroid
/// of the split cluster recovers it.
fn stable_fiber(f: &Correspondence, z: Complex64) -> Result<RootSet> {
    let rs = f.preimages(z)?;
    let rel = 10.0 * f64::EPSILON.powf(1.0 / f.degrees().d2.max(1) as f64);
    let weighted: Vec<(Complex64, usize)> = rs.roots.iter().map(|r| (r.location, r.multiplicity)).collect();
    Ok(merge_weighted(&weighted, rel.max(FIBER_CLUSTER)))
}

fn contains(set: &[Complex64], z: Complex64) -> bool {
    set.iter().any(|&s| (s - z).norm() <= CONTAIN_REL * (1.0 + s.norm().max(z.norm())))
}

/// Candidate points: fixed points, critical values and two preimage layers.
pub fn seed_set(f: &Correspondence) -> Result<Vec<Complex64>> {
    let mut seeds: Vec<Complex64> = f.critical_values()?.locations().collect();
    // Fixed points are unavailable when the graph does not grow; the
    // critical-value layers still cover collapsed fibers.
    if let Ok(fixed) = fixed_points(f) {
        seeds.extend(fixed.iter().map(|p| p.location));
    }
    let mut layer = dedupe(&seeds, FIBER_CLUSTER).locations().collect::<Vec<_>>();
    for _ in 0..SEED_LAYERS {
        let next: Vec<Complex64> = layer
            .par_iter()
            .map(|&z| f.preimages(z).map(|rs| rs.locations().collect::<Vec<_>>()))
            .collect::<Result<Vec<_>>>()?
            .concat();
        seeds.extend(next.iter().copied());
        layer = dedupe(&next, FIBER_CLUSTER).locations().collect();
    }
    Ok(dedupe(&seeds, FIBER_CLUSTER).locations().collect())
}

/// Largest subset of `candidates` with `F⁻¹(S) = S`, by repeated removal of
/// points whose fiber leaves the set or which are not the preimage of any
/// member.
pub fn invariant_core(f: &Correspondence, candidates: &[Complex64]) -> Result<Vec<Complex64>> {
    let fibers: Vec<Vec<Complex64>> = candidates
        .par_iter()
        .map(|&z| stable_fiber(f, z).map(|rs| rs.locations().collect()))
        .collect::<Result<_>>()?;
    let mut alive = vec![true; candidates.len()];
    loop {
        let current: Vec<Complex64> = candidates.iter().zip(&alive).filter(|p| *p.1).map(|p| *p.0).collect();
        let reached: Vec<Complex64> = fibers
            .iter()
            .zip(&alive)
            .filter(|p| *p.1)
            .flat_map(|p| p.0.iter().copied())
            .collect();
        let mut changed = false;
        for (i, z) in candidates.iter().enumerate() {
            if alive[i] && (!fibers[i].iter().all(|&w| contains(&current, w)) || !contains(&reached, *z)) {
                alive[i] = false;
                changed = true;
            }
        }
        if !changed {
            return Ok(current);
        }
    }
}

fn certify(f: &Correspondence, e0: &[Complex64]) -> Result<bool> {
    let d2 = f.degrees().d2;
    for &e in e0 {
        let fiber = stable_fiber(f, e)?;
        if fiber.total() != d2 || !fiber.locations().all(|w| contains(e0, w)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `ℰ₀` as the invariant core of the seed set. An empty core is a valid
/// answer. A core larger than `max_size` is returned uncertified.
pub fn find_e0(f: &Correspondence, max_size: usize) -> Result<ExceptionalReport> {
    find_e0_with(f, max_size, &[])
}

/// [`find_e0`] with extra candidates added to the seed set.
pub fn find_e0_with(f: &Correspondence, max_size: usize, extra: &[Complex64]) -> Result<ExceptionalReport> {
    if max_size > MAX_E0 {
        return Err(CorrError::invalid(format!("max_size must be at most {MAX_E0}")));
    }
    let mut seeds = seed_set(f)?;
    seeds.extend_from_slice(extra);
    let seeds: Vec<Complex64> = dedupe(&seeds, FIBER_CLUSTER).locations().collect();
    let mut e0 = invariant_core(f, &seeds)?;
    e0.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let certified = e0.len() <= max_size && certify(f, &e0)?;
    Ok(ExceptionalReport {
        orbit_truncation: e0.clone(),
        e0,
        certified,
        seeds: seeds.len(),
    })
}

/// `∪_{k ≤ n} F^k(e0)`, deduplicated at the fiber clustering radius.
pub fn orbit(f: &Correspondence, e0: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    let d1 = f.degrees().d1 as f64;
    let bound = e0.len() as f64 * (0..=n).map(|k| d1.powi(k as i32)).sum::<f64>();
    if bound > ORBIT_LIMIT as f64 {
        return Err(CorrError::guard(format!(
            "orbit truncation at n = {n} may reach {bound:.0} points (limit {ORBIT_LIMIT})"
        )));
    }
    let mut all: Vec<Complex64> = e0.to_vec();
    let mut layer: Vec<Complex64> = e0.to_vec();
    for _ in 0..n {
        let next: Vec<Complex64> = layer
            .par_iter()
            .map(|&z| f.images(z).map(|rs| rs.locations().collect::<Vec<_>>()))
            .collect::<Result<Vec<_>>>()?
            .concat();
        layer = dedupe(&next, FIBER_CLUSTER).locations().collect();
        all.extend(layer.iter().copied());
    }
    let mut out: Vec<Complex64> = dedupe(&all, FIBER_CLUSTER).locations().collect();
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalTest {
    pub distance: MeasureDistance,
    /// Distance of `μ^c_n` at [`CONTROL_POINT`].
    pub baseline: MeasureDistance,
    pub flagged: bool,
}

/// Distance from `μ^z_n` to `mu_hat`, flagged when it exceeds
/// [`FLAG_FACTOR`] times the same distance at the control point.
pub fn exceptional_test(f: &Correspondence, z: Complex64, n: usize, mu_hat: &PointMeasure) -> Result<ExceptionalTest> {
    let bbox = BBox::covering(&[mu_hat]);
    exceptional_test_in(f, z, n, mu_hat, bbox, TEST_GRID)
}

pub fn exceptional_test_in(
    f: &Correspondence,
    z: Complex64,
    n: usize,
    mu_hat: &PointMeasure,
    bbox: BBox,
    n_grid: usize,
) -> Result<ExceptionalTest> {
    let distance = measure_distance(&preimage_tree(f, z, n)?, mu_hat, bbox, n_grid)?;
    let baseline = measure_distance(&preimage_tree(f, CONTROL_POINT, n)?, mu_hat, bbox, n_grid)?;
    Ok(ExceptionalTest {
        flagged: distance.total > FLAG_FACTOR * baseline.total,
        distance,
        baseline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::equilibrium::{brolin_sample, pullback_step, SamplerConfig};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn e2_core_is_origin() {
        let rep = find_e0(&catalog::e2(), 16).unwrap();
        assert_eq!(rep.e0.len(), 1, "{rep:?}");
        assert!(rep.e0[0].norm() < 1e-9);
        assert!(rep.certified);
    }

    #[test]
    fn e1_core_is_origin() {
        let rep = find_e0(&catalog::e1(), 16).unwrap();
        assert_eq!(rep.e0.len(), 1, "{rep:?}");
        assert!(rep.e0[0].norm() < 1e-9);
        assert!(rep.certified);
    }

    #[test]
    fn chebyshev_core_is_empty() {
        let rep = find_e0(&catalog::chebyshev_pair(), 16).unwrap();
        assert!(rep.e0.is_empty(), "{rep:?}");
        assert!(rep.certified);
    }

    #[test]
    fn rejects_large_cap() {
        assert!(find_e0(&catalog::e2(), 17).is_err());
    }

    #[test]
    fn extra_generic_seed_changes_nothing() {
        let e2 = catalog::e2();
        let a = find_e0(&e2, 16).unwrap();
        let b = find_e0_with(&e2, 16, &[c(0.71, -0.33)]).unwrap();
        assert_eq!(a.e0, b.e0);
    }

    #[test]
    fn seeds_outside_core_break_closure() {
        let e2 = catalog::e2();
        let rep = find_e0(&e2, 16).unwrap();
        for s in seed_set(&e2).unwrap() {
            if contains(&rep.e0, s) {
                continue;
            }
            let mut bigger = rep.e0.clone();
            bigger.push(s);
            assert!(!certify(&e2, &bigger).unwrap() || invariant_core(&e2, &bigger).unwrap().len() < bigger.len());
        }
    }

    #[test]
    fn pullback_of_core_stays_in_core() {
        let e2 = catalog::e2();
        let rep = find_e0(&e2, 16).unwrap();
        let mu = PointMeasure::uniform(&rep.e0);
        let pulled = pullback_step(&e2, &mu, usize::MAX, 0).unwrap();
        assert!(pulled.locations().all(|w| contains(&rep.e0, w)));
    }

    #[test]
    fn e2_orbit() {
        let e2 = catalog::e2();
        let one = orbit(&e2, &[Complex64::ZERO], 1).unwrap();
        assert_eq!(one.len(), 2, "{one:?}");
        assert!(one[0].norm() < 1e-9 && (one[1] - 1.0).norm() < 1e-9);
        let three = orbit(&e2, &[Complex64::ZERO], 3).unwrap();
        assert_eq!(three.len(), 8, "{three:?}");
        assert!(three.iter().all(|z| z.im.abs() < 1e-9));
        assert!(orbit(&e2, &[], 4).unwrap().is_empty());
        assert!(matches!(orbit(&e2, &[Complex64::ZERO], 14), Err(CorrError::Guard(_))));
    }

    #[test]
    fn e2_test_flags_origin_only() {
        let e2 = catalog::e2();
        let mu = brolin_sample(
            &e2,
            &SamplerConfig {
                n_samples: 20_000,
                ..SamplerConfig::with_seed(5)
            },
        )
        .unwrap();
        let zero = exceptional_test(&e2, Complex64::ZERO, 9, &mu).unwrap();
        assert!(zero.flagged, "{zero:?}");
        let ten = exceptional_test(&e2, c(10.0, 0.0), 9, &mu).unwrap();
        assert!(!ten.flagged, "{ten:?}");
        assert!(ten.distance.total <= 2.0 * ten.baseline.total, "{ten:?}");
    }

    #[test]
    fn e1_test_flags_origin() {
        let e1 = catalog::e1();
        let mu = brolin_sample(&e1, &SamplerConfig::with_seed(1)).unwrap();
        assert!(exceptional_test(&e1, Complex64::ZERO, 8, &mu).unwrap().flagged);
    }

    #[test]
    fn json_shape() {
        let rep = find_e0(&catalog::e2(), 16).unwrap();
        let v = rep.to_json();
        assert_eq!(v["certified"], true);
        assert_eq!(v["e0"].as_array().unwrap().len(), 1);
    }
}
