//! All-roots solver: Aberth–Ehrlich simultaneous iteration from Newton-polygon
//! circles, Newton polishing, then multiplicity clustering.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::uni::UniPoly;
use crate::error::{CorrError, Result};

/// A root location together with its multiplicity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub location: Complex64,
    pub multiplicity: usize,
    /// `|p(location)|` after polishing.
    pub residual: f64,
}

/// Roots of a polynomial, counted with multiplicity.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<Root>,
    /// `false` when the iteration cap was hit; the roots are then partial.
    pub converged: bool,
}

impl RootSet {
    /// Sum of multiplicities.
    pub fn total(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn locations(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.roots.iter().map(|r| r.location)
    }

    /// Largest `|p(z)|` over the returned locations.
    pub fn max_residual(&self) -> f64 {
        self.roots.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    /// Each location repeated by its multiplicity.
    pub fn expanded(&self) -> Vec<Complex64> {
        self.roots
            .iter()
            .flat_map(|r| std::iter::repeat_n(r.location, r.multiplicity))
            .collect()
    }

    pub(crate) fn from_weighted(points: Vec<(Complex64, usize)>) -> Self {
        RootSet {
            roots: points
                .into_iter()
                .map(|(location, multiplicity)| Root {
                    location,
                    multiplicity,
                    residual: 0.0,
                })
                .collect(),
            converged: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootOptions {
    /// Roots closer than `cluster_radius * (1 + max |root|)` always merge.
    pub cluster_radius: f64,
    /// Relative accuracy of the input coefficients; controls how far apart a
    /// numerically multiple root may scatter and still be merged.
    pub coeff_rel_error: f64,
    pub max_iter: usize,
    /// Aberth stops once every correction is below `step_tol * max(1, |z|)`.
    pub step_tol: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            cluster_radius: 1e-7,
            coeff_rel_error: 4.0 * f64::EPSILON,
            max_iter: 500,
            step_tol: 1e-13,
        }
    }
}

impl RootOptions {
    pub fn with_cluster_radius(mut self, r: f64) -> Self {
        self.cluster_radius = r;
        self
    }

    pub fn with_coeff_error(mut self, e: f64) -> Self {
        self.coeff_rel_error = e.max(4.0 * f64::EPSILON);
        self
    }
}

// Candidate clusters are first grouped at this relative distance, then
// checked against the multiplicity perturbation model before merging.
const LOOSE_RADIUS: f64 = 1e-3;

/// Roots of `p` with multiplicities, clustering at relative radius `tol`.
pub fn roots(p: &UniPoly, tol: f64) -> Result<RootSet> {
    roots_with(p, &RootOptions::default().with_cluster_radius(tol))
}

pub fn roots_with(p: &UniPoly, opts: &RootOptions) -> Result<RootSet> {
    let (raw, converged) = simple_roots(p, opts)?;
    let set = cluster(p, &raw, opts, converged);
    if !converged {
        return Err(CorrError::NonConvergence {
            partial: Box::new(set),
        });
    }
    Ok(set)
}

/// Unclustered roots, one entry per root counted with multiplicity.
pub fn raw_roots(p: &UniPoly, opts: &RootOptions) -> Result<Vec<Complex64>> {
    let (raw, converged) = simple_roots(p, opts)?;
    if !converged {
        let partial = cluster(p, &raw, opts, false);
        return Err(CorrError::NonConvergence {
            partial: Box::new(partial),
        });
    }
    Ok(raw)
}

fn simple_roots(p: &UniPoly, opts: &RootOptions) -> Result<(Vec<Complex64>, bool)> {
    if p.is_zero() {
        return Err(CorrError::ZeroPolynomial);
    }
    if p.degree() == 0 {
        return Err(CorrError::ConstantPolynomial);
    }
    if p.coeffs().iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(CorrError::NonFinite("polynomial coefficient"));
    }
    // Exact zeros at the origin are split off before iterating.
    let zeros = p.coeffs().iter().take_while(|c| **c == Complex64::ZERO).count();
    let reduced = UniPoly::new(p.coeffs()[zeros..].to_vec());
    let mut out = vec![Complex64::ZERO; zeros];
    let converged = match reduced.degree() {
        0 => true,
        1 => {
            out.push(-reduced.coeff(0) / reduced.coeff(1));
            true
        }
        2 => {
            out.extend(quadratic(&reduced));
            true
        }
        _ => {
            let (zs, ok) = aberth(&reduced, opts);
            out.extend(zs);
            ok
        }
    };
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(CorrError::NonFinite("root iterate"));
    }
    for z in out.iter_mut().skip(zeros) {
        *z = polish(p, *z);
    }
    Ok((out, converged))
}

fn quadratic(p: &UniPoly) -> [Complex64; 2] {
    let (c, b, a) = (p.coeff(0), p.coeff(1), p.coeff(2));
    let disc = (b * b - 4.0 * a * c).sqrt();
    // Pick the sign that avoids cancellation.
    let q = if (b.conj() * disc).re >= 0.0 {
        -(b + disc) / 2.0
    } else {
        -(b - disc) / 2.0
    };
    if q == Complex64::ZERO {
        return [Complex64::ZERO, Complex64::ZERO];
    }
    [q / a, c / q]
}

/// `p(z) / p'(z)`, evaluated on the reversed polynomial when `|z| > 1`.
fn newton_ratio(p: &UniPoly, z: Complex64) -> (Complex64, f64) {
    let n = p.degree() as f64;
    if z.norm() <= 1.0 {
        let (v, dv) = p.eval_with_derivative(z);
        let err = p.abs_eval(z);
        if v == Complex64::ZERO {
            return (Complex64::ZERO, 0.0);
        }
        return (v / dv, v.norm() / err.max(f64::MIN_POSITIVE));
    }
    let w = z.inv();
    let mut q = Complex64::ZERO;
    let mut dq = Complex64::ZERO;
    let mut abs = 0.0;
    let wr = w.norm();
    for &c in p.coeffs() {
        dq = dq * w + q;
        q = q * w + c;
        abs = abs * wr + c.norm();
    }
    if q == Complex64::ZERO {
        return (Complex64::ZERO, 0.0);
    }
    let denom = q * n - w * dq;
    (z * q / denom, q.norm() / abs.max(f64::MIN_POSITIVE))
}

/// Initial guesses on the circles given by the upper convex hull of
/// `(i, log|a_i|)`.
fn initial_guesses(p: &UniPoly) -> Vec<Complex64> {
    let n = p.degree();
    let pts: Vec<(usize, f64)> = p
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(i, c)| (i, c.norm().ln()))
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &pt in &pts {
        while hull.len() >= 2 {
            let (i1, y1) = hull[hull.len() - 2];
            let (i2, y2) = hull[hull.len() - 1];
            let cross = (i2 as f64 - i1 as f64) * (pt.1 - y1) - (y2 - y1) * (pt.0 as f64 - i1 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let sigma = 0.7;
    let mut out = Vec::with_capacity(n);
    for w in hull.windows(2) {
        let (k0, y0) = w[0];
        let (k1, y1) = w[1];
        let count = k1 - k0;
        let radius = ((y0 - y1) / count as f64).exp();
        for j in 0..count {
            let angle = TAU * j as f64 / count as f64 + TAU * k0 as f64 / n as f64 + sigma;
            out.push(Complex64::from_polar(radius, angle));
        }
    }
    out
}

fn aberth(p: &UniPoly, opts: &RootOptions) -> (Vec<Complex64>, bool) {
    let n = p.degree();
    let mut z = initial_guesses(p);
    debug_assert_eq!(z.len(), n);
    let mut done = vec![false; n];
    for _ in 0..opts.max_iter {
        let mut all_done = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (ratio, rel_residual) = newton_ratio(p, z[i]);
            if ratio == Complex64::ZERO {
                done[i] = true;
                continue;
            }
            let zi = z[i];
            let s: Complex64 = z
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &zj)| {
                    let d = zi - zj;
                    if d == Complex64::ZERO {
                        Complex64::ZERO
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let w = ratio / (Complex64::ONE - ratio * s);
            if !w.re.is_finite() || !w.im.is_finite() {
                // Perturb off the singular configuration.
                z[i] = zi + Complex64::new(1e-8, 1e-8) * zi.norm().max(1.0);
                all_done = false;
                continue;
            }
            z[i] = zi - w;
            let scale = z[i].norm().max(1.0);
            if w.norm() <= opts.step_tol * scale || rel_residual <= 2.0 * f64::EPSILON {
                done[i] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            return (z, true);
        }
    }
    (z, false)
}

/// Two guarded Newton steps; a step is kept only if it lowers `|p|`.
fn polish(p: &UniPoly, mut z: Complex64) -> Complex64 {
    let mut best = p.eval(z).norm();
    for _ in 0..2 {
        if best == 0.0 {
            break;
        }
        let (v, dv) = p.eval_with_derivative(z);
        if dv == Complex64::ZERO {
            break;
        }
        let cand = z - v / dv;
        let r = p.eval(cand).norm();
        if r < best {
            best = r;
            z = cand;
        } else {
            break;
        }
    }
    z
}

fn single_linkage(points: &[Complex64], radius: f64, members: &[usize]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..members.len()).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        let mut k = i;
        while parent[k] != r {
            let next = parent[k];
            parent[k] = r;
            k = next;
        }
        r
    }
    for a in 0..members.len() {
        for b in (a + 1)..members.len() {
            if (points[members[a]] - points[members[b]]).norm() <= radius {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index_of_root = vec![usize::MAX; members.len()];
    for a in 0..members.len() {
        let r = find(&mut parent, a);
        if index_of_root[r] == usize::MAX {
            index_of_root[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[index_of_root[r]].push(members[a]);
    }
    groups
}

/// Whether `m` roots scattered within `spread` of `c` are consistent with a
/// single root of multiplicity `m` under coefficient noise.
fn is_numerical_multiple(p: &UniPoly, c: Complex64, m: usize, spread: f64, opts: &RootOptions) -> bool {
    let shifted = p.taylor_shift(c);
    let abs_poly = UniPoly::new(p.coeffs().iter().map(|a| Complex64::new(a.norm(), 0.0)).collect());
    let abs_shifted = abs_poly.taylor_shift(Complex64::new(c.norm(), 0.0));
    let am = shifted.get(m).map(|a| a.norm()).unwrap_or(0.0);
    if am == 0.0 {
        return false;
    }
    let err = opts.coeff_rel_error.max(4.0 * f64::EPSILON);
    let mut expected: f64 = 0.0;
    for j in 0..m {
        let delta = err * abs_shifted[j].re * (1 + p.degree()) as f64;
        let r = (delta / am).powf(1.0 / (m - j) as f64);
        expected = expected.max(r);
    }
    spread <= 10.0 * expected
}

fn cluster(p: &UniPoly, raw: &[Complex64], opts: &RootOptions, converged: bool) -> RootSet {
    let max_mag = raw.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let base = opts.cluster_radius * (1.0 + max_mag);
    let loose = (LOOSE_RADIUS * (1.0 + max_mag)).max(base);
    let all: Vec<usize> = (0..raw.len()).collect();
    let mut groups = Vec::new();
    for comp in single_linkage(raw, loose, &all) {
        if comp.len() == 1 {
            groups.push(comp);
            continue;
        }
        let c = comp.iter().map(|&i| raw[i]).sum::<Complex64>() / comp.len() as f64;
        let spread = comp.iter().map(|&i| (raw[i] - c).norm()).fold(0.0, f64::max);
        if spread <= base || is_numerical_multiple(p, c, comp.len(), spread, opts) {
            groups.push(comp);
        } else {
            groups.extend(single_linkage(raw, base, &comp));
        }
    }
    let mut roots: Vec<Root> = groups
        .into_iter()
        .map(|g| {
            let m = g.len();
            let centroid = g.iter().map(|&i| raw[i]).sum::<Complex64>() / m as f64;
            let spread = g.iter().map(|&i| (raw[i] - centroid).norm()).fold(0.0, f64::max);
            let location = if m == 1 {
                raw[g[0]]
            } else {
                polish_multiple(p, centroid, m, spread)
            };
            Root {
                location,
                multiplicity: m,
                residual: p.eval(location).norm(),
            }
        })
        .collect();
    roots.sort_by(|a, b| {
        a.location
            .re
            .total_cmp(&b.location.re)
            .then(a.location.im.total_cmp(&b.location.im))
    });
    RootSet { roots, converged }
}

/// Newton on `p^(m-1)`, which has a simple root at an `m`-fold root of `p`.
fn polish_multiple(p: &UniPoly, c: Complex64, m: usize, spread: f64) -> Complex64 {
    let mut d = p.clone();
    for _ in 0..m - 1 {
        d = d.derivative();
    }
    let mut z = c;
    for _ in 0..3 {
        let (v, dv) = d.eval_with_derivative(z);
        if dv == Complex64::ZERO || v == Complex64::ZERO {
            break;
        }
        let cand = z - v / dv;
        if (cand - c).norm() > spread.max(f64::EPSILON * (1.0 + c.norm())) {
            break;
        }
        z = cand;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_roots(set: &RootSet, expected: &[(Complex64, usize)], tol: f64) {
        assert_eq!(set.len(), expected.len(), "{set:?}");
        for &(loc, m) in expected {
            let hit = set
                .roots
                .iter()
                .find(|r| (r.location - loc).norm() <= tol)
                .unwrap_or_else(|| panic!("missing root {loc} in {set:?}"));
            assert_eq!(hit.multiplicity, m, "{set:?}");
        }
    }

    #[test]
    fn simple_quadratic() {
        let set = roots(&UniPoly::from_real(&[-1.0, 0.0, 1.0]), 1e-7).unwrap();
        assert_roots(&set, &[(cx(1.0, 0.0), 1), (cx(-1.0, 0.0), 1)], 1e-14);
    }

    #[test]
    fn triple_root_clusters() {
        // (z - 2)^3
        let p = UniPoly::from_real(&[-8.0, 12.0, -6.0, 1.0]);
        let set = roots(&p, 1e-7).unwrap();
        assert_roots(&set, &[(cx(2.0, 0.0), 3)], 1e-9);
        assert_eq!(set.total(), 3);
    }

    #[test]
    fn cubic_with_complex_pair() {
        // z^3 - z^2 + z = z (z^2 - z + 1)
        let p = UniPoly::from_real(&[0.0, 1.0, -1.0, 1.0]);
        let s3 = 3f64.sqrt();
        let set = roots(&p, 1e-7).unwrap();
        assert_roots(
            &set,
            &[(cx(0.0, 0.0), 1), (cx(0.5, s3 / 2.0), 1), (cx(0.5, -s3 / 2.0), 1)],
            1e-13,
        );
    }

    #[test]
    fn pure_power_at_origin() {
        let set = roots(&UniPoly::monomial(Complex64::ONE, 3), 1e-7).unwrap();
        assert_roots(&set, &[(Complex64::ZERO, 3)], 0.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(roots(&UniPoly::zero(), 1e-7), Err(CorrError::ZeroPolynomial)));
        assert!(matches!(
            roots(&UniPoly::constant(Complex64::ONE), 1e-7),
            Err(CorrError::ConstantPolynomial)
        ));
        let opts = RootOptions {
            max_iter: 1,
            ..RootOptions::default()
        };
        let p = UniPoly::from_real(&[1.0, 0.3, -2.0, 0.5, 1.0, 0.25, 3.0]);
        match roots_with(&p, &opts) {
            Err(CorrError::NonConvergence { partial }) => {
                assert!(!partial.converged);
                assert_eq!(partial.total(), 6);
            }
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn roots_of_unity_high_degree() {
        let n = 255;
        let mut c = vec![Complex64::ZERO; n + 1];
        c[0] = -Complex64::ONE;
        c[n] = Complex64::ONE;
        let set = roots(&UniPoly::new(c), 1e-7).unwrap();
        assert_eq!(set.len(), n);
        for r in &set.roots {
            assert!((r.location.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn well_separated_clusters_and_close_simple_roots() {
        // (z-1)^2 (z+1) (z - 1e-4) (z + 1e-4): two close but distinct roots stay apart.
        let p = UniPoly::from_roots(&[cx(1.0, 0.0), cx(1.0, 0.0), cx(-1.0, 0.0), cx(1e-4, 0.0), cx(-1e-4, 0.0)]);
        let set = roots(&p, 1e-7).unwrap();
        assert_roots(
            &set,
            &[(cx(1.0, 0.0), 2), (cx(-1.0, 0.0), 1), (cx(1e-4, 0.0), 1), (cx(-1e-4, 0.0), 1)],
            1e-9,
        );
    }
}
