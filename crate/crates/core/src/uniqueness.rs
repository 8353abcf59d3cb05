//! Preimage-set identities `f⁻¹(K) = g⁻¹(K)` for polynomials, composition
//! factorization, Julia-like sets and rotation symmetry of sampled compacts.
//!
//! Compacts are finite clouds, so every verdict here is instance-level
//! evidence at the resolution of the sampling, never a proof.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correspondence::Correspondence;
use crate::equilibrium::preimage_tree;
use crate::error::{CorrError, Result};
use crate::periodic::{fixed_points, PointClass};
use crate::poly::{chebyshev, roots, shift_constant, UniPoly};

/// Clouds with at least this many well-spread points stand in for infinite
/// compacts.
pub const INFINITE_PROXY: usize = 64;
/// Largest rotation order searched.
pub const MAX_ROTATION_ORDER: usize = 64;
/// Default tolerances are this multiple of the sample spacing.
pub const SPACING_FACTOR: f64 = 3.0;
/// Relative residual accepted by [`factor_compose`].
pub const FACTOR_REL: f64 = 1e-8;

const ROOT_CLUSTER: f64 = 1e-9;
const FACTOR_SAMPLES: usize = 100;
const FACTOR_SEED: u64 = 0x5eed;
const JULIA_DEPTH_POINTS: f64 = 2048.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Descriptor {
    /// Union of circles centered at the origin.
    Circles { radii: Vec<f64> },
    /// The interval `[-1, 1]`.
    Segment,
    /// A set with `P⁻¹(K) = K` for the stored polynomial.
    JuliaLike { p: UniPoly },
    Raw,
}

/// A compact set represented by sample points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompactSet {
    pub descriptor: Descriptor,
    #[serde(with = "pairs")]
    pub samples: Vec<Complex64>,
}

mod pairs {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        Ok(Vec::<[f64; 2]>::deserialize(d)?
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect())
    }
}

impl CompactSet {
    /// Validated constructor. Circles and Segment clouds must lie on their
    /// descriptor and reach every component within `3 × spacing`.
    pub fn new(samples: Vec<Complex64>, descriptor: Descriptor) -> Result<Self> {
        if samples.is_empty() {
            return Err(CorrError::invalid("a compact set needs at least one sample"));
        }
        if samples.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(CorrError::NonFinite("compact set sample"));
        }
        let k = CompactSet { descriptor, samples };
        let tol = k.default_tolerance();
        let fits = match &k.descriptor {
            Descriptor::Circles { radii } => {
                !radii.is_empty()
                    && radii.iter().all(|&r| r > 0.0 && r.is_finite())
                    && k.samples.iter().all(|z| radii.iter().any(|r| (z.norm() - r).abs() <= tol))
                    && radii.iter().all(|r| k.samples.iter().any(|z| (z.norm() - r).abs() <= tol))
            }
            Descriptor::Segment => {
                k.samples.iter().all(|z| z.im.abs() <= tol && z.re.abs() <= 1.0 + tol)
                    && [-1.0, 1.0].iter().all(|e| k.samples.iter().any(|z| (z.re - e).abs() <= tol))
            }
            Descriptor::JuliaLike { p } => p.degree() >= 2,
            Descriptor::Raw => true,
        };
        if !fits {
            return Err(CorrError::invalid("samples do not match the compact set descriptor"));
        }
        Ok(k)
    }

    pub fn raw(samples: Vec<Complex64>) -> Result<Self> {
        Self::new(samples, Descriptor::Raw)
    }

    /// `n` equally spaced samples on each circle `|z| = r`.
    pub fn circles(radii: &[f64], n: usize) -> Result<Self> {
        if n < 3 {
            return Err(CorrError::invalid("circles need at least 3 samples each"));
        }
        let samples = radii
            .iter()
            .flat_map(|&r| (0..n).map(move |k| Complex64::from_polar(r, TAU * k as f64 / n as f64)))
            .collect();
        Self::new(
            samples,
            Descriptor::Circles {
                radii: radii.to_vec(),
            },
        )
    }

    /// `[-1, 1]` at the `n` Chebyshev–Lobatto nodes `cos(πk/(n-1))`, which
    /// every `T_d` maps onto a subset of its own finer node set.
    pub fn segment(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(CorrError::invalid("a segment needs at least 2 samples"));
        }
        let samples = (0..n)
            .map(|k| Complex64::new((PI * k as f64 / (n - 1) as f64).cos(), 0.0))
            .collect();
        Self::new(samples, Descriptor::Segment)
    }

    /// Backward orbit tree of `p` rooted at its most repelling fixed point,
    /// to the depth where it holds about 2048 points. The root is fixed, so
    /// each level contains the previous one.
    pub fn julia_like(p: &UniPoly) -> Result<Self> {
        let d = p.degree();
        if d < 2 {
            return Err(CorrError::invalid("a Julia-like set needs a polynomial of degree at least 2"));
        }
        let depth = (JULIA_DEPTH_POINTS.ln() / (d as f64).ln()).round() as usize;
        Self::julia_like_at_depth(p, depth)
    }

    pub fn julia_like_at_depth(p: &UniPoly, depth: usize) -> Result<Self> {
        if p.degree() < 2 {
            return Err(CorrError::invalid("a Julia-like set needs a polynomial of degree at least 2"));
        }
        let map = Correspondence::polynomial_map(p.clone())?;
        let root = fixed_points(&map)?
            .into_iter()
            .filter(|q| q.class == PointClass::Repelling)
            .max_by(|a, b| {
                let m = |q: &crate::periodic::PeriodicPoint| q.multiplier.finite().map_or(f64::INFINITY, |l| l.norm());
                m(a).total_cmp(&m(b))
            })
            .ok_or_else(|| CorrError::invalid("polynomial has no repelling fixed point"))?;
        let tree = preimage_tree(&map, root.location, depth)?;
        Self::new(tree.locations().collect(), Descriptor::JuliaLike { p: p.clone() })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Resolution of the sampling: the largest nearest-neighbour distance
    /// for described sets, the median one for Raw clouds.
    pub fn spacing(&self) -> f64 {
        match &self.descriptor {
            Descriptor::Raw => {
                let mut nn = nearest_neighbour(&self.samples);
                if nn.is_empty() {
                    return 0.0;
                }
                let mid = nn.len() / 2;
                *nn.select_nth_unstable_by(mid, f64::total_cmp).1
            }
            _ => nearest_neighbour(&self.samples).into_iter().fold(0.0, f64::max),
        }
    }

    /// `3 × spacing`, capped at a tenth of the diameter so that sparse
    /// clouds cannot match everything.
    pub fn default_tolerance(&self) -> f64 {
        let diam = crate::branches::diameter(&self.samples);
        let t = SPACING_FACTOR * self.spacing();
        if diam > 0.0 {
            t.min(0.1 * diam)
        } else {
            t
        }
    }

    /// At least [`INFINITE_PROXY`] points pairwise separated at the
    /// clustering radius.
    pub fn is_infinite_proxy(&self) -> bool {
        crate::correspondence::dedupe(&self.samples, ROOT_CLUSTER).len() >= INFINITE_PROXY
    }

    pub fn centroid(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() / self.samples.len() as f64
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("compact sets serialize")
    }
}

fn nearest_neighbour(points: &[Complex64]) -> Vec<f64> {
    if points.len() < 2 {
        return Vec::new();
    }
    points
        .par_iter()
        .enumerate()
        .map(|(i, &z)| {
            points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &w)| (z - w).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// `p⁻¹(K)` with every root counted with multiplicity, so the cloud holds
/// `deg p · |K|` points.
pub fn poly_preimage_set(p: &UniPoly, k: &CompactSet) -> Result<CompactSet> {
    if p.degree() < 1 {
        return Err(CorrError::ConstantPolynomial);
    }
    let samples: Vec<Complex64> = k
        .samples
        .par_iter()
        .map(|&c| roots(&shift_constant(p, c), ROOT_CLUSTER).map(|rs| rs.expanded()))
        .collect::<Result<Vec<_>>>()?
        .concat();
    Ok(CompactSet {
        descriptor: Descriptor::Raw,
        samples,
    })
}

fn directed(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.par_iter()
        .map(|&z| b.iter().map(|&w| (z - w).norm()).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max)
}

/// Symmetric Hausdorff distance between the clouds.
pub fn hausdorff(k1: &CompactSet, k2: &CompactSet) -> f64 {
    hausdorff_points(&k1.samples, &k2.samples)
}

pub fn hausdorff_points(a: &[Complex64], b: &[Complex64]) -> f64 {
    directed(a, b).max(directed(b, a))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetComparison {
    pub equal: bool,
    pub distance: f64,
    pub tolerance: f64,
}

/// Hausdorff distance between `f⁻¹(K)` and `g⁻¹(K)`, with tolerance
/// `3 × spacing(K)` when `tol` is `None`.
pub fn preimage_equal(f: &UniPoly, g: &UniPoly, k: &CompactSet, tol: Option<f64>) -> Result<SetComparison> {
    let tolerance = tol.unwrap_or_else(|| k.default_tolerance());
    let distance = hausdorff(&poly_preimage_set(f, k)?, &poly_preimage_set(g, k)?);
    Ok(SetComparison {
        equal: distance <= tolerance,
        distance,
        tolerance,
    })
}

/// `P` with `f = P ∘ g`, if one exists. `P` is interpolated at the
/// `deg f / deg g + 1` roots of unity as values of `g`, then checked at
/// 100 random points of the unit disk.
pub fn factor_compose(f: &UniPoly, g: &UniPoly) -> Option<UniPoly> {
    let (df, dg) = (f.degree(), g.degree());
    if dg == 0 || f.is_zero() || df % dg != 0 {
        return None;
    }
    let k = df / dg;
    let n = k + 1;
    let mut values = Vec::with_capacity(n);
    for j in 0..n {
        let s = Complex64::from_polar(1.0, TAU * j as f64 / n as f64);
        let t = roots(&shift_constant(g, s), ROOT_CLUSTER).ok()?.roots.first()?.location;
        values.push(f.eval(t));
    }
    // Inverse DFT of the samples on the unit circle.
    let coeffs: Vec<Complex64> = (0..n)
        .map(|m| {
            values
                .iter()
                .enumerate()
                .map(|(j, y)| y * Complex64::from_polar(1.0, -TAU * (j * m) as f64 / n as f64))
                .sum::<Complex64>()
                / n as f64
        })
        .collect();
    let p = UniPoly::new(coeffs).trimmed(FACTOR_REL);
    let mut rng = ChaCha8Rng::seed_from_u64(FACTOR_SEED);
    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    for _ in 0..FACTOR_SAMPLES {
        let t = Complex64::from_polar(rng.random::<f64>().sqrt(), TAU * rng.random::<f64>());
        let ft = f.eval(t);
        scale = scale.max(ft.norm());
        worst = worst.max((ft - p.eval(g.eval(t))).norm());
    }
    (worst <= FACTOR_REL * scale).then_some(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JuliaCheck {
    pub julia_like: bool,
    pub distance: f64,
    pub tolerance: f64,
}

/// `P⁻¹(K) = K` within `tol` (default `3 × spacing(K)`).
pub fn julia_like_check(p: &UniPoly, k: &CompactSet, tol: Option<f64>) -> Result<JuliaCheck> {
    if p.degree() < 2 {
        return Err(CorrError::invalid("Julia-like check needs deg P ≥ 2"));
    }
    if crate::correspondence::dedupe(&k.samples, ROOT_CLUSTER).len() < 2 {
        return Err(CorrError::invalid("Julia-like check needs at least two distinct points"));
    }
    let tolerance = tol.unwrap_or_else(|| k.default_tolerance());
    let distance = hausdorff(&poly_preimage_set(p, k)?, k);
    Ok(JuliaCheck {
        julia_like: distance <= tolerance,
        distance,
        tolerance,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationScan {
    /// Orders `m ≥ 2` with `e^{2πi/m} K = K` within tolerance.
    pub orders: Vec<usize>,
    /// Hausdorff distance for each `m = 2..=m_max`.
    pub distances: Vec<f64>,
    pub center: Complex64,
    pub tolerance: f64,
}

/// Rotations by `2π/m`, `2 ≤ m ≤ m_max`, about the origin for described
/// sets and about the centroid for Raw clouds.
pub fn rotation_invariance(k: &CompactSet, m_max: usize, tol: Option<f64>) -> Result<RotationScan> {
    if m_max > MAX_ROTATION_ORDER {
        return Err(CorrError::invalid(format!("m_max must be at most {MAX_ROTATION_ORDER}")));
    }
    let center = match k.descriptor {
        Descriptor::Raw => k.centroid(),
        _ => Complex64::ZERO,
    };
    let tolerance = tol.unwrap_or_else(|| k.default_tolerance());
    let shifted: Vec<Complex64> = k.samples.iter().map(|z| z - center).collect();
    let distances: Vec<f64> = (2..=m_max)
        .map(|m| {
            let r = Complex64::from_polar(1.0, TAU / m as f64);
            let rotated: Vec<Complex64> = shifted.iter().map(|z| z * r).collect();
            hausdorff_points(&rotated, &shifted)
        })
        .collect();
    let orders = distances
        .iter()
        .enumerate()
        .filter(|(_, &d)| d <= tolerance)
        .map(|(i, _)| i + 2)
        .collect();
    Ok(RotationScan {
        orders,
        distances,
        center,
        tolerance,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Some candidate `P` has `P⁻¹(K) = K`, or `K` has a rotation symmetry,
    /// so `K` is not a uniqueness set.
    Obstruction,
    /// Neither test fired for the supplied candidates.
    NoObstructionFound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub verdict: Verdict,
    pub julia: Vec<JuliaCheck>,
    /// Indices into the candidate list whose Julia-like check passed.
    pub julia_like_candidates: Vec<usize>,
    pub rotation: RotationScan,
    pub infinite_proxy: bool,
    pub note: String,
}

impl UniquenessReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("reports serialize")
    }
}

/// Instance-level verdict: an obstruction when some candidate makes `K`
/// Julia-like or some nontrivial rotation preserves `K`.
pub fn uniqueness_verdict(k: &CompactSet, candidates: &[UniPoly], m_max: usize) -> Result<UniquenessReport> {
    let julia: Vec<JuliaCheck> = candidates
        .iter()
        .map(|p| julia_like_check(p, k, None))
        .collect::<Result<_>>()?;
    let julia_like_candidates: Vec<usize> = julia.iter().enumerate().filter(|(_, j)| j.julia_like).map(|(i, _)| i).collect();
    let rotation = rotation_invariance(k, m_max, None)?;
    let obstruction = !julia_like_candidates.is_empty() || !rotation.orders.is_empty();
    let note = if obstruction {
        "sampled evidence that K is not a uniqueness set".to_string()
    } else {
        "no obstruction found among the supplied candidates; this is not a proof that K is a uniqueness set".to_string()
    };
    Ok(UniquenessReport {
        verdict: if obstruction {
            Verdict::Obstruction
        } else {
            Verdict::NoObstructionFound
        },
        julia,
        julia_like_candidates,
        rotation,
        infinite_proxy: k.is_infinite_proxy(),
        note,
    })
}

/// Circle family: `f = Q^d`, `g = a Q^{d'}`.
pub fn circle_family(q: &UniPoly, d: usize, d_prime: usize, a: Complex64) -> (UniPoly, UniPoly) {
    (power(q, d), power(q, d_prime).scale(a))
}

/// Chebyshev family: `f = ±T_d ∘ Q`, `g = ±T_{d'} ∘ Q`.
pub fn chebyshev_family(q: &UniPoly, d: usize, d_prime: usize, negate_f: bool, negate_g: bool) -> (UniPoly, UniPoly) {
    let sign = |neg: bool| if neg { -Complex64::ONE } else { Complex64::ONE };
    (
        chebyshev(d).compose(q).scale(sign(negate_f)),
        chebyshev(d_prime).compose(q).scale(sign(negate_g)),
    )
}

fn power(q: &UniPoly, k: usize) -> UniPoly {
    (0..k).fold(UniPoly::constant(Complex64::ONE), |acc, _| &acc * q)
}
