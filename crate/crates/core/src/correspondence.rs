//! The correspondence value: representations, fibers, adjoint, composition,
//! the Perron–Frobenius operator, the Lojasiewicz exponent and critical values.
//!
//! The graph lives in `(x, y)` space and a correspondence maps `x` to `y`.
//! A parametrized correspondence `(g, f)` has graph `{(g(t), f(t))}`, so its
//! preimages of `z` are `g(t)` over the roots of `f(t) = z`. An implicit one
//! is the zero set of `Q(x, y)`.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CorrError, Result};
use crate::poly::{eliminate_first, resultant_elim, roots, shift_constant, BiPoly, RootSet, UniPoly};

/// Relative clustering radius used for every fiber computation.
pub const FIBER_CLUSTER: f64 = 1e-7;
// Leading coefficients below this fraction of the largest are treated as zero.
const LEADING_REL: f64 = 1e-10;

/// Generic fiber sizes `(d1, d2)`: `d1` images per point, `d2` preimages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreePair {
    pub d1: usize,
    pub d2: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Repr {
    Parametrized { g: UniPoly, f: UniPoly },
    Implicit {
        #[serde(rename = "Q")]
        q: BiPoly,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ExponentMethod {
    ExactRatio,
    NumericFit { residual: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LojasiewiczEstimate {
    pub value: f64,
    #[serde(flatten)]
    pub method: ExponentMethod,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CorrespondenceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    repr: Repr,
}

/// A polynomial correspondence on the complex plane.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "CorrespondenceSpec", into = "CorrespondenceSpec")]
pub struct Correspondence {
    repr: Repr,
    degrees: DegreePair,
    name: Option<String>,
    graph: OnceLock<BiPoly>,
}

impl PartialEq for Correspondence {
    fn eq(&self, other: &Self) -> bool {
        self.repr == other.repr
    }
}

impl TryFrom<CorrespondenceSpec> for Correspondence {
    type Error = CorrError;
    fn try_from(spec: CorrespondenceSpec) -> Result<Self> {
        let c = match spec.repr {
            Repr::Parametrized { g, f } => Correspondence::parametrized(g, f)?,
            Repr::Implicit { q } => Correspondence::implicit(q)?,
        };
        Ok(match spec.name {
            Some(n) => c.with_name(n),
            None => c,
        })
    }
}

impl From<Correspondence> for CorrespondenceSpec {
    fn from(c: Correspondence) -> Self {
        CorrespondenceSpec {
            name: c.name,
            repr: c.repr,
        }
    }
}

/// Result of composing two correspondences.
#[derive(Clone, Debug)]
pub struct Composition {
    pub correspondence: Correspondence,
    /// The trimmed graph fell short of the product degree bound or lost
    /// properness; fibers of such a graph are unreliable.
    pub degree_mismatch: bool,
    pub ill_conditioned: bool,
}

/// One point of a fiber, with the parameter it came from when the
/// correspondence is parametrized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberPoint {
    pub point: Complex64,
    pub param: Option<Complex64>,
    pub multiplicity: usize,
}

impl Correspondence {
    /// `F = f ∘ g⁻¹` with graph `{(g(t), f(t))}`.
    pub fn parametrized(g: UniPoly, f: UniPoly) -> Result<Self> {
        if g.degree() < 1 || g.is_zero() || f.degree() < 1 || f.is_zero() {
            return Err(CorrError::InvalidCorrespondence(
                "parametrized correspondence needs deg g >= 1 and deg f >= 1".into(),
            ));
        }
        let degrees = DegreePair {
            d1: g.degree(),
            d2: f.degree(),
        };
        Ok(Self {
            repr: Repr::Parametrized { g, f },
            degrees,
            name: None,
            graph: OnceLock::new(),
        })
    }

    /// The polynomial map `z ↦ p(z)`.
    pub fn polynomial_map(p: UniPoly) -> Result<Self> {
        Self::parametrized(UniPoly::identity(), p)
    }

    /// Correspondence whose graph is `{Q = 0}`.
    ///
    /// Properness of both projections is checked through the leading
    /// coefficients: the coefficient of `y^deg_y` must not depend on `x` and
    /// vice versa, otherwise a fiber escapes to infinity over their roots.
    pub fn implicit(q: BiPoly) -> Result<Self> {
        if q.deg_x() < 1 || q.deg_y() < 1 {
            return Err(CorrError::InvalidCorrespondence(
                "implicit graph needs positive degree in both variables".into(),
            ));
        }
        if let Some(msg) = improperness(&q) {
            return Err(CorrError::ImproperGraph(msg.into()));
        }
        Ok(Self::implicit_unchecked(q))
    }

    fn implicit_unchecked(q: BiPoly) -> Self {
        let degrees = DegreePair {
            d1: q.deg_y(),
            d2: q.deg_x(),
        };
        Self {
            repr: Repr::Implicit { q },
            degrees,
            name: None,
            graph: OnceLock::new(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    pub fn degrees(&self) -> DegreePair {
        self.degrees
    }

    pub fn is_parametrized(&self) -> bool {
        matches!(self.repr, Repr::Parametrized { .. })
    }

    /// Graph polynomial. Parametrized inputs eliminate `t` from
    /// `(g(t) - x, f(t) - y)` and normalize the `x^d2` coefficient to one.
    pub fn graph_poly(&self) -> Result<BiPoly> {
        if let Some(q) = self.graph.get() {
            return Ok(q.clone());
        }
        let q = match &self.repr {
            Repr::Implicit { q } => q.clone(),
            Repr::Parametrized { g, f } => {
                let a = BiPoly::from_fn(1, g.degree(), |i, j| match (i, j) {
                    (1, 0) => -Complex64::ONE,
                    (0, j) => g.coeff(j),
                    _ => Complex64::ZERO,
                });
                let b = BiPoly::from_fn(f.degree(), 1, |i, j| match (i, j) {
                    (0, 1) => -Complex64::ONE,
                    (i, 0) => f.coeff(i),
                    _ => Complex64::ZERO,
                });
                resultant_elim(&a, &b)?.poly.normalized_in_x()
            }
        };
        Ok(self.graph.get_or_init(|| q).clone())
    }

    /// `F⁻¹(z)`, `d2` points counted with multiplicity.
    pub fn preimages(&self, z: Complex64) -> Result<RootSet> {
        Ok(to_rootset(self.preimage_fiber(z)?))
    }

    /// `F(x)`, `d1` points counted with multiplicity.
    pub fn images(&self, x: Complex64) -> Result<RootSet> {
        Ok(to_rootset(self.image_fiber(x)?))
    }

    /// Preimage fiber keeping the parameter values `t` of parametrized inputs.
    pub fn preimage_fiber(&self, z: Complex64) -> Result<Vec<FiberPoint>> {
        match &self.repr {
            Repr::Parametrized { g, f } => transport(f, g, z),
            Repr::Implicit { q } => implicit_fiber(&q.specialize_y(z), q.deg_x(), q.get(q.deg_x(), 0), z),
        }
    }

    /// Image fiber keeping the parameter values `t` of parametrized inputs.
    pub fn image_fiber(&self, x: Complex64) -> Result<Vec<FiberPoint>> {
        match &self.repr {
            Repr::Parametrized { g, f } => transport(g, f, x),
            Repr::Implicit { q } => implicit_fiber(&q.specialize_x(x), q.deg_y(), q.get(0, q.deg_y()), x),
        }
    }

    /// The correspondence with the graph variables swapped.
    pub fn adjoint(&self) -> Correspondence {
        let repr = match &self.repr {
            Repr::Parametrized { g, f } => Repr::Parametrized {
                g: f.clone(),
                f: g.clone(),
            },
            Repr::Implicit { q } => Repr::Implicit { q: q.swapped() },
        };
        Correspondence {
            repr,
            degrees: DegreePair {
                d1: self.degrees.d2,
                d2: self.degrees.d1,
            },
            name: self.name.as_ref().map(|n| format!("adjoint({n})")),
            graph: OnceLock::new(),
        }
    }

    /// `self ∘ first`: apply `first`, then `self`. The graph is
    /// `Res_t(Q_first(x, t), Q_self(t, y))`.
    pub fn compose(&self, first: &Correspondence) -> Result<Composition> {
        let q1 = first.graph_poly()?;
        let q2 = self.graph_poly()?;
        let elim = resultant_elim(&q1, &q2)?;
        let expected = DegreePair {
            d1: first.degrees.d1 * self.degrees.d1,
            d2: first.degrees.d2 * self.degrees.d2,
        };
        let q = clean_leading(elim.poly.normalized_in_x());
        let degree_mismatch =
            q.deg_y() != expected.d1 || q.deg_x() != expected.d2 || improperness(&q).is_some();
        if q.deg_x() == 0 || q.deg_y() == 0 {
            return Err(CorrError::InvalidCorrespondence(
                "composed graph lost a variable after trimming".into(),
            ));
        }
        let mut correspondence = Correspondence::implicit_unchecked(q);
        correspondence.name = match (&self.name, &first.name) {
            (Some(a), Some(b)) => Some(format!("{a}∘{b}")),
            _ => None,
        };
        Ok(Composition {
            correspondence,
            degree_mismatch,
            ill_conditioned: elim.ill_conditioned,
        })
    }

    /// `F^n` by repeated composition on the right.
    pub fn iterate(&self, n: usize) -> Result<Composition> {
        if n == 0 {
            return Err(CorrError::invalid("iterate needs n >= 1"));
        }
        let mut acc = Composition {
            correspondence: self.clone(),
            degree_mismatch: false,
            ill_conditioned: false,
        };
        for _ in 1..n {
            let next = self.compose(&acc.correspondence)?;
            acc = Composition {
                correspondence: next.correspondence,
                degree_mismatch: acc.degree_mismatch || next.degree_mismatch,
                ill_conditioned: acc.ill_conditioned || next.ill_conditioned,
            };
        }
        Ok(acc)
    }

    /// `F_*φ(z) = Σ_{w ∈ F⁻¹(z)} φ(w)` with multiplicity.
    pub fn push_forward_fn(&self, phi: impl Fn(Complex64) -> Complex64, z: Complex64) -> Result<Complex64> {
        let fiber = self.preimages(z)?;
        Ok(fiber
            .roots
            .iter()
            .map(|r| phi(r.location) * r.multiplicity as f64)
            .sum())
    }

    /// `Λφ(z) = d2⁻¹ F_*φ(z)`.
    pub fn perron_frobenius(&self, phi: impl Fn(Complex64) -> Complex64, z: Complex64) -> Result<Complex64> {
        Ok(self.push_forward_fn(phi, z)? / self.degrees.d2 as f64)
    }

    /// Growth exponent `|y| ~ |x|^l` on the graph near infinity.
    pub fn lojasiewicz_exponent(&self) -> Result<LojasiewiczEstimate> {
        match &self.repr {
            Repr::Parametrized { g, f } => Ok(LojasiewiczEstimate {
                value: f.degree() as f64 / g.degree() as f64,
                method: ExponentMethod::ExactRatio,
            }),
            Repr::Implicit { q } => {
                let (slope, residual) = fit_growth(q, |x| self.images(x))?;
                if residual > MAX_FIT_RESIDUAL {
                    return Err(CorrError::FitUnstable { residual });
                }
                Ok(LojasiewiczEstimate {
                    value: slope,
                    method: ExponentMethod::NumericFit { residual },
                })
            }
        }
    }

    /// Finite set of values over which some inverse branch is not regular:
    /// critical values of the second projection plus the images of critical
    /// values of the first. Multiplicities are set to one.
    pub fn critical_values(&self) -> Result<RootSet> {
        let mut out: Vec<Complex64> = Vec::new();
        match &self.repr {
            Repr::Parametrized { g, f } => {
                let df = f.derivative();
                if df.degree() >= 1 {
                    out.extend(roots(&df, FIBER_CLUSTER)?.locations().map(|c| f.eval(c)));
                }
                let dg = g.derivative();
                if dg.degree() >= 1 {
                    for c in roots(&dg, FIBER_CLUSTER)?.locations() {
                        out.extend(self.images(g.eval(c))?.locations());
                    }
                }
            }
            Repr::Implicit { q } => {
                let over = eliminate_first(q, &q.d_dx())?;
                if over.degree() >= 1 {
                    out.extend(roots(&over, FIBER_CLUSTER)?.locations());
                }
                let qs = q.swapped();
                let under = eliminate_first(&qs, &qs.d_dx())?;
                if under.degree() >= 1 {
                    for x in roots(&under, FIBER_CLUSTER)?.locations() {
                        out.extend(self.images(x)?.locations());
                    }
                }
            }
        }
        Ok(dedupe(&out, FIBER_CLUSTER))
    }

    /// Radius outside of which backward orbits are not expected to wander:
    /// `max(10, 2 * largest root modulus of the boundary polynomials)`.
    pub fn escape_radius(&self) -> f64 {
        let polys: Vec<UniPoly> = match &self.repr {
            Repr::Parametrized { g, f } => vec![g.clone(), f.clone()],
            Repr::Implicit { q } => vec![q.specialize_y(Complex64::ZERO), q.specialize_x(Complex64::ZERO)],
        };
        let largest = polys
            .iter()
            .filter(|p| p.degree() >= 1)
            .filter_map(|p| roots(p, FIBER_CLUSTER).ok())
            .flat_map(|rs| rs.roots.into_iter().map(|r| r.location.norm()))
            .fold(0.0, f64::max);
        (2.0 * largest).max(10.0)
    }
}

/// Why the graph fails to be proper over both axes, if it does. The top
/// row in `y` (and column in `x`) must be a nonzero constant up to noise at
/// `LEADING_REL` of the largest coefficient.
fn improperness(q: &BiPoly) -> Option<&'static str> {
    let scale = q.max_abs_coeff();
    let (dx, dy) = (q.deg_x(), q.deg_y());
    if q.get(0, dy) == Complex64::ZERO || (1..=dx).any(|i| q.get(i, dy).norm() > LEADING_REL * scale) {
        return Some("the coefficient of the top power of y depends on x");
    }
    if q.get(dx, 0) == Complex64::ZERO || (1..=dy).any(|j| q.get(dx, j).norm() > LEADING_REL * scale) {
        return Some("the coefficient of the top power of x depends on y");
    }
    None
}

/// Upper bound on the RMS log-residual of the growth fit.
pub const MAX_FIT_RESIDUAL: f64 = 0.25;

/// Least-squares slope of `log min|y|` against `log R` on circles `|x| = R`.
fn fit_growth(q: &BiPoly, images: impl Fn(Complex64) -> Result<RootSet>) -> Result<(f64, f64)> {
    // Keep |x|^deg_x well inside the f64 range.
    let top = (250.0 / q.deg_x().max(1) as f64).min(5.0);
    let bottom = top * 0.4;
    let ladder: Vec<f64> = (0..4).map(|k| bottom + (top - bottom) * k as f64 / 3.0).collect();
    let mut pts = Vec::with_capacity(ladder.len());
    for &e in &ladder {
        let r = 10f64.powf(e);
        let mut min_y = f64::INFINITY;
        for k in 0..8 {
            let x = Complex64::from_polar(r, 0.3 + std::f64::consts::TAU * k as f64 / 8.0);
            for y in images(x)?.locations() {
                min_y = min_y.min(y.norm());
            }
        }
        pts.push((r.ln(), min_y.max(f64::MIN_POSITIVE).ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let rms = (pts
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok((slope, rms))
}

/// Solve `solve_in(t) = at`, push the roots through `map` and merge
/// coinciding images.
fn transport(solve_in: &UniPoly, map: &UniPoly, at: Complex64) -> Result<Vec<FiberPoint>> {
    let ts = roots(&shift_constant(solve_in, at), FIBER_CLUSTER)?;
    let pts: Vec<FiberPoint> = ts
        .roots
        .iter()
        .map(|r| FiberPoint {
            point: map.eval(r.location),
            param: Some(r.location),
            multiplicity: r.multiplicity,
        })
        .collect();
    Ok(pts)
}

// A fiber is degenerate when the coefficient of the formal top degree moved
// away from the graph's constant leading coefficient: the point then lies
// over a point at infinity of the curve.
fn implicit_fiber(p: &UniPoly, formal: usize, lead: Complex64, at: Complex64) -> Result<Vec<FiberPoint>> {
    let top = p.coeff(formal);
    if p.degree() != formal || top.norm() < 0.5 * lead.norm() || lead == Complex64::ZERO {
        return Err(CorrError::DegenerateFiber { at });
    }
    let rs = roots(p, FIBER_CLUSTER)?;
    Ok(rs
        .roots
        .iter()
        .map(|r| FiberPoint {
            point: r.location,
            param: None,
            multiplicity: r.multiplicity,
        })
        .collect())
}

/// Merge fiber points closer than the clustering radius, summing multiplicity.
pub(crate) fn to_rootset(points: Vec<FiberPoint>) -> RootSet {
    let weighted: Vec<(Complex64, usize)> = points.iter().map(|p| (p.point, p.multiplicity)).collect();
    merge_weighted(&weighted, FIBER_CLUSTER)
}

pub(crate) fn merge_weighted(points: &[(Complex64, usize)], rel: f64) -> RootSet {
    let max_mag = points.iter().map(|p| p.0.norm()).fold(0.0, f64::max);
    let radius = rel * (1.0 + max_mag);
    let mut groups: Vec<(Complex64, usize, Complex64)> = Vec::new();
    for &(z, m) in points {
        match groups.iter_mut().find(|g| (g.0 - z).norm() <= radius) {
            Some(g) => {
                g.2 += z * m as f64;
                g.1 += m;
            }
            None => groups.push((z, m, z * m as f64)),
        }
    }
    RootSet::from_weighted(groups.into_iter().map(|(_, m, sum)| (sum / m as f64, m)).collect())
}

pub(crate) fn dedupe(points: &[Complex64], rel: f64) -> RootSet {
    let mut set = merge_weighted(&points.iter().map(|&z| (z, 1)).collect::<Vec<_>>(), rel);
    for r in &mut set.roots {
        r.multiplicity = 1;
    }
    set
}

/// Zero out leading-coefficient noise left by interpolation so the graph
/// passes the properness check when it is proper up to rounding.
fn clean_leading(q: BiPoly) -> BiPoly {
    let scale = q.max_abs_coeff();
    let (dx, dy) = (q.deg_x(), q.deg_y());
    BiPoly::from_fn(dx, dy, |i, j| {
        let c = q.get(i, j);
        let on_top_edge = (i == dx && j > 0) || (j == dy && i > 0);
        if on_top_edge && c.norm() <= 1e-7 * scale {
            Complex64::ZERO
        } else {
            c
        }
    })
}
