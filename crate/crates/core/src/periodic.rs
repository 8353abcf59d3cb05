//! Periodic points of `Fⁿ` and fixed points of `G∘Fⁿ`, their multipliers and
//! repelling classification, and equidistribution of repelling points.
//!
//! The diagonal polynomial of the iterated graph is never expanded in
//! monomials. It is evaluated through the preimage tree,
//! `h(x) = C · Π_{w ∈ F⁻ⁿ(x)} (x - w)`, which keeps relative accuracy near
//! multiple roots. All roots are found by simultaneous (Aberth) iteration
//! on `h'/h`, then refined by Newton's method on the single inverse branch
//! that fixes them. Cycles and multipliers are read off the tree paths.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correspondence::{Correspondence, Repr};
use crate::equilibrium::{measure_distance, Atom, BBox, MeasureDistance, PointMeasure};
use crate::error::{CorrError, Result};
use crate::poly::{BiPoly, UniPoly};

/// `|multiplier|` within this band around one is Neutral.
pub const CLASS_MARGIN: f64 = 1e-6;
/// Largest number of periodic points (with multiplicity) computed.
pub const PERIODIC_LIMIT: usize = 2000;

const ABERTH_MAX_ITER: usize = 400;
const ABERTH_FREEZE: f64 = 1e-11;
const NEWTON_MAX_ITER: usize = 40;
const VANISH_REL: f64 = 1e-10;
const MERGE_REL: f64 = 1e-4;
const REFINED_REL: f64 = 1e-10;
const FORWARD_LIMIT: f64 = 1e5;
const REPAIR_ROUNDS: usize = 3;
const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Multiplier {
    Finite(Complex64),
    /// The inverse branch has zero derivative along the cycle.
    Infinite,
    /// A graph partial derivative pair vanished along the cycle.
    Undefined,
}

impl Multiplier {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            Multiplier::Finite(z) => Some(z),
            _ => None,
        }
    }

    pub fn class(self) -> PointClass {
        match self {
            Multiplier::Finite(l) if l.norm() > 1.0 + CLASS_MARGIN => PointClass::Repelling,
            Multiplier::Finite(l) if l.norm() < 1.0 - CLASS_MARGIN => PointClass::Attracting,
            Multiplier::Finite(_) => PointClass::Neutral,
            Multiplier::Infinite => PointClass::Repelling,
            Multiplier::Undefined => PointClass::Irregular,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    Repelling,
    Attracting,
    Neutral,
    Irregular,
}

impl PointClass {
    pub fn as_str(self) -> &'static str {
        match self {
            PointClass::Repelling => "repelling",
            PointClass::Attracting => "attracting",
            PointClass::Neutral => "neutral",
            PointClass::Irregular => "irregular",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPoint {
    pub location: Complex64,
    pub period: usize,
    /// Smallest `k | period` for which a recovered cycle through the point
    /// repeats with period `k`.
    pub minimal_period: usize,
    pub multiplicity: usize,
    /// Multiplier of the first recovered cycle.
    pub multiplier: Multiplier,
    /// Common class of all recovered cycles, Irregular when they disagree or
    /// when no cycle was recovered.
    pub class: PointClass,
    /// Forward orbit of the first recovered cycle, starting at the point.
    pub cycle: Vec<Complex64>,
    /// Number of distinct cycles (inverse-branch chains) through the point.
    pub cycles_found: usize,
}

/// Projection of the intersection of the graph of `Fⁿ` with the graph of
/// `G`, weighted `p₁⁻¹ d₂⁻ⁿ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntersectionView {
    /// The graphs share a component, so the intersection is not finite.
    pub degenerate: bool,
    pub expected_count: usize,
    pub count_with_multiplicity: usize,
    pub points: Vec<(Complex64, usize)>,
    pub distance: Option<MeasureDistance>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicReport {
    pub n: usize,
    /// `d₂ⁿ`, or `p₂ d₂ⁿ` for `G∘Fⁿ`.
    pub expected_count: usize,
    pub count_with_multiplicity: usize,
    /// Count matches and every root converged with consistent multiplicity.
    pub count_ok: bool,
    pub converged: bool,
    pub points: Vec<PeriodicPoint>,
    /// Distance of the normalized repelling measure to the reference.
    pub nu_distance: Option<MeasureDistance>,
    pub intersection: Option<IntersectionView>,
}

/// Reference measure and grid for equidistribution distances.
#[derive(Clone, Copy, Debug)]
pub struct Reference<'a> {
    pub measure: &'a PointMeasure,
    pub bbox: BBox,
    pub n_grid: usize,
}

// --- inverse-branch tree ------------------------------------------------

enum StepKind {
    Param { g: UniPoly, dg: UniPoly, df: UniPoly },
    Implicit { qx: BiPoly, qy: BiPoly },
}

struct Step<'a> {
    corr: &'a Correspondence,
    kind: StepKind,
}

impl<'a> Step<'a> {
    fn new(corr: &'a Correspondence) -> Self {
        let kind = match corr.repr() {
            Repr::Parametrized { g, f } => StepKind::Param {
                g: g.clone(),
                dg: g.derivative(),
                df: f.derivative(),
            },
            Repr::Implicit { q } => StepKind::Implicit {
                qx: q.d_dx(),
                qy: q.d_dy(),
            },
        };
        Self { corr, kind }
    }
}

/// One inverse branch `w ∈ S⁻¹(z)` with `dw/dz = num / den`.
#[derive(Clone, Copy, Debug)]
struct Branch {
    point: Complex64,
    weight: usize,
    num: Complex64,
    den: Complex64,
    num_zero: bool,
    den_zero: bool,
}

fn vanishes_uni(p: &UniPoly, t: Complex64) -> bool {
    p.eval(t).norm() <= VANISH_REL * p.abs_eval(t).max(p.max_abs_coeff())
}

fn vanishes_bi(p: &BiPoly, x: Complex64, y: Complex64) -> bool {
    p.eval(x, y).norm() <= VANISH_REL * p.abs_eval(x, y).max(p.max_abs_coeff())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Backward,
    Forward,
}

/// Branches of `S⁻¹(z)` (backward) or `S(z)` (forward), each carrying the
/// inverse-branch derivative at the corresponding graph point.
fn fiber(step: &Step, z: Complex64, dir: Direction) -> Result<Vec<Branch>> {
    let backward = dir == Direction::Backward;
    let fiber = if backward {
        step.corr.preimage_fiber(z)?
    } else {
        step.corr.image_fiber(z)?
    };
    let mut out: Vec<Branch> = Vec::with_capacity(fiber.len());
    for fp in fiber {
        // A repeated fiber point is a vertical (backward) or horizontal
        // (forward) tangency of the graph.
        let repeated = fp.multiplicity > 1;
        let b = match (&step.kind, fp.param) {
            (StepKind::Param { g, dg, df }, Some(t)) => Branch {
                point: if backward { g.eval(t) } else { fp.point },
                weight: fp.multiplicity,
                num: dg.eval(t),
                den: df.eval(t),
                num_zero: vanishes_uni(dg, t) || (repeated && !backward),
                den_zero: vanishes_uni(df, t) || (repeated && backward),
            },
            (StepKind::Implicit { qx, qy }, _) => {
                let (x, y) = if backward { (fp.point, z) } else { (z, fp.point) };
                Branch {
                    point: fp.point,
                    weight: fp.multiplicity,
                    num: -qy.eval(x, y),
                    den: qx.eval(x, y),
                    num_zero: vanishes_bi(qy, x, y) || (repeated && !backward),
                    den_zero: vanishes_bi(qx, x, y) || (repeated && backward),
                }
            }
            _ => unreachable!("parametrized fibers carry parameters"),
        };
        // Coinciding branches with the same derivative are one branch of a
        // repeated graph component.
        let tol = 1e-10 * (1.0 + b.point.norm());
        match out.iter_mut().find(|o| {
            (o.point - b.point).norm() <= tol
                && o.num_zero == b.num_zero
                && o.den_zero == b.den_zero
                && (o.num * b.den - b.num * o.den).norm() <= 1e-8 * ((o.num * b.den).norm() + (b.num * o.den).norm())
        }) {
            Some(o) => o.weight += b.weight,
            None => out.push(b),
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
struct Leaf {
    point: Complex64,
    weight: usize,
    num: Complex64,
    den: Complex64,
    num_zero: bool,
    den_zero: bool,
    singular: bool,
    /// Tree path from the root; `path[0]` is the evaluation point.
    path: Vec<Complex64>,
}

impl Leaf {
    fn multiplier(&self) -> Multiplier {
        if self.singular || (self.num_zero && self.den_zero) {
            Multiplier::Undefined
        } else if self.num_zero {
            Multiplier::Infinite
        } else if self.den_zero {
            Multiplier::Finite(Complex64::ZERO)
        } else {
            Multiplier::Finite(self.den / self.num)
        }
    }
}

/// Leaves of the inverse tree of the step chain `steps[0], …, steps[L-1]`
/// (applied forward in that order) rooted at `x`.
fn leaves(steps: &[Step], x: Complex64, with_path: bool) -> Result<Vec<Leaf>> {
    tree(steps, x, with_path, Direction::Backward)
}

fn tree(steps: &[Step], x: Complex64, with_path: bool, dir: Direction) -> Result<Vec<Leaf>> {
    let mut level = vec![Leaf {
        point: x,
        weight: 1,
        num: Complex64::ONE,
        den: Complex64::ONE,
        num_zero: false,
        den_zero: false,
        singular: false,
        path: if with_path { vec![x] } else { Vec::new() },
    }];
    let order: Vec<&Step> = match dir {
        Direction::Backward => steps.iter().rev().collect(),
        Direction::Forward => steps.iter().collect(),
    };
    for step in order {
        let mut next = Vec::with_capacity(level.len() * step.corr.degrees().d2);
        for leaf in &level {
            for b in fiber(step, leaf.point, dir)? {
                let mut path = Vec::new();
                if with_path {
                    path = leaf.path.clone();
                    path.push(b.point);
                }
                next.push(Leaf {
                    point: b.point,
                    weight: leaf.weight * b.weight,
                    num: if b.num_zero { leaf.num } else { leaf.num * b.num },
                    den: if b.den_zero { leaf.den } else { leaf.den * b.den },
                    num_zero: leaf.num_zero || b.num_zero,
                    den_zero: leaf.den_zero || b.den_zero,
                    singular: leaf.singular || (b.num_zero && b.den_zero),
                    path,
                });
            }
        }
        level = next;
    }
    Ok(level)
}

fn forward_size(steps: &[Step]) -> f64 {
    steps.iter().map(|s| s.corr.degrees().d1 as f64).product()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Newton correction `h / h'` of the reduced diagonal function at `x`.
fn newton_ratio(steps: &[Step], x: Complex64, unit: usize) -> Result<Complex64> {
    let mut sum = Complex64::ZERO;
    for l in leaves(steps, x, false)? {
        let c = (l.weight / unit) as f64;
        let diff = x - l.point;
        // (1 - w') / (x - w) with w' = num / den; an infinite derivative
        // contributes -num / (den (x - w)) through the same formula.
        let term = if l.den_zero {
            // w' is infinite; the term is dominated by -w'/(x-w), which is
            // huge. Approximate by a large finite value along the branch.
            -Complex64::new(1e300, 0.0) / diff
        } else {
            (l.den - l.num) / (l.den * diff)
        };
        sum += term * c;
    }
    if sum == Complex64::ZERO || !sum.re.is_finite() || !sum.im.is_finite() {
        return Ok(Complex64::ZERO);
    }
    Ok(sum.inv())
}

/// Newton on the single branch nearest to fixing `x`.
fn refine_on_branch(steps: &[Step], mut x: Complex64, max_drift: f64) -> Result<Option<Complex64>> {
    let start = x;
    for _ in 0..NEWTON_MAX_ITER {
        // A degenerate branch has infinite derivative and zero step; when it
        // is the closest branch the root is a branch-point root.
        let best = leaves(steps, x, false)?
            .into_iter()
            .map(|l| {
                let degenerate = l.den_zero || l.singular;
                let step = if degenerate || l.num_zero {
                    if degenerate { Complex64::ZERO } else { x - l.point }
                } else {
                    (x - l.point) * l.den / (l.den - l.num)
                };
                let len = if step.norm().is_nan() { f64::INFINITY } else { step.norm() };
                (len, step, degenerate)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0));
        let Some((len, step, degenerate)) = best else { return Ok(None) };
        if degenerate {
            return Ok(None);
        }
        if !len.is_finite() {
            return Ok(None);
        }
        x -= step;
        if len <= 4.0 * f64::EPSILON * (1.0 + x.norm()) {
            let drift = (x - start).norm();
            return Ok((drift <= max_drift * (1.0 + start.norm())).then_some(x));
        }
    }
    Ok(None)
}

struct RootFind {
    roots: Vec<Complex64>,
    refined: Vec<bool>,
    frozen: Vec<bool>,
}

/// Aberth iteration on the reduced diagonal function. Approximations with
/// `fixed` set stay put and act as deflation for the rest.
fn simultaneous_roots(steps: &[Step], start: Vec<Complex64>, fixed: &[bool], unit: usize) -> Result<RootFind> {
    let count = start.len();
    let mut z = start;
    let mut frozen = fixed.to_vec();
    let mut last = vec![f64::INFINITY; count];

    let mut refined = vec![false; count];
    let mut ratio = vec![0.0; count];
    for iter in 0..ABERTH_MAX_ITER {
        let ratios: Vec<Option<Complex64>> = (0..count)
            .into_par_iter()
            .map(|i| {
                if frozen[i] {
                    Ok(None)
                } else {
                    newton_ratio(steps, z[i], unit).map(Some)
                }
            })
            .collect::<Result<_>>()?;
        let mut corrections = vec![Complex64::ZERO; count];
        for i in 0..count {
            let Some(n) = ratios[i] else { continue };
            let mut s = Complex64::ZERO;
            for j in 0..count {
                if j != i {
                    s += (z[i] - z[j]).inv();
                }
            }
            let denom = Complex64::ONE - n * s;
            corrections[i] = if denom.norm() > 0.0 { n / denom } else { n };
        }
        for i in 0..count {
            if frozen[i] {
                continue;
            }
            let c = corrections[i];
            if c.re.is_finite() && c.im.is_finite() {
                z[i] -= c;
            }
            // Stop at full relative accuracy, or once inside the tolerance the
            // corrections stop shrinking.
            let len = c.norm();
            if len == 0.0
                || (len <= ABERTH_FREEZE * (1.0 + z[i].norm()) && (len <= 1e-3 * z[i].norm() || len > 0.5 * last[i]))
            {
                frozen[i] = true;
            }
            ratio[i] = len / last[i];
            last[i] = len;
        }
        // Multiple roots converge only linearly under Aberth; branch Newton
        // finishes them once they are close.
        if iter % 4 == 3 {
            let tries: Vec<(usize, Option<Complex64>)> = (0..count)
                .into_par_iter()
                .filter(|&i| !frozen[i] && ratio[i] > 0.3 && last[i] <= 1e-2 * (1.0 + z[i].norm()))
                .map(|i| Ok((i, refine_on_branch(steps, z[i], 0.1)?)))
                .collect::<Result<_>>()?;
            let before = z.clone();
            for (i, x) in tries {
                // Only clusters qualify: an approximation of an m-fold root
                // sits about m Aberth corrections away from it, with the other
                // approximations spread around it.
                let Some(x) = x else { continue };
                let move_len = (x - z[i]).norm();
                let m = before.iter().filter(|w| (*w - x).norm() <= 2.0 * move_len).count();
                if m >= 3 && last[i] <= 0.5 * move_len && move_len <= 2.0 * m as f64 * last[i] {
                    z[i] = x;
                    frozen[i] = true;
                    refined[i] = true;
                }
            }
        }
        if frozen.iter().all(|&f| f) {
            break;
        }
    }
    Ok(RootFind {
        refined,
        frozen,
        roots: z,
    })
}

/// Which steps make up the cycle, and how they are reported.
struct Problem<'a> {
    steps: Vec<Step<'a>>,
    expected: usize,
    /// Number of `F` steps; minimal periods are computed for pure iterates.
    pure_period: Option<usize>,
}

struct Found {
    points: Vec<PeriodicPoint>,
    count: usize,
    consistent: bool,
    converged: bool,
}

fn check_diagonal(steps: &[Step]) -> Result<()> {
    let probes = [Complex64::new(0.3183, 0.2718), Complex64::new(-0.5772, 0.1414)];
    let mut hits = 0;
    for x in probes {
        if leaves(steps, x, false)?
            .iter()
            .any(|l| (l.point - x).norm() <= 1e-10 * (1.0 + x.norm()))
        {
            hits += 1;
        }
    }
    if hits == probes.len() {
        return Err(CorrError::DiagonalDegenerate);
    }
    Ok(())
}

fn solve(problem: &Problem) -> Result<Found> {
    let steps = &problem.steps;
    check_diagonal(steps)?;
    let generic = Complex64::new(0.4142, -0.3027);
    let generic_leaves = leaves(steps, generic, false)?;
    let unit = generic_leaves.iter().fold(0, |g, l| gcd(g, l.weight)).max(1);
    let reduced: usize = generic_leaves.iter().map(|l| l.weight / unit).sum();
    // Periodic points and iterated preimages share the same limit
    // distribution, so the leaves are good starting points.
    let mut z = Vec::with_capacity(reduced);
    for l in &generic_leaves {
        for _ in 0..l.weight / unit {
            let k = z.len() as f64;
            z.push(l.point + Complex64::from_polar(1e-3 * (1.0 + l.point.norm()), GOLDEN_ANGLE * k));
        }
    }
    let mut fixed = vec![false; reduced];
    let mut refined = vec![false; reduced];
    let mut converged = vec![false; reduced];

    let mut round = 0;
    loop {
        let found = simultaneous_roots(steps, z, &fixed, unit)?;
        z = found.roots;
        let open: Vec<usize> = (0..reduced).filter(|&i| !fixed[i]).collect();
        let polished: Vec<(usize, Option<Complex64>, bool)> = open
            .par_iter()
            .map(|&i| {
                if found.refined[i] {
                    return Ok((i, None, true));
                }
                let x = refine_on_branch(steps, z[i], 1e-3)?;
                let x = match x {
                    Some(x) if consistent_move(steps, &z, i, x, unit)? => Some(x),
                    _ => None,
                };
                Ok((i, x, false))
            })
            .collect::<Result<_>>()?;
        for (i, x, done) in polished {
            if let Some(x) = x {
                z[i] = x;
            }
            refined[i] = done || x.is_some();
            converged[i] = found.frozen[i] || refined[i];
        }

        let groups = cluster(&z, &refined);
        let mut points = Vec::with_capacity(groups.len());
        let mut consistent = true;
        let mut excess: Vec<usize> = Vec::new();
        for group in &groups {
            let (point, leaf_count) = classify(problem, group.location, group.members.len() * unit)?;
            if let Some(count) = leaf_count {
                if count != group.members.len() * unit {
                    consistent = false;
                }
                // A cluster holding more approximations than cycles has
                // swallowed a neighbouring root.
                let keep = count / unit;
                if keep < group.members.len() {
                    excess.extend(&group.members[keep.max(1)..]);
                }
            }
            points.push(point);
        }

        if consistent || excess.is_empty() || round == REPAIR_ROUNDS {
            points.sort_by(|a, b| {
                a.location
                    .re
                    .total_cmp(&b.location.re)
                    .then(a.location.im.total_cmp(&b.location.im))
            });
            let count = points.iter().map(|p| p.multiplicity).sum();
            return Ok(Found {
                points,
                count,
                consistent,
                converged: converged.iter().all(|&c| c),
            });
        }
        // Restart the extra approximations around their cluster with every
        // other approximation held fixed.
        fixed = vec![true; reduced];
        for (k, &i) in excess.iter().enumerate() {
            let r = 0.05 * (1.0 + z[i].norm());
            z[i] += Complex64::from_polar(r, GOLDEN_ANGLE * (k as f64 + 0.5));
            fixed[i] = false;
            refined[i] = false;
        }
        round += 1;
    }
}

/// Accept a branch-Newton result only when it agrees with the Aberth
/// estimate: an approximation of an `m`-fold root lies about `m` Newton
/// corrections from it.
fn consistent_move(steps: &[Step], z: &[Complex64], i: usize, x: Complex64, unit: usize) -> Result<bool> {
    let move_len = (x - z[i]).norm();
    if move_len <= 1e-12 * (1.0 + x.norm()) {
        return Ok(true);
    }
    let newton = newton_ratio(steps, z[i], unit)?.norm();
    let m = z.iter().filter(|w| (**w - x).norm() <= 2.0 * move_len).count();
    Ok(move_len <= 2.0 * m as f64 * newton)
}

/// Multiplier, class and cycle of the root at `x`, plus the number of
/// transversal cycles through it when no branch point is involved.
fn classify(problem: &Problem, x: Complex64, multiplicity: usize) -> Result<(PeriodicPoint, Option<usize>)> {
    let steps = &problem.steps;
    let tol = 1e-6 * (1.0 + x.norm());
    let near = |all: Vec<Leaf>, tol: f64| -> Vec<Leaf> { all.into_iter().filter(|l| (l.point - x).norm() <= tol).collect() };
    let backward = leaves(steps, x, true)?;
    let mut dir = Direction::Backward;
    let mut closing = near(backward.clone(), tol);
    // Attracting cycles are found forward, where the branches contract.
    if closing.is_empty() && forward_size(steps) <= FORWARD_LIMIT {
        closing = near(tree(steps, x, true, Direction::Forward)?, tol);
        dir = Direction::Forward;
    }
    let mut exact = !closing.is_empty();
    if closing.is_empty() {
        dir = Direction::Backward;
        closing = near(backward, 1e-3 * (1.0 + x.norm()));
        closing.sort_by(|a, b| (a.point - x).norm().total_cmp(&(b.point - x).norm()));
        closing.truncate(1);
        exact = false;
    }
    let transversal = exact
        && dir == Direction::Backward
        && closing.iter().all(|l| !l.den_zero && !l.num_zero && !l.singular);
    let leaf_count = transversal.then(|| closing.iter().map(|l| l.weight).sum());
    let (multiplier, class, cycle, minimal) = match closing.first() {
        None => (Multiplier::Undefined, PointClass::Irregular, vec![x], problem.pure_period.unwrap_or(1)),
        Some(first) => {
            let m = first.multiplier();
            let class = if closing.iter().all(|l| l.multiplier().class() == m.class()) {
                m.class()
            } else {
                PointClass::Irregular
            };
            let len = first.path.len() - 1;
            let cycle: Vec<Complex64> = match dir {
                Direction::Backward => first.path.iter().rev().take(len).cloned().collect(),
                Direction::Forward => first.path[..len].to_vec(),
            };
            let minimal = match problem.pure_period {
                Some(n) => closing.iter().map(|l| minimal_period(&l.path, n)).min().unwrap_or(n),
                None => 1,
            };
            (m, class, cycle, minimal)
        }
    };
    Ok((
        PeriodicPoint {
            location: x,
            period: problem.pure_period.unwrap_or(1),
            minimal_period: minimal,
            multiplicity,
            multiplier,
            class,
            cycle,
            cycles_found: closing.len(),
        },
        leaf_count,
    ))
}

struct Group {
    location: Complex64,
    members: Vec<usize>,
}

/// Groups approximations of one root. Newton-refined roots are accurate to
/// rounding; the rest only to the Aberth tolerance, or its `m`-th root at a
/// root of multiplicity `m`.
fn cluster(z: &[Complex64], refined: &[bool]) -> Vec<Group> {
    let n = z.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let mag = z[i].norm().max(z[j].norm());
            let tol = if refined[i] || refined[j] {
                REFINED_REL * mag + 1e-14
            } else {
                MERGE_REL * (1.0 + mag)
            };
            if (z[i] - z[j]).norm() <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => g.1.push(i),
            None => groups.push((r, vec![i])),
        }
    }
    groups
        .into_iter()
        .map(|(_, members)| {
            let best: Vec<Complex64> = if members.iter().any(|&i| refined[i]) {
                members.iter().filter(|&&i| refined[i]).map(|&i| z[i]).collect()
            } else {
                members.iter().map(|&i| z[i]).collect()
            };
            Group {
                location: best.iter().sum::<Complex64>() / best.len() as f64,
                members,
            }
        })
        .collect()
}

/// `path = [x, p_1, …, p_n]` with `p_n ≈ x`; forward orbit is the reverse.
fn minimal_period(path: &[Complex64], n: usize) -> usize {
    let orbit: Vec<Complex64> = path[..n].to_vec();
    let scale = 1.0 + orbit.iter().map(|z| z.norm()).fold(0.0, f64::max);
    (1..=n)
        .filter(|k| n % k == 0)
        .find(|&k| (0..n).all(|i| (orbit[(i + k) % n] - orbit[i]).norm() <= 1e-6 * scale))
        .unwrap_or(n)
}

fn check_size(expected: f64) -> Result<usize> {
    if expected > PERIODIC_LIMIT as f64 {
        return Err(CorrError::TreeTooLarge {
            size: expected,
            limit: PERIODIC_LIMIT as f64,
        });
    }
    Ok(expected as usize)
}

fn check_growth(f: &Correspondence) -> Result<()> {
    let l = f.lojasiewicz_exponent()?.value;
    if l <= 1.0 {
        return Err(CorrError::invalid(format!(
            "periodic point counts need a growth exponent above 1, got {l}"
        )));
    }
    Ok(())
}

fn repelling_measure(points: &[PeriodicPoint], total: usize, minimal_only: Option<usize>) -> PointMeasure {
    let atoms = points
        .iter()
        .filter(|p| p.class == PointClass::Repelling)
        .filter(|p| minimal_only.is_none_or(|n| p.minimal_period == n))
        .map(|p| Atom {
            location: p.location,
            weight: p.multiplicity as f64 / total as f64,
        })
        .collect();
    PointMeasure::new(atoms).unwrap_or_default()
}

/// Fixed points of `F` with multiplicity, multiplier and class.
pub fn fixed_points(f: &Correspondence) -> Result<Vec<PeriodicPoint>> {
    if let Repr::Parametrized { g, f: fp } = f.repr() {
        if fp.degree() <= g.degree() {
            return Err(CorrError::invalid("fixed points need deg f > deg g"));
        }
    }
    Ok(periodic_points(f, 1)?.points)
}

/// Periodic points of period `n` (fixed points of `Fⁿ`).
pub fn periodic_points(f: &Correspondence, n: usize) -> Result<PeriodicReport> {
    periodic_points_with(f, n, None, false)
}

/// As [`periodic_points`], with the repelling measure compared against a
/// reference; `minimal_only` keeps points of minimal period exactly `n`.
pub fn periodic_points_with(
    f: &Correspondence,
    n: usize,
    reference: Option<Reference>,
    minimal_only: bool,
) -> Result<PeriodicReport> {
    if n == 0 {
        return Err(CorrError::invalid("period must be at least 1"));
    }
    check_growth(f)?;
    let expected = check_size((f.degrees().d2 as f64).powi(n as i32))?;
    let problem = Problem {
        steps: (0..n).map(|_| Step::new(f)).collect(),
        expected,
        pure_period: Some(n),
    };
    let found = solve(&problem)?;
    let nu_distance = match reference {
        Some(r) => {
            let nu = repelling_measure(&found.points, expected, minimal_only.then_some(n));
            Some(measure_distance(&nu, r.measure, r.bbox, r.n_grid)?)
        }
        None => None,
    };
    Ok(PeriodicReport {
        n,
        expected_count: problem.expected,
        count_with_multiplicity: found.count,
        count_ok: found.count == problem.expected && found.consistent && found.converged,
        converged: found.converged,
        points: found.points,
        nu_distance,
        intersection: None,
    })
}

/// One row of [`repelling_equidistribution`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquidistributionRow {
    pub n: usize,
    pub distance: MeasureDistance,
    /// Mass of `ν_n` before normalization.
    pub repelling_mass: f64,
    /// Mass of `ν_n` outside the reference box, after normalization.
    pub overflow: f64,
    pub count_ok: bool,
}

impl EquidistributionRow {
    /// Row for a report computed against `reference` with the same
    /// `minimal_only` setting.
    pub fn from_report(rep: &PeriodicReport, reference: Reference, minimal_only: bool) -> Result<Self> {
        let distance = rep
            .nu_distance
            .ok_or_else(|| CorrError::invalid("report was computed without a reference measure"))?;
        let nu = repelling_measure(&rep.points, rep.expected_count, minimal_only.then_some(rep.n));
        let grid = crate::equilibrium::grid_density(&nu.normalized(), reference.bbox, 1, 1)?;
        Ok(Self {
            n: rep.n,
            distance,
            repelling_mass: nu.total_mass(),
            overflow: grid.overflow,
            count_ok: rep.count_ok,
        })
    }
}

/// Distance of `ν_n = d₂⁻ⁿ Σ_{repelling} mult · δ` to the reference for
/// `n = 1..=n_max`.
pub fn repelling_equidistribution(
    f: &Correspondence,
    n_max: usize,
    reference: Reference,
    minimal_only: bool,
) -> Result<Vec<EquidistributionRow>> {
    (1..=n_max)
        .map(|n| {
            let rep = periodic_points_with(f, n, Some(reference), minimal_only)?;
            EquidistributionRow::from_report(&rep, reference, minimal_only)
        })
        .collect()
}

/// Fixed points of `G∘Fⁿ`, plus the intersection view: fixed points of
/// `adjoint(G)∘Fⁿ` weighted `p₁⁻¹ d₂⁻ⁿ`.
pub fn mixed_fixed_points(
    f: &Correspondence,
    g: &Correspondence,
    n: usize,
    reference: Option<Reference>,
) -> Result<PeriodicReport> {
    check_growth(f)?;
    let d2n = (f.degrees().d2 as f64).powi(n as i32);
    let p = g.degrees();
    let expected = check_size(p.d2 as f64 * d2n)?;
    let mut steps: Vec<Step> = (0..n).map(|_| Step::new(f)).collect();
    steps.push(Step::new(g));
    let problem = Problem {
        steps,
        expected,
        pure_period: None,
    };
    let found = solve(&problem)?;

    let adj = g.adjoint();
    let expected_view = check_size(p.d1 as f64 * d2n)?;
    let mut view_steps: Vec<Step> = (0..n).map(|_| Step::new(f)).collect();
    view_steps.push(Step::new(&adj));
    let view = match solve(&Problem {
        steps: view_steps,
        expected: expected_view,
        pure_period: None,
    }) {
        Ok(v) => Some(v),
        Err(CorrError::DiagonalDegenerate) => None,
        Err(e) => return Err(e),
    };

    let nu_distance = match reference {
        Some(r) => Some(measure_distance(
            &repelling_measure(&found.points, expected, None),
            r.measure,
            r.bbox,
            r.n_grid,
        )?),
        None => None,
    };
    let view_distance = match (reference, &view) {
        (Some(r), Some(v)) => {
            let pts = PointMeasure::new(
                v.points
                    .iter()
                    .map(|q| Atom {
                        location: q.location,
                        weight: q.multiplicity as f64 / expected_view as f64,
                    })
                    .collect(),
            )?;
            Some(measure_distance(&pts, r.measure, r.bbox, r.n_grid)?)
        }
        _ => None,
    };
    Ok(PeriodicReport {
        n,
        expected_count: expected,
        count_with_multiplicity: found.count,
        count_ok: found.count == expected && found.consistent && found.converged,
        converged: found.converged,
        points: found.points,
        nu_distance,
        intersection: Some(IntersectionView {
            degenerate: view.is_none(),
            expected_count: expected_view,
            count_with_multiplicity: view.as_ref().map_or(0, |v| v.count),
            points: view
                .as_ref()
                .map(|v| v.points.iter().map(|q| (q.location, q.multiplicity)).collect())
                .unwrap_or_default(),
            distance: view_distance,
        }),
    })
}

// --- export -------------------------------------------------------------

#[derive(Serialize)]
struct PointJson {
    re: f64,
    im: f64,
    mult: usize,
    multiplier_re: Option<f64>,
    multiplier_im: Option<f64>,
    multiplier_kind: &'static str,
    class: &'static str,
    minimal_period: usize,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    n: usize,
    d2_pow_n: usize,
    count_with_multiplicity: usize,
    count_ok: bool,
    points: Vec<PointJson>,
    nu_distance: Option<f64>,
    nu_distance_components: Option<&'a MeasureDistance>,
    intersection_distance: Option<f64>,
    intersection_count: Option<usize>,
}

fn point_json(p: &PeriodicPoint) -> PointJson {
    let (re, im, kind) = match p.multiplier {
        Multiplier::Finite(l) => (Some(l.re), Some(l.im), "finite"),
        Multiplier::Infinite => (None, None, "infinite"),
        Multiplier::Undefined => (None, None, "undefined"),
    };
    PointJson {
        re: p.location.re,
        im: p.location.im,
        mult: p.multiplicity,
        multiplier_re: re,
        multiplier_im: im,
        multiplier_kind: kind,
        class: p.class.as_str(),
        minimal_period: p.minimal_period,
    }
}

impl PeriodicReport {
    /// Flat JSON with one record per point.
    pub fn to_json(&self) -> serde_json::Value {
        let r = ReportJson {
            n: self.n,
            d2_pow_n: self.expected_count,
            count_with_multiplicity: self.count_with_multiplicity,
            count_ok: self.count_ok,
            points: self.points.iter().map(point_json).collect(),
            nu_distance: self.nu_distance.map(|d| d.total),
            nu_distance_components: self.nu_distance.as_ref(),
            intersection_distance: self.intersection.as_ref().and_then(|v| v.distance.map(|d| d.total)),
            intersection_count: self.intersection.as_ref().map(|v| v.count_with_multiplicity),
        };
        serde_json::to_value(r).expect("serializable")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "re,im,mult,multiplier_re,multiplier_im,class,minimal_period")?;
        for p in &self.points {
            let j = point_json(p);
            let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                j.re,
                j.im,
                j.mult,
                fmt(j.multiplier_re),
                fmt(j.multiplier_im),
                j.class,
                j.minimal_period
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::poly::roots_with;
    use crate::poly::RootOptions;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn find(points: &[PeriodicPoint], z: Complex64, tol: f64) -> &PeriodicPoint {
        points
            .iter()
            .find(|p| (p.location - z).norm() <= tol)
            .unwrap_or_else(|| panic!("{z} not among {points:#?}"))
    }

    #[test]
    fn e1_fixed_points() {
        let pts = fixed_points(&catalog::e1()).unwrap();
        assert_eq!(pts.len(), 2);
        let zero = find(&pts, c(0.0, 0.0), 1e-12);
        assert_eq!(zero.multiplier, Multiplier::Finite(Complex64::ZERO));
        assert_eq!(zero.class, PointClass::Attracting);
        let one = find(&pts, c(1.0, 0.0), 1e-12);
        assert!((one.multiplier.finite().unwrap() - c(2.0, 0.0)).norm() < 1e-12);
        assert_eq!(one.class, PointClass::Repelling);
    }

    #[test]
    fn e2_fixed_points() {
        // t(t² - t + 1) = 0: t = 0 gives x = 0; both t = e^{±iπ/3} give x = -1,
        // a node of the graph carrying two branches with multipliers 3/2 ± i√3/2.
        let pts = fixed_points(&catalog::e2()).unwrap();
        assert_eq!(pts.iter().map(|p| p.multiplicity).sum::<usize>(), 3);
        let zero = find(&pts, c(0.0, 0.0), 1e-12);
        assert_eq!(zero.multiplicity, 1);
        assert_eq!(zero.class, PointClass::Attracting);
        let node = find(&pts, c(-1.0, 0.0), 1e-10);
        assert_eq!(node.multiplicity, 2);
        assert_eq!(node.cycles_found, 2);
        assert_eq!(node.class, PointClass::Repelling);
        let l = node.multiplier.finite().unwrap();
        assert!((l.norm() - 3f64.sqrt()).abs() < 1e-10);
        assert!((l.re - 1.5).abs() < 1e-10);
    }

    #[test]
    fn cusp_fixed_points() {
        let pts = fixed_points(&catalog::cusp()).unwrap();
        let zero = find(&pts, c(0.0, 0.0), 1e-6);
        assert_eq!(zero.multiplicity, 2);
        assert_eq!(zero.class, PointClass::Irregular);
        let one = find(&pts, c(1.0, 0.0), 1e-10);
        assert_eq!(one.multiplicity, 1);
        assert!((one.multiplier.finite().unwrap() - c(1.5, 0.0)).norm() < 1e-10);
        assert_eq!(one.class, PointClass::Repelling);
    }

    #[test]
    fn e1_period_two() {
        let rep = periodic_points(&catalog::e1(), 2).unwrap();
        assert_eq!(rep.count_with_multiplicity, 4);
        assert!(rep.count_ok);
        let w = Complex64::from_polar(1.0, std::f64::consts::TAU / 3.0);
        for z in [w, w.conj()] {
            let p = find(&rep.points, z, 1e-12);
            assert!((p.multiplier.finite().unwrap() - c(4.0, 0.0)).norm() < 1e-10);
            assert_eq!(p.class, PointClass::Repelling);
            assert_eq!(p.minimal_period, 2);
        }
        assert_eq!(find(&rep.points, c(1.0, 0.0), 1e-12).minimal_period, 1);
    }

    #[test]
    fn e2_counts() {
        for n in 1..=4 {
            let rep = periodic_points(&catalog::e2(), n).unwrap();
            assert_eq!(rep.count_with_multiplicity, 3usize.pow(n as u32), "n = {n}");
            assert!(rep.count_ok, "n = {n}");
            let node = find(&rep.points, c(-1.0, 0.0), 1e-9);
            assert_eq!(node.multiplicity, 1 << n);
        }
    }

    #[test]
    fn chebyshev_pair_is_doubled() {
        // The graph is (y - T₃(x))², so every root carries an even weight.
        let rep = periodic_points(&catalog::chebyshev_pair(), 2).unwrap();
        assert_eq!(rep.count_with_multiplicity, 36);
        assert!(rep.count_ok);
        assert!(rep.points.iter().all(|p| p.multiplicity % 4 == 0));
        for p in rep.points.iter().filter(|p| p.class == PointClass::Repelling) {
            assert!(p.location.im.abs() < 1e-9 && p.location.re.abs() <= 1.0 + 1e-9, "{p:?}");
        }
    }

    #[test]
    fn orbit_closure() {
        let e2 = catalog::e2();
        let rep = periodic_points(&e2, 3).unwrap();
        for p in rep.points.iter().filter(|p| p.class == PointClass::Repelling) {
            assert_eq!(p.cycle.len(), 3);
            for i in 0..3 {
                let next = p.cycle[(i + 1) % 3];
                let imgs = e2.images(p.cycle[i]).unwrap();
                assert!(imgs.locations().any(|y| (y - next).norm() <= 1e-6), "{p:?}");
            }
        }
    }

    #[test]
    fn matches_resultant_diagonal_for_small_n() {
        // Oracle: roots of Q_n(x, x) from the composed graph.
        let e2 = catalog::e2();
        for n in 1..=2 {
            let q = e2.iterate(n).unwrap().correspondence.graph_poly().unwrap();
            let want = roots_with(&q.diagonal(), &RootOptions::default().with_coeff_error(1e-12)).unwrap();
            let got = periodic_points(&e2, n).unwrap();
            assert_eq!(want.total(), got.count_with_multiplicity);
            for r in &want.roots {
                let p = find(&got.points, r.location, 1e-6);
                assert_eq!(p.multiplicity, r.multiplicity);
            }
        }
    }

    #[test]
    fn fixed_points_reappear_at_period_two() {
        let e2 = catalog::e2();
        let one = fixed_points(&e2).unwrap();
        let two = periodic_points(&e2, 2).unwrap();
        for p in &one {
            let q = find(&two.points, p.location, 1e-9);
            assert!(q.multiplicity >= p.multiplicity);
        }
    }

    #[test]
    fn polynomial_multiplier_is_derivative() {
        // z² + c with c = -0.12 + 0.75i: multiplier of a period-3 cycle is
        // the product of 2z along the cycle.
        let p = UniPoly::new(vec![c(-0.12, 0.75), Complex64::ZERO, Complex64::ONE]);
        let f = Correspondence::polynomial_map(p).unwrap();
        let rep = periodic_points(&f, 3).unwrap();
        assert_eq!(rep.count_with_multiplicity, 8);
        for pt in &rep.points {
            let want: Complex64 = pt.cycle.iter().map(|z| z * 2.0).product();
            let got = pt.multiplier.finite().unwrap();
            assert!((got - want).norm() <= 1e-8 * (1.0 + want.norm()), "{got} vs {want}");
        }
    }

    #[test]
    fn mixed_examples() {
        let e1 = catalog::e1();
        let id = Correspondence::polynomial_map(UniPoly::identity()).unwrap();
        let a = mixed_fixed_points(&e1, &id, 3, None).unwrap();
        let b = periodic_points(&e1, 3).unwrap();
        assert_eq!(a.count_with_multiplicity, b.count_with_multiplicity);
        for p in &b.points {
            find(&a.points, p.location, 1e-9);
        }

        let cube = Correspondence::polynomial_map(UniPoly::monomial(Complex64::ONE, 3)).unwrap();
        let rep = mixed_fixed_points(&e1, &cube, 2, None).unwrap();
        assert_eq!(rep.count_with_multiplicity, 12);
        assert!(rep.count_ok);
        find(&rep.points, c(0.0, 0.0), 1e-9);
        for k in 0..11 {
            find(&rep.points, Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 11.0), 1e-9);
        }

        // x⁴ = y³ meets y = x⁴ at 0 (three times) and 1.
        let view = rep.intersection.unwrap();
        assert!(!view.degenerate);
        assert_eq!(view.expected_count, 4);
        assert_eq!(view.count_with_multiplicity, 4);
        assert!(view.points.iter().any(|&(z, m)| z.norm() < 1e-6 && m == 3));

        let e2 = catalog::e2();
        let rep = mixed_fixed_points(&e2, &e2, 1, None).unwrap();
        assert_eq!(rep.count_with_multiplicity, 9);
        assert!(rep.count_ok);
        assert!(rep.intersection.unwrap().degenerate);
    }

    #[test]
    fn guards() {
        assert!(matches!(
            periodic_points(&catalog::e1(), 11),
            Err(CorrError::TreeTooLarge { .. })
        ));
        let id = Correspondence::polynomial_map(UniPoly::identity()).unwrap();
        assert!(periodic_points(&id, 1).is_err());
        let same = Correspondence::parametrized(UniPoly::identity(), UniPoly::identity()).unwrap();
        assert!(fixed_points(&same).is_err());
    }

    #[test]
    fn json_and_csv_shape() {
        let rep = periodic_points(&catalog::e1(), 2).unwrap();
        let v = rep.to_json();
        assert_eq!(v["d2_pow_n"], 4);
        assert_eq!(v["points"].as_array().unwrap().len(), 4);
        assert!(v["points"][0]["class"].is_string());
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }
}
