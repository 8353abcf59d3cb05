//! Inverse branches by numeric continuation, and how their diameters shrink
//! with the order.
//!
//! A branch of order `m` over the disk `|w - z| ≤ r` is tracked through the
//! images of a fixed skeleton path: a radial segment from the center to the
//! boundary followed by one loop around the boundary circle. Each order-`m`
//! branch spawns one child per preimage of its center, and the child's
//! skeleton is continued from that preimage.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correspondence::Correspondence;
use crate::error::{CorrError, Result};

/// Collision radius as a fraction of the fiber diameter.
pub const COLLISION_REL: f64 = 1e-3;
/// Most points a continued path may have after adaptive refinement.
pub const REFINE_CAP: usize = 1 << 14;

/// One inverse branch over the base disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchChain {
    pub base: Complex64,
    pub order: usize,
    /// Child index at each order, from the root.
    pub genealogy: Vec<usize>,
    pub boundary_images: Vec<Complex64>,
    pub alive: bool,
    pub diameter: f64,
}

/// Follow the preimage through `w0 ∈ F⁻¹(path[0])` along `path`, choosing
/// the nearest root at each step. Steps are bisected until the image moves
/// less than half the gap to the next root of the fiber.
pub fn continue_preimage(f: &Correspondence, path: &[Complex64], w0: Complex64) -> Result<Vec<Complex64>> {
    let Some(&first) = path.first() else {
        return Ok(Vec::new());
    };
    let fiber = f.preimages(first)?;
    let near = fiber
        .locations()
        .map(|r| (r - w0).norm())
        .fold(f64::INFINITY, f64::min);
    if near > 1e-6 * (1.0 + w0.norm()) {
        return Err(CorrError::invalid(format!("{w0} is not a preimage of {first}")));
    }
    let mut budget = REFINE_CAP.saturating_sub(path.len());
    let mut out = Vec::with_capacity(path.len());
    let mut w = select(f, first, w0, 0)?.0;
    out.push(w);
    for (k, pair) in path.windows(2).enumerate() {
        w = advance(f, pair[0], pair[1], w, &mut budget, k + 1)?;
        out.push(w);
    }
    Ok(out)
}

/// Nearest root of `F⁻¹(z)` to `w` and its distance to the next root.
fn select(f: &Correspondence, z: Complex64, w: Complex64, index: usize) -> Result<(Complex64, f64)> {
    let fiber = f.preimages(z)?;
    let roots = &fiber.roots;
    if f.degrees().d2 > 1 && roots.len() < 2 {
        return Err(CorrError::BranchCollision { index });
    }
    let (best, _) = roots
        .iter()
        .enumerate()
        .map(|(i, r)| (i, (r.location - w).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(CorrError::BranchCollision { index })?;
    if roots[best].multiplicity > 1 {
        return Err(CorrError::BranchCollision { index });
    }
    let spread = roots
        .iter()
        .flat_map(|a| roots.iter().map(move |b| (a.location - b.location).norm()))
        .fold(0.0, f64::max);
    let gap = roots
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, r)| (r.location - roots[best].location).norm())
        .fold(f64::INFINITY, f64::min);
    if gap <= COLLISION_REL * spread {
        return Err(CorrError::BranchCollision { index });
    }
    Ok((roots[best].location, gap))
}

fn advance(
    f: &Correspondence,
    za: Complex64,
    zb: Complex64,
    w: Complex64,
    budget: &mut usize,
    index: usize,
) -> Result<Complex64> {
    let (next, gap) = select(f, zb, w, index)?;
    if (next - w).norm() < 0.5 * gap {
        return Ok(next);
    }
    if *budget == 0 {
        return Err(CorrError::BranchCollision { index });
    }
    *budget -= 1;
    let mid = 0.5 * (za + zb);
    let wm = advance(f, za, mid, w, budget, index)?;
    advance(f, mid, zb, wm, budget, index)
}

/// Per-order statistics of alive branches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchLevel {
    pub m: usize,
    pub count_alive: usize,
    /// Children that failed at this order.
    pub count_dead: usize,
    pub median_diameter: f64,
    pub q10: f64,
    pub q90: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchStats {
    pub base: Complex64,
    pub radius: f64,
    pub n_boundary: usize,
    pub levels: Vec<BranchLevel>,
    /// Least-squares slope of `ln median_diameter` against `m` over orders
    /// `1..=m_max` with alive branches.
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
}

impl BranchStats {
    pub fn alive_fraction(&self, m: usize) -> Option<f64> {
        let lvl = self.levels.get(m)?;
        let total = lvl.count_alive + lvl.count_dead;
        (total > 0).then(|| lvl.count_alive as f64 / total as f64)
    }

    /// CSV with header `m,count_alive,median_diameter,q10,q90`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "m,count_alive,median_diameter,q10,q90")?;
        for l in &self.levels {
            writeln!(out, "{},{},{},{},{}", l.m, l.count_alive, l.median_diameter, l.q10, l.q90)?;
        }
        Ok(())
    }
}

/// Largest distance between two points, over the convex hull.
pub fn diameter(points: &[Complex64]) -> f64 {
    let hull = convex_hull(points);
    let mut best: f64 = 0.0;
    for (i, a) in hull.iter().enumerate() {
        for b in &hull[i + 1..] {
            best = best.max((a - b).norm());
        }
    }
    best
}

fn convex_hull(points: &[Complex64]) -> Vec<Complex64> {
    let mut pts: Vec<Complex64> = points.to_vec();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Complex64, a: Complex64, b: Complex64| (a - o).re * (b - o).im - (a - o).im * (b - o).re;
    let mut lower: Vec<Complex64> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Complex64> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Skeleton of the base disk: the radial segment from `z` to `z + r`, then
/// the boundary loop back to `z + r`. Returns the path and the index where
/// the loop starts.
fn skeleton(z: Complex64, r: f64, n_boundary: usize) -> (Vec<Complex64>, usize) {
    let n_radial = (n_boundary / 8).max(8);
    let mut path: Vec<Complex64> = (0..n_radial)
        .map(|k| z + Complex64::new(r * k as f64 / n_radial as f64, 0.0))
        .collect();
    let start = path.len();
    path.extend(
        (0..=n_boundary).map(|k| z + Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / n_boundary as f64)),
    );
    (path, start)
}

#[derive(Default)]
struct Tally {
    diameters: Vec<Vec<f64>>,
    dead: Vec<usize>,
}

impl Tally {
    fn new(levels: usize) -> Self {
        Self {
            diameters: vec![Vec::new(); levels],
            dead: vec![0; levels],
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.diameters.iter_mut().zip(other.diameters) {
            a.extend(b);
        }
        for (a, b) in self.dead.iter_mut().zip(other.dead) {
            *a += b;
        }
        self
    }
}

/// Children of a branch whose skeleton images are `images`, explored depth
/// first up to `m_max`.
fn explore(f: &Correspondence, images: &[Complex64], loop_start: usize, m: usize, m_max: usize) -> Tally {
    let mut tally = Tally::new(m_max + 1);
    if m == m_max {
        return tally;
    }
    let centers = match f.preimages(images[0]) {
        Ok(fiber) => fiber.locations().collect::<Vec<_>>(),
        Err(_) => {
            tally.dead[m + 1] += f.degrees().d2;
            return tally;
        }
    };
    let children: Vec<Tally> = centers
        .par_iter()
        .map(|&w| {
            let mut t = Tally::new(m_max + 1);
            match continue_preimage(f, images, w) {
                Ok(child) if closes(&child[loop_start..]) => {
                    t.diameters[m + 1].push(diameter(&child[loop_start..]));
                    t = t.merge(explore(f, &child, loop_start, m + 1, m_max));
                }
                _ => t.dead[m + 1] += 1,
            }
            t
        })
        .collect();
    // A center of multiplicity k stands for k coinciding children, all dead.
    let lost = f.degrees().d2.saturating_sub(centers.len());
    tally.dead[m + 1] += lost;
    children.into_iter().fold(tally, Tally::merge)
}

/// A regular branch returns to its starting value after one loop.
fn closes(boundary: &[Complex64]) -> bool {
    match (boundary.first(), boundary.last()) {
        (Some(a), Some(b)) => (a - b).norm() <= 1e-8 * (1.0 + a.norm()),
        _ => false,
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Alive counts and diameter quantiles of the inverse branches of order
/// `0..=m_max` over the disk `|w - z| ≤ r`. Order 0 is the disk itself.
pub fn branch_diameter_stats(
    f: &Correspondence,
    z: Complex64,
    r: f64,
    m_max: usize,
    n_boundary: usize,
) -> Result<BranchStats> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(CorrError::invalid("disk radius must be positive"));
    }
    if n_boundary < 8 {
        return Err(CorrError::invalid("need at least 8 boundary samples"));
    }
    if f.critical_values()?.locations().any(|c| (c - z).norm() <= r) {
        return Err(CorrError::BadBasePoint { at: z });
    }
    let (path, loop_start) = skeleton(z, r, n_boundary);
    let mut tally = explore(f, &path, loop_start, 0, m_max);
    tally.diameters[0] = vec![2.0 * r];

    let levels: Vec<BranchLevel> = tally
        .diameters
        .iter_mut()
        .zip(&tally.dead)
        .enumerate()
        .map(|(m, (d, &dead))| {
            d.sort_by(f64::total_cmp);
            BranchLevel {
                m,
                count_alive: d.len(),
                count_dead: dead,
                median_diameter: quantile(d, 0.5),
                q10: quantile(d, 0.1),
                q90: quantile(d, 0.9),
            }
        })
        .collect();
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .filter(|l| l.m >= 1 && l.count_alive > 0 && l.median_diameter > 0.0)
        .map(|l| (l.m as f64, l.median_diameter.ln()))
        .collect();
    let (slope, r_squared) = match linear_fit(&pts) {
        Some((s, r2)) => (Some(s), Some(r2)),
        None => (None, None),
    };
    Ok(BranchStats {
        base: z,
        radius: r,
        n_boundary,
        levels,
        slope,
        r_squared,
    })
}

/// Least-squares slope and coefficient of determination.
fn linear_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Some((slope, r2))
}

/// All alive branches of order exactly `m`, for inspection and tests.
pub fn branches_of_order(
    f: &Correspondence,
    z: Complex64,
    r: f64,
    m: usize,
    n_boundary: usize,
) -> Result<Vec<BranchChain>> {
    let (path, loop_start) = skeleton(z, r, n_boundary);
    let mut level = vec![(Vec::new(), path)];
    for _ in 0..m {
        let next: Vec<Vec<(Vec<usize>, Vec<Complex64>)>> = level
            .par_iter()
            .map(|(genealogy, images)| {
                let Ok(fiber) = f.preimages(images[0]) else { return Vec::new() };
                fiber
                    .locations()
                    .enumerate()
                    .filter_map(|(i, w)| {
                        let child = continue_preimage(f, images, w).ok()?;
                        closes(&child[loop_start..]).then(|| {
                            let mut g: Vec<usize> = genealogy.clone();
                            g.push(i);
                            (g, child)
                        })
                    })
                    .collect()
            })
            .collect();
        level = next.into_iter().flatten().collect();
    }
    Ok(level
        .into_iter()
        .map(|(genealogy, images)| {
            let boundary = images[loop_start..].to_vec();
            BranchChain {
                base: z,
                order: m,
                genealogy,
                diameter: if m == 0 { 2.0 * r } else { diameter(&boundary) },
                boundary_images: boundary,
                alive: true,
            }
        })
        .collect())
}
