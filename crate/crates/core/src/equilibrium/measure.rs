//! Discrete measures, moment vectors, grid densities and the comparison
//! metric used everywhere an estimate is checked against a reference.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CorrError, Result};

/// Highest total degree `p + q` in the moment dictionary.
pub const MOMENT_ORDER: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: Complex64,
    pub weight: f64,
}

/// Finite positive combination of Dirac masses.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PointMeasure {
    atoms: Vec<Atom>,
    total_mass: f64,
}

impl PointMeasure {
    /// Weights must be finite and strictly positive.
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        for a in &atoms {
            if !(a.weight.is_finite() && a.weight > 0.0) {
                return Err(CorrError::invalid(format!("atom weight {} is not positive", a.weight)));
            }
            if !(a.location.re.is_finite() && a.location.im.is_finite()) {
                return Err(CorrError::NonFinite("atom location"));
            }
        }
        Ok(Self::from_atoms_unchecked(atoms))
    }

    pub(crate) fn from_atoms_unchecked(atoms: Vec<Atom>) -> Self {
        let total_mass = atoms.iter().map(|a| a.weight).sum();
        Self { atoms, total_mass }
    }

    pub fn dirac(z: Complex64) -> Self {
        Self::from_atoms_unchecked(vec![Atom {
            location: z,
            weight: 1.0,
        }])
    }

    /// Equal weights summing to one. Empty input gives the zero measure.
    pub fn uniform(points: &[Complex64]) -> Self {
        let w = 1.0 / points.len().max(1) as f64;
        Self::from_atoms_unchecked(points.iter().map(|&location| Atom { location, weight: w }).collect())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_probability(&self) -> bool {
        (self.total_mass - 1.0).abs() <= 1e-12
    }

    pub fn locations(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.atoms.iter().map(|a| a.location)
    }

    /// Rescaled to total mass one. The zero measure is returned unchanged.
    pub fn normalized(&self) -> PointMeasure {
        if self.total_mass <= 0.0 {
            return self.clone();
        }
        let s = 1.0 / self.total_mass;
        Self::from_atoms_unchecked(
            self.atoms
                .iter()
                .map(|a| Atom {
                    location: a.location,
                    weight: a.weight * s,
                })
                .collect(),
        )
    }

    /// `∫ φ dμ`.
    pub fn integrate(&self, phi: impl Fn(Complex64) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.weight * phi(a.location)).sum()
    }

    /// Write CSV with header `re,im,weight`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "re,im,weight")?;
        for a in &self.atoms {
            writeln!(out, "{},{},{}", a.location.re, a.location.im, a.weight)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut atoms = Vec::new();
        for (k, line) in input.lines().enumerate() {
            let line = line?;
            if k == 0 {
                if line.trim() != "re,im,weight" {
                    return Err(CorrError::invalid("measure CSV must start with `re,im,weight`"));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| CorrError::invalid(format!("line {}: {e}", k + 1)))?;
            if fields.len() != 3 {
                return Err(CorrError::invalid(format!("line {}: expected 3 fields", k + 1)));
            }
            atoms.push(Atom {
                location: Complex64::new(fields[0], fields[1]),
                weight: fields[2],
            });
        }
        Self::new(atoms)
    }
}

/// Normalized moments `m[p][q] = ∫ z^p z̄^q dμ / μ(ℂ)` for `p + q ≤ 4`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentVector {
    m: [[Complex64; MOMENT_ORDER + 1]; MOMENT_ORDER + 1],
}

#[derive(Serialize, Deserialize)]
struct MomentEntry {
    p: usize,
    q: usize,
    re: f64,
    im: f64,
}

impl Serialize for MomentVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<MomentEntry> = self
            .indices()
            .map(|(p, q)| MomentEntry {
                p,
                q,
                re: self.m[p][q].re,
                im: self.m[p][q].im,
            })
            .collect();
        entries.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MomentVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<MomentEntry>::deserialize(d)?;
        let mut m = [[Complex64::ZERO; MOMENT_ORDER + 1]; MOMENT_ORDER + 1];
        for e in entries {
            if e.p + e.q > MOMENT_ORDER {
                return Err(serde::de::Error::custom("moment order above 4"));
            }
            m[e.p][e.q] = Complex64::new(e.re, e.im);
        }
        Ok(Self { m })
    }
}

impl MomentVector {
    /// `m[p][q]`; panics when `p + q > 4`.
    pub fn get(&self, p: usize, q: usize) -> Complex64 {
        assert!(p + q <= MOMENT_ORDER, "moment ({p},{q}) outside the dictionary");
        self.m[p][q]
    }

    /// All index pairs with `p + q ≤ 4`, in lexicographic order.
    pub fn indices(&self) -> impl Iterator<Item = (usize, usize)> {
        (0..=MOMENT_ORDER).flat_map(|p| (0..=MOMENT_ORDER - p).map(move |q| (p, q)))
    }

    /// Largest `|m1[p][q] - m2[p][q]|` over the dictionary minus `(0, 0)`.
    pub fn sup_distance(&self, other: &MomentVector) -> f64 {
        self.indices()
            .filter(|&pq| pq != (0, 0))
            .map(|(p, q)| (self.m[p][q] - other.m[p][q]).norm())
            .fold(0.0, f64::max)
    }
}

/// Normalized weighted moments. The zero measure gives all zeros.
pub fn moments(mu: &PointMeasure) -> MomentVector {
    let mut m = [[Complex64::ZERO; MOMENT_ORDER + 1]; MOMENT_ORDER + 1];
    if mu.total_mass() <= 0.0 {
        return MomentVector { m };
    }
    for a in mu.atoms() {
        let z = a.location;
        let zc = z.conj();
        let mut zp = Complex64::ONE;
        for row in m.iter_mut() {
            let mut term = zp * a.weight;
            for cell in row.iter_mut() {
                *cell += term;
                term *= zc;
            }
            zp *= z;
        }
    }
    let s = 1.0 / mu.total_mass();
    for (p, row) in m.iter_mut().enumerate() {
        for (q, cell) in row.iter_mut().enumerate() {
            *cell = if p + q <= MOMENT_ORDER { *cell * s } else { Complex64::ZERO };
        }
    }
    MomentVector { m }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl BBox {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        if !(x_min < x_max && y_min < y_max) || ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
            return Err(CorrError::invalid("bounding box must have finite, increasing bounds"));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    /// Square `[-r, r]²`.
    pub fn centered(r: f64) -> Self {
        Self {
            x_min: -r,
            x_max: r,
            y_min: -r,
            y_max: r,
        }
    }

    /// Smallest box holding every atom, padded by 5% of its extent and
    /// widened to at least unit size in each direction.
    pub fn covering(measures: &[&PointMeasure]) -> Self {
        let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for z in measures.iter().flat_map(|m| m.locations()) {
            b[0] = b[0].min(z.re);
            b[1] = b[1].max(z.re);
            b[2] = b[2].min(z.im);
            b[3] = b[3].max(z.im);
        }
        if !b[0].is_finite() {
            return Self::centered(1.0);
        }
        let pad = |lo: f64, hi: f64| {
            let w = (hi - lo).max(1.0);
            let mid = 0.5 * (lo + hi);
            (mid - 0.55 * w, mid + 0.55 * w)
        };
        let (x_min, x_max) = pad(b[0], b[1]);
        let (y_min, y_max) = pad(b[2], b[3]);
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }
}

/// Mass binned on an `nx × ny` grid, row-major with row index `iy`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub bbox: BBox,
    pub nx: usize,
    pub ny: usize,
    pub mass: Vec<f64>,
    /// Mass of atoms outside the box.
    pub overflow: f64,
}

/// Sidecar written next to a PGM image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgmSidecar {
    pub bbox: BBox,
    pub nx: usize,
    pub ny: usize,
    pub bit_depth: u8,
    /// Cell mass that maps to the brightest pixel value.
    pub normalization: f64,
    pub overflow: f64,
}

impl GridDensity {
    pub fn cell(&self, ix: usize, iy: usize) -> f64 {
        self.mass[iy * self.nx + ix]
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (
            (self.bbox.x_max - self.bbox.x_min) / self.nx as f64,
            (self.bbox.y_max - self.bbox.y_min) / self.ny as f64,
        )
    }

    /// Cell index of `z`, or `None` outside the half-open box.
    pub fn index_of(&self, z: Complex64) -> Option<(usize, usize)> {
        let (wx, wy) = self.cell_size();
        let fx = ((z.re - self.bbox.x_min) / wx).floor();
        let fy = ((z.im - self.bbox.y_min) / wy).floor();
        if fx >= 0.0 && fy >= 0.0 && fx < self.nx as f64 && fy < self.ny as f64 {
            Some((fx as usize, fy as usize))
        } else {
            None
        }
    }

    pub fn binned_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Binary PGM, top row at `y_max`, max-normalized. Returns the sidecar.
    pub fn write_pgm<W: Write>(&self, mut out: W, bit_depth: u8) -> Result<PgmSidecar> {
        let maxval: u32 = match bit_depth {
            8 => 255,
            16 => 65535,
            _ => return Err(CorrError::invalid("PGM bit depth must be 8 or 16")),
        };
        let peak = self.mass.iter().cloned().fold(0.0, f64::max);
        write!(out, "P5\n{} {}\n{}\n", self.nx, self.ny, maxval)?;
        let mut bytes = Vec::with_capacity(self.nx * self.ny * (bit_depth as usize / 8));
        for iy in (0..self.ny).rev() {
            for ix in 0..self.nx {
                let v = if peak > 0.0 {
                    (self.cell(ix, iy) / peak * maxval as f64).round() as u32
                } else {
                    0
                };
                if bit_depth == 8 {
                    bytes.push(v as u8);
                } else {
                    bytes.extend_from_slice(&(v as u16).to_be_bytes());
                }
            }
        }
        out.write_all(&bytes)?;
        Ok(PgmSidecar {
            bbox: self.bbox,
            nx: self.nx,
            ny: self.ny,
            bit_depth,
            normalization: peak,
            overflow: self.overflow,
        })
    }
}

/// Bin by floor indexing on the half-open box; mass outside goes to overflow.
pub fn grid_density(mu: &PointMeasure, bbox: BBox, nx: usize, ny: usize) -> Result<GridDensity> {
    if nx == 0 || ny == 0 {
        return Err(CorrError::invalid("grid needs nx, ny >= 1"));
    }
    let mut g = GridDensity {
        bbox,
        nx,
        ny,
        mass: vec![0.0; nx * ny],
        overflow: 0.0,
    };
    for a in mu.atoms() {
        match g.index_of(a.location) {
            Some((ix, iy)) => g.mass[iy * nx + ix] += a.weight,
            None => g.overflow += a.weight,
        }
    }
    Ok(g)
}

/// Components of the comparison metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureDistance {
    /// `l1 + moments`.
    pub total: f64,
    /// Half the L1 distance of the binned probability densities, overflow
    /// counted as one extra cell.
    pub l1: f64,
    /// Sup of moment differences over the dictionary.
    pub moments: f64,
}

/// Weak-topology proxy between two measures, each rescaled to probability.
pub fn measure_distance(mu1: &PointMeasure, mu2: &PointMeasure, bbox: BBox, n_grid: usize) -> Result<MeasureDistance> {
    let a = mu1.normalized();
    let b = mu2.normalized();
    let ga = grid_density(&a, bbox, n_grid, n_grid)?;
    let gb = grid_density(&b, bbox, n_grid, n_grid)?;
    let cells: f64 = ga.mass.iter().zip(&gb.mass).map(|(x, y)| (x - y).abs()).sum();
    let l1 = 0.5 * (cells + (ga.overflow - gb.overflow).abs());
    let mom = moments(&a).sup_distance(&moments(&b));
    Ok(MeasureDistance {
        total: l1 + mom,
        l1,
        moments: mom,
    })
}
