//! Pullback of measures: one exact step with seeded resampling, the full
//! preimage tree, and random backward orbits.

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::measure::{Atom, PointMeasure};
use crate::correspondence::Correspondence;
use crate::error::{CorrError, Result};

/// Largest `d₂ⁿ` accepted by [`preimage_tree`].
pub const TREE_LIMIT: f64 = 1e6;
/// Default atom cap for [`pullback_step`].
pub const DEFAULT_ATOM_CAP: usize = 200_000;
/// Degenerate fibers tolerated per chain before giving up.
pub const MAX_RESTARTS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub seed: u64,
    pub n_samples: usize,
    pub burn_in: usize,
    pub atom_cap: usize,
    pub start_point: Complex64,
    /// Independent backward orbits; chain `k` draws from ChaCha stream `k`.
    pub chains: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_samples: 100_000,
            burn_in: 50,
            atom_cap: DEFAULT_ATOM_CAP,
            start_point: Complex64::new(0.5, 0.5),
            chains: 4,
        }
    }
}

impl SamplerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(CorrError::invalid("n_samples must be at least 1"));
        }
        if self.chains == 0 {
            return Err(CorrError::invalid("chains must be at least 1"));
        }
        if self.atom_cap == 0 {
            return Err(CorrError::invalid("atom_cap must be at least 1"));
        }
        if !(self.start_point.re.is_finite() && self.start_point.im.is_finite()) {
            return Err(CorrError::NonFinite("start_point"));
        }
        Ok(())
    }
}

/// Diagnostics of a backward-orbit run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplerStats {
    pub restarts: usize,
    /// Set when the growth exponent does not exceed one.
    pub warning: Option<String>,
}

/// `d₂⁻¹ F*μ`: every atom `(z, w)` becomes its preimages with weight
/// `w · mult / d₂`. Above `atom_cap` atoms, multinomial resampling (seeded)
/// reduces to exactly `atom_cap` equal-weight atoms.
pub fn pullback_step(f: &Correspondence, mu: &PointMeasure, atom_cap: usize, seed: u64) -> Result<PointMeasure> {
    let d2 = f.degrees().d2 as f64;
    let children: Vec<Vec<Atom>> = mu
        .atoms()
        .par_iter()
        .map(|a| {
            let fiber = f.preimages(a.location)?;
            Ok(fiber
                .roots
                .iter()
                .map(|r| Atom {
                    location: r.location,
                    weight: a.weight * r.multiplicity as f64 / d2,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let atoms: Vec<Atom> = children.into_iter().flatten().collect();
    if atoms.len() <= atom_cap {
        return Ok(PointMeasure::from_atoms_unchecked(atoms));
    }
    Ok(resample(&atoms, mu.total_mass(), atom_cap, seed))
}

fn resample(atoms: &[Atom], mass: f64, cap: usize, seed: u64) -> PointMeasure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = WeightedIndex::new(atoms.iter().map(|a| a.weight)).expect("positive weights");
    let mut counts = vec![0usize; atoms.len()];
    for _ in 0..cap {
        counts[dist.sample(&mut rng)] += 1;
    }
    let w = mass / cap as f64;
    let out = atoms
        .iter()
        .zip(&counts)
        .flat_map(|(a, &k)| {
            std::iter::repeat_n(
                Atom {
                    location: a.location,
                    weight: w,
                },
                k,
            )
        })
        .collect();
    PointMeasure::from_atoms_unchecked(out)
}

/// Exact `μ^{z0}_n = d₂⁻ⁿ (Fⁿ)*δ_{z0}` with multiplicity weights.
pub fn preimage_tree(f: &Correspondence, z0: Complex64, n: usize) -> Result<PointMeasure> {
    let size = (f.degrees().d2 as f64).powi(n as i32);
    if size > TREE_LIMIT {
        return Err(CorrError::TreeTooLarge {
            size,
            limit: TREE_LIMIT,
        });
    }
    let mut mu = PointMeasure::dirac(z0);
    for _ in 0..n {
        mu = pullback_step(f, &mu, usize::MAX, 0)?;
    }
    Ok(mu)
}

/// Random backward orbits from `cfg.start_point`, choosing each preimage
/// with probability proportional to its multiplicity. The first `burn_in`
/// points of every chain are discarded; the chains are concatenated in
/// stream order.
pub fn brolin_sample(f: &Correspondence, cfg: &SamplerConfig) -> Result<PointMeasure> {
    brolin_sample_with_stats(f, cfg).map(|(mu, _)| mu)
}

pub fn brolin_sample_with_stats(f: &Correspondence, cfg: &SamplerConfig) -> Result<(PointMeasure, SamplerStats)> {
    cfg.validate()?;
    let mut stats = SamplerStats::default();
    let l = f.lojasiewicz_exponent()?.value;
    if l <= 1.0 {
        stats.warning = Some(format!("growth exponent {l} does not exceed 1; convergence is not expected"));
    }
    let chains = cfg.chains.min(cfg.n_samples);
    let base = cfg.n_samples / chains;
    let extra = cfg.n_samples % chains;
    let runs: Vec<(Vec<Complex64>, usize)> = (0..chains)
        .into_par_iter()
        .map(|k| {
            let count = base + usize::from(k < extra);
            run_chain(f, cfg, k as u64, count)
        })
        .collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(cfg.n_samples);
    for (pts, restarts) in runs {
        points.extend(pts);
        stats.restarts += restarts;
    }
    Ok((PointMeasure::uniform(&points), stats))
}

fn run_chain(f: &Correspondence, cfg: &SamplerConfig, stream: u64, count: usize) -> Result<(Vec<Complex64>, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let mut z = cfg.start_point;
    let mut restarts = 0;
    let mut out = Vec::with_capacity(count);
    let total = cfg.burn_in + count;
    let mut step = 0;
    while step < total {
        match f.preimages(z) {
            Ok(fiber) => {
                let mut pick = rng.random_range(0..fiber.total());
                let mut next = z;
                for r in &fiber.roots {
                    if pick < r.multiplicity {
                        next = r.location;
                        break;
                    }
                    pick -= r.multiplicity;
                }
                z = next;
                if step >= cfg.burn_in {
                    out.push(z);
                }
                step += 1;
            }
            Err(CorrError::DegenerateFiber { .. }) => {
                restarts += 1;
                if restarts > MAX_RESTARTS {
                    return Err(CorrError::TooManyRestarts(restarts));
                }
                let kick = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                z += kick * 1e-6 * (1.0 + z.norm());
            }
            Err(e) => return Err(e),
        }
    }
    Ok((out, restarts))
}
