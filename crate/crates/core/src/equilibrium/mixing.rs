//! Correlation decay under the Perron–Frobenius operator and the commuting
//! correspondence check.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::measure::{measure_distance, BBox, MeasureDistance, PointMeasure};
use super::sampler::pullback_step;
use crate::correspondence::Correspondence;
use crate::error::{CorrError, Result};

/// Largest `d₂ⁿ · |atoms|` accepted by [`mixing_in`].
pub const MIXING_LIMIT: f64 = 1e7;

/// Test functions addressable from configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Re,
    Im,
    AbsSq,
    One,
}

impl Observable {
    pub fn eval(self, z: Complex64) -> f64 {
        match self {
            Observable::Re => z.re,
            Observable::Im => z.im,
            Observable::AbsSq => z.norm_sqr(),
            Observable::One => 1.0,
        }
    }
}

/// `Λⁿφ(z)` by recursive fiber averaging.
pub fn lambda_pow(f: &Correspondence, phi: &(impl Fn(Complex64) -> f64 + ?Sized), z: Complex64, n: usize) -> Result<f64> {
    if n == 0 {
        return Ok(phi(z));
    }
    let d2 = f.degrees().d2 as f64;
    let fiber = f.preimages(z)?;
    let mut acc = 0.0;
    for r in &fiber.roots {
        acc += r.multiplicity as f64 / d2 * lambda_pow(f, phi, r.location, n - 1)?;
    }
    Ok(acc)
}

/// One term of the correlation series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub n: usize,
    /// `Î_n = ∫ (Λⁿφ) ψ dμ̂ - ∫ Λⁿφ dμ̂ · ∫ ψ dμ̂`.
    pub value: f64,
    /// Monte-Carlo standard error of `value`.
    pub std_error: f64,
    /// Rounding scale `∫ |Λⁿφ| |ψ| dμ̂`.
    pub scale: f64,
}

impl Correlation {
    /// `max(3·SE, 64ε·scale)`.
    pub fn noise_floor(&self) -> f64 {
        (3.0 * self.std_error).max(64.0 * f64::EPSILON * self.scale)
    }

    pub fn above_floor(&self) -> bool {
        self.value.abs() > self.noise_floor()
    }
}

fn check_guard(f: &Correspondence, mu: &PointMeasure, n: usize) -> Result<()> {
    let cost = (f.degrees().d2 as f64).powi(n as i32) * mu.len() as f64;
    if cost > MIXING_LIMIT {
        return Err(CorrError::guard(format!(
            "mixing at n = {n} needs {cost:.3e} fiber evaluations (limit {MIXING_LIMIT:.0e})"
        )));
    }
    Ok(())
}

/// `Î_n(φ, ψ)` against the probability estimate `mu`.
pub fn mixing_in<P, S>(f: &Correspondence, mu: &PointMeasure, phi: P, psi: S, n: usize) -> Result<f64>
where
    P: Fn(Complex64) -> f64 + Sync,
    S: Fn(Complex64) -> f64 + Sync,
{
    correlation(f, mu, &phi, &psi, n).map(|c| c.value)
}

pub fn correlation<P, S>(f: &Correspondence, mu: &PointMeasure, phi: &P, psi: &S, n: usize) -> Result<Correlation>
where
    P: Fn(Complex64) -> f64 + Sync,
    S: Fn(Complex64) -> f64 + Sync,
{
    if !mu.is_probability() {
        return Err(CorrError::invalid("mixing needs a probability measure"));
    }
    check_guard(f, mu, n)?;
    let a: Vec<f64> = mu
        .atoms()
        .par_iter()
        .map(|at| lambda_pow(f, phi, at.location, n))
        .collect::<Result<_>>()?;
    let b: Vec<f64> = mu.atoms().iter().map(|at| psi(at.location)).collect();
    let w: Vec<f64> = mu.atoms().iter().map(|at| at.weight).collect();
    let mean_a: f64 = w.iter().zip(&a).map(|(w, a)| w * a).sum();
    let mean_b: f64 = w.iter().zip(&b).map(|(w, b)| w * b).sum();
    let cross: f64 = w.iter().zip(a.iter().zip(&b)).map(|(w, (a, b))| w * a * b).sum();
    let value = cross - mean_a * mean_b;
    let scale: f64 = w.iter().zip(a.iter().zip(&b)).map(|(w, (a, b))| w * (a * b).abs()).sum();
    let var: f64 = w
        .iter()
        .zip(a.iter().zip(&b))
        .map(|(w, (a, b))| w * ((a - mean_a) * (b - mean_b) - value).powi(2))
        .sum();
    let n_eff = 1.0 / w.iter().map(|w| w * w).sum::<f64>();
    Ok(Correlation {
        n,
        value,
        std_error: (var / n_eff).sqrt(),
        scale,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayKind {
    /// Least-squares slope over two or more terms above the noise floor.
    Fit,
    /// Only `Î_0` clears the floor; the slope is bounded by the drop from
    /// `|Î_0|` to the floor at `n = 1`.
    UpperBound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub kind: DecayKind,
    /// Terms `0..fit_len` were used.
    pub fit_len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub series: Vec<Correlation>,
    /// `None` when not even `Î_0` clears the floor.
    pub decay: Option<DecayFit>,
}

/// `Î_0, …, Î_{n_max}` and a log-linear decay fit over the leading run of
/// terms above the noise floor.
pub fn mixing_series<P, S>(f: &Correspondence, mu: &PointMeasure, phi: P, psi: S, n_max: usize) -> Result<MixingReport>
where
    P: Fn(Complex64) -> f64 + Sync,
    S: Fn(Complex64) -> f64 + Sync,
{
    let series: Vec<Correlation> = (0..=n_max)
        .map(|n| correlation(f, mu, &phi, &psi, n))
        .collect::<Result<_>>()?;
    Ok(MixingReport {
        decay: fit_decay(&series),
        series,
    })
}

pub fn fit_decay(series: &[Correlation]) -> Option<DecayFit> {
    let run = series.iter().take_while(|c| c.above_floor()).count();
    match run {
        0 => None,
        1 => {
            let floor = series.get(1).map(|c| c.noise_floor())?;
            Some(DecayFit {
                slope: floor.max(f64::MIN_POSITIVE).ln() - series[0].value.abs().ln(),
                kind: DecayKind::UpperBound,
                fit_len: 1,
            })
        }
        _ => {
            let pts: Vec<(f64, f64)> = series[..run].iter().map(|c| (c.n as f64, c.value.abs().ln())).collect();
            let k = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            Some(DecayFit {
                slope: sxy / sxx,
                kind: DecayKind::Fit,
                fit_len: run,
            })
        }
    }
}

/// Distance between `(d₂')⁻¹ G*μ̂` and `μ̂`.
pub fn commuting_check(
    g: &Correspondence,
    mu: &PointMeasure,
    atom_cap: usize,
    seed: u64,
    bbox: BBox,
    n_grid: usize,
) -> Result<MeasureDistance> {
    let pulled = pullback_step(g, mu, atom_cap, seed)?;
    measure_distance(&pulled, mu, bbox, n_grid)
}
