//! Learning the logical T error rate from the decay of `f(p)`, the `|+⟩`
//! survival probability after `p` noisy T gates with `p ≡ 0 (mod 8)`.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::rng::{geometric_gap, stream};

/// `f(p) = ½(1 + (1−2ε̄)^p)`.
pub fn f_exact(eps_bar: f64, p: u64) -> f64 {
    0.5 * (1.0 + (1.0 - 2.0 * eps_bar).powf(p as f64))
}

/// Fraction of `shots` runs that return `+` after `p` independent
/// Bernoulli(ε̄) Z flips on `|+⟩`.
pub fn simulate_f<R: Rng + ?Sized>(eps_bar: f64, p: u64, shots: u64, rng: &mut R) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps_bar) {
        return Err(invalid("eps_bar", format!("must lie in [0, 1], got {eps_bar}")));
    }
    if shots == 0 {
        return Err(invalid("shots", "must be at least 1"));
    }
    Ok(count_plus(eps_bar, p, shots, rng) as f64 / shots as f64)
}

fn count_plus<R: Rng + ?Sized>(eps_bar: f64, p: u64, shots: u64, rng: &mut R) -> u64 {
    if p == 0 || eps_bar == 0.0 {
        return shots;
    }
    // walk the p·shots flip sites, jumping between flips
    let total = p * shots;
    let log1m = (1.0 - eps_bar).ln();
    let mut parity = vec![false; shots as usize];
    let mut pos = geometric_gap(rng, log1m);
    while pos < total {
        parity[(pos / p) as usize] ^= true;
        pos = pos.saturating_add(1).saturating_add(geometric_gap(rng, log1m));
    }
    parity.iter().filter(|&&odd| !odd).count() as u64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayPoint {
    pub p: u64,
    pub f_hat: f64,
    pub shots: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecayDataset {
    pub points: Vec<DecayPoint>,
}

impl DecayDataset {
    pub fn new(points: Vec<DecayPoint>) -> Result<Self> {
        for pt in &points {
            if pt.p % 8 != 0 {
                return Err(invalid("p", format!("{} is not a multiple of 8", pt.p)));
            }
            if pt.shots == 0 {
                return Err(invalid("shots", "must be at least 1"));
            }
            if !(0.0..=1.0).contains(&pt.f_hat) {
                return Err(invalid("f_hat", format!("{} outside [0, 1]", pt.f_hat)));
            }
        }
        Ok(Self { points })
    }

    /// Noise-free data on the exact curve, labelled with `shots` for weighting.
    pub fn exact(eps_bar: f64, grid: &[u64], shots: u64) -> Result<Self> {
        Self::new(grid.iter().map(|&p| DecayPoint { p, f_hat: f_exact(eps_bar, p), shots }).collect())
    }

    /// One simulated point per grid entry; point `i` uses `stream(seed, i)`.
    pub fn simulate(eps_bar: f64, grid: &[u64], shots: u64, seed: u64) -> Result<Self> {
        let points = grid
            .par_iter()
            .enumerate()
            .map(|(i, &p)| {
                let f_hat = simulate_f(eps_bar, p, shots, &mut stream(seed, i as u64))?;
                Ok(DecayPoint { p, f_hat, shots })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub eps_bar: f64,
    pub std_error: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Repetition counts dropped because `f_hat ≤ ½`.
    pub excluded: Vec<u64>,
}

/// Weighted least squares of `ln(2f − 1)` against `p` with an intercept
/// (absorbs preparation and readout loss). Weights are inverse binomial
/// variances propagated through the log.
pub fn fit_error_rate(data: &DecayDataset) -> Result<DecayFit> {
    let mut excluded = Vec::new();
    let mut rows = Vec::new();
    for pt in &data.points {
        if pt.f_hat <= 0.5 {
            excluded.push(pt.p);
            continue;
        }
        let n = pt.shots as f64;
        let y = (2.0 * pt.f_hat - 1.0).ln();
        // a point with no observed flips still carries half a flip of uncertainty
        let f_var = pt.f_hat.min(1.0 - 0.5 / n);
        let var = 4.0 * f_var * (1.0 - f_var) / (n * (2.0 * pt.f_hat - 1.0).powi(2));
        rows.push((pt.p as f64, y, 1.0 / var));
    }
    let mut distinct: Vec<u64> = rows.iter().map(|r| r.0 as u64).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Fit(format!(
            "need at least 2 distinct usable p values, have {} (excluded: {excluded:?})",
            distinct.len()
        )));
    }
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y, w) in &rows {
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let det = sw * sxx - sx * sx;
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / sw;
    let se_slope = (sw / det).sqrt();
    let es = slope.exp();
    Ok(DecayFit { eps_bar: (1.0 - es) / 2.0, std_error: es / 2.0 * se_slope, slope, intercept, excluded })
}

/// `p = 8, 16, …, 8·k_max` with `(1−2ε̄)^{8 k_max} ≥ 0.1`, `k_max` in `[2, 64]`.
pub fn default_grid(eps_prior: f64) -> Vec<u64> {
    let k_max = if eps_prior <= 0.0 {
        64
    } else if eps_prior >= 0.5 {
        2
    } else {
        (0.1f64.ln() / (8.0 * (1.0 - 2.0 * eps_prior).ln())).floor().clamp(2.0, 64.0) as u64
    };
    (1..=k_max).map(|k| 8 * k).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Learned {
    pub pilot: DecayFit,
    pub data: DecayDataset,
    pub fit: DecayFit,
}

/// Pilot fit on `p ∈ {8, 16}`, then the full run on [`default_grid`] (or
/// `grid` when given). The pilot draws from `derive(seed, 0)`, the main run
/// from `derive(seed, 1)`.
pub fn learn(eps_bar: f64, shots: u64, seed: u64, grid: Option<&[u64]>) -> Result<Learned> {
    let pilot_data = DecayDataset::simulate(eps_bar, &[8, 16], shots, crate::rng::derive_seed(seed, &[0]))?;
    let pilot = fit_error_rate(&pilot_data).unwrap_or(DecayFit {
        eps_bar: 0.5,
        std_error: f64::INFINITY,
        slope: f64::NEG_INFINITY,
        intercept: 0.0,
        excluded: vec![8, 16],
    });
    let grid = grid.map(<[u64]>::to_vec).unwrap_or_else(|| default_grid(pilot.eps_bar));
    let data = DecayDataset::simulate(eps_bar, &grid, shots, crate::rng::derive_seed(seed, &[1]))?;
    let fit = fit_error_rate(&data)?;
    Ok(Learned { pilot, data, fit })
}
