//! Sampling-overhead arithmetic: per-gate cost `γ`, maximum T-count for a
//! total budget `Γ²`, shot counts and the complexity comparison table.

use crate::error::{invalid, Result};

/// Conversion constant for magic-state injection.
pub const KAPPA_MAGIC: f64 = 0.4;
/// Upper bound on the constant for code switching.
pub const KAPPA_SWITCHING: f64 = 30.0;
/// Base of the classical Clifford+T simulation cost.
pub const CLASSICAL_BASE: f64 = 1.3831;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaMode {
    /// `γ = 1/(1 − 2κε)`.
    #[default]
    Exact,
    /// `γ = 1 + 2κε`.
    FirstOrder,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverheadModel {
    pub kappa: f64,
    pub mode: GammaMode,
}

impl OverheadModel {
    pub fn new(kappa: f64, mode: GammaMode) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(invalid("kappa", format!("must be positive, got {kappa}")));
        }
        Ok(Self { kappa, mode })
    }

    pub fn gamma(&self, epsilon: f64) -> Result<f64> {
        if !(epsilon >= 0.0) {
            return Err(invalid("epsilon", format!("must be non-negative, got {epsilon}")));
        }
        let x = 2.0 * self.kappa * epsilon;
        match self.mode {
            GammaMode::Exact if x >= 1.0 => Err(invalid("epsilon", format!("2κε = {x} must be below 1"))),
            GammaMode::Exact => Ok(1.0 / (1.0 - x)),
            GammaMode::FirstOrder => Ok(1.0 + x),
        }
    }

    /// `ln γ`, accurate for small `ε`.
    pub fn ln_gamma(&self, epsilon: f64) -> Result<f64> {
        self.gamma(epsilon)?;
        let x = 2.0 * self.kappa * epsilon;
        Ok(match self.mode {
            GammaMode::Exact => -(-x).ln_1p(),
            GammaMode::FirstOrder => x.ln_1p(),
        })
    }

    /// `ln Γ² / (2 ln γ)`; infinite when `γ = 1`.
    pub fn max_t_count(&self, epsilon: f64, total_cost: f64) -> Result<f64> {
        if !(total_cost >= 1.0) {
            return Err(invalid("total_cost", format!("must be at least 1, got {total_cost}")));
        }
        let ln_g = self.ln_gamma(epsilon)?;
        if ln_g == 0.0 {
            return Ok(if total_cost == 1.0 { 0.0 } else { f64::INFINITY });
        }
        Ok(total_cost.ln() / (2.0 * ln_g))
    }
}

impl Default for OverheadModel {
    fn default() -> Self {
        Self { kappa: KAPPA_MAGIC, mode: GammaMode::Exact }
    }
}

/// `η/ε = ln Γ² / (4κε)`, the leading small-ε behaviour of the T-count.
pub fn eta_over_epsilon(kappa: f64, epsilon: f64, total_cost: f64) -> f64 {
    total_cost.ln() / (4.0 * kappa * epsilon)
}

/// T-count under the convention that reproduces the plotted curve, which is
/// a factor `≈ 2` below [`OverheadModel::max_t_count`]:
/// `ln Γ² (1 − 2κε) / (8κε)`.
pub fn max_t_count_plotted(kappa: f64, epsilon: f64, total_cost: f64) -> f64 {
    total_cost.ln() * (1.0 - 2.0 * kappa * epsilon) / (8.0 * kappa * epsilon)
}

/// `γ_total² / δ²`, an order-of-magnitude shot budget.
pub fn shots_required(gamma_total: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(invalid("delta", format!("must be positive, got {delta}")));
    }
    Ok(gamma_total * gamma_total / (delta * delta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityRow {
    pub t: u64,
    /// Conventional fault-tolerant cost, linear in `t`.
    pub conventional: f64,
    /// `γ^{2t}`.
    pub qpd: f64,
    /// `1.3831^t`.
    pub classical: f64,
}

pub fn comparison_row(model: &OverheadModel, epsilon: f64, t: u64) -> Result<ComplexityRow> {
    let g = model.gamma(epsilon)?;
    Ok(ComplexityRow {
        t,
        conventional: t.max(1) as f64,
        qpd: g.powf(2.0 * t as f64),
        classical: CLASSICAL_BASE.powf(t as f64),
    })
}

pub fn comparison_table(model: &OverheadModel, epsilon: f64, ts: &[u64]) -> Result<Vec<ComplexityRow>> {
    ts.iter().map(|&t| comparison_row(model, epsilon, t)).collect()
}

/// Smallest `t ≤ t_max` with `γ^{2t} > 1.3831^t`.
pub fn crossover(model: &OverheadModel, epsilon: f64, t_max: u64) -> Result<Option<u64>> {
    let (lq, lc) = (2.0 * model.ln_gamma(epsilon)?, CLASSICAL_BASE.ln());
    Ok((0..=t_max).find(|&t| t as f64 * lq > t as f64 * lc))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub total_cost: f64,
    pub gamma: f64,
    pub max_t: f64,
    pub eta_over_eps: f64,
    pub max_t_plotted: f64,
}

/// Log-spaced `ε` grid over `[lo, hi]` with `n` points.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

pub fn sweep(model: &OverheadModel, epsilons: &[f64], total_costs: &[f64]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &total_cost in total_costs {
        for &epsilon in epsilons {
            rows.push(SweepRow {
                epsilon,
                total_cost,
                gamma: model.gamma(epsilon)?,
                max_t: model.max_t_count(epsilon, total_cost)?,
                eta_over_eps: eta_over_epsilon(model.kappa, epsilon, total_cost),
                max_t_plotted: max_t_count_plotted(model.kappa, epsilon, total_cost),
            });
        }
    }
    Ok(rows)
}
