//! Per-realization time series and systemic-risk metrics.

use serde::{Deserialize, Serialize};

use crate::error::MetricError;

/// One row of a realization's time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: u64,
    pub rate: f64,
    pub rel_equity: f64,
    pub defaulted_frac: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    /// Rows for `t = 0..=t_c`; converged runs append the post-liquidation row
    /// at `t_c + 1`.
    pub series: Vec<SeriesRow>,
    /// Iteration at which the market froze (last iteration if not converged).
    pub t_c: u64,
    /// First iteration with relative equity at or below one half.
    pub t_half: u64,
    /// False when equity never halved before the freeze (`t_half == t_c`).
    pub half_life_reached: bool,
    /// `sum_i E_i(t_c + 1) / sum_i E_i(0)`.
    pub final_rel_equity: f64,
    pub converged: bool,
    /// Defaulted banks in the order they were removed.
    pub default_order: Vec<usize>,
    /// Terminal depricing factor, if the market froze.
    pub gamma_c: Option<f64>,
}

/// Smallest `t` with `series[t] <= 0.5`. If equity never halves the last index
/// is returned together with `false`.
pub fn half_life(relative_equity: &[f64]) -> Result<(u64, bool), MetricError> {
    if relative_equity.is_empty() {
        return Err(MetricError::EmptySeries);
    }
    match relative_equity.iter().position(|&v| v <= 0.5) {
        Some(t) => Ok((t as u64, true)),
        None => Ok(((relative_equity.len() - 1) as u64, false)),
    }
}
