//! Default cascades: credit and funding shocks with fire-sale depricing, and
//! the releveraging round that follows a cascade.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use super::rate::{RateProcess, RateStep};
use super::shock::{releverage_and_hoard, HoardReport, ReleverageBasis};
use crate::error::SimulationError;
use crate::ledger::{EquityVector, MarketState};
use crate::params::Parameters;

/// Fire-sale depricing factor `gamma = [C/Q - 1]^-1` under linear price
/// impact, where `Q` is the volume to liquidate and `C` the market value.
///
/// Returns `(gamma, capped)`. `Q <= 0` gives zero; `Q >= C` (or a value
/// above `cap`) gives `cap`.
pub fn depricing_factor(q: f64, c: f64, cap: f64) -> (f64, bool) {
    if !(q > 0.0) {
        return (0.0, false);
    }
    if q >= c {
        return (cap, true);
    }
    let gamma = 1.0 / (c / q - 1.0);
    if gamma > cap {
        (cap, true)
    } else {
        (gamma, false)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeOutcome {
    /// Defaulted banks in processing order.
    pub defaulted: Vec<usize>,
    /// Net equity change over banks alive when the cascade started, with
    /// defaulters counted up to their removal. Never positive.
    pub delta_e: f64,
    /// Depricing factor used for each processed default.
    pub gamma_series: Vec<f64>,
    pub gamma_capped: bool,
    /// Equities when the cascade started.
    pub equities_before: EquityVector,
    /// Loss booked on each bank by credit and funding shocks.
    pub losses: Vec<f64>,
    /// Some fire sale exceeded a bank's external assets.
    pub clamped: bool,
}

/// Convenience wrapper for a single initial defaulter.
pub fn propagate_default(
    state: &mut MarketState,
    defaulted: usize,
    params: &Parameters,
) -> Result<CascadeOutcome, SimulationError> {
    propagate_defaults(state, &[defaulted], params)
}

/// Processes a FIFO queue of defaults seeded with `initial`.
///
/// For a defaulter `u` each surviving `j` (in index order) writes off its loan
/// to `u` (loss `lambda A_ju`), replaces `(1 - rho) A_uj` of the withdrawn
/// funding externally and raises `rho A_uj` by selling `(1 + gamma) rho A_uj`
/// of external assets (loss `gamma rho A_uj`). `gamma` is evaluated when `u`
/// is processed. Banks driven to `E <= 0` join the back of the queue; `u`
/// is removed once its counterparties are booked.
pub fn propagate_defaults(
    state: &mut MarketState,
    initial: &[usize],
    params: &Parameters,
) -> Result<CascadeOutcome, SimulationError> {
    let n = state.len();
    let equities_before = state.equities();
    let started_alive: Vec<bool> = state.alive().to_vec();
    let mut queued = vec![false; n];
    let mut queue = VecDeque::new();
    for &u in initial {
        if u >= n {
            return Err(SimulationError::BadIndex(u));
        }
        if !state.is_alive(u) {
            return Err(SimulationError::DeadBank(u));
        }
        if !queued[u] {
            queued[u] = true;
            queue.push_back(u);
        }
    }

    let mut final_equity = vec![0.0; n];
    let mut losses = vec![0.0; n];
    let mut defaulted = Vec::new();
    let mut gamma_series = Vec::new();
    let mut gamma_capped = false;
    let mut clamped = false;

    while let Some(u) = queue.pop_front() {
        let market = state.market_value();
        let lent: f64 = state
            .alive_indices()
            .filter(|&j| j != u)
            .map(|j| state.exposure(u, j))
            .sum();
        let (gamma, capped) = depricing_factor(params.rho * lent, market, params.gamma_cap);
        if capped {
            log::debug!(
                "depricing factor capped at {} for default of bank {u}",
                params.gamma_cap
            );
        }
        gamma_capped |= capped;

        let survivors: Vec<usize> = state.alive_indices().filter(|&j| j != u).collect();
        for j in survivors {
            let credit = state.exposure(j, u);
            if credit > 0.0 {
                state.set_exposure(j, u, 0.0);
                state.add_external_assets(j, (1.0 - params.lambda) * credit);
                losses[j] += params.lambda * credit;
            }
            let funding = state.exposure(u, j);
            if funding > 0.0 {
                state.set_exposure(u, j, 0.0);
                state.add_external_liabilities(j, (1.0 - params.rho) * funding);
                let needed = (1.0 + gamma) * params.rho * funding;
                let held = state.external_assets(j);
                if needed <= held {
                    state.add_external_assets(j, -needed);
                    losses[j] += gamma * params.rho * funding;
                } else {
                    // sell everything; the unfunded remainder stays as debt
                    clamped = true;
                    state.add_external_assets(j, -held);
                    let cash = held / (1.0 + gamma);
                    state.add_external_liabilities(j, params.rho * funding - cash);
                    losses[j] += held - cash;
                }
            }
        }

        final_equity[u] = state.equity(u);
        state.remove_bank(u);
        defaulted.push(u);
        gamma_series.push(gamma);

        let equities = state.equities();
        for j in state.alive_indices() {
            if !queued[j] && equities[j] <= 0.0 {
                queued[j] = true;
                queue.push_back(j);
            }
        }
    }

    let equities_after = state.equities();
    let delta_e = (0..n)
        .filter(|&i| started_alive[i])
        .map(|i| {
            let after = if state.is_alive(i) {
                equities_after[i]
            } else {
                final_equity[i]
            };
            after - equities_before[i]
        })
        .sum::<f64>()
        .min(0.0);

    Ok(CascadeOutcome {
        defaulted,
        delta_e,
        gamma_series,
        gamma_capped,
        equities_before,
        losses,
        clamped,
    })
}

/// Balance-sheet snapshot taken before a cascade: equities and the leverage
/// basis each survivor will realign to.
#[derive(Debug, Clone)]
pub struct PreCascade {
    pub equities: EquityVector,
    pub bases: Vec<ReleverageBasis>,
}

impl PreCascade {
    pub fn capture(state: &MarketState) -> Self {
        Self {
            equities: state.equities(),
            bases: (0..state.len()).map(|i| ReleverageBasis::of(state, i)).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PostCascadeReport {
    /// Releveraging banks in the order they acted, with their losses.
    pub order: Vec<(usize, f64)>,
    pub hoards: Vec<HoardReport>,
    pub rate: RateStep,
}

/// Every survivor whose equity fell during the cascade sells
/// `loss * (B - 1)` against its pre-cascade basis, in uniformly random order.
/// The rate then jumps according to the cascade's equity loss and every
/// interbank position is revalued.
pub fn post_cascade_releverage<R: Rng + ?Sized>(
    state: &mut MarketState,
    before: &PreCascade,
    delta_e: f64,
    rate: &mut RateProcess,
    params: &Parameters,
    order_rng: &mut R,
) -> Result<PostCascadeReport, SimulationError> {
    let equities = state.equities();
    let mut order: Vec<(usize, f64)> = state
        .alive_indices()
        .map(|s| (s, before.equities[s] - equities[s]))
        .filter(|&(_, loss)| loss > 0.0)
        .collect();
    order.shuffle(order_rng);

    let mut hoards = Vec::with_capacity(order.len());
    for &(s, loss) in &order {
        hoards.push(releverage_and_hoard(state, s, loss, &before.bases[s])?);
    }
    let step = rate.step_jump(delta_e, params.phi);
    state.revalue(step.next);
    Ok(PostCascadeReport {
        order,
        hoards,
        rate: step,
    })
}
