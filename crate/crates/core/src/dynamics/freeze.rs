//! Terminal market freeze.
//!
//! Once total relative equity drops strictly below `eps_c` the interbank book
//! is liquidated. Each bank's residual debt `chi_j = sum_k (L_jk - A_jk)` is
//! netted; net debtors fire-sell external assets worth `(1 + Gamma_c) chi_j`
//! with
//!
//! ```text
//! Gamma_c = gamma(t_c) * sum_i E_i(0) / sum_i (E_i(t_c) - chi_i(t_c) * [chi_i(t_c) > 0])
//! ```

use super::cascade::depricing_factor;
use crate::ledger::MarketState;
use crate::params::Parameters;

#[derive(Debug, Clone, PartialEq)]
pub struct FreezeOutcome {
    /// Relative equity that triggered the freeze.
    pub relative_equity: f64,
    /// Residual interbank debt per bank (negative for net lenders, zero if dead).
    pub chi: Vec<f64>,
    /// Depricing factor carried into the freeze.
    pub gamma_tc: f64,
    /// Terminal depricing factor.
    pub gamma_c: f64,
    /// The buyers' wealth was non-positive; net debtors were wiped out.
    pub degenerate: bool,
    pub equities_at_freeze: Vec<f64>,
    /// Post-liquidation equities, floored at zero.
    pub final_equities: Vec<f64>,
    /// `sum_i final_equities / sum_i E_i(0)`.
    pub final_relative_equity: f64,
}

/// `Gamma_c`, or `None` when the buyers' residual wealth is not positive.
pub fn terminal_depricing_factor(
    gamma_tc: f64,
    initial_total_equity: f64,
    equities: &[f64],
    chi: &[f64],
) -> Option<f64> {
    let wealth: f64 = equities
        .iter()
        .zip(chi)
        .map(|(&e, &c)| if c > 0.0 { e - c } else { e })
        .sum();
    (wealth > 0.0).then(|| gamma_tc * (initial_total_equity / wealth))
}

/// Depricing factor used at a freeze that follows no cascade: the residual
/// debt that must be sold, priced against the interbank market value.
pub fn fallback_gamma(state: &MarketState, params: &Parameters) -> f64 {
    let debt: f64 = (0..state.len())
        .filter(|&i| state.is_alive(i))
        .map(|i| -state.net_interbank(i))
        .filter(|c| *c > 0.0)
        .sum();
    depricing_factor(debt, state.market_value(), params.gamma_cap).0
}

/// Checks the freeze condition and, when it holds, liquidates the market.
///
/// `last_gamma` is the depricing factor of the most recent cascade, if any.
pub fn check_and_resolve_freeze(
    state: &mut MarketState,
    params: &Parameters,
    last_gamma: Option<f64>,
) -> Option<FreezeOutcome> {
    let relative_equity = state.total_relative_equity();
    if !(relative_equity < params.eps_c) {
        return None;
    }
    let n = state.len();
    let equities = state.equities().0;
    let chi: Vec<f64> = (0..n)
        .map(|i| {
            if state.is_alive(i) {
                -state.net_interbank(i)
            } else {
                0.0
            }
        })
        .collect();
    let gamma_tc = last_gamma.unwrap_or_else(|| fallback_gamma(state, params));
    let e0 = state.initial_total_equity();
    let (gamma_c, degenerate) = match terminal_depricing_factor(gamma_tc, e0, &equities, &chi) {
        Some(g) => (g, false),
        None => {
            log::debug!("degenerate freeze: buyers' residual wealth is not positive");
            (params.gamma_cap, true)
        }
    };

    let mut final_equities = vec![0.0; n];
    state.clear_interbank();
    for j in 0..n {
        if !state.is_alive(j) {
            continue;
        }
        let c = chi[j];
        if c <= 0.0 {
            // net lender: interbank book settles into cash
            state.add_external_assets(j, -c);
        } else {
            let loss = if degenerate {
                equities[j].max(0.0).min((1.0 + params.gamma_cap) * c)
            } else {
                gamma_c * c
            };
            // pay c to counterparties and lose `loss` on the sale
            let owed = c + loss;
            let held = state.external_assets(j);
            if owed <= held {
                state.add_external_assets(j, -owed);
            } else {
                state.add_external_assets(j, -held);
                state.add_external_liabilities(j, owed - held);
            }
        }
        let e = state.equity(j);
        if e > 0.0 {
            final_equities[j] = e;
        } else {
            state.remove_bank(j);
        }
    }
    let final_relative_equity = final_equities.iter().sum::<f64>() / e0;
    Some(FreezeOutcome {
        relative_equity,
        chi,
        gamma_tc,
        gamma_c,
        degenerate,
        equities_at_freeze: equities,
        final_equities,
        final_relative_equity,
    })
}
