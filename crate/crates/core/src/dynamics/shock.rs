//! Exogenous shocks and leverage targeting with liquidity hoarding.

use crate::error::SimulationError;
use crate::ledger::MarketState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockReport {
    pub target: usize,
    /// Amount actually written off external assets.
    pub applied: f64,
    pub clamped: bool,
}

/// Writes `phi` off the target's external assets, clamped to what it holds.
pub fn apply_exogenous_shock(state: &mut MarketState, target: usize, phi: f64) -> Result<ShockReport, SimulationError> {
    check_alive(state, target)?;
    let available = state.external_assets(target);
    let applied = phi.max(0.0).min(available);
    let clamped = applied < phi;
    if clamped {
        log::debug!("shock on bank {target} clamped from {phi} to {applied}");
    }
    state.add_external_assets(target, -applied);
    Ok(ShockReport {
        target,
        applied,
        clamped,
    })
}

/// Leverage target and asset mix captured before a loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReleverageBasis {
    /// `B = A / E`.
    pub leverage: f64,
    /// `A^E / A`.
    pub external_share: f64,
    /// `sum_k A_bk / A`.
    pub interbank_share: f64,
}

impl ReleverageBasis {
    /// Basis of an alive bank at the current state. Banks with non-positive
    /// equity or no assets get `B = 1`, which means no sale.
    pub fn of(state: &MarketState, bank: usize) -> Self {
        let external = state.external_assets(bank);
        let interbank = state.interbank_assets(bank);
        let total = external + interbank;
        let equity = state.equity(bank);
        if !(equity > 0.0) || !(total > 0.0) {
            return Self {
                leverage: 1.0,
                external_share: 0.0,
                interbank_share: 0.0,
            };
        }
        Self {
            leverage: total / equity,
            external_share: external / total,
            interbank_share: interbank / total,
        }
    }

    /// `loss * (B - 1)`, or zero when that is not positive.
    pub fn sale_size(&self, loss: f64) -> f64 {
        let s = loss * (self.leverage - 1.0);
        if s > 0.0 {
            s
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoardReport {
    pub bank: usize,
    /// Intended sale `loss * (B - 1)`.
    pub sale: f64,
    pub sold_external: f64,
    /// Interbank loans not rolled over.
    pub sold_interbank: f64,
    /// Funding withdrawn from each borrower, in index order.
    pub withdrawals: Vec<(usize, f64)>,
    /// Sale proceeds used to pay down external liabilities.
    pub repaid: f64,
    /// Some required sale exceeded holdings.
    pub clamped: bool,
}

/// Restores the pre-loss leverage by selling `loss * (B - 1)` of assets split
/// by the basis shares. The interbank part is hoarded: every loan shrinks in
/// proportion to its size and each borrower replaces the withdrawn funding
/// with an external liability. Proceeds pay down the seller's external
/// liabilities; anything left over stays as cash in external assets.
pub fn releverage_and_hoard(
    state: &mut MarketState,
    bank: usize,
    loss: f64,
    basis: &ReleverageBasis,
) -> Result<HoardReport, SimulationError> {
    check_alive(state, bank)?;
    let sale = if loss > 0.0 { basis.sale_size(loss) } else { 0.0 };
    let mut report = HoardReport {
        bank,
        sale,
        sold_external: 0.0,
        sold_interbank: 0.0,
        withdrawals: Vec::new(),
        repaid: 0.0,
        clamped: false,
    };
    if sale == 0.0 {
        return Ok(report);
    }

    let want_external = sale * basis.external_share;
    let want_interbank = sale * basis.interbank_share;
    let held_external = state.external_assets(bank);
    let held_interbank = state.interbank_assets(bank);
    let sold_external = want_external.min(held_external);
    let sold_interbank = want_interbank.min(held_interbank);
    report.clamped = sold_external < want_external || sold_interbank < want_interbank;
    if report.clamped {
        log::debug!(
            "bank {bank}: sale of {sale} clamped to {} external + {} interbank",
            sold_external,
            sold_interbank
        );
    }

    if sold_interbank > 0.0 {
        let keep = if sold_interbank >= held_interbank {
            0.0
        } else {
            1.0 - sold_interbank / held_interbank
        };
        let n = state.len();
        let mut withdrawals = Vec::new();
        {
            let row = state.row_mut(bank);
            for (k, a) in row.iter_mut().enumerate().take(n) {
                if *a > 0.0 {
                    let w = *a - *a * keep;
                    *a *= keep;
                    withdrawals.push((k, w));
                }
            }
        }
        for &(k, w) in &withdrawals {
            state.add_external_liabilities(k, w);
        }
        report.withdrawals = withdrawals;
    }

    let proceeds = sold_external + sold_interbank;
    let repaid = proceeds.min(state.external_liabilities(bank));
    state.add_external_assets(bank, proceeds - repaid - sold_external);
    state.add_external_liabilities(bank, -repaid);
    report.sold_external = sold_external;
    report.sold_interbank = sold_interbank;
    report.repaid = repaid;
    Ok(report)
}

fn check_alive(state: &MarketState, bank: usize) -> Result<(), SimulationError> {
    if bank >= state.len() {
        return Err(SimulationError::BadIndex(bank));
    }
    if !state.is_alive(bank) {
        return Err(SimulationError::DeadBank(bank));
    }
    Ok(())
}
