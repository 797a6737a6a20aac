//! Balance-sheet data model and elementary ledger mutations.
//!
//! The exposure matrix holds *current* values: entry `(i, j)` is what bank `i`
//! is owed by bank `j` at the prevailing rate, so a rate move from `r` to `r'`
//! multiplies every entry by `r'/r`. Equity of bank `i` is
//!
//! ```text
//! E_i = A^E_i - L^E_i + sum_j A_ij - sum_j A_ji
//! ```
//!
//! Dead banks keep their index; their row, column and external entries are zero.

use serde::{Deserialize, Serialize};

use crate::error::SimulationError;

/// Aggregate balance-sheet inputs for one bank. Interbank totals are face values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankRecord {
    pub id: String,
    pub external_assets: f64,
    pub external_liabilities: f64,
    pub interbank_assets: f64,
    pub interbank_liabilities: f64,
}

impl BankRecord {
    pub fn new(
        id: impl Into<String>,
        external_assets: f64,
        external_liabilities: f64,
        interbank_assets: f64,
        interbank_liabilities: f64,
    ) -> Self {
        Self {
            id: id.into(),
            external_assets,
            external_liabilities,
            interbank_assets,
            interbank_liabilities,
        }
    }

    /// Equity with interbank face values priced at `rate`.
    pub fn equity(&self, rate: f64) -> f64 {
        self.external_assets - self.external_liabilities + rate * (self.interbank_assets - self.interbank_liabilities)
    }

    /// Total assets with interbank face values priced at `rate`.
    pub fn total_assets(&self, rate: f64) -> f64 {
        self.external_assets + rate * self.interbank_assets
    }

    /// Amounts expressed in multiples of `unit`.
    pub(crate) fn in_units(&self, unit: f64) -> Self {
        Self {
            id: self.id.clone(),
            external_assets: self.external_assets / unit,
            external_liabilities: self.external_liabilities / unit,
            interbank_assets: self.interbank_assets / unit,
            interbank_liabilities: self.interbank_liabilities / unit,
        }
    }
}

/// Per-bank equity, indexed like the ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct EquityVector(pub Vec<f64>);

impl EquityVector {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl std::ops::Index<usize> for EquityVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// The live ledger of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    n: usize,
    exposures: Vec<f64>,
    external_assets: Vec<f64>,
    external_liabilities: Vec<f64>,
    alive: Vec<bool>,
    rate: f64,
    step: u64,
    initial_total_equity: f64,
}

impl MarketState {
    /// Builds a ledger from a dense row-major exposure matrix of current values.
    ///
    /// Fails if shapes disagree, any entry is negative or non-finite, the
    /// diagonal is non-zero, `rate <= 0`, or total equity is not positive.
    pub fn new(
        exposures: Vec<f64>,
        external_assets: Vec<f64>,
        external_liabilities: Vec<f64>,
        rate: f64,
    ) -> Result<Self, SimulationError> {
        let n = external_assets.len();
        if external_liabilities.len() != n || exposures.len() != n * n {
            return Err(SimulationError::InvalidLedger(format!(
                "shape mismatch: {} external assets, {} external liabilities, {} exposures",
                n,
                external_liabilities.len(),
                exposures.len()
            )));
        }
        let nonneg = |v: &f64| v.is_finite() && *v >= 0.0;
        if !exposures.iter().all(nonneg)
            || !external_assets.iter().all(nonneg)
            || !external_liabilities.iter().all(nonneg)
        {
            return Err(SimulationError::InvalidLedger(
                "entries must be finite and non-negative".into(),
            ));
        }
        if (0..n).any(|i| exposures[i * n + i] != 0.0) {
            return Err(SimulationError::InvalidLedger("non-zero diagonal".into()));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(SimulationError::InvalidLedger(format!(
                "rate must be positive, got {rate}"
            )));
        }
        let mut state = Self {
            n,
            exposures,
            external_assets,
            external_liabilities,
            alive: vec![true; n],
            rate,
            step: 0,
            initial_total_equity: 0.0,
        };
        let total = state.total_equity();
        if !(total > 0.0) {
            return Err(SimulationError::NonPositiveEquity(total));
        }
        state.initial_total_equity = total;
        Ok(state)
    }

    /// Ledger of banks with no interbank positions.
    pub fn isolated(
        external_assets: Vec<f64>,
        external_liabilities: Vec<f64>,
        rate: f64,
    ) -> Result<Self, SimulationError> {
        let n = external_assets.len();
        Self::new(vec![0.0; n * n], external_assets, external_liabilities, rate)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn initial_total_equity(&self) -> f64 {
        self.initial_total_equity
    }

    pub fn is_alive(&self, bank: usize) -> bool {
        self.alive[bank]
    }

    pub fn alive(&self) -> &[bool] {
        &self.alive
    }

    pub fn alive_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&i| self.alive[i])
    }

    pub fn alive_count(&self) -> usize {
        self.alive.iter().filter(|a| **a).count()
    }

    pub fn exposure(&self, lender: usize, borrower: usize) -> f64 {
        self.exposures[lender * self.n + borrower]
    }

    /// Row-major view of the exposure matrix.
    pub fn exposures(&self) -> &[f64] {
        &self.exposures
    }

    pub fn external_assets(&self, bank: usize) -> f64 {
        self.external_assets[bank]
    }

    pub fn external_liabilities(&self, bank: usize) -> f64 {
        self.external_liabilities[bank]
    }

    /// `sum_j A_ij`: what `bank` has lent out.
    pub fn interbank_assets(&self, bank: usize) -> f64 {
        self.row(bank).iter().sum()
    }

    /// `sum_j A_ji`: what `bank` has borrowed.
    pub fn interbank_liabilities(&self, bank: usize) -> f64 {
        (0..self.n).map(|j| self.exposures[j * self.n + bank]).sum()
    }

    pub fn row(&self, bank: usize) -> &[f64] {
        &self.exposures[bank * self.n..(bank + 1) * self.n]
    }

    /// Interbank assets minus interbank liabilities.
    pub fn net_interbank(&self, bank: usize) -> f64 {
        self.interbank_assets(bank) - self.interbank_liabilities(bank)
    }

    /// External plus interbank assets.
    pub fn total_assets(&self, bank: usize) -> f64 {
        self.external_assets[bank] + self.interbank_assets(bank)
    }

    /// Number of positive entries in the bank's row and column.
    pub fn contract_count(&self, bank: usize) -> usize {
        let out = self.row(bank).iter().filter(|v| **v > 0.0).count();
        let inc = (0..self.n).filter(|&j| self.exposures[j * self.n + bank] > 0.0).count();
        out + inc
    }

    /// Total market value `C = sum_ij A_ij`.
    pub fn market_value(&self) -> f64 {
        self.exposures.iter().sum()
    }

    /// Number of strictly positive off-diagonal entries.
    pub fn link_count(&self) -> usize {
        self.exposures.iter().filter(|v| **v > 0.0).count()
    }

    pub fn equity(&self, bank: usize) -> f64 {
        if !self.alive[bank] {
            return 0.0;
        }
        self.external_assets[bank] - self.external_liabilities[bank] + self.interbank_assets(bank)
            - self.interbank_liabilities(bank)
    }

    /// All equities in one O(N^2) pass.
    pub fn equities(&self) -> EquityVector {
        let n = self.n;
        let mut eq: Vec<f64> = (0..n)
            .map(|i| self.external_assets[i] - self.external_liabilities[i])
            .collect();
        for i in 0..n {
            let row = &self.exposures[i * n..(i + 1) * n];
            let mut lent = 0.0;
            for (j, &a) in row.iter().enumerate() {
                lent += a;
                eq[j] -= a;
            }
            eq[i] += lent;
        }
        for (i, e) in eq.iter_mut().enumerate() {
            if !self.alive[i] {
                *e = 0.0;
            }
        }
        EquityVector(eq)
    }

    /// Sum of equity over alive banks.
    pub fn total_equity(&self) -> f64 {
        self.equities().total()
    }

    /// `sum_i E_i(t) / sum_i E_i(0)` over alive banks.
    pub fn total_relative_equity(&self) -> f64 {
        self.total_equity() / self.initial_total_equity
    }

    /// Clears the alive flag and zeroes the bank's row, column and external
    /// entries. Survivors' open positions with the bank move to their external
    /// accounts, so no losses are booked here. Already-dead banks are left
    /// alone.
    pub fn remove_bank(&mut self, bank: usize) {
        if !self.alive[bank] {
            return;
        }
        let n = self.n;
        self.alive[bank] = false;
        for j in 0..n {
            let claim = std::mem::take(&mut self.exposures[j * n + bank]);
            let debt = std::mem::take(&mut self.exposures[bank * n + j]);
            self.external_assets[j] += claim;
            self.external_liabilities[j] += debt;
        }
        self.external_assets[bank] = 0.0;
        self.external_liabilities[bank] = 0.0;
    }

    pub(crate) fn set_exposure(&mut self, lender: usize, borrower: usize, value: f64) {
        debug_assert!(lender != borrower || value == 0.0);
        debug_assert!(value >= 0.0);
        self.exposures[lender * self.n + borrower] = value;
    }

    pub(crate) fn row_mut(&mut self, bank: usize) -> &mut [f64] {
        &mut self.exposures[bank * self.n..(bank + 1) * self.n]
    }

    pub(crate) fn add_external_assets(&mut self, bank: usize, amount: f64) {
        self.external_assets[bank] = (self.external_assets[bank] + amount).max(0.0);
    }

    pub(crate) fn add_external_liabilities(&mut self, bank: usize, amount: f64) {
        self.external_liabilities[bank] = (self.external_liabilities[bank] + amount).max(0.0);
    }

    /// Moves to a new rate and revalues every exposure by `new_rate / rate`.
    pub fn revalue(&mut self, new_rate: f64) {
        let factor = new_rate / self.rate;
        if factor != 1.0 {
            self.exposures.iter_mut().for_each(|a| *a *= factor);
        }
        self.rate = new_rate;
    }

    pub(crate) fn advance_step(&mut self) {
        self.step += 1;
    }

    /// Zeroes the interbank book of every bank (used at market freeze).
    pub(crate) fn clear_interbank(&mut self) {
        self.exposures.fill(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_bank() -> MarketState {
        // 0 lends 3 to 1; 1 lends 2 to 0; 2 lends 1.5 to 0.
        let mut m = vec![0.0; 9];
        m[1] = 3.0;
        m[3] = 2.0;
        m[6] = 1.5;
        MarketState::new(m, vec![10.0, 8.0, 6.0], vec![4.0, 5.0, 2.0], 1.0).unwrap()
    }

    #[test]
    fn equity_is_direct_substitution() {
        let mut m = vec![0.0; 9];
        m[1] = 3.0; // row sum of bank 0 = 3
        m[3] = 2.0; // column sum of bank 0 = 2
        let s = MarketState::new(m, vec![10.0, 20.0, 20.0], vec![4.0, 0.0, 0.0], 1.0).unwrap();
        assert_eq!(s.equity(0), 7.0);
    }

    #[test]
    fn isolated_bank_with_matched_externals_has_zero_equity() {
        let s = MarketState::isolated(vec![5.0, 3.0], vec![5.0, 1.0], 1.0).unwrap();
        assert_eq!(s.equity(0), 0.0);
        assert_eq!(s.equity(1), 2.0);
    }

    #[test]
    fn equities_pass_matches_per_bank_formula() {
        let s = three_bank();
        let all = s.equities();
        for i in 0..3 {
            assert!((all[i] - s.equity(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn relative_equity_is_one_at_start() {
        assert_eq!(three_bank().total_relative_equity(), 1.0);
    }

    #[test]
    fn remove_only_counterparty_clears_interbank_sums() {
        let mut m = vec![0.0; 4];
        m[1] = 2.0;
        let mut s = MarketState::new(m, vec![5.0, 5.0], vec![1.0, 1.0], 1.0).unwrap();
        s.remove_bank(1);
        assert_eq!(s.interbank_assets(0), 0.0);
        assert_eq!(s.interbank_liabilities(0), 0.0);
        assert!(!s.is_alive(1));
        assert_eq!(s.equity(1), 0.0);
        // second removal is a no-op
        let before = s.clone();
        s.remove_bank(1);
        assert_eq!(before, s);
    }

    #[test]
    fn removing_isolated_bank_keeps_survivor_equity() {
        let mut s = MarketState::isolated(vec![5.0, 7.0, 9.0], vec![1.0, 2.0, 3.0], 1.0).unwrap();
        let before: f64 = [0, 2].iter().map(|&i| s.equity(i)).sum();
        s.remove_bank(1);
        let after: f64 = [0, 2].iter().map(|&i| s.equity(i)).sum();
        assert_eq!(before, after);
    }

    #[test]
    fn all_dead_means_zero_relative_equity() {
        let mut s = three_bank();
        for i in 0..3 {
            s.remove_bank(i);
        }
        assert_eq!(s.total_relative_equity(), 0.0);
    }

    #[test]
    fn contract_count_counts_in_and_out_links() {
        let s = three_bank();
        assert_eq!(s.contract_count(0), 3);
        assert_eq!(s.contract_count(1), 2);
        assert_eq!(s.contract_count(2), 1);
    }

    #[test]
    fn rejects_nonzero_diagonal_and_negative_entries() {
        assert!(MarketState::new(vec![1.0, 0.0, 0.0, 0.0], vec![5.0; 2], vec![0.0; 2], 1.0).is_err());
        assert!(MarketState::new(vec![0.0, -1.0, 0.0, 0.0], vec![5.0; 2], vec![0.0; 2], 1.0).is_err());
        assert!(MarketState::isolated(vec![1.0], vec![2.0], 1.0).is_err());
    }

    #[test]
    fn revaluation_leaves_matched_book_equity_unchanged() {
        // bank 1 lends 2 and borrows 2
        let mut m = vec![0.0; 9];
        m[1] = 2.0;
        m[5] = 2.0;
        let mut s = MarketState::new(m, vec![5.0; 3], vec![1.0; 3], 1.0).unwrap();
        let e = s.equity(1);
        s.revalue(1.37);
        assert!((s.equity(1) - e).abs() < 1e-12);
        assert!((s.equity(0) - (4.0 + 2.74)).abs() < 1e-12);
        assert!((s.equity(2) - (4.0 - 2.74)).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn revaluation_never_moves_a_matched_book(
            entries in proptest::collection::vec(0.0f64..10.0, 16),
            ratio in 0.5f64..2.0,
        ) {
            let n = 4;
            let mut m = entries;
            for i in 0..n {
                m[i * n + i] = 0.0;
            }
            let lent: f64 = m[1..n].iter().sum();
            let borrowed: f64 = (1..n).map(|k| m[k * n]).sum();
            proptest::prop_assume!(lent > 0.0 && borrowed > 0.0);
            // scale bank 0's loans so they match its borrowing
            for v in &mut m[1..n] {
                *v *= borrowed / lent;
            }
            let mut s = MarketState::new(m, vec![50.0; n], vec![1.0; n], 1.0).unwrap();
            let e = s.equity(0);
            s.revalue(ratio);
            proptest::prop_assert!((s.equity(0) - e).abs() <= 1e-12 * 50.0);
        }
    }
}
