//! The simulation loop of one realization.
//!
//! Each iteration is either an exogenous round (shock, leverage targeting with
//! hoarding, small rate step) or, while insolvent banks remain, a cascade
//! block (default propagation, post-cascade releveraging, rate jump). The
//! freeze condition is checked after every iteration.
//!
//! All currency amounts are expressed in units of the shock size internally,
//! so a common rescaling of balance sheets and shock leaves every
//! dimensionless output unchanged.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cascade::{post_cascade_releverage, propagate_defaults, PreCascade};
use super::freeze::{check_and_resolve_freeze, FreezeOutcome};
use super::policy::ShockPolicy;
use super::rate::RateProcess;
use super::shock::{apply_exogenous_shock, releverage_and_hoard, ReleverageBasis};
use crate::error::SimulationError;
use crate::ledger::{BankRecord, MarketState};
use crate::metrics::{half_life, RunRecord, SeriesRow};
use crate::params::Parameters;
use crate::reconstruction::{build_state, NetworkSampler, ReconstructionConfig};

/// Relative tolerance between incrementally tracked and ledger equity.
pub const EQUITY_TOLERANCE: f64 = 1e-9;

const STREAM_NETWORK: u64 = 0;
const STREAM_RATE: u64 = 1;
const STREAM_TARGET: u64 = 2;
const STREAM_ORDER: u64 = 3;

/// Independent random substreams of one realization.
pub(crate) fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Inputs shared by every realization on the same population: balance sheets
/// in shock units and a calibrated network sampler.
#[derive(Debug, Clone)]
pub struct PreparedMarket {
    records: Vec<BankRecord>,
    params: Parameters,
    unit: f64,
    sampler: NetworkSampler,
    fixed_network: Option<Vec<f64>>,
}

impl PreparedMarket {
    pub fn new(
        records: &[BankRecord],
        params: &Parameters,
        reconstruction: &ReconstructionConfig,
    ) -> Result<Self, SimulationError> {
        params.validate()?;
        let unit = params.phi;
        let records: Vec<BankRecord> = records.iter().map(|r| r.in_units(unit)).collect();
        let config = ReconstructionConfig {
            density: params.d,
            ..reconstruction.clone()
        };
        let sampler = NetworkSampler::new(&records, &config)?;
        Ok(Self {
            records,
            params: params.in_units(unit),
            unit,
            sampler,
            fixed_network: None,
        })
    }

    /// Draws one network with `seed` and reuses it for every realization.
    pub fn with_fixed_network(mut self, seed: u64) -> Result<Self, SimulationError> {
        let mut rng = substream(seed, STREAM_NETWORK);
        self.fixed_network = Some(self.sampler.sample(&mut rng)?);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Currency value of one internal unit (the shock size).
    pub fn unit(&self) -> f64 {
        self.unit
    }

    pub fn sampler(&self) -> &NetworkSampler {
        &self.sampler
    }

    /// Initial ledger of the realization with `seed`, in shock units.
    pub fn initial_state(&self, seed: u64) -> Result<MarketState, SimulationError> {
        let face = match &self.fixed_network {
            Some(m) => m.clone(),
            None => self.sampler.sample(&mut substream(seed, STREAM_NETWORK))?,
        };
        build_state(&self.records, &face, self.params.r0)
    }

    pub fn run(&self, policy: ShockPolicy, seed: u64) -> Result<RunRecord, SimulationError> {
        let state = self.initial_state(seed)?;
        run_on_state(state, &self.params, policy, seed)
    }
}

/// Samples a network for `records` and runs one realization.
pub fn run_realization(
    records: &[BankRecord],
    params: &Parameters,
    policy: ShockPolicy,
    seed: u64,
) -> Result<RunRecord, SimulationError> {
    PreparedMarket::new(records, params, &ReconstructionConfig::default())?.run(policy, seed)
}

/// Runs the dynamics on a prepared ledger. `params` must use the same currency
/// unit as `state`.
pub fn run_on_state(
    state: MarketState,
    params: &Parameters,
    policy: ShockPolicy,
    seed: u64,
) -> Result<RunRecord, SimulationError> {
    params.validate()?;
    Simulation::new(state, *params, policy, seed).run()
}

/// A realization in progress.
#[derive(Debug)]
pub struct Simulation {
    state: MarketState,
    params: Parameters,
    policy: ShockPolicy,
    seed: u64,
    rate: RateProcess,
    target_rng: ChaCha8Rng,
    order_rng: ChaCha8Rng,
    tracked: Vec<f64>,
    last_gamma: Option<f64>,
    series: Vec<SeriesRow>,
    default_order: Vec<usize>,
}

impl Simulation {
    pub fn new(state: MarketState, params: Parameters, policy: ShockPolicy, seed: u64) -> Self {
        let rate = RateProcess::new(&params, state.rate(), substream(seed, STREAM_RATE));
        let tracked = state.equities().0;
        let mut sim = Self {
            state,
            params,
            policy,
            seed,
            rate,
            target_rng: substream(seed, STREAM_TARGET),
            order_rng: substream(seed, STREAM_ORDER),
            tracked,
            last_gamma: None,
            series: Vec::new(),
            default_order: Vec::new(),
        };
        sim.record(None);
        sim
    }

    pub fn state(&self) -> &MarketState {
        &self.state
    }

    pub fn series(&self) -> &[SeriesRow] {
        &self.series
    }

    /// Runs to the freeze (or the iteration cap).
    pub fn run(mut self) -> Result<RunRecord, SimulationError> {
        while self.state.step() < self.params.max_iterations {
            if let Some(freeze) = self.iterate()? {
                return Ok(self.finish(Some(freeze)));
            }
        }
        log::warn!("realization {} hit the iteration cap", self.seed);
        Ok(self.finish(None))
    }

    /// Performs one iteration; returns the freeze outcome if the market froze.
    pub fn iterate(&mut self) -> Result<Option<FreezeOutcome>, SimulationError> {
        let insolvent = self.insolvent();
        if insolvent.is_empty() {
            self.exogenous_round()?;
        } else {
            self.cascade_block(&insolvent)?;
        }
        self.state.advance_step();
        self.verify()?;
        self.record(None);
        let freeze = check_and_resolve_freeze(&mut self.state, &self.params, self.last_gamma);
        Ok(freeze)
    }

    fn insolvent(&self) -> Vec<usize> {
        let eq = self.state.equities();
        self.state.alive_indices().filter(|&i| eq[i] <= 0.0).collect()
    }

    fn exogenous_round(&mut self) -> Result<(), SimulationError> {
        let s = self.policy.select(&self.state, &mut self.target_rng)?;
        let basis = ReleverageBasis::of(&self.state, s);
        let nets: Vec<f64> = (0..self.state.len()).map(|i| self.state.net_interbank(i)).collect();
        let lent_row: Vec<f64> = self.state.row(s).to_vec();
        let lent: f64 = lent_row.iter().sum();

        let shock = apply_exogenous_shock(&mut self.state, s, self.params.phi)?;
        let hoard = releverage_and_hoard(&mut self.state, s, shock.applied, &basis)?;
        let step = self.rate.step_small();
        self.state.revalue(step.next);

        // closed-form update: shocked bank, its borrowers, everyone else
        let g = step.growth();
        for (i, e) in self.tracked.iter_mut().enumerate() {
            if !self.state.is_alive(i) {
                continue;
            }
            let mut net = nets[i];
            if i == s {
                *e -= shock.applied;
                net -= hoard.sold_interbank;
            } else if lent > 0.0 && lent_row[i] > 0.0 {
                net += hoard.sold_interbank * lent_row[i] / lent;
            }
            *e += g * net;
        }
        Ok(())
    }

    fn cascade_block(&mut self, insolvent: &[usize]) -> Result<(), SimulationError> {
        let before = PreCascade::capture(&self.state);
        let outcome = propagate_defaults(&mut self.state, insolvent, &self.params)?;
        for (i, e) in self.tracked.iter_mut().enumerate() {
            if self.state.is_alive(i) {
                *e -= outcome.losses[i];
            } else {
                *e = 0.0;
            }
        }
        self.verify()?;
        self.default_order.extend_from_slice(&outcome.defaulted);
        if let Some(&g) = outcome.gamma_series.last() {
            self.last_gamma = Some(g);
        }

        let snapshot = self.state.clone();
        let post = post_cascade_releverage(
            &mut self.state,
            &before,
            outcome.delta_e,
            &mut self.rate,
            &self.params,
            &mut self.order_rng,
        )?;

        let g = post.rate.growth();
        let mut nets: Vec<f64> = (0..snapshot.len()).map(|i| snapshot.net_interbank(i)).collect();
        for h in &post.hoards {
            if h.sold_interbank == 0.0 {
                continue;
            }
            let row = snapshot.row(h.bank);
            let lent: f64 = row.iter().sum();
            nets[h.bank] -= h.sold_interbank;
            for (k, &a) in row.iter().enumerate() {
                if a > 0.0 {
                    nets[k] += h.sold_interbank * a / lent;
                }
            }
        }
        for (i, e) in self.tracked.iter_mut().enumerate() {
            if self.state.is_alive(i) {
                *e += g * nets[i];
            }
        }
        Ok(())
    }

    /// Compares tracked equities with the ledger, then resynchronizes.
    fn verify(&mut self) -> Result<(), SimulationError> {
        let ledger = self.state.equities();
        for i in self.state.alive_indices() {
            let scale = ledger[i]
                .abs()
                .max(self.state.total_assets(i))
                .max(self.state.external_liabilities(i) + self.state.interbank_liabilities(i));
            if (self.tracked[i] - ledger[i]).abs() > EQUITY_TOLERANCE * scale {
                return Err(SimulationError::EquityDivergence {
                    bank: i,
                    tracked: self.tracked[i],
                    ledger: ledger[i],
                });
            }
        }
        self.tracked = ledger.0;
        Ok(())
    }

    fn record(&mut self, gamma_override: Option<f64>) {
        let n = self.state.len().max(1) as f64;
        let dead = self.state.len() - self.state.alive_count();
        self.series.push(SeriesRow {
            t: self.series.len() as u64,
            rate: self.state.rate(),
            rel_equity: self.state.total_relative_equity(),
            defaulted_frac: dead as f64 / n,
            gamma: gamma_override.or(self.last_gamma).unwrap_or(0.0),
        });
    }

    fn finish(mut self, freeze: Option<FreezeOutcome>) -> RunRecord {
        let t_c = self.state.step();
        let rel: Vec<f64> = self.series.iter().map(|r| r.rel_equity).collect();
        let (t_half, reached) = half_life(&rel).expect("series starts with t = 0");
        let converged = freeze.is_some();
        let (final_rel_equity, gamma_c) = match &freeze {
            Some(f) => {
                self.record(Some(f.gamma_c));
                if let Some(last) = self.series.last_mut() {
                    last.rel_equity = f.final_relative_equity;
                }
                (f.final_relative_equity, Some(f.gamma_c))
            }
            None => (self.state.total_relative_equity(), None),
        };
        RunRecord {
            seed: self.seed,
            series: self.series,
            t_c,
            t_half,
            half_life_reached: reached,
            final_rel_equity,
            converged,
            default_order: self.default_order,
            gamma_c,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::policy::Selector;

    fn quiet() -> Parameters {
        Parameters {
            phi: 1.0,
            alpha: 0.0,
            sigma: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn degenerate_threshold_freezes_at_first_step() {
        let state = MarketState::isolated(vec![100.0, 50.0], vec![80.0, 40.0], 1.0).unwrap();
        let p = Parameters { eps_c: 1.0, ..quiet() };
        let rec = run_on_state(state, &p, ShockPolicy::Fixed(Selector::AMax), 1).unwrap();
        assert!(rec.converged);
        assert_eq!(rec.t_c, 1);
        assert_eq!(rec.series.len(), 3);
    }

    #[test]
    fn single_bank_freezes_after_closed_form_rounds() {
        // E(0) = 10.5, phi = 1, eps_c = 0.37: freeze after ceil(0.63 * 10.5) = 7 rounds
        let state = MarketState::isolated(vec![100.0], vec![89.5], 1.0).unwrap();
        let rec = run_on_state(state, &quiet(), ShockPolicy::Fixed(Selector::AMax), 3).unwrap();
        assert_eq!(rec.t_c, (0.63f64 * 10.5).ceil() as u64);
        assert!(rec.converged);
        assert!(rec.t_half <= rec.t_c);
    }

    #[test]
    fn iteration_cap_marks_run_non_converged() {
        let state = MarketState::isolated(vec![1000.0], vec![0.0], 1.0).unwrap();
        let p = Parameters {
            max_iterations: 5,
            ..quiet()
        };
        let rec = run_on_state(state, &p, ShockPolicy::RandomEachStep, 0).unwrap();
        assert!(!rec.converged);
        assert_eq!(rec.t_c, 5);
        assert_eq!(rec.gamma_c, None);
    }
}
