//! Ensembles of realizations with reproducible parallel seeding.
//!
//! Realization `k` uses a seed derived from `(master_seed, k)` alone, so the
//! ensemble is a pure function of its inputs regardless of thread count.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{PreparedMarket, ShockPolicy};
use crate::error::EnsembleError;
use crate::ledger::BankRecord;
use crate::metrics::RunRecord;
use crate::params::Parameters;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `index` under `master`.
pub fn realization_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

/// Seed of the shared network when the network is held fixed.
pub fn network_seed(master: u64) -> u64 {
    realization_seed(master, u64::MAX)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n_realizations: u64,
    pub master_seed: u64,
    /// Worker threads; 0 means rayon's default.
    pub parallelism: usize,
    /// Sample one network for the whole ensemble instead of one per realization.
    pub fixed_network: bool,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_realizations: 1000,
            master_seed: 0,
            parallelism: 0,
            fixed_network: false,
        }
    }
}

/// Running mean, variance, and range; merging is associative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accumulator {
    count: u64,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl Default for Accumulator {
    fn default() -> Self {
        Self {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        let mean = self.mean + d * other.count as f64 / count as f64;
        let m2 = self.m2 + other.m2 + d * d * (self.count as f64 * other.count as f64) / count as f64;
        Self {
            count,
            mean,
            m2,
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    pub fn stats(&self) -> MetricStats {
        if self.count == 0 {
            return MetricStats::default();
        }
        let std = if self.count > 1 {
            (self.m2 / (self.count - 1) as f64).sqrt()
        } else {
            0.0
        };
        MetricStats {
            mean: self.mean,
            std,
            min: self.min,
            max: self.max,
            count: self.count,
        }
    }
}

impl FromIterator<f64> for Accumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Accumulator::default();
        iter.into_iter().for_each(|x| acc.push(x));
        acc
    }
}

/// Sample statistics of one metric (`std` uses the `n - 1` denominator).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub count: u64,
}

impl MetricStats {
    /// Standard error of the mean.
    pub fn sem(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.std / (self.count as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub final_rel_equity: MetricStats,
    pub t_c: MetricStats,
    pub t_half: MetricStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub policy: String,
    pub master_seed: u64,
    pub n_requested: u64,
    pub n_converged: u64,
    pub n_nonconverged: u64,
    /// Converged runs whose equity never halved before the freeze.
    pub n_half_life_unreached: u64,
    pub fixed_network: bool,
    pub metrics: Metrics,
    pub parameters: Parameters,
    pub input_fingerprint: String,
}

impl AggregateReport {
    /// Aggregates converged runs, in the order given.
    pub fn from_runs(
        runs: &[RunRecord],
        params: &Parameters,
        policy: ShockPolicy,
        config: &EnsembleConfig,
        input_fingerprint: String,
    ) -> Self {
        let converged: Vec<&RunRecord> = runs.iter().filter(|r| r.converged).collect();
        let metrics = Metrics {
            final_rel_equity: converged
                .iter()
                .map(|r| r.final_rel_equity)
                .collect::<Accumulator>()
                .stats(),
            t_c: converged.iter().map(|r| r.t_c as f64).collect::<Accumulator>().stats(),
            t_half: converged
                .iter()
                .map(|r| r.t_half as f64)
                .collect::<Accumulator>()
                .stats(),
        };
        Self {
            policy: policy.to_string(),
            master_seed: config.master_seed,
            n_requested: runs.len() as u64,
            n_converged: converged.len() as u64,
            n_nonconverged: (runs.len() - converged.len()) as u64,
            n_half_life_unreached: converged.iter().filter(|r| !r.half_life_reached).count() as u64,
            fixed_network: config.fixed_network,
            metrics,
            parameters: *params,
            input_fingerprint,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// SHA-256 over bank ids and the bit patterns of every balance-sheet field.
pub fn input_fingerprint(records: &[BankRecord]) -> String {
    let mut h = Sha256::new();
    for r in records {
        h.update(r.id.as_bytes());
        h.update([0u8]);
        for v in [
            r.external_assets,
            r.external_liabilities,
            r.interbank_assets,
            r.interbank_liabilities,
        ] {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub report: AggregateReport,
    /// One record per realization, in index order.
    pub runs: Vec<RunRecord>,
}

/// Prepares the market from `records` and runs the ensemble.
pub fn run_ensemble(
    records: &[BankRecord],
    params: &Parameters,
    policy: ShockPolicy,
    config: &EnsembleConfig,
) -> Result<Ensemble, EnsembleError> {
    let prepared = PreparedMarket::new(records, params, &Default::default())
        .map_err(|source| EnsembleError::Realization { index: 0, source })?;
    run_prepared(&prepared, records, params, policy, config)
}

/// Runs `config.n_realizations` realizations on an already prepared market.
pub fn run_prepared(
    prepared: &PreparedMarket,
    records: &[BankRecord],
    params: &Parameters,
    policy: ShockPolicy,
    config: &EnsembleConfig,
) -> Result<Ensemble, EnsembleError> {
    if config.n_realizations == 0 {
        return Err(EnsembleError::Empty);
    }
    let fixed;
    let market = if config.fixed_network {
        fixed = prepared
            .clone()
            .with_fixed_network(network_seed(config.master_seed))
            .map_err(|source| EnsembleError::Realization { index: 0, source })?;
        &fixed
    } else {
        prepared
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| EnsembleError::Pool(e.to_string()))?;
    let results: Vec<Result<RunRecord, EnsembleError>> = pool.install(|| {
        (0..config.n_realizations)
            .into_par_iter()
            .map(|index| {
                let seed = realization_seed(config.master_seed, index);
                match catch_unwind(AssertUnwindSafe(|| market.run(policy, seed))) {
                    Ok(Ok(run)) => Ok(run),
                    Ok(Err(source)) => Err(EnsembleError::Realization { index, source }),
                    Err(payload) => Err(EnsembleError::Panic {
                        index,
                        message: panic_message(payload),
                    }),
                }
            })
            .collect()
    });
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let report = AggregateReport::from_runs(&runs, params, policy, config, input_fingerprint(records));
    Ok(Ensemble { report, runs })
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "unknown panic".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..1000).map(|k| realization_seed(7, k)).collect();
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), a.len());
        assert_eq!(realization_seed(7, 3), a[3]);
        assert_ne!(realization_seed(8, 3), a[3]);
    }

    #[test]
    fn single_value_has_zero_std() {
        let s: MetricStats = [0.25].into_iter().collect::<Accumulator>().stats();
        assert_eq!(s.mean, 0.25);
        assert_eq!(s.std, 0.0);
        assert_eq!((s.min, s.max, s.count), (0.25, 0.25, 1));
    }

    proptest! {
        #[test]
        fn merged_mean_is_count_weighted(
            a in prop::collection::vec(-1e3f64..1e3, 1..50),
            b in prop::collection::vec(-1e3f64..1e3, 1..50),
        ) {
            let sa: Accumulator = a.iter().copied().collect();
            let sb: Accumulator = b.iter().copied().collect();
            let merged = sa.merge(&sb).stats();
            let all: Accumulator = a.iter().chain(&b).copied().collect();
            let all = all.stats();
            let (ma, mb) = (sa.stats(), sb.stats());
            let weighted = (ma.mean * ma.count as f64 + mb.mean * mb.count as f64)
                / (ma.count + mb.count) as f64;
            prop_assert!((merged.mean - weighted).abs() <= 1e-9 * (1.0 + weighted.abs()));
            prop_assert!((merged.mean - all.mean).abs() <= 1e-9 * (1.0 + all.mean.abs()));
            prop_assert!((merged.std - all.std).abs() <= 1e-7 * (1.0 + all.std));
            prop_assert_eq!(merged.count, all.count);
            prop_assert_eq!(merged.min, all.min);
            prop_assert_eq!(merged.max, all.max);
        }
    }
}
