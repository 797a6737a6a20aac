//! Agent-based simulation of distress propagation in the interbank
//! overnight-lending market.
//!
//! The crate reconstructs a bilateral exposure network from aggregate balance
//! sheets ([`reconstruction`]), hits it with repeated exogenous shocks and
//! evolves it through leverage targeting, liquidity hoarding, interest-rate
//! revaluation, default cascades with fire sales and a terminal market freeze
//! ([`dynamics`]). Ensembles of realizations are run in parallel with
//! reproducible seeding ([`montecarlo`]).
//!
//! Runnable walkthroughs live in `examples/`; `cargo run --example` lists them.

// `!(x > 0.0)` is used on purpose so NaN takes the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod ingest;
pub mod ledger;
pub mod metrics;
pub mod montecarlo;
pub mod output;
pub mod params;
pub mod reconstruction;

pub use dynamics::{run_realization, PreparedMarket, Selector, ShockPolicy};
pub use error::{EnsembleError, IngestError, ReconstructionError, SimulationError};
pub use ingest::{generate_synthetic, load_balance_sheets, SyntheticSpec};
pub use ledger::{BankRecord, EquityVector, MarketState};
pub use metrics::{half_life, RunRecord, SeriesRow};
pub use montecarlo::{run_ensemble, AggregateReport, EnsembleConfig};
pub use params::Parameters;
pub use reconstruction::{calibrate_z, sample_network, ReconstructionConfig};
