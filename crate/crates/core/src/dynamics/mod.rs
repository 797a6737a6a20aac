//! The agent-based dynamics: shocks, hoarding, rates, cascades and freeze.

pub mod cascade;
pub mod engine;
pub mod freeze;
pub mod policy;
pub mod rate;
pub mod shock;

pub use cascade::{
    depricing_factor, post_cascade_releverage, propagate_default, propagate_defaults, CascadeOutcome,
    PostCascadeReport, PreCascade,
};
pub use engine::{run_on_state, run_realization, PreparedMarket, Simulation, EQUITY_TOLERANCE};
pub use freeze::{check_and_resolve_freeze, terminal_depricing_factor, FreezeOutcome};
pub use policy::{Selector, ShockPolicy};
pub use rate::{jump_source, jump_step, small_step, RateProcess, RateStep};
pub use shock::{apply_exogenous_shock, releverage_and_hoard, HoardReport, ReleverageBasis, ShockReport};
