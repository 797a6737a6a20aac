//! Compares the six targeted shock policies on one fixed network.

use interbank::dynamics::PreparedMarket;
use interbank::montecarlo::network_seed;
use interbank::{generate_synthetic, Parameters, ReconstructionConfig, Selector, ShockPolicy, SyntheticSpec};

fn main() -> anyhow::Result<()> {
    let records = generate_synthetic(&SyntheticSpec::default())?;
    let params = Parameters::default();
    let market = PreparedMarket::new(&records, &params, &ReconstructionConfig::default())?
        .with_fixed_network(network_seed(0))?;

    println!(
        "{:<8} {:>6} {:>8} {:>10} {:>9}",
        "policy", "t_c", "t_half", "final_E", "defaults"
    );
    for sel in Selector::NAMED {
        let run = market.run(ShockPolicy::Fixed(sel), 0)?;
        println!(
            "{:<8} {:>6} {:>8} {:>10.4} {:>9}",
            sel.to_string(),
            run.t_c,
            run.t_half,
            run.final_rel_equity,
            run.default_order.len()
        );
    }
    Ok(())
}
