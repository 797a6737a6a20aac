//! Runs one realization on a synthetic market and prints a coarse trace.

use interbank::{generate_synthetic, run_realization, Parameters, ShockPolicy, SyntheticSpec};

fn main() -> anyhow::Result<()> {
    let records = generate_synthetic(&SyntheticSpec::default())?;
    let params = Parameters::default();
    let run = run_realization(&records, &params, ShockPolicy::RandomEachStep, 3)?;

    println!(
        "{:>6} {:>10} {:>10} {:>10} {:>8}",
        "t", "rate", "rel_eq", "defaulted", "gamma"
    );
    let stride = (run.series.len() / 20).max(1);
    for row in run.series.iter().step_by(stride).chain(run.series.last()) {
        println!(
            "{:>6} {:>10.5} {:>10.5} {:>10.4} {:>8.4}",
            row.t, row.rate, row.rel_equity, row.defaulted_frac, row.gamma
        );
    }
    println!("froze at t_c = {}, half-life {}", run.t_c, run.t_half);
    println!("final relative equity {:.4}", run.final_rel_equity);
    println!(
        "{} defaults, first five {:?}",
        run.default_order.len(),
        &run.default_order[..run.default_order.len().min(5)]
    );
    Ok(())
}
