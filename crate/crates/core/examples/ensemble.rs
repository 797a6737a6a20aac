//! Monte Carlo ensemble under one policy, with a JSON report and the four
//! chart panels written to `ensemble_out/`.

use std::path::Path;

use interbank::montecarlo::{run_ensemble, EnsembleConfig};
use interbank::output::{save_report, save_series, write_charts};
use interbank::{generate_synthetic, Parameters, Selector, ShockPolicy, SyntheticSpec};

fn main() -> anyhow::Result<()> {
    let n: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(32);
    let records = generate_synthetic(&SyntheticSpec::default())?;
    let params = Parameters::default();
    let config = EnsembleConfig {
        n_realizations: n,
        master_seed: 2024,
        parallelism: 0,
        fixed_network: false,
    };
    let out = Path::new("ensemble_out");
    std::fs::create_dir_all(out)?;

    let mut curves = Vec::new();
    for policy in [
        ShockPolicy::RandomEachStep,
        ShockPolicy::Fixed(Selector::AMax),
        ShockPolicy::Fixed(Selector::AMin),
    ] {
        let ens = run_ensemble(&records, &params, policy, &config)?;
        let m = &ens.report.metrics;
        println!(
            "{:<7} t_c {:>7.1} ± {:>5.1}  t_half {:>7.1} ± {:>5.1}  final {:.4}",
            policy.to_string(),
            m.t_c.mean,
            m.t_c.std,
            m.t_half.mean,
            m.t_half.std,
            m.final_rel_equity.mean
        );
        let name = policy.to_string().replace(':', "_");
        save_report(&out.join(format!("{name}.json")), &ens.report)?;
        let series = out.join(format!("{name}_series.csv"));
        save_series(&series, &ens.runs[0].series)?;
        curves.push((policy.to_string(), series));
    }
    let refs: Vec<(String, &Path)> = curves.iter().map(|(n, p)| (n.clone(), p.as_path())).collect();
    for p in write_charts(out, &refs)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
