//! Generates a synthetic balance-sheet population and writes it as CSV.
//!
//! ```text
//! cargo run --example synthetic_population -- "n=183,tail=1.5,seed=7" banks.csv
//! ```

use std::path::PathBuf;

use interbank::ingest::{generate_synthetic, marginal_imbalance, save_balance_sheets};
use interbank::SyntheticSpec;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let spec: SyntheticSpec = args.next().unwrap_or_else(|| "n=183".into()).parse()?;
    let path = PathBuf::from(args.next().unwrap_or_else(|| "banks.csv".into()));

    let records = generate_synthetic(&spec)?;
    save_balance_sheets(&path, &records)?;

    let largest = records
        .iter()
        .max_by(|a, b| a.total_assets(1.0).total_cmp(&b.total_assets(1.0)))
        .unwrap();
    let total: f64 = records.iter().map(|r| r.total_assets(1.0)).sum();
    println!("{} banks written to {}", records.len(), path.display());
    println!(
        "largest bank {} holds {:.1}% of assets",
        largest.id,
        100.0 * largest.total_assets(1.0) / total
    );
    println!("interbank imbalance {}", marginal_imbalance(&records));
    Ok(())
}
