//! Calibrates the fitness model on a synthetic population, draws one network
//! and reports density and marginal fit.

use interbank::reconstruction::{marginal_error, NetworkSampler};
use interbank::{generate_synthetic, ReconstructionConfig, SyntheticSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let records = generate_synthetic(&SyntheticSpec::default())?;
    let n = records.len();
    let sampler = NetworkSampler::new(&records, &ReconstructionConfig::with_density(0.1))?;
    println!(
        "z = {:.6e}, expected density {:.6}",
        sampler.model().z,
        sampler.model().expected_density()
    );

    let m = sampler.sample(&mut ChaCha8Rng::seed_from_u64(1))?;
    let links = m.iter().filter(|v| **v > 0.0).count();
    let rows: Vec<f64> = records.iter().map(|r| r.interbank_assets).collect();
    let cols: Vec<f64> = records.iter().map(|r| r.interbank_liabilities).collect();
    println!(
        "realized density {:.4} ({links} links)",
        links as f64 / (n * (n - 1)) as f64
    );
    println!("worst relative marginal error {:.2e}", marginal_error(&m, &rows, &cols));

    let out: Vec<usize> = (0..n).map(|i| (0..n).filter(|&j| m[i * n + j] > 0.0).count()).collect();
    let biggest = (0..n).max_by(|&a, &b| rows[a].total_cmp(&rows[b])).unwrap();
    println!(
        "largest lender {} has {} borrowers; median out-degree {}",
        records[biggest].id,
        out[biggest],
        {
            let mut d = out.clone();
            d.sort();
            d[n / 2]
        }
    );
    Ok(())
}
