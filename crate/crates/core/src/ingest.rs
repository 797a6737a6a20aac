//! Balance-sheet input: delimited files and synthetic populations.
//!
//! File layout (UTF-8, decimal point, no thousands separators):
//!
//! ```text
//! id,external_assets,external_liabilities,interbank_assets,interbank_liabilities
//! bank-0,1200000000,1100000000,200000000,250000000
//! ```

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto};
use serde::{Deserialize, Serialize};

use crate::error::IngestError;
use crate::ledger::BankRecord;
use crate::reconstruction::check_closable;

pub const HEADER: [&str; 5] = [
    "id",
    "external_assets",
    "external_liabilities",
    "interbank_assets",
    "interbank_liabilities",
];

/// Relative mismatch between aggregate interbank assets and liabilities above
/// which loaded data is reported as an open market.
pub const MARGINAL_WARN_THRESHOLD: f64 = 1e-3;

pub fn load_balance_sheets(path: &Path, r0: f64) -> Result<Vec<BankRecord>, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_balance_sheets(file, r0)
}

/// Parses and validates a balance-sheet table. Initial solvency is checked with
/// interbank face values priced at `r0`.
pub fn read_balance_sheets<R: Read>(reader: R, r0: f64) -> Result<Vec<BankRecord>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| IngestError::Parse {
        row: 1,
        message: e.to_string(),
    })?;
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(IngestError::Header {
            expected: HEADER.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for result in rdr.records() {
        let rec = result.map_err(|e| IngestError::Parse {
            row: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let row = rec.position().map_or(0, |p| p.line());
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(IngestError::Field {
                row,
                column: HEADER[0],
                message: "empty id".into(),
            });
        }
        let mut values = [0.0; 4];
        for (k, value) in values.iter_mut().enumerate() {
            let column = HEADER[k + 1];
            let raw = &rec[k + 1];
            let v: f64 = raw.parse().map_err(|_| IngestError::Field {
                row,
                column,
                message: format!("`{raw}` is not a number"),
            })?;
            if !v.is_finite() || v < 0.0 {
                return Err(IngestError::Field {
                    row,
                    column,
                    message: format!("{v} must be finite and non-negative"),
                });
            }
            *value = v;
        }
        if !seen.insert(id.clone()) {
            return Err(IngestError::DuplicateId(id));
        }
        records.push(BankRecord::new(id, values[0], values[1], values[2], values[3]));
    }
    validate_records(&records, r0)?;
    let imbalance = marginal_imbalance(&records);
    if imbalance > MARGINAL_WARN_THRESHOLD {
        log::warn!(
            "interbank marginals do not balance (relative mismatch {imbalance:.3e}); \
             liabilities will be rescaled during reconstruction"
        );
    }
    Ok(records)
}

/// Population-level checks shared by loaders and generators.
pub fn validate_records(records: &[BankRecord], r0: f64) -> Result<(), IngestError> {
    if records.len() < 2 {
        return Err(IngestError::TooFewBanks(records.len()));
    }
    for r in records {
        let equity = r.equity(r0);
        if !(equity > 0.0) {
            return Err(IngestError::Insolvent {
                id: r.id.clone(),
                equity,
            });
        }
    }
    Ok(())
}

/// `|sum A - sum L| / max(sum A, sum L)` over interbank marginals.
pub fn marginal_imbalance(records: &[BankRecord]) -> f64 {
    let a: f64 = records.iter().map(|r| r.interbank_assets).sum();
    let l: f64 = records.iter().map(|r| r.interbank_liabilities).sum();
    let m = a.max(l);
    if m == 0.0 {
        0.0
    } else {
        (a - l).abs() / m
    }
}

pub fn save_balance_sheets(path: &Path, records: &[BankRecord]) -> Result<(), IngestError> {
    let io = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    write_balance_sheets(file, records).map_err(io)
}

/// Writes records with shortest round-trip decimal formatting.
pub fn write_balance_sheets<W: Write>(writer: W, records: &[BankRecord]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    for r in records {
        w.write_record([
            r.id.clone(),
            r.external_assets.to_string(),
            r.external_liabilities.to_string(),
            r.interbank_assets.to_string(),
            r.interbank_liabilities.to_string(),
        ])?;
    }
    w.flush()
}

/// Recipe for a synthetic bank population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_banks: usize,
    /// Pareto tail index of total assets.
    pub asset_tail_exponent: f64,
    /// Fraction of each bank's assets lent on the interbank market.
    pub interbank_share: f64,
    /// Uniform band for target leverage `A/E`.
    pub leverage_range: (f64, f64),
    /// Smallest possible total assets (Pareto scale), in currency.
    pub min_total_assets: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_banks: 183,
            asset_tail_exponent: 1.5,
            interbank_share: 0.3,
            leverage_range: (8.0, 30.0),
            min_total_assets: 1e10,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: &str| Err(IngestError::InfeasibleSpec(m.to_string()));
        let (lo, hi) = self.leverage_range;
        if self.n_banks < 2 {
            return bad("n_banks must be at least 2");
        }
        if !(self.asset_tail_exponent > 0.0 && self.asset_tail_exponent.is_finite()) {
            return bad("asset_tail_exponent must be positive");
        }
        if !(self.interbank_share > 0.0 && self.interbank_share < 1.0) {
            return bad("interbank_share must lie in (0, 1)");
        }
        if !(lo > 1.0 && hi >= lo && hi.is_finite()) {
            return bad("leverage_range needs 1 < min <= max");
        }
        if !(self.min_total_assets > 0.0 && self.min_total_assets.is_finite()) {
            return bad("min_total_assets must be positive");
        }
        Ok(())
    }
}

impl FromStr for SyntheticSpec {
    type Err = IngestError;

    /// Parses `key=value` pairs separated by commas, e.g.
    /// `n=183,tail=1.5,share=0.3,lev=8:30,scale=1e10,seed=7`. Missing keys keep
    /// their defaults.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut spec = SyntheticSpec::default();
        let bad = |m: String| IngestError::InfeasibleSpec(m);
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{part}`")))?;
            let num = |v: &str| -> Result<f64, IngestError> {
                v.trim().parse().map_err(|_| bad(format!("bad number `{v}` for `{k}`")))
            };
            match k.trim() {
                "n" | "n_banks" => spec.n_banks = v.trim().parse().map_err(|_| bad(format!("bad count `{v}`")))?,
                "tail" | "asset_tail_exponent" => spec.asset_tail_exponent = num(v)?,
                "share" | "interbank_share" => spec.interbank_share = num(v)?,
                "lev" | "leverage_range" => {
                    let (lo, hi) = v
                        .split_once(':')
                        .ok_or_else(|| bad(format!("leverage range must be min:max, got `{v}`")))?;
                    spec.leverage_range = (num(lo)?, num(hi)?);
                }
                "scale" | "min_total_assets" => spec.min_total_assets = num(v)?,
                "seed" => spec.seed = v.trim().parse().map_err(|_| bad(format!("bad seed `{v}`")))?,
                other => return Err(bad(format!("unknown synthetic key `{other}`"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Draws a closed-market population: Pareto total assets split by the
/// interbank share, leverage uniform in the band, interbank liabilities
/// proportional to total liabilities and rescaled so the aggregate marginals
/// balance. All amounts are whole currency units, so the balance is exact.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<BankRecord>, IngestError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pareto = Pareto::new(spec.min_total_assets, spec.asset_tail_exponent)
        .map_err(|e| IngestError::InfeasibleSpec(e.to_string()))?;
    // a draw where one bank outweighs the rest of the interbank market cannot
    // be wired without self-lending; redraw from the same stream
    for _ in 0..MAX_DRAWS {
        let draw = draw_population(spec, &pareto, &mut rng)?;
        if check_closable(&draw.ib_assets, &draw.ib_liabs).is_ok() {
            return draw.into_records(spec);
        }
    }
    Err(IngestError::InfeasibleSpec(format!(
        "all {MAX_DRAWS} draws had one bank dominating the interbank market"
    )))
}

const MAX_DRAWS: usize = 1000;

struct Draw {
    assets: Vec<f64>,
    liabilities: Vec<f64>,
    ib_assets: Vec<f64>,
    ib_liabs: Vec<f64>,
}

fn draw_population(spec: &SyntheticSpec, pareto: &Pareto<f64>, rng: &mut ChaCha8Rng) -> Result<Draw, IngestError> {
    let (lo, hi) = spec.leverage_range;
    let n = spec.n_banks;
    let mut assets = Vec::with_capacity(n);
    let mut liabilities = Vec::with_capacity(n);
    for _ in 0..n {
        let total: f64 = pareto.sample(rng).round();
        let leverage = if hi > lo { rng.gen_range(lo..hi) } else { lo };
        let equity = (total / leverage).round();
        if !(equity >= 1.0) || !total.is_finite() || total >= 2f64.powi(52) {
            return Err(IngestError::InfeasibleSpec(format!(
                "total assets {total} with leverage {leverage} is not representable"
            )));
        }
        assets.push(total);
        liabilities.push(total - equity);
    }

    let ib_assets: Vec<f64> = assets.iter().map(|a| (spec.interbank_share * a).round()).collect();
    let ib_total: f64 = ib_assets.iter().sum();
    let raw_total: f64 = liabilities.iter().map(|l| spec.interbank_share * l).sum();
    let k = ib_total / raw_total;
    let mut ib_liabs: Vec<f64> = liabilities
        .iter()
        .map(|l| (k * spec.interbank_share * l).round())
        .collect();
    let diff = ib_total - ib_liabs.iter().sum::<f64>();
    // rounding residue goes to the largest borrower
    let largest = (0..n).max_by(|&a, &b| ib_liabs[a].total_cmp(&ib_liabs[b])).unwrap_or(0);
    ib_liabs[largest] += diff;
    Ok(Draw {
        assets,
        liabilities,
        ib_assets,
        ib_liabs,
    })
}

impl Draw {
    fn into_records(self, spec: &SyntheticSpec) -> Result<Vec<BankRecord>, IngestError> {
        let n = self.assets.len();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let ext_liab = self.liabilities[i] - self.ib_liabs[i];
            if ext_liab < 0.0 || self.ib_liabs[i] < 0.0 {
                return Err(IngestError::InfeasibleSpec(format!(
                    "interbank share {} with leverage band {:?} leaves bank {i} with \
                     negative external liabilities",
                    spec.interbank_share, spec.leverage_range
                )));
            }
            out.push(BankRecord::new(
                format!("bank-{i:04}"),
                self.assets[i] - self.ib_assets[i],
                ext_liab,
                self.ib_assets[i],
                self.ib_liabs[i],
            ));
        }
        debug_assert_eq!(
            out.iter().map(|r| r.interbank_assets).sum::<f64>(),
            out.iter().map(|r| r.interbank_liabilities).sum::<f64>()
        );
        validate_records(&out, 1.0)?;
        Ok(out)
    }
}
