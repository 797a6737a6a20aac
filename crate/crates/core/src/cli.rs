//! Command implementations behind the `interbank` binary.
//!
//! Output layout of `run` and `sweep`:
//!
//! ```text
//! <out>/<policy>/series_<k>.csv   one per realization
//! <out>/<policy>/report.json      aggregate over the ensemble
//! <out>/charts/<panel>.svg        realization 0 of every policy
//! <out>/network_<k>.csv           face-value exposure matrix (matrix dump)
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use crate::dynamics::{PreparedMarket, Selector, ShockPolicy};
use crate::ingest::{generate_synthetic, load_balance_sheets, SyntheticSpec};
use crate::ledger::BankRecord;
use crate::montecarlo::{realization_seed, run_prepared, AggregateReport, EnsembleConfig};
use crate::output::{save_report, save_series, write_charts};
use crate::params::Parameters;
use crate::reconstruction::{sample_network, write_matrix, ReconstructionConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    File(PathBuf),
    Synthetic(SyntheticSpec),
}

impl InputSource {
    pub fn load(&self, r0: f64) -> Result<Vec<BankRecord>> {
        Ok(match self {
            InputSource::File(p) => load_balance_sheets(p, r0)?,
            InputSource::Synthetic(spec) => generate_synthetic(spec)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emit {
    pub series_csv: bool,
    pub report_json: bool,
    pub charts_svg: bool,
    pub matrix_dump: bool,
}

impl Default for Emit {
    fn default() -> Self {
        Self {
            series_csv: true,
            report_json: true,
            charts_svg: false,
            matrix_dump: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: InputSource,
    /// `name=value` overrides applied on top of the defaults.
    pub overrides: Vec<String>,
    pub policies: Vec<ShockPolicy>,
    pub n_realizations: u64,
    pub master_seed: u64,
    pub parallelism: usize,
    pub out_dir: PathBuf,
    pub emit: Emit,
    pub fixed_network: bool,
}

impl RunConfig {
    pub fn new(input: InputSource, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            input,
            overrides: Vec::new(),
            policies: vec![ShockPolicy::RandomEachStep],
            n_realizations: 1,
            master_seed: 0,
            parallelism: 0,
            out_dir: out_dir.into(),
            emit: Emit::default(),
            fixed_network: false,
        }
    }

    pub fn parameters(&self) -> Result<Parameters> {
        let mut p = Parameters::default();
        for a in &self.overrides {
            p.apply_assignment(a)?;
        }
        p.validate()?;
        Ok(p)
    }
}

/// What a command produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub artifacts: Vec<PathBuf>,
    pub reports: Vec<AggregateReport>,
    pub all_converged: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.all_converged {
            0
        } else {
            2
        }
    }
}

/// Directory-safe form of a policy name.
pub fn policy_dir(policy: &ShockPolicy) -> String {
    policy.to_string().replace(':', "_")
}

fn mkdir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))
}

pub fn cmd_run(config: &RunConfig) -> Result<Outcome> {
    if config.policies.is_empty() {
        bail!("no shock policy given");
    }
    let params = config.parameters()?;
    let records = config.input.load(params.r0)?;
    let prepared = PreparedMarket::new(&records, &params, &ReconstructionConfig::default())?;
    mkdir(&config.out_dir)?;

    let ens_config = EnsembleConfig {
        n_realizations: config.n_realizations,
        master_seed: config.master_seed,
        parallelism: config.parallelism,
        fixed_network: config.fixed_network,
    };
    let mut outcome = Outcome {
        all_converged: true,
        ..Default::default()
    };
    let mut chart_curves = Vec::new();
    let width = config.n_realizations.saturating_sub(1).to_string().len().max(4);

    for policy in &config.policies {
        let ens = run_prepared(&prepared, &records, &params, *policy, &ens_config)?;
        let dir = config.out_dir.join(policy_dir(policy));
        mkdir(&dir)?;
        let mut first_series = None;
        for (k, run) in ens.runs.iter().enumerate() {
            if !run.converged {
                log::warn!("policy {policy}: realization {k} did not converge");
            }
            if config.emit.series_csv || (config.emit.charts_svg && k == 0) {
                let path = dir.join(format!("series_{k:0width$}.csv"));
                save_series(&path, &run.series)?;
                if k == 0 {
                    first_series = Some(path.clone());
                }
                outcome.artifacts.push(path);
            }
        }
        if config.emit.report_json {
            let path = dir.join("report.json");
            save_report(&path, &ens.report)?;
            outcome.artifacts.push(path);
        }
        if let Some(p) = first_series {
            chart_curves.push((policy.to_string(), p));
        }
        outcome.all_converged &= ens.report.n_nonconverged == 0;
        outcome.reports.push(ens.report);
    }

    if config.emit.charts_svg {
        let dir = config.out_dir.join("charts");
        mkdir(&dir)?;
        let curves: Vec<(String, &Path)> = chart_curves.iter().map(|(n, p)| (n.clone(), p.as_path())).collect();
        outcome.artifacts.extend(write_charts(&dir, &curves)?);
    }

    if config.emit.matrix_dump {
        let market = if config.fixed_network {
            prepared
                .clone()
                .with_fixed_network(crate::montecarlo::network_seed(config.master_seed))?
        } else {
            prepared.clone()
        };
        let n_dump = if config.fixed_network { 1 } else { config.n_realizations };
        for k in 0..n_dump {
            let state = market.initial_state(realization_seed(config.master_seed, k))?;
            let scale = market.unit() / state.rate();
            let face: Vec<f64> = state.exposures().iter().map(|v| v * scale).collect();
            let path = config.out_dir.join(format!("network_{k:0width$}.csv"));
            let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_matrix(std::io::BufWriter::new(file), state.len(), &face)?;
            outcome.artifacts.push(path);
        }
    }
    Ok(outcome)
}

/// The six named selectors on one sampled network.
pub fn default_sweep_policies() -> Vec<ShockPolicy> {
    Selector::NAMED.iter().copied().map(ShockPolicy::Fixed).collect()
}

/// Runs every configured policy on a single fixed network and charts them
/// together.
pub fn cmd_sweep(config: &RunConfig) -> Result<Outcome> {
    let mut config = config.clone();
    config.fixed_network = true;
    config.emit.charts_svg = true;
    cmd_run(&config)
}

/// Loads and validates a balance-sheet file and prints a per-bank table.
pub fn cmd_validate<W: Write>(path: &Path, r0: f64, out: &mut W) -> Result<Vec<BankRecord>> {
    let records = load_balance_sheets(path, r0)?;
    writeln!(
        out,
        "{:<16} {:>22} {:>22} {:>12} {:>8}",
        "id", "equity", "total_assets", "leverage", "solvent"
    )?;
    for r in &records {
        let e = r.equity(r0);
        let a = r.total_assets(r0);
        writeln!(
            out,
            "{:<16} {:>22} {:>22} {:>12} {:>8}",
            r.id,
            e,
            a,
            a / e,
            if e > 0.0 { "yes" } else { "no" }
        )?;
    }
    Ok(records)
}

/// Samples one network and writes its face-value exposure matrix.
pub fn cmd_sample_network<W: Write>(input: &InputSource, overrides: &[String], seed: u64, out: W) -> Result<()> {
    let mut params = Parameters::default();
    for a in overrides {
        params.apply_assignment(a)?;
    }
    params.validate()?;
    let records = input.load(params.r0)?;
    let config = ReconstructionConfig {
        seed,
        ..ReconstructionConfig::with_density(params.d)
    };
    let state = sample_network(&records, &config, params.r0)?;
    let face: Vec<f64> = state.exposures().iter().map(|v| v / state.rate()).collect();
    write_matrix(out, state.len(), &face)?;
    Ok(())
}
