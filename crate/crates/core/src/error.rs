use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("unknown parameter `{0}`")]
    UnknownName(String),
    #[error("cannot parse value `{value}` for parameter `{name}`")]
    BadValue { name: String, value: String },
    #[error("expected name=value, got `{0}`")]
    Malformed(String),
    #[error("parameter `{name}` out of range: requires {rule}")]
    OutOfRange { name: String, rule: String },
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: {message}")]
    Parse { row: u64, message: String },
    #[error("row {row}, column `{column}`: {message}")]
    Field {
        row: u64,
        column: &'static str,
        message: String,
    },
    #[error("bad header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("duplicate bank id `{0}`")]
    DuplicateId(String),
    #[error("need at least 2 banks, found {0}")]
    TooFewBanks(usize),
    #[error("bank `{id}` is insolvent at start (equity {equity})")]
    Insolvent { id: String, equity: f64 },
    #[error("infeasible synthetic spec: {0}")]
    InfeasibleSpec(String),
}

#[derive(Debug, Error)]
pub enum ReconstructionError {
    #[error("no pair of banks with positive fitness product")]
    NoPositivePairs,
    #[error("target density {target} is above the attainable maximum {max}")]
    DensityUnreachable { target: f64, max: f64 },
    #[error("invalid reconstruction config: {0}")]
    Config(String),
    #[error("bank {bank} stays isolated after {retries} resampling attempts")]
    Isolated { bank: usize, retries: u32 },
    #[error(
        "bank {bank} carries {share:.3} of interbank volume as lender plus borrower; \
         no market without self-lending can match these marginals"
    )]
    Unclosable { bank: usize, share: f64 },
    #[error("could not match marginals within {tolerance} after {attempts} samples")]
    MarginalMismatch { tolerance: f64, attempts: u32 },
    #[error("bank {bank} is insolvent on the sampled network (equity {equity})")]
    InsolventAfterSampling { bank: usize, equity: f64 },
    #[error("malformed matrix dump: {0}")]
    MatrixFormat(String),
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("bank {0} is not alive")]
    DeadBank(usize),
    #[error("bank index {0} out of range")]
    BadIndex(usize),
    #[error("invalid ledger: {0}")]
    InvalidLedger(String),
    #[error("no alive bank to shock")]
    NoTarget,
    #[error("equity bookkeeping diverged for bank {bank}: tracked {tracked}, ledger {ledger}")]
    EquityDivergence { bank: usize, tracked: f64, ledger: f64 },
    #[error("initial total equity must be positive, got {0}")]
    NonPositiveEquity(f64),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Reconstruction(#[from] ReconstructionError),
}

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("realization {index} failed: {source}")]
    Realization {
        index: u64,
        #[source]
        source: SimulationError,
    },
    #[error("realization {index} panicked: {message}")]
    Panic { index: u64, message: String },
    #[error("need at least one realization")]
    Empty,
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("empty series")]
    EmptySeries,
}
