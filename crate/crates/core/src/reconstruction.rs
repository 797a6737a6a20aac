//! Bilateral exposure reconstruction from aggregate interbank marginals.
//!
//! Topology comes from a fitness model: lender `i` has fitness `x_i` (its
//! interbank assets), borrower `j` has fitness `y_j` (its interbank
//! liabilities), and the link `i -> j` exists with probability
//!
//! ```text
//! p_ij = z x_i y_j / (1 + z x_i y_j)
//! ```
//!
//! with `z` tuned so the expected density hits the target. A realized link gets
//! the degree-corrected gravity weight `x_i y_j / (W p_ij)`, `W = sum_i x_i`,
//! and proportional fitting then aligns realized row and column sums with the
//! marginals.

use std::io::{BufRead, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{ReconstructionError, SimulationError};
use crate::ingest::marginal_imbalance;
use crate::ledger::{BankRecord, MarketState};

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionConfig {
    /// Target density `links / (N (N - 1))`.
    pub density: f64,
    pub seed: u64,
    pub max_calibration_iters: u32,
    /// Absolute tolerance on the expected density.
    pub density_tolerance: f64,
    pub ipf_max_iters: u32,
    /// Convergence threshold on the largest relative scaling change.
    pub ipf_tolerance: f64,
    /// Largest accepted relative error of a realized marginal.
    pub marginal_tolerance: f64,
    pub isolation_retries: u32,
    /// Whole-network redraws allowed when fitting misses `marginal_tolerance`.
    pub resample_attempts: u32,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            density: 0.1,
            seed: 0,
            max_calibration_iters: 200,
            density_tolerance: 1e-9,
            ipf_max_iters: 100,
            ipf_tolerance: 1e-6,
            marginal_tolerance: 0.01,
            isolation_retries: 1000,
            resample_attempts: 50,
        }
    }
}

impl ReconstructionConfig {
    pub fn with_density(density: f64) -> Self {
        Self {
            density,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<(), ReconstructionError> {
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(ReconstructionError::Config(format!(
                "density {} outside (0, 1]",
                self.density
            )));
        }
        if !(self.density_tolerance > 0.0) || !(self.marginal_tolerance > 0.0) {
            return Err(ReconstructionError::Config("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Calibrated fitness model. `z == +inf` means every pair with positive
/// fitness product is linked with certainty.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessModel {
    pub z: f64,
    lender_fitness: Vec<f64>,
    borrower_fitness: Vec<f64>,
}

impl FitnessModel {
    pub fn len(&self) -> usize {
        self.lender_fitness.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lender_fitness.is_empty()
    }

    pub fn probability(&self, lender: usize, borrower: usize) -> f64 {
        if lender == borrower {
            return 0.0;
        }
        link_probability(
            self.z.ln(),
            self.lender_fitness[lender],
            self.borrower_fitness[borrower],
        )
    }

    /// Expected density `sum_{i != j} p_ij / (N (N - 1))`.
    pub fn expected_density(&self) -> f64 {
        expected_density(self.z.ln(), &self.lender_fitness, &self.borrower_fitness)
    }
}

fn link_probability(ln_z: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 || y <= 0.0 {
        return 0.0;
    }
    if ln_z == f64::INFINITY {
        return 1.0;
    }
    // logistic of ln(z x y); stays finite for any magnitude of the fitnesses
    let s = ln_z + x.ln() + y.ln();
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

fn expected_density(ln_z: f64, x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        for (j, &yj) in y.iter().enumerate() {
            if i != j {
                total += link_probability(ln_z, xi, yj);
            }
        }
    }
    total / (n * (n - 1)) as f64
}

/// Solves for `z` by bisection on `ln z`; expected density is strictly
/// increasing in `z`.
pub fn calibrate_z(records: &[BankRecord], config: &ReconstructionConfig) -> Result<FitnessModel, ReconstructionError> {
    config.validate()?;
    let (x, y) = fitnesses(records);
    calibrate_fitness(x, y, config)
}

fn calibrate_fitness(
    x: Vec<f64>,
    y: Vec<f64>,
    config: &ReconstructionConfig,
) -> Result<FitnessModel, ReconstructionError> {
    let n = x.len();
    let mut min_s = f64::INFINITY;
    let mut max_s = f64::NEG_INFINITY;
    let mut positive_pairs = 0usize;
    for (i, &xi) in x.iter().enumerate() {
        for (j, &yj) in y.iter().enumerate() {
            if i != j && xi > 0.0 && yj > 0.0 {
                let s = xi.ln() + yj.ln();
                min_s = min_s.min(s);
                max_s = max_s.max(s);
                positive_pairs += 1;
            }
        }
    }
    if positive_pairs == 0 {
        return Err(ReconstructionError::NoPositivePairs);
    }
    let target = config.density;
    let max = positive_pairs as f64 / (n * (n - 1)) as f64;
    if target >= max - config.density_tolerance {
        if target <= max + config.density_tolerance {
            return Ok(FitnessModel {
                z: f64::INFINITY,
                lender_fitness: x,
                borrower_fitness: y,
            });
        }
        return Err(ReconstructionError::DensityUnreachable { target, max });
    }

    // at lo every p < e^-40, at hi every p > 1 - e^-40
    let mut lo = -max_s - 40.0;
    let mut hi = -min_s + 40.0;
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..config.max_calibration_iters {
        mid = 0.5 * (lo + hi);
        let f = expected_density(mid, &x, &y);
        if (f - target).abs() <= config.density_tolerance {
            break;
        }
        if f < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(FitnessModel {
        z: mid.exp(),
        lender_fitness: x,
        borrower_fitness: y,
    })
}

/// Lender and borrower fitnesses. Borrower marginals are rescaled so that the
/// two sides have the same total, which proportional fitting requires.
fn fitnesses(records: &[BankRecord]) -> (Vec<f64>, Vec<f64>) {
    let x: Vec<f64> = records.iter().map(|r| r.interbank_assets).collect();
    let mut y: Vec<f64> = records.iter().map(|r| r.interbank_liabilities).collect();
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    if sx != sy && sy > 0.0 {
        if marginal_imbalance(records) > crate::ingest::MARGINAL_WARN_THRESHOLD {
            log::warn!("rescaling interbank liabilities by {:.6} to close the market", sx / sy);
        }
        let k = sx / sy;
        y.iter_mut().for_each(|v| *v *= k);
    }
    (x, y)
}

/// Reusable sampler: calibrates once, then draws independent networks.
#[derive(Debug, Clone)]
pub struct NetworkSampler {
    model: FitnessModel,
    probabilities: Vec<f64>,
    config: ReconstructionConfig,
    total_weight: f64,
}

impl NetworkSampler {
    pub fn new(records: &[BankRecord], config: &ReconstructionConfig) -> Result<Self, ReconstructionError> {
        let model = calibrate_z(records, config)?;
        let n = model.len();
        check_closable(&model.lender_fitness, &model.borrower_fitness)?;
        let mut probabilities = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                probabilities[i * n + j] = model.probability(i, j);
            }
        }
        let total_weight = model.lender_fitness.iter().sum();
        Ok(Self {
            model,
            probabilities,
            config: config.clone(),
            total_weight,
        })
    }

    pub fn model(&self) -> &FitnessModel {
        &self.model
    }

    pub fn config(&self) -> &ReconstructionConfig {
        &self.config
    }

    /// Draws a row-major matrix of face-value exposures.
    ///
    /// If every redraw misses the marginal tolerance (tiny or very sparse
    /// markets, where the drawn support cannot carry the marginals), the last
    /// draw is densified: the most probable missing link on the worst-fitting
    /// line is added until fitting succeeds. The complete graph always fits.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>, ReconstructionError> {
        let mut adj = Vec::new();
        for _ in 0..self.config.resample_attempts.max(1) {
            adj = self.draw_adjacency(rng)?;
            if let Some(m) = self.fit(&adj) {
                return Ok(m);
            }
        }
        let mut added = 0usize;
        while self.densify(&mut adj) {
            added += 1;
            if let Some(m) = self.fit(&adj) {
                log::debug!("marginals matched after adding {added} links");
                return Ok(m);
            }
        }
        Err(ReconstructionError::MarginalMismatch {
            tolerance: self.config.marginal_tolerance,
            attempts: self.config.resample_attempts,
        })
    }

    fn fit(&self, adj: &[f64]) -> Option<Vec<f64>> {
        let mut m = adj.to_vec();
        self.assign_weights(&mut m);
        let err = fit_marginals(
            &mut m,
            &self.model.lender_fitness,
            &self.model.borrower_fitness,
            self.config.ipf_max_iters,
            self.config.ipf_tolerance,
        );
        (err <= self.config.marginal_tolerance).then_some(m)
    }

    /// Adds one link on the row or column whose fitted sum is furthest from
    /// its marginal. Returns false once nothing can be added.
    fn densify(&self, adj: &mut [f64]) -> bool {
        let n = self.model.len();
        let x = &self.model.lender_fitness;
        let y = &self.model.borrower_fitness;
        let mut m = adj.to_vec();
        self.assign_weights(&mut m);
        fit_marginals(&mut m, x, y, self.config.ipf_max_iters, self.config.ipf_tolerance);
        let rel = |got: f64, want: f64| if want > 0.0 { (got - want).abs() / want } else { 0.0 };
        // (error, is_row, index) of every line that still has a free slot
        let mut lines: Vec<(f64, bool, usize)> = Vec::with_capacity(2 * n);
        for i in 0..n {
            let r: f64 = m[i * n..(i + 1) * n].iter().sum();
            lines.push((rel(r, x[i]), true, i));
            let c: f64 = (0..n).map(|k| m[k * n + i]).sum();
            lines.push((rel(c, y[i]), false, i));
        }
        lines.sort_by(|a, b| b.0.total_cmp(&a.0));
        for (_, is_row, i) in lines {
            let candidates = (0..n)
                .filter(|&k| k != i)
                .map(|k| if is_row { i * n + k } else { k * n + i });
            let best = candidates
                .filter(|&e| adj[e] == 0.0 && self.probabilities[e] > 0.0)
                .max_by(|&a, &b| self.probabilities[a].total_cmp(&self.probabilities[b]));
            if let Some(e) = best {
                adj[e] = 1.0;
                return true;
            }
        }
        false
    }

    /// 0/1 adjacency, re-drawing empty rows and columns of banks that have a
    /// positive marginal. Re-drawing an empty line only ever adds links.
    fn draw_adjacency<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>, ReconstructionError> {
        let n = self.model.len();
        let p = &self.probabilities;
        let mut adj = vec![0.0; n * n];
        for (a, &pij) in adj.iter_mut().zip(p) {
            if pij > 0.0 && rng.gen::<f64>() < pij {
                *a = 1.0;
            }
        }
        let retries = self.config.isolation_retries;
        for i in 0..n {
            if self.model.lender_fitness[i] <= 0.0 || adj[i * n..(i + 1) * n].iter().any(|&a| a > 0.0) {
                continue;
            }
            let mut ok = false;
            for _ in 0..retries {
                for j in 0..n {
                    if p[i * n + j] > 0.0 && rng.gen::<f64>() < p[i * n + j] {
                        adj[i * n + j] = 1.0;
                        ok = true;
                    }
                }
                if ok {
                    break;
                }
            }
            if !ok {
                return Err(ReconstructionError::Isolated { bank: i, retries });
            }
        }
        for j in 0..n {
            if self.model.borrower_fitness[j] <= 0.0 || (0..n).any(|i| adj[i * n + j] > 0.0) {
                continue;
            }
            let mut ok = false;
            for _ in 0..retries {
                for i in 0..n {
                    if p[i * n + j] > 0.0 && rng.gen::<f64>() < p[i * n + j] {
                        adj[i * n + j] = 1.0;
                        ok = true;
                    }
                }
                if ok {
                    break;
                }
            }
            if !ok {
                return Err(ReconstructionError::Isolated { bank: j, retries });
            }
        }
        Ok(adj)
    }

    fn assign_weights(&self, adj: &mut [f64]) {
        let n = self.model.len();
        let x = &self.model.lender_fitness;
        let y = &self.model.borrower_fitness;
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                if adj[k] > 0.0 {
                    adj[k] = x[i] * y[j] / (self.total_weight * self.probabilities[k]);
                }
            }
        }
    }
}

/// A zero-diagonal matrix with these row and column sums exists iff no bank's
/// lending plus borrowing exceeds the total volume.
pub fn check_closable(rows: &[f64], cols: &[f64]) -> Result<(), ReconstructionError> {
    let total: f64 = rows.iter().sum();
    for (i, (x, y)) in rows.iter().zip(cols).enumerate() {
        let share = (x + y) / total;
        if share > 1.0 + 1e-12 {
            return Err(ReconstructionError::Unclosable { bank: i, share });
        }
    }
    Ok(())
}

/// Iterative proportional fitting of a non-negative matrix to the given row
/// and column sums. Returns the largest relative marginal error afterwards.
pub fn fit_marginals(m: &mut [f64], rows: &[f64], cols: &[f64], max_iters: u32, tolerance: f64) -> f64 {
    let n = rows.len();
    let mut col_sums = vec![0.0; n];
    for _ in 0..max_iters {
        let mut max_change: f64 = 0.0;
        for i in 0..n {
            let row = &mut m[i * n..(i + 1) * n];
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                let f = rows[i] / s;
                max_change = max_change.max((f - 1.0).abs());
                row.iter_mut().for_each(|v| *v *= f);
            }
        }
        col_sums.fill(0.0);
        for i in 0..n {
            for (c, v) in col_sums.iter_mut().zip(&m[i * n..(i + 1) * n]) {
                *c += v;
            }
        }
        let factors: Vec<f64> = col_sums
            .iter()
            .zip(cols)
            .map(|(&s, &t)| if s > 0.0 { t / s } else { 1.0 })
            .collect();
        for f in &factors {
            max_change = max_change.max((f - 1.0).abs());
        }
        for i in 0..n {
            for (v, f) in m[i * n..(i + 1) * n].iter_mut().zip(&factors) {
                *v *= f;
            }
        }
        if max_change <= tolerance {
            break;
        }
    }
    marginal_error(m, rows, cols)
}

/// Largest relative deviation of realized row/column sums from targets.
pub fn marginal_error(m: &[f64], rows: &[f64], cols: &[f64]) -> f64 {
    let n = rows.len();
    let mut worst: f64 = 0.0;
    let rel = |got: f64, want: f64| {
        if want > 0.0 {
            (got - want).abs() / want
        } else if got > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    };
    for i in 0..n {
        let r: f64 = m[i * n..(i + 1) * n].iter().sum();
        worst = worst.max(rel(r, rows[i]));
        let c: f64 = (0..n).map(|k| m[k * n + i]).sum();
        worst = worst.max(rel(c, cols[i]));
    }
    worst
}

/// Builds a ledger from records and a face-value exposure matrix, pricing
/// interbank positions at `rate`.
pub fn build_state(records: &[BankRecord], face: &[f64], rate: f64) -> Result<MarketState, SimulationError> {
    let exposures: Vec<f64> = face.iter().map(|v| v * rate).collect();
    let state = MarketState::new(
        exposures,
        records.iter().map(|r| r.external_assets).collect(),
        records.iter().map(|r| r.external_liabilities).collect(),
        rate,
    )?;
    for i in 0..state.len() {
        let e = state.equity(i);
        if !(e > 0.0) {
            return Err(ReconstructionError::InsolventAfterSampling { bank: i, equity: e }.into());
        }
    }
    Ok(state)
}

/// Samples one network with `config.seed` and returns the initial ledger.
pub fn sample_network(
    records: &[BankRecord],
    config: &ReconstructionConfig,
    r0: f64,
) -> Result<MarketState, SimulationError> {
    let sampler = NetworkSampler::new(records, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let face = sampler.sample(&mut rng)?;
    build_state(records, &face, r0)
}

/// Writes `n=<N>` followed by N comma-separated rows.
pub fn write_matrix<W: Write>(mut w: W, n: usize, m: &[f64]) -> std::io::Result<()> {
    writeln!(w, "n={n}")?;
    for i in 0..n {
        let row: Vec<String> = m[i * n..(i + 1) * n].iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_matrix<R: BufRead>(r: R) -> Result<(usize, Vec<f64>), ReconstructionError> {
    let bad = |m: String| ReconstructionError::MatrixFormat(m);
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| bad("empty input".into()))?
        .map_err(|e| bad(e.to_string()))?;
    let n: usize = header
        .trim()
        .strip_prefix("n=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad(format!("bad header `{header}`")))?;
    let mut m = Vec::with_capacity(n * n);
    for (row, line) in lines.enumerate() {
        let line = line.map_err(|e| bad(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let before = m.len();
        for v in line.split(',') {
            m.push(
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("row {row}: bad value `{v}`")))?,
            );
        }
        if m.len() - before != n {
            return Err(bad(format!("row {row} has {} entries, expected {n}", m.len() - before)));
        }
    }
    if m.len() != n * n {
        return Err(bad(format!("expected {n} rows")));
    }
    Ok((n, m))
}
