#![allow(dead_code)]

use interbank::{MarketState, Parameters};
use rand::Rng;

/// Equity recomputed entry by entry from the ledger.
pub fn brute_equity(s: &MarketState, i: usize) -> f64 {
    if !s.is_alive(i) {
        return 0.0;
    }
    let n = s.len();
    let mut lent = 0.0;
    let mut borrowed = 0.0;
    for j in 0..n {
        lent += s.exposure(i, j);
        borrowed += s.exposure(j, i);
    }
    s.external_assets(i) - s.external_liabilities(i) + lent - borrowed
}

pub fn brute_net(s: &MarketState, i: usize) -> f64 {
    (0..s.len()).map(|j| s.exposure(i, j) - s.exposure(j, i)).sum()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Parameters with no rate drift or noise.
pub fn quiet() -> Parameters {
    Parameters {
        phi: 1.0,
        alpha: 0.0,
        sigma: 0.0,
        delta: 0.0,
        ..Default::default()
    }
}

pub fn matrix(n: usize, entries: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for &(l, b, v) in entries {
        m[l * n + b] = v;
    }
    m
}

/// Hub 0 with leaves 1..=3. The hub owes 2 to bank 1 and 3 to bank 2 and
/// lends 1 to bank 2 and 4 to bank 3; it starts insolvent (E = -9).
pub fn star() -> MarketState {
    let m = matrix(4, &[(1, 0, 2.0), (2, 0, 3.0), (0, 2, 1.0), (0, 3, 4.0)]);
    MarketState::new(m, vec![1.0, 20.0, 20.0, 20.0], vec![10.0, 10.0, 10.0, 10.0], 1.0).unwrap()
}

/// Bank 1 lends 5 to bank 0, bank 2 lends 5 to bank 1, bank 0 lends 1 to
/// bank 2. Bank 0 starts insolvent; its default pushes bank 1 under.
pub fn chain() -> MarketState {
    let m = matrix(3, &[(1, 0, 5.0), (2, 1, 5.0), (0, 2, 1.0)]);
    MarketState::new(m, vec![1.0, 10.0, 20.0], vec![10.0, 8.0, 10.0], 1.0).unwrap()
}

/// Bank 0 lends 4 to bank 1, bank 1 lends 1 to bank 2. Equities 6, 3, 4.
pub fn net_debtor_market() -> MarketState {
    let m = matrix(3, &[(0, 1, 4.0), (1, 2, 1.0)]);
    MarketState::new(m, vec![10.0, 10.0, 10.0], vec![8.0, 4.0, 5.0], 1.0).unwrap()
}

/// A random solvent market with `2..=max_n` banks, rate in `[0.5, 2]`.
pub fn random_market<R: Rng>(rng: &mut R, max_n: usize) -> MarketState {
    let n = rng.gen_range(2..=max_n);
    let rate = rng.gen_range(0.5..2.0);
    let mut m = vec![0.0; n * n];
    for l in 0..n {
        for b in 0..n {
            if l != b && rng.gen_bool(0.6) {
                m[l * n + b] = rng.gen_range(0.1..10.0);
            }
        }
    }
    let mut ea = Vec::with_capacity(n);
    let mut el = Vec::with_capacity(n);
    for i in 0..n {
        let lent: f64 = m[i * n..(i + 1) * n].iter().sum();
        let borrowed: f64 = (0..n).map(|k| m[k * n + i]).sum();
        let a_ext: f64 = rng.gen_range(20.0..200.0);
        let leverage: f64 = rng.gen_range(2.0..20.0);
        let equity = (a_ext + lent) / leverage;
        // liabilities implied by the target equity, topped up if needed
        let mut l_ext = a_ext + lent - borrowed - equity;
        let mut a = a_ext;
        if l_ext < 0.0 {
            a -= l_ext;
            l_ext = 0.0;
        }
        ea.push(a);
        el.push(l_ext);
    }
    MarketState::new(m, ea, el, rate).unwrap()
}
