//! Choice of the bank hit by the exogenous shock.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::SimulationError;
use crate::ledger::MarketState;

/// Fixed-target selector, re-resolved over alive banks every round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Selector {
    /// Largest total assets.
    AMax,
    AMin,
    /// Highest leverage `A/E`.
    BMax,
    BMin,
    /// Most bilateral contracts.
    KMax,
    KMin,
    /// A given bank; once it is dead the next alive index (cyclically) is used.
    Index(usize),
}

impl Selector {
    pub const NAMED: [Selector; 6] = [
        Selector::AMax,
        Selector::AMin,
        Selector::BMax,
        Selector::BMin,
        Selector::KMax,
        Selector::KMin,
    ];

    /// Resolves to an alive bank; ties go to the lowest index.
    pub fn resolve(&self, state: &MarketState) -> Option<usize> {
        let metric = |i: usize| -> f64 {
            match self {
                Selector::AMax | Selector::AMin => state.total_assets(i),
                Selector::BMax | Selector::BMin => {
                    let e = state.equity(i);
                    if e > 0.0 {
                        state.total_assets(i) / e
                    } else {
                        f64::INFINITY
                    }
                }
                Selector::KMax | Selector::KMin => state.contract_count(i) as f64,
                Selector::Index(_) => 0.0,
            }
        };
        let maximize = matches!(self, Selector::AMax | Selector::BMax | Selector::KMax);
        match self {
            Selector::Index(k) => {
                let n = state.len();
                (0..n).map(|d| (k + d) % n).find(|&i| state.is_alive(i))
            }
            _ => {
                let mut best: Option<(usize, f64)> = None;
                for i in state.alive_indices() {
                    let v = metric(i);
                    let better = match best {
                        None => true,
                        Some((_, b)) => {
                            if maximize {
                                v > b
                            } else {
                                v < b
                            }
                        }
                    };
                    if better {
                        best = Some((i, v));
                    }
                }
                best.map(|(i, _)| i)
            }
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::AMax => f.write_str("A_max"),
            Selector::AMin => f.write_str("A_min"),
            Selector::BMax => f.write_str("B_max"),
            Selector::BMin => f.write_str("B_min"),
            Selector::KMax => f.write_str("K_max"),
            Selector::KMin => f.write_str("K_min"),
            Selector::Index(i) => write!(f, "index:{i}"),
        }
    }
}

impl FromStr for Selector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "A_max" => Selector::AMax,
            "A_min" => Selector::AMin,
            "B_max" => Selector::BMax,
            "B_min" => Selector::BMin,
            "K_max" => Selector::KMax,
            "K_min" => Selector::KMin,
            other => match other.strip_prefix("index:") {
                Some(i) => Selector::Index(i.parse().map_err(|_| format!("bad index in `{other}`"))?),
                None => return Err(format!("unknown selector `{other}`")),
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShockPolicy {
    Fixed(Selector),
    /// Uniformly random alive bank each round.
    RandomEachStep,
}

impl ShockPolicy {
    pub fn select<R: Rng + ?Sized>(&self, state: &MarketState, rng: &mut R) -> Result<usize, SimulationError> {
        match self {
            ShockPolicy::Fixed(sel) => sel.resolve(state).ok_or(SimulationError::NoTarget),
            ShockPolicy::RandomEachStep => {
                let alive: Vec<usize> = state.alive_indices().collect();
                if alive.is_empty() {
                    return Err(SimulationError::NoTarget);
                }
                Ok(alive[rng.gen_range(0..alive.len())])
            }
        }
    }
}

impl fmt::Display for ShockPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShockPolicy::Fixed(s) => s.fmt(f),
            ShockPolicy::RandomEachStep => f.write_str("random"),
        }
    }
}

impl FromStr for ShockPolicy {
    type Err = String;

    /// `random` or any selector name (`A_max`, ..., `index:7`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim() == "random" {
            Ok(ShockPolicy::RandomEachStep)
        } else {
            s.parse().map(ShockPolicy::Fixed)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn market() -> MarketState {
        // bank 0: big, low leverage; bank 1: small, high leverage; bank 2: hub
        let mut m = vec![0.0; 9];
        m[2] = 1.0; // 0 -> 2
        m[5] = 1.0; // 1 -> 2
        m[6] = 1.0; // 2 -> 0
        m[7] = 0.5; // 2 -> 1
        MarketState::new(m, vec![100.0, 10.0, 20.0], vec![50.0, 10.0, 18.0], 1.0).unwrap()
    }

    #[test]
    fn selectors_pick_expected_banks() {
        let s = market();
        assert_eq!(Selector::AMax.resolve(&s), Some(0));
        assert_eq!(Selector::AMin.resolve(&s), Some(1));
        // leverages: 0 -> 101/50, 1 -> 11/0.5, 2 -> 21.5/1.5
        assert_eq!(Selector::BMax.resolve(&s), Some(1));
        assert_eq!(Selector::BMin.resolve(&s), Some(0));
        assert_eq!(Selector::KMax.resolve(&s), Some(2));
        // banks 0 and 1 both have two contracts; lowest index wins
        assert_eq!(Selector::KMin.resolve(&s), Some(0));
    }

    #[test]
    fn dead_banks_are_skipped() {
        let mut s = market();
        s.remove_bank(0);
        assert_eq!(Selector::AMax.resolve(&s), Some(2));
        assert_eq!(Selector::Index(0).resolve(&s), Some(1));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            assert_ne!(ShockPolicy::RandomEachStep.select(&s, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn names_round_trip() {
        for sel in Selector::NAMED {
            assert_eq!(sel.to_string().parse::<Selector>().unwrap(), sel);
        }
        assert_eq!("random".parse::<ShockPolicy>().unwrap(), ShockPolicy::RandomEachStep);
        assert_eq!(
            "index:3".parse::<ShockPolicy>().unwrap(),
            ShockPolicy::Fixed(Selector::Index(3))
        );
        assert!("C_max".parse::<ShockPolicy>().is_err());
    }
}
