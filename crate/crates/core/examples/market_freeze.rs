//! Drives a small market below the freeze threshold and prints the terminal
//! liquidation: residual debts, the terminal depricing factor and final
//! equities.

use interbank::dynamics::{apply_exogenous_shock, check_and_resolve_freeze};
use interbank::{MarketState, Parameters};

fn main() -> anyhow::Result<()> {
    // 0 lends 4 to 1, 1 lends 1 to 2
    let n = 3;
    let mut m = vec![0.0; n * n];
    m[1] = 4.0;
    m[n + 2] = 1.0;
    let mut s = MarketState::new(m, vec![10.0, 10.0, 10.0], vec![8.0, 4.0, 5.0], 1.0)?;
    let params = Parameters {
        eps_c: 0.9,
        ..Default::default()
    };

    // external losses push relative equity under eps_c
    let before = s.total_equity();
    for i in 0..n {
        apply_exogenous_shock(&mut s, i, 0.8)?;
    }
    println!("relative equity {:.4}", s.total_equity() / before);
    match check_and_resolve_freeze(&mut s, &params, Some(0.25)) {
        Some(f) => {
            println!("chi {:?}", f.chi);
            println!("gamma(t_c) {} -> Gamma_c {:.6}", f.gamma_tc, f.gamma_c);
            println!("final equities {:?}", f.final_equities);
        }
        None => println!("no freeze"),
    }
    Ok(())
}
