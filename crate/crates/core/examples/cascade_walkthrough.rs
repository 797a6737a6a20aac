//! Walks through a default cascade on a four-bank star: the insolvent hub
//! fails and its creditors and borrowers take credit and funding losses.

use interbank::dynamics::propagate_default;
use interbank::{MarketState, Parameters};

fn main() -> anyhow::Result<()> {
    let n = 4;
    let mut m = vec![0.0; n * n];
    m[n] = 2.0; // 1 lends 2 to the hub
    m[2 * n] = 3.0; // 2 lends 3 to the hub
    m[2] = 1.0; // the hub lends 1 to 2
    m[3] = 4.0; // and 4 to 3
    let mut s = MarketState::new(m, vec![1.0, 20.0, 20.0, 20.0], vec![10.0, 10.0, 10.0, 10.0], 1.0)?;
    println!("before: equities {:?}", s.equities().0);

    let params = Parameters {
        phi: 1.0,
        ..Default::default()
    };
    let out = propagate_default(&mut s, 0, &params)?;
    println!("defaulted in order {:?}", out.defaulted);
    println!("gamma per default {:?}", out.gamma_series);
    println!("losses {:?}", out.losses);
    println!("delta E {}", out.delta_e);
    println!("after: equities {:?}", s.equities().0);
    Ok(())
}
