//! Builds a three-bank ledger, prints balance sheets and shows how a rate
//! move revalues interbank positions.

use interbank::MarketState;

fn print(s: &MarketState) {
    println!("rate {:.4}", s.rate());
    for i in 0..s.len() {
        println!(
            "  bank {i}: A^E {:>6.2}  L^E {:>6.2}  lent {:>5.2}  borrowed {:>5.2}  E {:>6.3}",
            s.external_assets(i),
            s.external_liabilities(i),
            s.interbank_assets(i),
            s.interbank_liabilities(i),
            s.equity(i)
        );
    }
    println!("  relative equity {:.6}", s.total_relative_equity());
}

fn main() -> anyhow::Result<()> {
    // 0 lends 3 to 1, 1 lends 2 to 2, 2 lends 1 to 0
    let n = 3;
    let mut m = vec![0.0; n * n];
    m[1] = 3.0;
    m[n + 2] = 2.0;
    m[2 * n] = 1.0;
    let mut s = MarketState::new(m, vec![16.0, 10.0, 10.0], vec![10.0, 6.0, 5.0], 1.0)?;
    print(&s);

    // net lenders gain, net borrowers lose
    s.revalue(1.05);
    print(&s);
    Ok(())
}
