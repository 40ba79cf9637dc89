//! Price a handful of payoffs on several lattice schemes and compare with
//! Black-Scholes.
//!
//!     cargo run --example price_payoffs -- 400

use binomial_convergence::harness::reference_price;
use binomial_convergence::lattice::{Lattice, Scheme};
use binomial_convergence::market::MarketParams;
use binomial_convergence::payoff;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(400);
    let m = MarketParams::new(100.0, 0.2, 0.05, 1.0)?;
    let ids = ["call:100", "put:95", "straddle:100", "digital_geq:105", "digital_gt:105", "butterfly:90,100,110", "powercall4:100"];
    let schemes = [Scheme::Crr, Scheme::JarrowRudd, Scheme::Tian, Scheme::Centered(100.0)];

    print!("{:<22} {:>14}", "payoff", "black-scholes");
    for s in &schemes {
        print!(" {:>16}", s.to_string());
    }
    println!();
    for id in ids {
        let f = payoff::from_id(id)?;
        let (bs, _) = reference_price(&m, &f, 1e-12)?;
        print!("{id:<22} {bs:>14.6}");
        for &s in &schemes {
            let lat = Lattice::build(&m, n, s)?;
            print!(" {:>16.6}", lat.price(&f));
        }
        println!();
    }
    println!("\n(n = {n} periods)");
    Ok(())
}
