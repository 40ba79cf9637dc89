//! The composite estimator on centered lattices converges monotonically at
//! order 1/n, which makes Richardson extrapolation effective.
//!
//!     cargo run --release --example smooth_convergence

use std::collections::BTreeMap;

use binomial_convergence::analytic::bs_price_payoff_oracle;
use binomial_convergence::composite::{richardson, smooth_constant_of, smooth_estimate, DEFAULT_ALPHA};
use binomial_convergence::lattice::{Lattice, Scheme};
use binomial_convergence::market::MarketParams;
use binomial_convergence::payoff;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = MarketParams::default();
    let f = payoff::power_call4(100.0)?;
    let bs = bs_price_payoff_oracle(&m, &f, 1e-12)?;
    let c = smooth_constant_of(&m, &f)?;
    println!("payoff {}, black-scholes {bs:.4}, predicted n·error → {c:.6e}\n", f.name());
    println!("{:>6} {:>16} {:>14} {:>16}", "n", "composite", "n·error", "CRR n·error");
    let mut values = BTreeMap::new();
    for n in [200, 400, 800, 1600] {
        let est = smooth_estimate(&m, &f, n, DEFAULT_ALPHA)?;
        let crr = Lattice::build(&m, n, Scheme::Crr)?.price(&f);
        println!("{n:>6} {:>16.6} {:>14.6e} {:>16.6e}", est.value, n as f64 * (est.value - bs), n as f64 * (crr - bs));
        values.insert(n, est.value);
    }
    let ex = richardson(&values, 1.0)?;
    println!();
    for (n, v) in &ex.values {
        println!("richardson ({n}, {}) {v:.6} error {:.3e}", 2 * n, v - bs);
    }
    Ok(())
}
