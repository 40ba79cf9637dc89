//! Centering the lattice on the strike removes the oscillating 1/√n term
//! of the digital error.

use binomial_convergence::analytic::bs_digital;
use binomial_convergence::expansion::expansion_terms;
use binomial_convergence::lattice::{lambda_centered, Lattice, Scheme};
use binomial_convergence::market::MarketParams;
use binomial_convergence::payoff::DigitalConvention;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = MarketParams::default();
    let k = 95.0;
    let bs = bs_digital(&m, k);
    println!("{:>6} {:>10} {:>14} {:>10} {:>14}", "n", "CRR Δn", "CRR error", "λ", "centered error");
    for n in (100..=1000).step_by(100) {
        let crr = Lattice::build(&m, n, Scheme::Crr)?;
        let centered = Lattice::build(&m, n, Scheme::Centered(k))?;
        let t = expansion_terms(&m, &crr.spec, k)?;
        println!(
            "{n:>6} {:>10.4} {:>14.6e} {:>10.4} {:>14.6e}",
            t.delta_n,
            crr.digital(k, DigitalConvention::Weak) - bs,
            lambda_centered(k, &m, n)?,
            centered.digital(k, DigitalConvention::Weak) - bs
        );
    }
    Ok(())
}
