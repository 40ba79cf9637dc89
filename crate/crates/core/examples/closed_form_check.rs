//! Cross-check of the CRR call expansion against the classical closed-form
//! CRR call error for S₀ = 1, T = 1.

use binomial_convergence::expansion::{crr_predicted_call_error, diener_crr_call_error};
use binomial_convergence::market::MarketParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = MarketParams::new(1.0, 0.2, 0.05, 1.0)?;
    for strike in [0.9, 1.0, 1.1] {
        for n in [100, 1000, 10_000] {
            let classic = diener_crr_call_error(&m, n, strike)?;
            let general = crr_predicted_call_error(&m, n, strike)?;
            println!("K={strike:<4} n={n:<6} closed form {classic:>14.6e} expansion {general:>14.6e} diff {:.1e}", classic - general);
        }
    }
    Ok(())
}
