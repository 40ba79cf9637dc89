//! Actual lattice errors against the predicted expansion for digitals and
//! calls; the residual shrinks like n^{-3/2}.

use binomial_convergence::analytic::{bs_call, bs_digital};
use binomial_convergence::expansion::{expansion_terms, predicted_call_error, predicted_digital_error};
use binomial_convergence::lattice::{Lattice, Scheme};
use binomial_convergence::market::MarketParams;
use binomial_convergence::payoff::DigitalConvention;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = MarketParams::default();
    let strike = 95.0;
    println!("CRR, strike {strike}");
    println!("{:>6} {:>8} {:>14} {:>14} {:>12} {:>14} {:>14} {:>12}", "n", "Δn", "digital err", "predicted", "n^1.5·resid", "call err", "predicted", "n^1.5·resid");
    for n in [100, 200, 400, 800, 1600, 3200] {
        let lat = Lattice::build(&m, n, Scheme::Crr)?;
        let t = expansion_terms(&m, &lat.spec, strike)?;
        let de = lat.digital(strike, DigitalConvention::Weak) - bs_digital(&m, strike);
        let dp = predicted_digital_error(&t, n, DigitalConvention::Weak);
        let ce = lat.call(strike) - bs_call(&m, strike);
        let cp = predicted_call_error(&t, n);
        let s = (n as f64).powf(1.5);
        println!(
            "{n:>6} {:>8.4} {de:>14.6e} {dp:>14.6e} {:>12.4} {ce:>14.6e} {cp:>14.6e} {:>12.4}",
            t.delta_n,
            s * (de - dp),
            s * (ce - cp)
        );
    }

    println!("\nstrike on a node (nodal lattice at 100): strict uses Δn − 2");
    for n in [100, 400, 1600] {
        let lat = Lattice::build(&m, n, Scheme::Nodal(100.0))?;
        let t = expansion_terms(&m, &lat.spec, 100.0)?;
        for conv in [DigitalConvention::Weak, DigitalConvention::Strict] {
            let e = lat.digital(100.0, conv) - bs_digital(&m, 100.0);
            let p = predicted_digital_error(&t, n, conv);
            println!("  n={n:<5} {conv:?}: error {e:>12.6e} predicted {p:>12.6e}");
        }
    }
    Ok(())
}
