//! The digital and call representation formulas on three kinds of price
//! curve: a lattice (where the formula is exact), Black-Scholes, and a table.

use binomial_convergence::analytic::{bs_digital, bs_price_payoff_oracle};
use binomial_convergence::lattice::{Lattice, Scheme};
use binomial_convergence::market::MarketParams;
use binomial_convergence::payoff;
use binomial_convergence::repform::{price_via_calls, price_via_digitals, DigitalCurve, TabulatedCurve, LATTICE_TOL, QUADRATURE_TOL};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = MarketParams::default();
    let f = payoff::power_call4(100.0)?;
    let k = payoff::butterfly(90.0, 100.0, 110.0)?;

    println!("lattice curve (exact):");
    for n in [3, 101, 500] {
        let lat = Lattice::build(&m, n, Scheme::Tian)?;
        let curve = DigitalCurve::Lattice(&lat);
        for p in [&f, &k] {
            let direct = lat.price(p);
            let via = price_via_digitals(&curve, p, LATTICE_TOL)?;
            println!("  n={n:<4} {:<22} direct {direct:>16.10} digitals {via:>16.10} diff {:.1e}", p.name(), via - direct);
        }
    }

    println!("\nblack-scholes curve:");
    for p in [&f, &k] {
        let oracle = bs_price_payoff_oracle(&m, p, 1e-12)?;
        let d = price_via_digitals(&DigitalCurve::Bs(m), p, QUADRATURE_TOL)?;
        let c = price_via_calls(&DigitalCurve::Bs(m), p, QUADRATURE_TOL)?;
        println!("  {:<22} oracle {oracle:.10} digitals {d:.10} calls {c:.10}", p.name());
    }

    println!("\ntabulated curve (strikes 1..300, linear interpolation):");
    let pairs: Vec<(f64, f64)> = (1..=300).map(|i| (i as f64, bs_digital(&m, i as f64))).collect();
    let table = TabulatedCurve::new(m.discount(), &pairs)?;
    let curve = DigitalCurve::Tabulated(&table);
    for id in ["call:100", "digital_gt:100.5", "butterfly:90,100,110"] {
        let p = payoff::from_id(id)?;
        let v = price_via_digitals(&curve, &p, QUADRATURE_TOL)?;
        let bs = bs_price_payoff_oracle(&m, &p, 1e-12)?;
        println!("  {id:<22} table {v:.6} black-scholes {bs:.6}");
    }
    match price_via_digitals(&curve, &payoff::digital_geq(300.0)?, QUADRATURE_TOL) {
        Err(e) => println!("  digital at the table's last strike: {e}"),
        Ok(v) => println!("  digital at the table's last strike: {v}"),
    }
    Ok(())
}
