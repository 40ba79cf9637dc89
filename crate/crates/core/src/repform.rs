//! Option prices assembled from digital (or call) price curves.
//!
//! For a payoff with breakpoints `s_k` and a digital curve `V^D` (strict) /
//! `Ṽ^D` (weak):
//!
//! ```text
//! V^f = f(0)·e^{−rT} + ∫ f′(a) V^D(a) da + Σ Δ₋f(s_k) Ṽ^D(s_k) + Σ Δ₊f(s_k) V^D(s_k)
//! ```
//!
//! and, when f″ exists on every segment, with the call curve `C`:
//!
//! ```text
//! V^f = f(0)·e^{−rT} + ∫ f″(a) C(a) da + (same jump sums) + Σ (f′(s_k+) − f′(s_k−)) C(s_k)
//! ```
//!
//! On a lattice the strict digital curve is a step function, so the f′
//! integral is a finite sum of `level × (f(right−) − f(left+))` and the first
//! formula reproduces the terminal-distribution price to rounding.

use std::io::Read;
use std::path::Path;

use crate::analytic::{self, norm_cdf};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::market::MarketParams;
use crate::payoff::PiecewisePayoff;
use crate::quad::{self, QuadOptions};

/// Default tolerance for the exact lattice path.
pub const LATTICE_TOL: f64 = 1e-10;
/// Default tolerance for quadrature paths.
pub const QUADRATURE_TOL: f64 = 1e-8;

/// A digital curve given by a table of `(strike, price)` pairs.
///
/// Prices are interpolated linearly in strike, starting from `(0, e^{−rT})`.
/// The curve is zero beyond the last strike, so the last strike is the only
/// atom: its weak price is the tabulated value, its strict price zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCurve {
    discount: f64,
    strikes: Vec<f64>,
    prices: Vec<f64>,
}

impl TabulatedCurve {
    pub fn new(discount: f64, pairs: &[(f64, f64)]) -> Result<Self> {
        if !(discount > 0.0 && discount.is_finite()) {
            return Err(Error::InvalidArgument(format!("discount must be positive, got {discount}")));
        }
        if pairs.is_empty() {
            return Err(Error::Csv {
                row: 0,
                message: "table has no rows".into(),
            });
        }
        let mut prev_strike = 0.0;
        let mut prev_price = discount;
        for (i, &(k, v)) in pairs.iter().enumerate() {
            let row = i + 1;
            if !(k.is_finite() && k > prev_strike) {
                return Err(Error::Csv {
                    row,
                    message: format!("strike {k} must be positive and strictly increasing"),
                });
            }
            if !(v.is_finite() && v >= 0.0 && v <= prev_price) {
                return Err(Error::Csv {
                    row,
                    message: format!("price {v} must be non-negative and non-increasing (previous {prev_price})"),
                });
            }
            prev_strike = k;
            prev_price = v;
        }
        Ok(Self {
            discount,
            strikes: pairs.iter().map(|p| p.0).collect(),
            prices: pairs.iter().map(|p| p.1).collect(),
        })
    }

    /// Parse the two-column `strike,price` format. Row numbers in errors count
    /// data rows from 1.
    pub fn from_csv_reader<R: Read>(discount: f64, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Csv { row: 0, message: e.to_string() })?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["strike", "price"] {
            return Err(Error::Csv {
                row: 0,
                message: format!("header must be \"strike,price\", got {:?}", headers.iter().collect::<Vec<_>>().join(",")),
            });
        }
        let mut pairs = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| Error::Csv { row, message: e.to_string() })?;
            if rec.len() != 2 {
                return Err(Error::Csv {
                    row,
                    message: format!("expected 2 columns, got {}", rec.len()),
                });
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Csv { row, message: format!("not a number: {s:?}") })
            };
            pairs.push((num(&rec[0])?, num(&rec[1])?));
        }
        Self::new(discount, &pairs)
    }

    pub fn from_csv_path(discount: f64, path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::from_csv_reader(discount, file)
    }

    pub fn strikes(&self) -> &[f64] {
        &self.strikes
    }

    fn last_strike(&self) -> f64 {
        *self.strikes.last().expect("non-empty table")
    }

    pub fn strict(&self, a: f64) -> f64 {
        if a <= 0.0 {
            return self.discount;
        }
        if a >= self.last_strike() {
            return 0.0;
        }
        let i = self.strikes.partition_point(|&s| s <= a);
        let (x0, y0) = if i == 0 {
            (0.0, self.discount)
        } else {
            (self.strikes[i - 1], self.prices[i - 1])
        };
        let (x1, y1) = (self.strikes[i], self.prices[i]);
        y0 + (y1 - y0) * (a - x0) / (x1 - x0)
    }

    pub fn weak(&self, a: f64) -> f64 {
        if a == self.last_strike() {
            return *self.prices.last().expect("non-empty table");
        }
        self.strict(a)
    }

    /// ∫_a^∞ strict(x) dx, exact for the piecewise-linear interpolant.
    pub fn call(&self, a: f64) -> f64 {
        let a = a.max(0.0);
        let mut xs = vec![0.0];
        xs.extend_from_slice(&self.strikes);
        let mut ys = vec![self.discount];
        ys.extend_from_slice(&self.prices);
        let mut total = 0.0;
        for i in 0..xs.len() - 1 {
            let (x0, x1) = (xs[i], xs[i + 1]);
            if x1 <= a {
                continue;
            }
            let lo = x0.max(a);
            let (f_lo, f_hi) = (self.strict(lo), ys[i + 1]);
            total += 0.5 * (f_lo + f_hi) * (x1 - lo);
        }
        total
    }
}

/// Where digital prices come from.
#[derive(Debug, Clone, Copy)]
pub enum DigitalCurve<'a> {
    Bs(MarketParams),
    Lattice(&'a Lattice),
    Tabulated(&'a TabulatedCurve),
}

impl DigitalCurve<'_> {
    pub fn discount(&self) -> f64 {
        match self {
            DigitalCurve::Bs(m) => m.discount(),
            DigitalCurve::Lattice(l) => l.spec.discount(),
            DigitalCurve::Tabulated(t) => t.discount,
        }
    }

    /// Price of `1{X > a}`.
    pub fn strict(&self, a: f64) -> f64 {
        match self {
            DigitalCurve::Bs(m) => analytic::bs_digital(m, a),
            DigitalCurve::Lattice(l) => {
                if a <= 0.0 {
                    l.spec.discount()
                } else {
                    l.digital(a, crate::payoff::DigitalConvention::Strict)
                }
            }
            DigitalCurve::Tabulated(t) => t.strict(a),
        }
    }

    /// Price of `1{X ≥ a}`.
    pub fn weak(&self, a: f64) -> f64 {
        match self {
            DigitalCurve::Bs(m) => analytic::bs_digital(m, a),
            DigitalCurve::Lattice(l) => {
                if a <= 0.0 {
                    l.spec.discount()
                } else {
                    l.digital(a, crate::payoff::DigitalConvention::Weak)
                }
            }
            DigitalCurve::Tabulated(t) => t.weak(a),
        }
    }

    /// Call price `C(a) = ∫_a^∞ V^D(x) dx`.
    pub fn call(&self, a: f64) -> f64 {
        match self {
            DigitalCurve::Bs(m) => analytic::bs_call(m, a),
            DigitalCurve::Lattice(l) => l.call(a),
            DigitalCurve::Tabulated(t) => t.call(a),
        }
    }

    /// Strikes carrying an atom (weak ≠ strict) that are disallowed as payoff
    /// jump points. Lattice atoms are handled by the formula itself.
    fn forbidden_atoms(&self) -> Vec<f64> {
        match self {
            DigitalCurve::Tabulated(t) => vec![t.last_strike()],
            _ => Vec::new(),
        }
    }
}

fn check_common_jumps(curve: &DigitalCurve<'_>, payoff: &PiecewisePayoff) -> Result<()> {
    let atoms = curve.forbidden_atoms();
    for j in payoff.jumps() {
        if j.minus == 0.0 && j.plus == 0.0 {
            continue;
        }
        if atoms.iter().any(|&s| (s - j.at).abs() <= 1e-12 * s) {
            return Err(Error::CommonJump { strike: j.at });
        }
    }
    Ok(())
}

fn jump_terms(curve: &DigitalCurve<'_>, payoff: &PiecewisePayoff) -> f64 {
    payoff
        .jumps()
        .iter()
        .map(|j| j.minus * curve.weak(j.at) + j.plus * curve.strict(j.at))
        .sum()
}

/// Strike above which ∫ |f′|·V^D is below `eps`, from the slope bound and
/// partial moments of the lognormal law.
fn bs_upper_cutoff(m: &MarketParams, payoff: &PiecewisePayoff, eps: f64) -> f64 {
    let b = payoff.poly_bound().expect("validated payoff carries a bound");
    let mu = (m.rate - 0.5 * m.volatility * m.volatility) * m.maturity;
    let sd = m.total_vol();
    let at = |z: f64| m.spot * (mu + sd * z).exp();
    let moment = |q: f64, u: f64| {
        let full = m.spot.powf(q) * (q * mu + 0.5 * q * q * sd * sd).exp();
        full * norm_cdf(((m.spot / u).ln() + mu) / sd + q * sd)
    };
    let tail = |u: f64| m.discount() * (b.c1 * moment(1.0, u) + b.c2 / (b.p + 1.0) * moment(b.p + 1.0, u));
    let mut z = 6.0;
    while tail(at(z)) > eps && z < 38.0 {
        z += 0.5;
    }
    at(z)
}

fn quad_opts(tol: f64, scale: f64) -> QuadOptions {
    QuadOptions {
        abs_tol: 0.25 * tol * scale.max(1.0),
        rel_tol: 0.0,
        max_intervals: 200_000,
    }
}

/// Price via the digital-curve representation.
///
/// `tol` bounds the error relative to `max(1, |price|)`. Lattice curves take
/// the exact step-function path and ignore it.
pub fn price_via_digitals(curve: &DigitalCurve<'_>, payoff: &PiecewisePayoff, tol: f64) -> Result<f64> {
    payoff.validate_pi_class().into_result()?;
    check_common_jumps(curve, payoff)?;
    let base = payoff.eval(0.0) * curve.discount() + jump_terms(curve, payoff);

    let integral = match curve {
        DigitalCurve::Lattice(l) => {
            let top = *l.spec.terminal_prices.last().expect("n ≥ 1");
            let mut cuts: Vec<f64> = std::iter::once(0.0)
                .chain(l.spec.terminal_prices.iter().copied())
                .chain(payoff.breakpoints().iter().map(|b| b.at).filter(|&s| s < top))
                .collect();
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            cuts.windows(2)
                .map(|w| {
                    let level = curve.strict(0.5 * (w[0] + w[1]));
                    level * (payoff.left_limit(w[1]) - payoff.right_limit(w[0]))
                })
                .sum()
        }
        DigitalCurve::Bs(m) => {
            let rough = analytic::bs_call(m, m.spot).max(1.0);
            let upper = bs_upper_cutoff(m, payoff, 0.01 * tol * rough);
            let cuts: Vec<f64> = payoff.breakpoints().iter().map(|b| b.at).collect();
            quad::integrate(|a| payoff.derivative(a) * curve.strict(a), 0.0, upper, &cuts, quad_opts(tol, rough))?.value
        }
        DigitalCurve::Tabulated(t) => {
            let cuts: Vec<f64> = payoff
                .breakpoints()
                .iter()
                .map(|b| b.at)
                .chain(t.strikes.iter().copied())
                .collect();
            quad::integrate(
                |a| payoff.derivative(a) * curve.strict(a),
                0.0,
                t.last_strike(),
                &cuts,
                quad_opts(tol, 1.0),
            )?
            .value
        }
    };
    Ok(base + integral)
}

/// Price via the call-curve representation; needs f″ on every segment.
pub fn price_via_calls(curve: &DigitalCurve<'_>, payoff: &PiecewisePayoff, tol: f64) -> Result<f64> {
    payoff.validate_pi_class().into_result()?;
    if !payoff.has_second_derivative() {
        return Err(Error::MissingSecondDerivative);
    }
    check_common_jumps(curve, payoff)?;
    let kinks: f64 = payoff.kinks().iter().map(|&(s, k)| if k == 0.0 { 0.0 } else { k * curve.call(s) }).sum();
    let base = payoff.eval(0.0) * curve.discount() + jump_terms(curve, payoff) + kinks;

    let mut cuts: Vec<f64> = payoff.breakpoints().iter().map(|b| b.at).collect();
    let (upper, scale) = match curve {
        DigitalCurve::Lattice(l) => {
            cuts.extend_from_slice(&l.spec.terminal_prices);
            (*l.spec.terminal_prices.last().expect("n ≥ 1"), l.spec.market.spot)
        }
        DigitalCurve::Bs(m) => {
            let rough = analytic::bs_call(m, m.spot).max(1.0);
            let u = bs_upper_cutoff(m, payoff, 0.01 * tol * rough) * m.total_vol().exp();
            (u, rough)
        }
        DigitalCurve::Tabulated(t) => {
            cuts.extend_from_slice(&t.strikes);
            (t.last_strike(), 1.0)
        }
    };
    let integral = quad::integrate(
        |a| {
            let f2 = payoff.second_derivative(a).unwrap_or(0.0);
            if f2 == 0.0 {
                0.0
            } else {
                f2 * curve.call(a)
            }
        },
        0.0,
        upper,
        &cuts,
        quad_opts(tol, scale),
    )?;
    Ok(base + integral.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Scheme;
    use crate::payoff;

    fn market() -> MarketParams {
        MarketParams::default()
    }

    #[test]
    fn lattice_call_matches_direct_sum() {
        let m = market();
        for scheme in [Scheme::Crr, Scheme::Tian, Scheme::Centered(100.0)] {
            for n in [1, 2, 3, 10, 101] {
                let lat = Lattice::build(&m, n, scheme).unwrap();
                let curve = DigitalCurve::Lattice(&lat);
                let f = payoff::call(100.0).unwrap();
                let a = price_via_digitals(&curve, &f, LATTICE_TOL).unwrap();
                let b = lat.price(&f);
                assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-12), "{scheme} n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn constant_and_digital_on_bs_curve() {
        let m = market();
        let curve = DigitalCurve::Bs(m);
        let c = price_via_digitals(&curve, &payoff::constant(3.0).unwrap(), QUADRATURE_TOL).unwrap();
        assert!((c - 3.0 * m.discount()).abs() < 1e-15);
        let d = price_via_digitals(&curve, &payoff::digital_gt(104.0).unwrap(), QUADRATURE_TOL).unwrap();
        assert!((d - curve.strict(104.0)).abs() < 1e-15);
    }

    #[test]
    fn atom_is_reproduced_by_left_jump() {
        let m = market();
        let lat = Lattice::build(&m, 12, Scheme::Crr).unwrap();
        let k = lat.spec.terminal_prices[6];
        let curve = DigitalCurve::Lattice(&lat);
        let weak = price_via_digitals(&curve, &payoff::digital_geq(k).unwrap(), LATTICE_TOL).unwrap();
        let strict = price_via_digitals(&curve, &payoff::digital_gt(k).unwrap(), LATTICE_TOL).unwrap();
        assert!((weak - strict - m.discount() * lat.dist.probs[6]).abs() < 1e-15);
        assert!((weak - lat.price(&payoff::digital_geq(k).unwrap())).abs() < 1e-15);
    }

    #[test]
    fn call_route_self_and_butterfly() {
        let m = market();
        let curve = DigitalCurve::Bs(m);
        let c = price_via_calls(&curve, &payoff::call(95.0).unwrap(), QUADRATURE_TOL).unwrap();
        assert!((c - analytic::bs_call(&m, 95.0)).abs() < 1e-13);
        let b = price_via_calls(&curve, &payoff::butterfly(90.0, 100.0, 110.0).unwrap(), QUADRATURE_TOL).unwrap();
        let expect = analytic::bs_call(&m, 90.0) - 2.0 * analytic::bs_call(&m, 100.0) + analytic::bs_call(&m, 110.0);
        assert!((b - expect).abs() < 1e-13);
    }

    #[test]
    fn routes_agree_on_power_payoff() {
        let m = market();
        let f = payoff::power_call4(100.0).unwrap();
        let tol = QUADRATURE_TOL;
        let bs = DigitalCurve::Bs(m);
        let a = price_via_digitals(&bs, &f, tol).unwrap();
        let b = price_via_calls(&bs, &f, tol).unwrap();
        assert!((a - b).abs() <= 2.0 * tol * a.abs().max(1.0), "{a} {b}");
        let lat = Lattice::build(&m, 200, Scheme::Crr).unwrap();
        let lc = DigitalCurve::Lattice(&lat);
        let a = price_via_digitals(&lc, &f, tol).unwrap();
        let b = price_via_calls(&lc, &f, tol).unwrap();
        assert!((a - b).abs() <= 2.0 * tol * a.abs().max(1.0), "{a} {b}");
    }

    #[test]
    fn tabulated_csv_parsing_and_validation() {
        let good = "strike,price\n50,0.9\n100,0.5\n150,0.1\n";
        let t = TabulatedCurve::from_csv_reader(0.95, good.as_bytes()).unwrap();
        assert_eq!(t.strict(0.0), 0.95);
        assert!((t.strict(75.0) - 0.7).abs() < 1e-15);
        assert!((t.strict(25.0) - 0.925).abs() < 1e-15);
        assert_eq!(t.strict(150.0), 0.0);
        assert_eq!(t.weak(150.0), 0.1);

        let bad_order = "strike,price\n50,0.9\n40,0.5\n";
        match TabulatedCurve::from_csv_reader(0.95, bad_order.as_bytes()).unwrap_err() {
            Error::Csv { row, .. } => assert_eq!(row, 2),
            e => panic!("{e:?}"),
        }
        let increasing_price = "strike,price\n50,0.5\n60,0.6\n";
        match TabulatedCurve::from_csv_reader(0.95, increasing_price.as_bytes()).unwrap_err() {
            Error::Csv { row, .. } => assert_eq!(row, 2),
            e => panic!("{e:?}"),
        }
        let bad_header = "k,v\n50,0.5\n";
        assert!(TabulatedCurve::from_csv_reader(0.95, bad_header.as_bytes()).is_err());
        let garbage = "strike,price\n50,abc\n";
        match TabulatedCurve::from_csv_reader(0.95, garbage.as_bytes()).unwrap_err() {
            Error::Csv { row, .. } => assert_eq!(row, 1),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn tabulated_routes_and_common_jump() {
        let t = TabulatedCurve::new(0.95, &[(50.0, 0.9), (100.0, 0.5), (150.0, 0.1)]).unwrap();
        let curve = DigitalCurve::Tabulated(&t);
        let f = payoff::call(80.0).unwrap();
        let a = price_via_digitals(&curve, &f, QUADRATURE_TOL).unwrap();
        assert!((a - t.call(80.0)).abs() < 1e-10);
        let b = price_via_calls(&curve, &f, QUADRATURE_TOL).unwrap();
        assert!((a - b).abs() < 1e-10);
        assert_eq!(
            price_via_digitals(&curve, &payoff::digital_geq(150.0).unwrap(), QUADRATURE_TOL).unwrap_err(),
            Error::CommonJump { strike: 150.0 }
        );
        assert!(price_via_digitals(&curve, &payoff::digital_geq(120.0).unwrap(), QUADRATURE_TOL).is_ok());
    }
}
