//! Black-Scholes closed forms and the discounted-expectation quadrature oracle.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::MarketParams;
use crate::payoff::PiecewisePayoff;
use crate::quad::{self, QuadOptions};

pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934_381_868_f64;

/// Standard normal distribution function, Φ(x) = erfc(−x/√2)/2.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// (d₁, d₂) at strike `a > 0`.
pub fn d1_d2(m: &MarketParams, a: f64) -> (f64, f64) {
    let sd = m.total_vol();
    let d1 = ((m.spot / a).ln() + (m.rate + 0.5 * m.volatility * m.volatility) * m.maturity) / sd;
    (d1, d1 - sd)
}

/// Closed-form quantities at one strike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BsPoint {
    pub d1: f64,
    pub d2: f64,
    pub call: f64,
    pub digital_weak: f64,
    pub digital_strict: f64,
}

/// Strike location for [`bs_point`]: a positive strike, or the `a → 0+` limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strike {
    ZeroLimit,
    At(f64),
}

pub fn bs_point(m: &MarketParams, strike: Strike) -> Result<BsPoint> {
    let a = match strike {
        Strike::ZeroLimit => {
            let disc = m.discount();
            return Ok(BsPoint {
                d1: f64::INFINITY,
                d2: f64::INFINITY,
                call: m.spot,
                digital_weak: disc,
                digital_strict: disc,
            });
        }
        Strike::At(a) if a.is_finite() && a > 0.0 => a,
        Strike::At(a) => {
            return Err(Error::InvalidArgument(format!(
                "strike must be positive (use Strike::ZeroLimit for a = 0), got {a}"
            )))
        }
    };
    let (d1, d2) = d1_d2(m, a);
    let disc = m.discount();
    let digital = disc * norm_cdf(d2);
    // clamp tiny negative round-off deep out of the money
    let call = (m.spot * norm_cdf(d1) - a * digital).max(0.0);
    Ok(BsPoint {
        d1,
        d2,
        call,
        digital_weak: digital,
        digital_strict: digital,
    })
}

/// Call price, with `a ≤ 0` read as the zero-strike limit `S₀`.
pub fn bs_call(m: &MarketParams, a: f64) -> f64 {
    if a <= 0.0 {
        return m.spot;
    }
    let (d1, d2) = d1_d2(m, a);
    (m.spot * norm_cdf(d1) - a * m.discount() * norm_cdf(d2)).max(0.0)
}

pub fn bs_put(m: &MarketParams, a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let (d1, d2) = d1_d2(m, a);
    (a * m.discount() * norm_cdf(-d2) - m.spot * norm_cdf(-d1)).max(0.0)
}

/// Digital price e^{−rT}Φ(d₂); the lognormal law has no atoms, so strict and
/// weak coincide. `a ≤ 0` gives the sure-exercise value e^{−rT}.
pub fn bs_digital(m: &MarketParams, a: f64) -> f64 {
    if a <= 0.0 {
        return m.discount();
    }
    m.discount() * norm_cdf(d1_d2(m, a).1)
}

/// Upper-tail partial moment E[S_T^q · 1{S_T > u}] under the pricing measure.
fn upper_partial_moment(m: &MarketParams, q: f64, u: f64) -> f64 {
    let mu = (m.rate - 0.5 * m.volatility * m.volatility) * m.maturity;
    let sd = m.total_vol();
    let full = m.spot.powf(q) * (q * mu + 0.5 * q * q * sd * sd).exp();
    let d = ((m.spot / u).ln() + mu) / sd + q * sd;
    full * norm_cdf(d)
}

/// Bound on ∫_{u}^{∞} |f| dQ from the payoff's derivative certificate.
fn upper_tail_bound(m: &MarketParams, payoff: &PiecewisePayoff, u: f64) -> f64 {
    let b = payoff.poly_bound().expect("validated payoff carries a bound");
    let base = payoff.value_bound(0.0);
    base * upper_partial_moment(m, 0.0, u)
        + b.c1 * upper_partial_moment(m, 1.0, u)
        + b.c2 / (b.p + 1.0) * upper_partial_moment(m, b.p + 1.0, u)
}

/// Discounted lognormal expectation e^{−rT}E[f(S_T)] by adaptive quadrature.
///
/// Integrates in the standard-normal variable, split at the image of every
/// breakpoint. The integration window is widened until the certified tail
/// mass on both sides is below a tenth of the requested relative error.
pub fn bs_price_payoff_oracle(m: &MarketParams, payoff: &PiecewisePayoff, rel_tol: f64) -> Result<f64> {
    m.validate()?;
    if !(rel_tol > 1e-14 && rel_tol < 1e-4) {
        return Err(Error::InvalidArgument(format!(
            "oracle rel_tol must lie in (1e-14, 1e-4), got {rel_tol}"
        )));
    }
    payoff.validate_pi_class().into_result()?;

    let mu = (m.rate - 0.5 * m.volatility * m.volatility) * m.maturity;
    let sd = m.total_vol();
    let price_at = move |z: f64| m.spot * (mu + sd * z).exp();
    let z_of = |x: f64| ((x / m.spot).ln() - mu) / sd;
    let cuts: Vec<f64> = payoff.breakpoints().iter().map(|b| z_of(b.at)).collect();
    let integrand = |z: f64| {
        let w = crate::analytic::norm_pdf(z);
        if w == 0.0 {
            0.0
        } else {
            payoff.eval(price_at(z)) * w
        }
    };

    let opts = QuadOptions::relative(0.5 * rel_tol).with_abs(1e-300);
    let rough = quad::integrate(integrand, -8.0, 8.0, &cuts, QuadOptions::relative(1e-6))?.value;
    let target = 0.1 * rel_tol * rough.abs().max(f64::MIN_POSITIVE);

    let mut z_hi = 8.0;
    while upper_tail_bound(m, payoff, price_at(z_hi)) > target && z_hi < 38.0 {
        z_hi += 1.0;
    }
    let mut z_lo = -8.0;
    while norm_cdf(z_lo) * payoff.value_bound(price_at(z_lo)) > target && z_lo > -38.0 {
        z_lo -= 1.0;
    }

    let r = quad::integrate(integrand, z_lo, z_hi, &cuts, opts)?;
    let tail = upper_tail_bound(m, payoff, price_at(z_hi));
    let scale = r.value.abs().max(f64::MIN_POSITIVE);
    if r.abs_err + tail > rel_tol * scale && r.abs_err + tail > 1e-300 {
        return Err(Error::Quadrature {
            estimate: r.value * m.discount(),
            residual: (r.abs_err + tail) * m.discount(),
        });
    }
    Ok(m.discount() * r.value)
}
