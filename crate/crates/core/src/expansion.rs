//! Order-1/n error expansions of lattice prices around Black-Scholes prices.
//!
//! For a strike `a` on an n-period lattice with tilt λ, write `q = r − λσ²` and
//! `Δ_n = 1 − 2·frac[(log(S₀/a) + n log d)/log(u/d)]`. Then
//!
//! ```text
//! digital:  Ṽ_BT − Ṽ_BS ≈ e^{−rT}φ(d₂)·[Δ_n/√n − d₂Δ_n²/(2n) + B_n/n]
//! call:     V_BT − V_BS ≈ H_n/n,
//!           H_n = S₀φ(d₁)/(24σ√T)·[B̃_n − 12σ²T(Δ_n² − 1)]
//! B_n = (d₁³ + d₁d₂² + 2d₂ − 4d₁)/24 + (2 − d₁d₂ − d₁²)√T/(6σ)·q + T d₁/(2σ²)·q²
//! B̃_n = −σ²T(6 + d₁² + d₂²) + 4T(d₁² − d₂²)q − 12T²q²
//! ```
//!
//! with remainders of order n^{−3/2}. A strict digital struck exactly on a
//! terminal price uses `Δ_n − 2` in place of `Δ_n`. General payoffs combine
//! these through the representation formulas: an f′-weighted integral of the
//! digital expansion plus jump terms, or an f″-weighted integral of `H_n`
//! plus jump and kink terms.

use serde::Serialize;

use crate::analytic::{d1_d2, norm_pdf};
use crate::error::{Error, Result};
use crate::lattice::{build_lattice, LatticeSpec, Scheme};
use crate::market::MarketParams;
use crate::payoff::{DigitalConvention, PiecewisePayoff};
use crate::quad::{self, QuadOptions};

/// Fractional part `x − ⌊x⌋ ∈ [0, 1)`, also for negative `x`.
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    // x = −tiny rounds to exactly 1
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionTerms {
    pub strike: f64,
    pub n: usize,
    pub lambda: f64,
    pub d1: f64,
    pub d2: f64,
    pub delta_n: f64,
    pub on_node: bool,
    pub b_n: f64,
    pub b_tilde_n: f64,
    pub j_n: f64,
    pub j_hat_n: f64,
    pub h_n: f64,
    /// e^{−rT}φ(d₂), the density scale of the digital expansion
    pub digital_scale: f64,
}

/// Δ_n at `strike`; exactly 1 when the strike is a terminal price.
pub fn delta_n(spec: &LatticeSpec, strike: f64) -> f64 {
    if spec.node_index(strike).is_some() {
        return 1.0;
    }
    1.0 - 2.0 * frac(-spec.node_coordinate(strike))
}

fn digital_bracket(scale: f64, delta: f64, d2: f64, b: f64, n: usize) -> f64 {
    let nf = n as f64;
    scale * (delta / nf.sqrt() - d2 * delta * delta / (2.0 * nf) + b / nf)
}

/// The `B_n` coefficient of the digital expansion at tilt `lambda`.
pub fn b_coefficient(m: &MarketParams, strike: f64, lambda: f64) -> f64 {
    let (sigma, t) = (m.volatility, m.maturity);
    let (d1, d2) = d1_d2(m, strike);
    let q = m.rate - lambda * sigma * sigma;
    (d1.powi(3) + d1 * d2 * d2 + 2.0 * d2 - 4.0 * d1) / 24.0
        + (2.0 - d1 * d2 - d1 * d1) * t.sqrt() / (6.0 * sigma) * q
        + t * d1 / (2.0 * sigma * sigma) * q * q
}

pub fn expansion_terms(m: &MarketParams, spec: &LatticeSpec, strike: f64) -> Result<ExpansionTerms> {
    if !(strike.is_finite() && strike > 0.0) {
        return Err(Error::InvalidArgument(format!("strike must be positive, got {strike}")));
    }
    let (sigma, t, r) = (m.volatility, m.maturity, m.rate);
    let (d1, d2) = d1_d2(m, strike);
    let on_node = spec.node_index(strike).is_some();
    let delta = delta_n(spec, strike);
    let q = r - spec.lambda * sigma * sigma;
    let b_n = b_coefficient(m, strike, spec.lambda);
    let b_tilde_n = -sigma * sigma * t * (6.0 + d1 * d1 + d2 * d2) + 4.0 * t * (d1 * d1 - d2 * d2) * q
        - 12.0 * t * t * q * q;
    let digital_scale = m.discount() * norm_pdf(d2);
    let n = spec.n;
    let j_n = digital_bracket(digital_scale, delta, d2, b_n, n);
    let j_hat_n = digital_bracket(digital_scale, delta - 2.0, d2, b_n, n);
    let h_n = m.spot * norm_pdf(d1) / (24.0 * sigma * t.sqrt())
        * (b_tilde_n - 12.0 * sigma * sigma * t * (delta * delta - 1.0));
    Ok(ExpansionTerms {
        strike,
        n,
        lambda: spec.lambda,
        d1,
        d2,
        delta_n: delta,
        on_node,
        b_n,
        b_tilde_n,
        j_n,
        j_hat_n,
        h_n,
        digital_scale,
    })
}

/// Predicted `lattice digital − Black-Scholes digital` to order 1/n.
pub fn predicted_digital_error(terms: &ExpansionTerms, n: usize, conv: DigitalConvention) -> f64 {
    let delta = match conv {
        DigitalConvention::Strict if terms.on_node => terms.delta_n - 2.0,
        _ => terms.delta_n,
    };
    digital_bracket(terms.digital_scale, delta, terms.d2, terms.b_n, n)
}

/// Predicted `lattice call − Black-Scholes call`, i.e. `H_n/n`.
pub fn predicted_call_error(terms: &ExpansionTerms, n: usize) -> f64 {
    terms.h_n / n as f64
}

/// Pieces of a general-payoff prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PayoffErrorPrediction {
    /// ∫ f′(a)·e^{−rT}φ(d₂)·Δ_n da (the coefficient of 1/√n); zero on the C² route
    pub sqrt_integral: f64,
    /// ∫ f′·e^{−rT}φ(d₂)·[B_n − d₂Δ_n²/2] da, or ∫ f″·H_n da on the C² route
    pub inv_n_integral: f64,
    pub jump_terms: f64,
    pub kink_terms: f64,
    pub total: f64,
}

/// Strike window outside which the expansion integrands are negligible:
/// within the lattice range, starting at ±8 standard deviations of the log
/// forward and widened until the Gaussian weight times the payoff bound is
/// below `1e-18·S₀`.
fn expansion_window(m: &MarketParams, spec: &LatticeSpec, payoff: &PiecewisePayoff) -> (f64, f64) {
    let bound = payoff.poly_bound().expect("validated payoff carries a bound");
    let mu = (m.rate - 0.5 * m.volatility * m.volatility) * m.maturity;
    let sd = m.total_vol();
    let at = |z: f64| m.spot * (mu + sd * z).exp();
    let negligible = |z: f64| norm_pdf(z) * bound.at(at(z)) * at(z).max(1.0) < 1e-18 * m.spot;
    let mut z_hi = 8.0;
    while !negligible(z_hi) && z_hi < 38.0 {
        z_hi += 1.0;
    }
    let mut z_lo = -8.0;
    while !negligible(z_lo) && z_lo > -38.0 {
        z_lo -= 1.0;
    }
    let s = &spec.terminal_prices;
    (at(z_lo).max(s[0]), at(z_hi).min(s[s.len() - 1]))
}

fn cut_points(spec: &LatticeSpec, payoff: &PiecewisePayoff, lo: f64, hi: f64) -> Vec<f64> {
    spec.terminal_prices
        .iter()
        .copied()
        .chain(payoff.breakpoints().iter().map(|b| b.at))
        .filter(|&x| x > lo && x < hi)
        .collect()
}

/// Absolute tolerance tied to `∫|integrand|`: the Δ_n sawtooth makes the
/// f′-weighted integrals cancel to far below their magnitude.
fn expansion_quad_opts(l1: f64) -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-15f64.max(1e-12 * l1),
        rel_tol: 1e-11,
        max_intervals: 200_000,
    }
}

fn jump_sum(m: &MarketParams, spec: &LatticeSpec, payoff: &PiecewisePayoff) -> Result<f64> {
    let mut sum = 0.0;
    for j in payoff.jumps() {
        if j.at <= 0.0 || (j.minus == 0.0 && j.plus == 0.0) {
            // at 0 both models price the digital at e^{−rT}
            continue;
        }
        let t = expansion_terms(m, spec, j.at)?;
        sum += if t.on_node {
            j.minus * t.j_n + j.plus * t.j_hat_n
        } else {
            (j.minus + j.plus) * t.j_n
        };
    }
    Ok(sum)
}

fn validated(payoff: &PiecewisePayoff) -> Result<()> {
    payoff.validate_pi_class().into_result()
}

/// Predicted `lattice − Black-Scholes` price of a general payoff, through the
/// f′-weighted digital expansion plus jump terms.
pub fn predicted_payoff_error(
    m: &MarketParams,
    spec: &LatticeSpec,
    payoff: &PiecewisePayoff,
) -> Result<PayoffErrorPrediction> {
    validated(payoff)?;
    let (lo, hi) = expansion_window(m, spec, payoff);
    let cuts = cut_points(spec, payoff, lo, hi);
    let disc = m.discount();
    let weight = |a: f64| -> (f64, f64) {
        let (_, d2) = d1_d2(m, a);
        (payoff.derivative(a) * disc * norm_pdf(d2), d2)
    };
    let sqrt_integrand = |a: f64| {
        let (w, _) = weight(a);
        if w == 0.0 {
            0.0
        } else {
            w * delta_n(spec, a)
        }
    };
    let inv_n_integrand = |a: f64| {
        let (w, d2) = weight(a);
        if w == 0.0 {
            return 0.0;
        }
        let t = expansion_terms(m, spec, a).expect("positive strike");
        w * (t.b_n - 0.5 * d2 * t.delta_n * t.delta_n)
    };
    let l1 = quad::l1_estimate(|a| weight(a).0, lo, hi, &cuts);
    let sqrt_part = quad::integrate(sqrt_integrand, lo, hi, &cuts, expansion_quad_opts(l1))?;
    let inv_n_part = quad::integrate(
        inv_n_integrand,
        lo,
        hi,
        &cuts,
        expansion_quad_opts(quad::l1_estimate(inv_n_integrand, lo, hi, &cuts)),
    )?;
    let jump_terms = jump_sum(m, spec, payoff)?;
    let nf = spec.n as f64;
    let total = sqrt_part.value / nf.sqrt() + inv_n_part.value / nf + jump_terms;
    Ok(PayoffErrorPrediction {
        sqrt_integral: sqrt_part.value,
        inv_n_integral: inv_n_part.value,
        jump_terms,
        kink_terms: 0.0,
        total,
    })
}

/// Same prediction through the call expansion: `(1/n)∫f″H_n` plus jump terms
/// plus `(1/n)Σ(f′(s+) − f′(s−))H_n(s)`.
pub fn predicted_payoff_error_c2(
    m: &MarketParams,
    spec: &LatticeSpec,
    payoff: &PiecewisePayoff,
) -> Result<PayoffErrorPrediction> {
    validated(payoff)?;
    if !payoff.has_second_derivative() {
        return Err(Error::MissingSecondDerivative);
    }
    let (lo, hi) = expansion_window(m, spec, payoff);
    let cuts = cut_points(spec, payoff, lo, hi);
    let integrand = |a: f64| {
        let f2 = payoff.second_derivative(a).unwrap_or(0.0);
        if f2 == 0.0 {
            return 0.0;
        }
        f2 * expansion_terms(m, spec, a).expect("positive strike").h_n
    };
    let l1 = quad::l1_estimate(integrand, lo, hi, &cuts);
    let integral = quad::integrate(integrand, lo, hi, &cuts, expansion_quad_opts(l1))?;
    let jump_terms = jump_sum(m, spec, payoff)?;
    let mut kinks = 0.0;
    for (at, slope_jump) in payoff.kinks() {
        // the zero-strike call is priced exactly (S₀) by every lattice
        if at <= 0.0 || slope_jump == 0.0 {
            continue;
        }
        kinks += slope_jump * expansion_terms(m, spec, at)?.h_n;
    }
    let nf = spec.n as f64;
    let total = integral.value / nf + jump_terms + kinks / nf;
    Ok(PayoffErrorPrediction {
        sqrt_integral: 0.0,
        inv_n_integral: integral.value,
        jump_terms,
        kink_terms: kinks,
        total,
    })
}

/// The classical CRR call-error coefficient for `S₀ = 1`, `T = 1`:
/// `e^{−d₁²/2}/(24σ√(2π))·(A − 12σ²(Δ_n² − 1))/n` with
/// `A = −σ²(6 + d₁² + d₂²) + 4(d₁² − d₂²)r − 12r²`.
pub fn diener_crr_call_error(m: &MarketParams, n: usize, strike: f64) -> Result<f64> {
    if m.spot != 1.0 || m.maturity != 1.0 {
        return Err(Error::InvalidArgument(format!(
            "CRR call-error coefficient needs S0 = 1 and T = 1, got S0 = {}, T = {}",
            m.spot, m.maturity
        )));
    }
    if n == 0 || strike.is_nan() || strike <= 0.0 {
        return Err(Error::InvalidArgument("need n ≥ 1 and a positive strike".into()));
    }
    let (sigma, r) = (m.volatility, m.rate);
    let d1 = ((1.0 / strike).ln() + r + 0.5 * sigma * sigma) / sigma;
    let d2 = d1 - sigma;
    let ln_u = sigma / (n as f64).sqrt();
    let arg = ((1.0 / strike).ln() - n as f64 * ln_u) / (2.0 * ln_u);
    let nearest = arg.round();
    let delta = if (arg - nearest).abs() < 1e-9 {
        1.0
    } else {
        1.0 - 2.0 * frac(arg)
    };
    let a = -sigma * sigma * (6.0 + d1 * d1 + d2 * d2) + 4.0 * (d1 * d1 - d2 * d2) * r - 12.0 * r * r;
    let scale = (-0.5 * d1 * d1).exp() / (24.0 * sigma * (2.0 * std::f64::consts::PI).sqrt());
    Ok(scale * (a - 12.0 * sigma * sigma * (delta * delta - 1.0)) / n as f64)
}

/// [`predicted_call_error`] on the CRR lattice, for comparison with
/// [`diener_crr_call_error`].
pub fn crr_predicted_call_error(m: &MarketParams, n: usize, strike: f64) -> Result<f64> {
    let spec = build_lattice(m, n, Scheme::Crr)?;
    let t = expansion_terms(m, &spec, strike)?;
    Ok(predicted_call_error(&t, n))
}
