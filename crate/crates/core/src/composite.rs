//! The smooth-convergence composite estimator and Richardson extrapolation.
//!
//! A smooth payoff's price is `f(0)e^{−rT} + ∫ f′(a)V^D(a) da`. The estimator
//! replaces `V^D(a)` by the digital price on a lattice *centered* at `a`
//! (where the oscillating Δ_n term vanishes) and the integral by the
//! trapezoid rule on an equidistant grid of `n + 1` points with spacing
//! `S₀·n^{α−1}`, so the grid spans `S₀·n^α`. For `α < 1/3` the result
//! converges to the Black-Scholes price as `V_BS + C/n + o(1/n)`, with
//!
//! ```text
//! C = ∫ f′(a)·e^{−rT}φ(d₂)·B(a) da,
//! B(a) = (d₁³ + d₁d₂² + 2d₂ − 4d₁)/24 + (2 − d₁d₂ − d₁²)√T r/(6σ) + T d₁ r²/(2σ²).
//! ```
//!
//! Grid lengths are measured in units of the spot price. When `f′ ≡ 0` below
//! the payoff's first breakpoint the grid starts at that breakpoint rather
//! than at zero, so the integrand is smooth over the whole grid.
//!
//! Cost: `n + 1` lattices of `n` steps, `O(n²)` time and `O(n)` memory per
//! grid point. Grid points are evaluated in parallel and summed in grid order.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{d1_d2, norm_pdf};
use crate::error::{Error, Result};
use crate::expansion::b_coefficient;
use crate::lattice::{Lattice, Scheme};
use crate::market::MarketParams;
use crate::payoff::{DigitalConvention, PiecewisePayoff, Smoothness};
use crate::quad::{self, QuadOptions};

/// Default grid exponent, just below the 1/3 cap.
pub const DEFAULT_ALPHA: f64 = 0.3;

/// Trapezoid rule for `∫_0^b g` with `n` equal panels.
pub fn trapezoid<G: Fn(f64) -> f64>(g: G, b: f64, n: usize) -> f64 {
    assert!(n > 0, "trapezoid needs at least one panel");
    let h = b / n as f64;
    let interior: f64 = (1..n).map(|k| g(k as f64 * h)).sum();
    h * (0.5 * (g(0.0) + g(b)) + interior)
}

/// Where the trapezoid grid starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub enum GridOrigin {
    /// The first breakpoint when `f′ ≡ 0` below it, otherwise zero.
    #[default]
    Auto,
    Zero,
    At(f64),
}

/// Whether the estimate carries the smooth-convergence guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EstimateKind {
    /// C³ payoff on a single smooth piece: `V_BS + C/n + o(1/n)`.
    Smooth,
    /// Jumps or kinks handled by splitting; guarantees hold per segment only.
    Piecewise,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothEstimate {
    pub n: usize,
    pub alpha: f64,
    pub value: f64,
    pub origin: f64,
    /// `S₀·n^{α−1}`
    pub spacing: f64,
    /// `origin + k·spacing`, `k = 0..=n`
    pub grid: Vec<f64>,
    /// The constant `C` of `V_BS + C/n`
    pub predicted_c: f64,
    pub kind: EstimateKind,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0 / 3.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1/3), got {alpha}")));
    }
    Ok(())
}

/// Digital price at `a` on the `n`-step lattice centered at `a`.
pub fn centered_digital(m: &MarketParams, n: usize, a: f64) -> Result<f64> {
    if a <= 0.0 {
        return Ok(m.discount());
    }
    let lat = Lattice::build(m, n, Scheme::Centered(a))?;
    Ok(lat.digital(a, DigitalConvention::Strict))
}

fn resolve_origin(payoff: &PiecewisePayoff, origin: GridOrigin) -> Result<f64> {
    match origin {
        GridOrigin::Zero => Ok(0.0),
        GridOrigin::At(x) if x.is_finite() && x >= 0.0 => Ok(x),
        GridOrigin::At(x) => Err(Error::InvalidArgument(format!("grid origin must be non-negative, got {x}"))),
        GridOrigin::Auto => {
            let Some(first) = payoff.breakpoints().first().map(|b| b.at) else {
                return Ok(0.0);
            };
            let flat_below = (1..64).all(|i| payoff.derivative(first * i as f64 / 64.0) == 0.0)
                && payoff.jumps().iter().all(|j| j.at >= first);
            Ok(if flat_below { first } else { 0.0 })
        }
    }
}

fn grid_points(m: &MarketParams, n: usize, alpha: f64, origin: f64) -> (f64, Vec<f64>) {
    let spacing = m.spot * (n as f64).powf(alpha - 1.0);
    let grid = (0..=n).map(|k| origin + k as f64 * spacing).collect();
    (spacing, grid)
}

/// Value of `f` below the grid origin, priced exactly as a bond.
fn flat_part(m: &MarketParams, payoff: &PiecewisePayoff, origin: f64) -> f64 {
    let level = if origin > 0.0 { payoff.left_limit(origin) } else { payoff.eval(0.0) };
    level * m.discount()
}

/// The composite estimator for a C³ payoff.
pub fn smooth_estimate(m: &MarketParams, payoff: &PiecewisePayoff, n: usize, alpha: f64) -> Result<SmoothEstimate> {
    smooth_estimate_with(m, payoff, n, alpha, GridOrigin::Auto)
}

pub fn smooth_estimate_with(
    m: &MarketParams,
    payoff: &PiecewisePayoff,
    n: usize,
    alpha: f64,
    origin: GridOrigin,
) -> Result<SmoothEstimate> {
    m.validate()?;
    check_alpha(alpha)?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if payoff.smoothness() != Smoothness::C3Smooth {
        return Err(Error::InvalidPayoff(format!(
            "{} is tagged {:?}; the smooth estimator needs a C3 payoff (use smooth_estimate_piecewise)",
            payoff.name(),
            payoff.smoothness()
        )));
    }
    payoff.validate_pi_class().into_result()?;
    let origin = resolve_origin(payoff, origin)?;
    let (spacing, grid) = grid_points(m, n, alpha, origin);
    let samples: Vec<f64> = grid
        .par_iter()
        .map(|&a| {
            let slope = payoff.derivative(a);
            if slope == 0.0 {
                Ok(0.0)
            } else {
                Ok(slope * centered_digital(m, n, a)?)
            }
        })
        .collect::<Result<_>>()?;
    let interior: f64 = samples[1..n].iter().sum();
    let integral = spacing * (0.5 * (samples[0] + samples[n]) + interior);
    Ok(SmoothEstimate {
        n,
        alpha,
        value: flat_part(m, payoff, origin) + integral,
        origin,
        spacing,
        grid,
        predicted_c: smooth_constant_of(m, payoff)?,
        kind: EstimateKind::Smooth,
    })
}

/// The estimator for any payoff in Π: grid cells are split at breakpoints,
/// each piece integrated with one-sided derivatives, and jumps priced on
/// lattices centered at the jump points.
pub fn smooth_estimate_piecewise(
    m: &MarketParams,
    payoff: &PiecewisePayoff,
    n: usize,
    alpha: f64,
    origin: GridOrigin,
) -> Result<SmoothEstimate> {
    m.validate()?;
    check_alpha(alpha)?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    payoff.validate_pi_class().into_result()?;
    let origin = resolve_origin(payoff, origin)?;
    let (spacing, grid) = grid_points(m, n, alpha, origin);
    let end = grid[n];
    let breaks: Vec<f64> = payoff
        .breakpoints()
        .iter()
        .map(|b| b.at)
        .filter(|&s| s > origin && s < end)
        .collect();

    // nodes of the (possibly refined) grid with left/right slopes
    let mut nodes: Vec<f64> = grid.iter().copied().chain(breaks.iter().copied()).collect();
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let left_slope = |a: f64| {
        let i = payoff.segment_index(a);
        if i > 0 && payoff.breakpoints()[i - 1].at == a {
            payoff.segments()[i - 1].derivative(a)
        } else {
            payoff.derivative(a)
        }
    };
    let digitals: Vec<f64> = nodes.par_iter().map(|&a| centered_digital(m, n, a)).collect::<Result<_>>()?;
    let integral: f64 = nodes
        .windows(2)
        .zip(digitals.windows(2))
        .map(|(x, v)| 0.5 * (x[1] - x[0]) * (payoff.derivative(x[0]) * v[0] + left_slope(x[1]) * v[1]))
        .sum();

    // below the origin the payoff is priced as a bond at its left limit there
    let mut jumps = 0.0;
    for j in payoff.jumps() {
        if j.at == 0.0 && origin == 0.0 {
            jumps += j.plus * m.discount();
        } else if j.at >= origin && j.at > 0.0 && j.at <= end {
            jumps += (j.minus + j.plus) * centered_digital(m, n, j.at)?;
        }
    }
    let base = flat_part(m, payoff, origin);
    Ok(SmoothEstimate {
        n,
        alpha,
        value: base + jumps + integral,
        origin,
        spacing,
        grid,
        predicted_c: smooth_constant_of(m, payoff)?,
        kind: EstimateKind::Piecewise,
    })
}

/// The density `C(a) = e^{−rT}φ(d₂)·B(a)` with B at zero tilt.
pub fn smooth_constant_density(m: &MarketParams, a: f64) -> f64 {
    let (_, d2) = d1_d2(m, a);
    m.discount() * norm_pdf(d2) * b_coefficient(m, a, 0.0)
}

/// `C = ∫ f′(a)C(a) da`, the 1/n coefficient of the composite estimator.
pub fn smooth_constant_of(m: &MarketParams, payoff: &PiecewisePayoff) -> Result<f64> {
    m.validate()?;
    // φ(d₂) < 1e-31 outside |d₂| ≤ 12; f′ grows at most polynomially in a
    const Z: f64 = 12.0;
    let centre = (m.rate - 0.5 * m.volatility * m.volatility) * m.maturity;
    let at = |z: f64| m.spot * (centre + m.total_vol() * z).exp();
    let (lo, hi) = (at(-Z), at(Z));
    let cuts: Vec<f64> = payoff.breakpoints().iter().map(|b| b.at).collect();
    let opts = QuadOptions {
        abs_tol: 1e-14 * m.spot,
        rel_tol: 1e-10,
        max_intervals: 20_000,
    };
    let res = quad::integrate(
        |a| {
            let slope = payoff.derivative(a);
            if slope == 0.0 {
                0.0
            } else {
                slope * smooth_constant_density(m, a)
            }
        },
        lo,
        hi,
        &cuts,
        opts,
    )?;
    Ok(res.value)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Extrapolation {
    /// `R(n)` keyed by the lower rung `n`
    pub values: BTreeMap<usize, f64>,
    /// Rungs without a partner at `2n`
    pub notes: Vec<String>,
}

/// Richardson extrapolation `R(n) = (2^β a_{2n} − a_n)/(2^β − 1)` over all
/// `(n, 2n)` pairs present in `values`.
pub fn richardson(values: &BTreeMap<usize, f64>, order: f64) -> Result<Extrapolation> {
    if !(order > 0.0 && order.is_finite()) {
        return Err(Error::InvalidArgument(format!("order must be positive, got {order}")));
    }
    let w = 2f64.powf(order);
    let mut out = Extrapolation::default();
    for (&n, &a_n) in values {
        match values.get(&(2 * n)) {
            Some(&a_2n) => {
                out.values.insert(n, (w * a_2n - a_n) / (w - 1.0));
            }
            None => out.notes.push(format!("n={n}: no value at {}, skipped", 2 * n)),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{self, FRAC_1_SQRT_2PI};
    use crate::payoff;

    #[test]
    fn trapezoid_examples() {
        for n in [1, 2, 7, 100] {
            assert!((trapezoid(|x| x, 1.0, n) - 0.5).abs() <= 4.0 * f64::EPSILON);
            assert!((trapezoid(|_| 3.0, 2.5, n) - 7.5).abs() < 1e-14);
        }
        let v = trapezoid(|x| x * x, 1.0, 2);
        assert_eq!(v, 0.375);
        assert!((v - 1.0 / 3.0).abs() <= 1.0 / (12.0 * 4.0) * 2.0 + 1e-15);
    }

    #[test]
    fn richardson_examples() {
        let ladder = [100usize, 200, 400, 800];
        let pure: BTreeMap<_, _> = ladder.iter().map(|&n| (n, 2.0 + 1.0 / n as f64)).collect();
        let r = richardson(&pure, 1.0).unwrap();
        assert_eq!(r.values.len(), 3);
        assert_eq!(r.notes.len(), 1);
        for v in r.values.values() {
            assert!((v - 2.0).abs() < 1e-14);
        }
        let quad: BTreeMap<_, _> = ladder
            .iter()
            .map(|&n| (n, 2.0 + 1.0 / n as f64 + 1.0 / (n * n) as f64))
            .collect();
        let r = richardson(&quad, 1.0).unwrap();
        for (&n, v) in &r.values {
            // 2(1/(2n)²) − 1/n² = −1/(2n²)
            assert!((v - 2.0 + 0.5 / (n * n) as f64).abs() < 1e-14);
        }
        let osc: BTreeMap<_, _> = [101usize, 202, 404]
            .iter()
            .map(|&n| (n, 2.0 + if n % 2 == 0 { 1.0 } else { -1.0 } / n as f64))
            .collect();
        let r = richardson(&osc, 1.0).unwrap();
        let improved = (r.values[&101] - 2.0).abs() < (osc[&202] - 2.0).abs();
        assert!(!improved);
        assert!(richardson(&pure, 0.0).is_err());
    }

    /// The constant's density as a separate transcription of the closed form.
    fn density_oracle(m: &MarketParams, a: f64) -> f64 {
        let (s, t, r) = (m.volatility, m.maturity, m.rate);
        let d1 = ((m.spot / a).ln() + (r + 0.5 * s * s) * t) / (s * t.sqrt());
        let d2 = d1 - s * t.sqrt();
        let scale = (-r * t).exp() * (-0.5 * d2 * d2).exp() * FRAC_1_SQRT_2PI;
        scale * (d1.powi(3) + d1 * d2 * d2 + 2.0 * d2 - 4.0 * d1) / 24.0
            + scale * ((2.0 - d1 * d2 - d1 * d1) * t.sqrt() / (6.0 * s) * r + t * d1 * r * r / (2.0 * s * s))
    }

    #[test]
    fn density_matches_zero_tilt_coefficient() {
        for m in [MarketParams::default(), MarketParams::new(80.0, 0.35, 0.02, 2.0).unwrap()] {
            for i in 0..60 {
                let a = m.spot * (0.4 + 0.03 * i as f64);
                let (x, y) = (smooth_constant_density(&m, a), density_oracle(&m, a));
                assert!((x - y).abs() <= 1e-12 * y.abs().max(1e-3), "a={a}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn flat_payoff_gives_zero() {
        let m = MarketParams::default();
        let f = payoff::constant(0.0).unwrap();
        for n in [5, 50] {
            let e = smooth_estimate(&m, &f, n, 0.3).unwrap();
            assert_eq!(e.value, 0.0);
            assert_eq!(e.predicted_c, 0.0);
        }
        let c = smooth_estimate(&m, &payoff::constant(2.0).unwrap(), 10, 0.3).unwrap();
        assert_eq!(c.value, 2.0 * m.discount());
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = MarketParams::default();
        let f = payoff::power_call4(100.0).unwrap();
        assert!(smooth_estimate(&m, &f, 10, 1.0 / 3.0).is_err());
        assert!(smooth_estimate(&m, &f, 10, 0.0).is_err());
        assert!(smooth_estimate(&m, &payoff::call(100.0).unwrap(), 10, 0.3).is_err());
        assert!(smooth_estimate_piecewise(&m, &payoff::call(100.0).unwrap(), 10, 0.3, GridOrigin::Auto).is_ok());
    }

    #[test]
    fn grid_shape() {
        let m = MarketParams::default();
        let f = payoff::power_call4(100.0).unwrap();
        let e = smooth_estimate(&m, &f, 64, 0.25).unwrap();
        assert_eq!(e.grid.len(), 65);
        assert_eq!(e.origin, 100.0);
        assert_eq!(e.spacing, 100.0 * 64f64.powf(-0.75));
        assert!((e.grid[64] - e.origin - 100.0 * 64f64.powf(0.25)).abs() < 1e-10);
        let z = smooth_estimate_with(&m, &f, 64, 0.25, GridOrigin::Zero).unwrap();
        assert_eq!(z.origin, 0.0);
    }

    #[test]
    fn estimate_approaches_black_scholes() {
        let m = MarketParams::default();
        let f = payoff::power_call4(100.0).unwrap();
        let bs = analytic::bs_price_payoff_oracle(&m, &f, 1e-12).unwrap();
        let e = smooth_estimate(&m, &f, 200, 0.3).unwrap();
        let scaled = 200.0 * (e.value - bs);
        assert!((scaled / e.predicted_c - 1.0).abs() < 0.05, "{scaled} vs {}", e.predicted_c);
    }

    #[test]
    fn piecewise_matches_smooth_on_smooth_payoff() {
        let m = MarketParams::default();
        let f = payoff::power_call4(100.0).unwrap();
        let a = smooth_estimate(&m, &f, 100, 0.3).unwrap();
        let b = smooth_estimate_piecewise(&m, &f, 100, 0.3, GridOrigin::Auto).unwrap();
        assert!((a.value - b.value).abs() <= 1e-12 * a.value.abs());
        assert_eq!(b.kind, EstimateKind::Piecewise);
    }

    #[test]
    fn piecewise_digital_and_call_converge() {
        let m = MarketParams::default();
        let d = payoff::digital_gt(100.0).unwrap();
        let e = smooth_estimate_piecewise(&m, &d, 200, 0.3, GridOrigin::Auto).unwrap();
        assert!((e.value - analytic::bs_digital(&m, 100.0)).abs() < 1e-3);
        let c = payoff::call(95.0).unwrap();
        let e = smooth_estimate_piecewise(&m, &c, 200, 0.3, GridOrigin::Zero).unwrap();
        assert!((e.value - analytic::bs_call(&m, 95.0)).abs() < 0.05);
    }
}
