//! The generalized n-period binomial model with up/down factors
//! `u = exp(σ√Δt + λσ²Δt)`, `d = exp(−σ√Δt + λσ²Δt)`, and exact pricing by
//! summation over the terminal distribution.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::MarketParams;
use crate::payoff::{DigitalConvention, PiecewisePayoff};

/// Relative tolerance for deciding that a strike sits on a terminal price.
pub const NODE_REL_TOL: f64 = 1e-12;

/// How λ is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// λ = 0
    Crr,
    /// λ = r/σ² − 1/2
    JarrowRudd,
    /// λ centering the lattice on Tian's moment-matched tree.
    Tian,
    Custom(f64),
    /// Strike at the geometric mean of two adjacent terminal prices.
    Centered(f64),
    /// Strike exactly on a terminal price.
    Nodal(f64),
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Crr => write!(f, "crr"),
            Scheme::JarrowRudd => write!(f, "jr"),
            Scheme::Tian => write!(f, "tian"),
            Scheme::Custom(l) => write!(f, "custom:{l}"),
            Scheme::Centered(k) => write!(f, "centered:{k}"),
            Scheme::Nodal(k) => write!(f, "nodal:{k}"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim().to_ascii_lowercase(), Some(a.trim())),
            None => (s.to_ascii_lowercase(), None),
        };
        let num = |a: Option<&str>| -> Result<f64> {
            a.ok_or_else(|| Error::InvalidArgument(format!("scheme {s:?} needs a numeric argument")))?
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad numeric argument in scheme {s:?}")))
        };
        match (name.as_str(), arg) {
            ("crr", None) => Ok(Scheme::Crr),
            ("jr" | "jarrow_rudd", None) => Ok(Scheme::JarrowRudd),
            ("tian", None) => Ok(Scheme::Tian),
            ("custom", a) => Ok(Scheme::Custom(num(a)?)),
            ("centered", a) => Ok(Scheme::Centered(num(a)?)),
            ("nodal", a) => Ok(Scheme::Nodal(num(a)?)),
            _ => Err(Error::InvalidArgument(format!("unknown scheme {s:?}"))),
        }
    }
}

/// An n-period lattice: tilt, step factors, martingale probability and the
/// ascending terminal prices `S₀uʲdⁿ⁻ʲ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeSpec {
    pub market: MarketParams,
    pub scheme: Scheme,
    pub n: usize,
    pub lambda: f64,
    pub dt: f64,
    pub up: f64,
    pub down: f64,
    pub p: f64,
    pub terminal_prices: Vec<f64>,
}

impl LatticeSpec {
    pub fn ln_up(&self) -> f64 {
        self.up.ln()
    }

    pub fn ln_down(&self) -> f64 {
        self.down.ln()
    }

    pub fn discount(&self) -> f64 {
        self.market.discount()
    }

    /// Position of `strike` in units of the log step, measured from the lowest
    /// terminal price: node `j` sits at exactly `j`.
    pub fn node_coordinate(&self, strike: f64) -> f64 {
        let (lu, ld) = (self.ln_up(), self.ln_down());
        ((strike / self.market.spot).ln() - self.n as f64 * ld) / (lu - ld)
    }

    /// Index of the terminal price equal to `strike` within [`NODE_REL_TOL`].
    pub fn node_index(&self, strike: f64) -> Option<usize> {
        let j = self.node_coordinate(strike).round();
        if j < 0.0 || j > self.n as f64 {
            return None;
        }
        let j = j as usize;
        ((self.terminal_prices[j] - strike).abs() <= NODE_REL_TOL * strike).then_some(j)
    }

    /// First index whose terminal price is ≥ (weak) or > (strict) the strike.
    pub fn first_exercised(&self, strike: f64, conv: DigitalConvention) -> usize {
        match conv {
            DigitalConvention::Weak => self
                .terminal_prices
                .partition_point(|&s| s < strike * (1.0 - NODE_REL_TOL)),
            DigitalConvention::Strict => self
                .terminal_prices
                .partition_point(|&s| s <= strike * (1.0 + NODE_REL_TOL)),
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("lattice needs n ≥ 1 periods".into()));
    }
    Ok(())
}

/// Tilt placing `strike` at the geometric midpoint of terminal prices `j₀−1`
/// and `j₀`, where `j₀ = ⌈γ̃⌉` and `γ̃ = (log(a/S₀) + nσ√Δt)/(2σ√Δt)`.
///
/// `|λ| ≤ 1/(σ√(Tn))` always holds; `j₀` is not clipped to `[1, n]`, so the
/// midpoint property holds for strikes outside the lattice range as well.
pub fn lambda_centered(strike: f64, m: &MarketParams, n: usize) -> Result<f64> {
    check_n(n)?;
    if !(strike.is_finite() && strike > 0.0) {
        return Err(Error::InvalidArgument(format!("strike must be positive, got {strike}")));
    }
    let dt = m.maturity / n as f64;
    let step = m.volatility * dt.sqrt();
    let j0 = centered_upper_index(strike, m, n) as f64;
    let lambda = ((strike / m.spot).ln() - (2.0 * j0 - 1.0 - n as f64) * step)
        / (n as f64 * m.volatility * m.volatility * dt);
    let cap = 1.0 / (m.volatility * (m.maturity * n as f64).sqrt());
    assert!(
        lambda.abs() <= cap * (1.0 + 1e-9),
        "centered tilt {lambda} exceeds its bound {cap}"
    );
    Ok(lambda)
}

/// Index `j₀ = ⌈γ̃⌉` of the terminal price just above a centered strike.
/// γ̃ within 1e-9 of an integer is taken as that integer.
pub fn centered_upper_index(strike: f64, m: &MarketParams, n: usize) -> i64 {
    let dt = m.maturity / n as f64;
    let step = m.volatility * dt.sqrt();
    let gamma = ((strike / m.spot).ln() + n as f64 * step) / (2.0 * step);
    let nearest = gamma.round();
    if (gamma - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        nearest as i64
    } else {
        gamma.ceil() as i64
    }
}

/// Tilt placing `strike` exactly on the nearest terminal price.
pub fn lambda_nodal(strike: f64, m: &MarketParams, n: usize) -> Result<f64> {
    check_n(n)?;
    if !(strike.is_finite() && strike > 0.0) {
        return Err(Error::InvalidArgument(format!("strike must be positive, got {strike}")));
    }
    let dt = m.maturity / n as f64;
    let step = m.volatility * dt.sqrt();
    let log_k = (strike / m.spot).ln();
    let j = ((log_k + n as f64 * step) / (2.0 * step)).round();
    Ok((log_k - (2.0 * j - n as f64) * step) / (n as f64 * m.volatility * m.volatility * dt))
}

/// λ reproducing the geometric centre of Tian's tree.
///
/// Tian matches the first three moments of the one-step log-normal return:
/// with `R = e^{rΔt}`, `v = e^{σ²Δt}`,
/// `u = Rv/2·(v + 1 + √(v² + 2v − 3))`, `d = Rv/2·(v + 1 − √(v² + 2v − 3))`.
/// The generalized class fixes `log(u/d) = 2σ√Δt`, so only the centre
/// `(log u + log d)/2 = λσ²Δt` can be matched.
pub fn lambda_tian(m: &MarketParams, n: usize) -> f64 {
    let dt = m.maturity / n as f64;
    let r = (m.rate * dt).exp();
    let v = (m.volatility * m.volatility * dt).exp();
    let root = (v * v + 2.0 * v - 3.0).sqrt();
    let u = 0.5 * r * v * (v + 1.0 + root);
    let d = 0.5 * r * v * (v + 1.0 - root);
    (u.ln() + d.ln()) / (2.0 * m.volatility * m.volatility * dt)
}

pub fn build_lattice(m: &MarketParams, n: usize, scheme: Scheme) -> Result<LatticeSpec> {
    m.validate()?;
    check_n(n)?;
    let sigma = m.volatility;
    let lambda = match scheme {
        Scheme::Crr => 0.0,
        Scheme::JarrowRudd => m.rate / (sigma * sigma) - 0.5,
        Scheme::Tian => lambda_tian(m, n),
        Scheme::Custom(l) => l,
        Scheme::Centered(k) => lambda_centered(k, m, n)?,
        Scheme::Nodal(k) => lambda_nodal(k, m, n)?,
    };
    if !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be finite, got {lambda}")));
    }
    let dt = m.maturity / n as f64;
    let step = sigma * dt.sqrt();
    let drift = lambda * sigma * sigma * dt;
    let (ln_u, ln_d) = (step + drift, -step + drift);
    // p = (e^{rΔt} − d)/(u − d), differences taken without cancellation
    let growth = (m.rate * dt).exp_m1();
    let (um1, dm1) = (ln_u.exp_m1(), ln_d.exp_m1());
    let p = (growth - dm1) / (um1 - dm1);
    if !(dm1 < growth && growth < um1) || !(p > 0.0 && p < 1.0) {
        return Err(Error::Arbitrage { lambda, n });
    }
    let terminal_prices = (0..=n)
        .map(|j| m.spot * (j as f64 * ln_u + (n - j) as f64 * ln_d).exp())
        .collect();
    Ok(LatticeSpec {
        market: *m,
        scheme,
        n,
        lambda,
        dt,
        up: ln_u.exp(),
        down: ln_d.exp(),
        p,
        terminal_prices,
    })
}

/// Binomial(n, p) probabilities of the terminal nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalDistribution {
    pub probs: Vec<f64>,
    pub log_probs: Vec<f64>,
}

fn ln_choose(n: usize, k: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// pmf by the ratio recursion `P[j+1] = P[j]·(n−j)/(j+1)·p/(1−p)`, run outward
/// from the mode whose value is seeded in log space. Terms that underflow are
/// exact zeros in `probs` but keep finite values in `log_probs`.
pub fn terminal_pmf(spec: &LatticeSpec) -> TerminalDistribution {
    let n = spec.n;
    let p = spec.p;
    let q = 1.0 - p;
    let (ln_p, ln_q) = (p.ln(), (-p).ln_1p());
    let odds = p / q;
    let ln_odds = ln_p - ln_q;
    let mode = (((n + 1) as f64 * p).floor() as usize).min(n);

    let mut log_probs = vec![0.0; n + 1];
    log_probs[mode] = ln_choose(n, mode) + mode as f64 * ln_p + (n - mode) as f64 * ln_q;
    for j in mode..n {
        log_probs[j + 1] = log_probs[j] + (((n - j) as f64) / ((j + 1) as f64)).ln() + ln_odds;
    }
    for j in (1..=mode).rev() {
        log_probs[j - 1] = log_probs[j] + ((j as f64) / ((n - j + 1) as f64)).ln() - ln_odds;
    }

    let mut probs = vec![0.0; n + 1];
    probs[mode] = log_probs[mode].exp();
    for j in mode..n {
        probs[j + 1] = probs[j] * ((n - j) as f64 / (j + 1) as f64) * odds;
    }
    for j in (1..=mode).rev() {
        probs[j - 1] = probs[j] * (j as f64 / (n - j + 1) as f64) / odds;
    }
    // the mode seed carries lgamma's absolute error; normalise it away
    let total: f64 = probs.iter().sum();
    for v in &mut probs {
        *v /= total;
    }
    let shift = total.ln();
    for v in &mut log_probs {
        *v -= shift;
    }
    TerminalDistribution { probs, log_probs }
}

/// A lattice together with its terminal distribution and the suffix sums that
/// make digital and call prices O(log n) lookups.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub spec: LatticeSpec,
    pub dist: TerminalDistribution,
    /// survival[j] = Σ_{i ≥ j} probs[i]; survival[n+1] = 0
    survival: Vec<f64>,
    /// Σ_{i ≥ j} probs[i]·S_i
    moment: Vec<f64>,
}

impl Lattice {
    pub fn new(spec: LatticeSpec) -> Self {
        let dist = terminal_pmf(&spec);
        let n = spec.n;
        let mut survival = vec![0.0; n + 2];
        let mut moment = vec![0.0; n + 2];
        for j in (0..=n).rev() {
            survival[j] = survival[j + 1] + dist.probs[j];
            moment[j] = moment[j + 1] + dist.probs[j] * spec.terminal_prices[j];
        }
        Self {
            spec,
            dist,
            survival,
            moment,
        }
    }

    pub fn build(m: &MarketParams, n: usize, scheme: Scheme) -> Result<Self> {
        Ok(Self::new(build_lattice(m, n, scheme)?))
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    /// Q(S_T ≥ S_j), undiscounted.
    pub fn survival_from(&self, j: usize) -> f64 {
        self.survival[j.min(self.spec.n + 1)]
    }

    pub fn digital(&self, strike: f64, conv: DigitalConvention) -> f64 {
        self.spec.discount() * self.survival_from(self.spec.first_exercised(strike, conv))
    }

    /// Call price by the suffix sums; `strike ≤ 0` yields `S₀`.
    pub fn call(&self, strike: f64) -> f64 {
        if strike <= 0.0 {
            return self.spec.discount() * self.moment[0];
        }
        let j = self.spec.first_exercised(strike, DigitalConvention::Strict);
        (self.spec.discount() * (self.moment[j] - strike * self.survival[j])).max(0.0)
    }

    pub fn price(&self, payoff: &PiecewisePayoff) -> f64 {
        let s = &self.spec.terminal_prices;
        let sum: f64 = self
            .dist
            .probs
            .iter()
            .zip(s)
            .map(|(p, &x)| p * eval_at_node(payoff, x))
            .sum();
        self.spec.discount() * sum
    }

    /// Call price by direct summation of `(S_j − a)⁺`.
    pub fn call_direct(&self, strike: f64) -> f64 {
        let sum: f64 = self
            .dist
            .probs
            .iter()
            .zip(&self.spec.terminal_prices)
            .map(|(p, &x)| p * (x - strike).max(0.0))
            .sum();
        self.spec.discount() * sum
    }
}

/// `f(x)` at a terminal price, with `x` taken as the breakpoint it matches
/// within [`NODE_REL_TOL`], so rounding in `S₀uʲdⁿ⁻ʲ` cannot move a node
/// across a jump.
pub fn eval_at_node(payoff: &PiecewisePayoff, x: f64) -> f64 {
    match payoff
        .breakpoints()
        .iter()
        .find(|b| (b.at - x).abs() <= NODE_REL_TOL * b.at)
    {
        Some(b) => payoff.eval(b.at),
        None => payoff.eval(x),
    }
}

pub fn lattice_price_digital(lattice: &Lattice, strike: f64, conv: DigitalConvention) -> f64 {
    lattice.digital(strike, conv)
}

pub fn lattice_price_payoff(lattice: &Lattice, payoff: &PiecewisePayoff) -> f64 {
    lattice.price(payoff)
}

/// Backward induction through all n layers. O(n²); used as a cross-check of
/// the terminal-summation pricer.
pub fn backward_induction_price(spec: &LatticeSpec, payoff: &PiecewisePayoff) -> f64 {
    let step_discount = (-spec.market.rate * spec.dt).exp();
    let mut values: Vec<f64> = spec.terminal_prices.iter().map(|&x| eval_at_node(payoff, x)).collect();
    for layer in (0..spec.n).rev() {
        for j in 0..=layer {
            values[j] = step_discount * (spec.p * values[j + 1] + (1.0 - spec.p) * values[j]);
        }
        values.truncate(layer + 1);
    }
    values[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payoff;

    fn market() -> MarketParams {
        MarketParams::default()
    }

    #[test]
    fn one_step_crr_by_hand() {
        let spec = build_lattice(&market(), 1, Scheme::Crr).unwrap();
        assert!((spec.up - 0.2f64.exp()).abs() < 1e-15);
        assert!((spec.down - (-0.2f64).exp()).abs() < 1e-15);
        let p = (0.05f64.exp() - (-0.2f64).exp()) / (0.2f64.exp() - (-0.2f64).exp());
        assert!((spec.p - p).abs() < 1e-15);
        assert!((spec.p - 0.5775).abs() < 1e-4);

        let lat = Lattice::new(spec);
        let c = lat.price(&payoff::call(100.0).unwrap());
        let by_hand = (-0.05f64).exp() * p * (100.0 * 0.2f64.exp() - 100.0);
        assert!((c - by_hand).abs() < 1e-12);
        assert!((c - 12.16).abs() < 1e-2);
    }

    #[test]
    fn scheme_tilts() {
        let m = market();
        let jr = build_lattice(&m, 10, Scheme::JarrowRudd).unwrap();
        assert!((jr.lambda - 0.75).abs() < 1e-12);
        for n in [1, 7, 100] {
            let crr = build_lattice(&m, n, Scheme::Crr).unwrap();
            assert!((crr.up * crr.down - 1.0).abs() < 1e-15);
        }
        // Tian's u·d = R²v² gives λ = r/σ² + 1 exactly
        let tian = build_lattice(&m, 50, Scheme::Tian).unwrap();
        assert!((tian.lambda - (0.05 / 0.04 + 1.0)).abs() < 1e-9);
        let custom = build_lattice(&m, 5, Scheme::Custom(0.3)).unwrap();
        assert_eq!(custom.lambda, 0.3);
    }

    #[test]
    fn arbitrage_band_enforced() {
        let err = build_lattice(&market(), 1, Scheme::Custom(40.0)).unwrap_err();
        assert_eq!(err, Error::Arbitrage { lambda: 40.0, n: 1 });
        assert!(build_lattice(&market(), 1, Scheme::Custom(-40.0)).is_err());
        assert!(build_lattice(&market(), 0, Scheme::Crr).is_err());
    }

    #[test]
    fn martingale_identity_per_step() {
        let m = market();
        for scheme in [Scheme::Crr, Scheme::JarrowRudd, Scheme::Tian, Scheme::Centered(93.0)] {
            for n in [1, 2, 50, 1000, 10_000] {
                let s = build_lattice(&m, n, scheme).unwrap();
                let lhs = s.p * s.up + (1.0 - s.p) * s.down;
                let rhs = (m.rate * s.dt).exp();
                assert!((lhs - rhs).abs() <= 1e-14 * rhs, "{scheme} n={n}");
                assert!(s.terminal_prices.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn pmf_small_cases() {
        let spec = build_lattice(&market(), 1, Scheme::Crr).unwrap();
        let d = terminal_pmf(&spec);
        assert!((d.probs[1] - spec.p).abs() < 1e-15);
        assert!((d.probs[0] - (1.0 - spec.p)).abs() < 1e-15);

        let mut sym = build_lattice(&market(), 2, Scheme::Crr).unwrap();
        sym.p = 0.5;
        let d = terminal_pmf(&sym);
        for (got, want) in d.probs.iter().zip([0.25, 0.5, 0.25]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn pmf_large_n_is_stable() {
        for p in [1e-3, 0.3, 0.5, 0.97] {
            let mut spec = build_lattice(&market(), 10_000, Scheme::Crr).unwrap();
            spec.p = p;
            let d = terminal_pmf(&spec);
            let sum: f64 = d.probs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(d.probs.iter().all(|&x| x >= 0.0 && x.is_finite()));
            assert!(d.log_probs.iter().all(|x| x.is_finite()));
            // spot-check a bulk term against direct log evaluation
            let j = (10_000.0 * p) as usize;
            let direct = ln_choose(10_000, j) + j as f64 * p.ln() + (10_000 - j) as f64 * (1.0 - p).ln();
            assert!((d.log_probs[j] - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn centered_midpoint_and_bound() {
        let m = market();
        for &k in &[60.0, 93.0, 100.0, 104.7, 180.0] {
            for &n in &[1usize, 2, 10, 101, 1000] {
                let lambda = lambda_centered(k, &m, n).unwrap();
                let cap = 1.0 / (m.volatility * (m.maturity * n as f64).sqrt());
                assert!(lambda.abs() <= cap * (1.0 + 1e-12));
                let spec = build_lattice(&m, n, Scheme::Centered(k)).unwrap();
                let j0 = centered_upper_index(k, &m, n);
                let (lu, ld) = (spec.ln_up(), spec.ln_down());
                let node = |j: i64| m.spot * (j as f64 * lu + (n as i64 - j) as f64 * ld).exp();
                let mid = (node(j0 - 1) * node(j0)).sqrt();
                assert!((mid - k).abs() <= 1e-10 * k, "k={k} n={n}");
            }
        }
        let l = lambda_centered(100.0, &m, 10).unwrap();
        assert!(l.abs() <= 1.0 / (0.2 * 10f64.sqrt()) * (1.0 + 1e-12));
    }

    #[test]
    fn centered_with_integer_gamma() {
        // a = S₀ u₀^{2j−n}, with u₀ = e^{σ√Δt}, makes γ̃ = j exactly
        let m = market();
        let n = 10;
        let step = 0.2 * (0.1f64).sqrt();
        let k = 100.0 * (2.0 * step).exp(); // γ̃ = (2step + 10 step)/(2 step) = 6
        let spec = build_lattice(&m, n, Scheme::Centered(k)).unwrap();
        assert_eq!(centered_upper_index(k, &m, n), 6);
        let s = &spec.terminal_prices;
        assert!(((s[5] * s[6]).sqrt() - k).abs() < 1e-10 * k);
    }

    #[test]
    fn nodal_lattice_places_strike_on_node() {
        let m = market();
        for &k in &[95.0, 105.0, 120.0] {
            for &n in &[3usize, 100, 1600] {
                let spec = build_lattice(&m, n, Scheme::Nodal(k)).unwrap();
                assert!(spec.node_index(k).is_some(), "k={k} n={n}");
            }
        }
    }

    #[test]
    fn digital_edge_cases() {
        let m = market();
        let lat = Lattice::build(&m, 20, Scheme::Crr).unwrap();
        let lo = lat.spec.terminal_prices[0];
        let hi = lat.spec.terminal_prices[20];
        assert_eq!(lat.digital(lo * 0.9, DigitalConvention::Strict), m.discount() * lat.survival_from(0));
        assert!((lat.digital(lo * 0.9, DigitalConvention::Weak) - m.discount()).abs() < 1e-15);
        assert_eq!(lat.digital(hi * 1.1, DigitalConvention::Weak), 0.0);
        // on a node the two conventions differ by that node's mass
        let j = 10;
        let k = lat.spec.terminal_prices[j];
        let gap = lat.digital(k, DigitalConvention::Weak) - lat.digital(k, DigitalConvention::Strict);
        assert!((gap - m.discount() * lat.dist.probs[j]).abs() < 1e-15);
        assert_eq!(lat.spec.node_index(k), Some(j));
        assert_eq!(lat.spec.node_index(k * (1.0 + 1e-6)), None);
    }

    #[test]
    fn bond_stock_and_parity() {
        let m = market();
        for scheme in [Scheme::Crr, Scheme::JarrowRudd, Scheme::Tian, Scheme::Centered(100.0)] {
            for n in [1, 3, 64, 1000, 10_000] {
                let lat = Lattice::build(&m, n, scheme).unwrap();
                let bond = lat.price(&payoff::constant(1.0).unwrap());
                assert!((bond - m.discount()).abs() < 1e-14);
                let stock = lat.price(&payoff::identity().unwrap());
                assert!((stock - m.spot).abs() <= 1e-12 * m.spot, "{scheme} n={n}: {stock}");
                let k = 97.0;
                let c = lat.price(&payoff::call(k).unwrap());
                let p = lat.price(&payoff::put(k).unwrap());
                assert!(((c - p) - (m.spot - k * m.discount())).abs() <= 1e-12 * m.spot);
                assert!((lat.call(k) - c).abs() <= 1e-12 * m.spot);
            }
        }
    }

    #[test]
    fn backward_induction_agrees() {
        let m = market();
        let payoffs = [
            payoff::call(100.0).unwrap(),
            payoff::put(90.0).unwrap(),
            payoff::digital_geq(105.0).unwrap(),
            payoff::power_call4(100.0).unwrap(),
        ];
        for scheme in [Scheme::Crr, Scheme::JarrowRudd, Scheme::Tian] {
            for n in [1, 2, 17, 500] {
                let lat = Lattice::build(&m, n, scheme).unwrap();
                for f in &payoffs {
                    let a = lat.price(f);
                    let b = backward_induction_price(&lat.spec, f);
                    assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300) + 1e-15, "{} {scheme} {n}", f.name());
                }
            }
        }
    }

    #[test]
    fn scheme_ids_round_trip() {
        for s in ["crr", "jr", "tian", "custom:0.25", "centered:95", "nodal:105"] {
            let parsed: Scheme = s.parse().unwrap();
            assert_eq!(parsed.to_string().parse::<Scheme>().unwrap(), parsed);
        }
        assert_eq!("JARROW_RUDD".parse::<Scheme>().unwrap(), Scheme::JarrowRudd);
        assert!("centered".parse::<Scheme>().is_err());
        assert!("hull".parse::<Scheme>().is_err());
    }

    #[test]
    fn rounded_node_keeps_its_jump_side() {
        // S_197 rounds to 95 + 1.4e-14 on this lattice
        let lat = Lattice::build(&market(), 400, Scheme::Nodal(95.0)).unwrap();
        let j = lat.spec.node_index(95.0).unwrap();
        assert_ne!(lat.spec.terminal_prices[j], 95.0);
        let gt = payoff::digital_gt(95.0).unwrap();
        let geq = payoff::digital_geq(95.0).unwrap();
        assert!((lat.price(&gt) - lat.digital(95.0, DigitalConvention::Strict)).abs() < 1e-15);
        assert!((lat.price(&geq) - lat.digital(95.0, DigitalConvention::Weak)).abs() < 1e-15);
        let bi = backward_induction_price(&lat.spec, &gt);
        assert!((bi - lat.price(&gt)).abs() < 1e-12);
    }
}
