//! Piecewise-smooth payoffs: values, one-sided limits, jumps and kinks.
//!
//! A payoff is a sequence of smooth segments separated by strictly increasing
//! positive breakpoints `s_1 < … < s_N`. Each breakpoint stores three numbers:
//! the left limit `f(s−)`, the actual value `f(s)` and the right limit `f(s+)`,
//! so that both one-sided jumps
//!
//! ```text
//! Δ₋f(s) = f(s) − f(s−)      Δ₊f(s) = f(s+) − f(s)
//! ```
//!
//! are defined for strict, weak and mixed digital conventions alike. Below zero
//! the payoff and its derivative are taken to vanish, so the point `0` carries a
//! right jump `f(0+) − f(0)` (usually zero) and a kink `f′(0+)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type Func = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Which digital claim is meant at a strike `a`: `1{X > a}` or `1{X ≥ a}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DigitalConvention {
    Strict,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    /// C¹ off the breakpoints, possibly with jumps.
    PiecewiseC1,
    /// f′ absolutely continuous on every segment; f″ supplied.
    AbsContDerivative,
    /// Three times continuously differentiable on all of (0, ∞).
    C3Smooth,
}

/// Certificate `|f′(a)| ≤ c1 + c2·a^p` for all `a ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyBound {
    pub p: f64,
    pub c1: f64,
    pub c2: f64,
}

impl PolyBound {
    pub fn new(p: f64, c1: f64, c2: f64) -> Self {
        Self { p, c1, c2 }
    }

    pub fn at(&self, a: f64) -> f64 {
        self.c1 + self.c2 * a.powf(self.p)
    }
}

/// Which named family a payoff came from, when it has one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffKind {
    Call(f64),
    Put(f64),
    DigitalGeq(f64),
    DigitalGt(f64),
    Straddle(f64),
    PowerCall4(f64),
    Butterfly(f64, f64, f64),
    Constant(f64),
    Identity,
    Custom,
}

/// One smooth piece of a payoff.
#[derive(Clone)]
pub struct Segment {
    value: Func,
    derivative: Func,
    second: Option<Func>,
}

impl Segment {
    pub fn new<F, D>(value: F, derivative: D) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            second: None,
        }
    }

    pub fn with_second<S>(mut self, second: S) -> Self
    where
        S: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.second = Some(Arc::new(second));
        self
    }

    /// Affine piece `intercept + slope·a`.
    pub fn affine(intercept: f64, slope: f64) -> Self {
        Self::new(move |a| intercept + slope * a, move |_| slope).with_second(|_| 0.0)
    }

    pub fn value(&self, a: f64) -> f64 {
        (self.value)(a)
    }

    pub fn derivative(&self, a: f64) -> f64 {
        (self.derivative)(a)
    }

    pub fn second(&self, a: f64) -> Option<f64> {
        self.second.as_ref().map(|s| s(a))
    }
}

impl fmt::Debug for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Segment")
            .field("has_second", &self.second.is_some())
            .finish()
    }
}

/// How the actual value at a breakpoint relates to its one-sided limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtBreak {
    /// f(s) = f(s−)
    Left,
    /// f(s) = f(s+)
    Right,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Breakpoint {
    pub at: f64,
    pub left: f64,
    pub value: f64,
    pub right: f64,
    pub left_slope: f64,
    pub right_slope: f64,
}

/// Jump data `(s, Δ₋f(s), Δ₊f(s))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jump {
    pub at: f64,
    pub minus: f64,
    pub plus: f64,
}

/// Outcome of the payoff-class check.
#[derive(Debug, Clone, PartialEq)]
pub struct PiCheck {
    pub ok: bool,
    pub diagnostic: Option<String>,
}

impl PiCheck {
    fn pass() -> Self {
        Self {
            ok: true,
            diagnostic: None,
        }
    }

    fn fail(msg: String) -> Self {
        Self {
            ok: false,
            diagnostic: Some(msg),
        }
    }

    pub fn into_result(self) -> Result<()> {
        match self.diagnostic {
            None => Ok(()),
            Some(d) => Err(Error::InvalidPayoff(d)),
        }
    }
}

#[derive(Clone)]
pub struct PiecewisePayoff {
    name: String,
    kind: PayoffKind,
    segments: Vec<Segment>,
    breakpoints: Vec<Breakpoint>,
    value_at_zero: f64,
    smoothness: Smoothness,
    poly_bound: Option<PolyBound>,
}

impl fmt::Debug for PiecewisePayoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PiecewisePayoff")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("breakpoints", &self.breakpoints)
            .field("smoothness", &self.smoothness)
            .field("poly_bound", &self.poly_bound)
            .finish()
    }
}

/// Incremental constructor; pieces and cuts must alternate, starting and ending
/// with a piece.
pub struct PayoffBuilder {
    name: String,
    kind: PayoffKind,
    segments: Vec<Segment>,
    cuts: Vec<(f64, AtBreak)>,
    value_at_zero: Option<f64>,
    smoothness: Smoothness,
    poly_bound: Option<PolyBound>,
}

impl PayoffBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: PayoffKind::Custom,
            segments: Vec::new(),
            cuts: Vec::new(),
            value_at_zero: None,
            smoothness: Smoothness::PiecewiseC1,
            poly_bound: None,
        }
    }

    pub fn piece(mut self, segment: Segment) -> Self {
        self.segments.push(segment);
        self
    }

    pub fn cut(mut self, at: f64, value: AtBreak) -> Self {
        self.cuts.push((at, value));
        self
    }

    /// Override f(0) when it differs from the first segment's value at 0.
    pub fn value_at_zero(mut self, v: f64) -> Self {
        self.value_at_zero = Some(v);
        self
    }

    pub fn smoothness(mut self, s: Smoothness) -> Self {
        self.smoothness = s;
        self
    }

    pub fn bound(mut self, b: PolyBound) -> Self {
        self.poly_bound = Some(b);
        self
    }

    pub fn kind(mut self, kind: PayoffKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn build(self) -> Result<PiecewisePayoff> {
        if self.segments.len() != self.cuts.len() + 1 {
            return Err(Error::InvalidPayoff(format!(
                "{}: {} segments need {} breakpoints, got {}",
                self.name,
                self.segments.len(),
                self.segments.len().saturating_sub(1),
                self.cuts.len()
            )));
        }
        let mut prev = 0.0;
        let mut breakpoints = Vec::with_capacity(self.cuts.len());
        for (k, &(at, ref rule)) in self.cuts.iter().enumerate() {
            if !(at.is_finite() && at > prev) {
                return Err(Error::InvalidPayoff(format!(
                    "{}: breakpoints must be positive and strictly increasing (index {k}, value {at})",
                    self.name
                )));
            }
            prev = at;
            let (lseg, rseg) = (&self.segments[k], &self.segments[k + 1]);
            let left = lseg.value(at);
            let right = rseg.value(at);
            let value = match *rule {
                AtBreak::Left => left,
                AtBreak::Right => right,
                AtBreak::Value(v) => v,
            };
            let bp = Breakpoint {
                at,
                left,
                value,
                right,
                left_slope: lseg.derivative(at),
                right_slope: rseg.derivative(at),
            };
            if ![bp.left, bp.value, bp.right, bp.left_slope, bp.right_slope]
                .iter()
                .all(|x| x.is_finite())
            {
                return Err(Error::InvalidPayoff(format!(
                    "{}: non-finite limits at breakpoint {at}",
                    self.name
                )));
            }
            breakpoints.push(bp);
        }
        let value_at_zero = self
            .value_at_zero
            .unwrap_or_else(|| self.segments[0].value(0.0));
        Ok(PiecewisePayoff {
            name: self.name,
            kind: self.kind,
            segments: self.segments,
            breakpoints,
            value_at_zero,
            smoothness: self.smoothness,
            poly_bound: self.poly_bound,
        })
    }
}

impl PiecewisePayoff {
    pub fn builder(name: impl Into<String>) -> PayoffBuilder {
        PayoffBuilder::new(name)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> PayoffKind {
        self.kind
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn poly_bound(&self) -> Option<PolyBound> {
        self.poly_bound
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Index of the segment whose open interval contains `a` (a breakpoint maps
    /// to the segment on its right).
    pub fn segment_index(&self, a: f64) -> usize {
        self.breakpoints.partition_point(|b| b.at <= a)
    }

    /// f(a); at a breakpoint the stored actual value, below 0 the zero extension.
    pub fn eval(&self, a: f64) -> f64 {
        if a < 0.0 {
            return 0.0;
        }
        if a == 0.0 {
            return self.value_at_zero;
        }
        if let Ok(k) = self.breakpoints.binary_search_by(|b| b.at.total_cmp(&a)) {
            return self.breakpoints[k].value;
        }
        self.segments[self.segment_index(a)].value(a)
    }

    /// f′(a) off the breakpoints; at a breakpoint the right derivative.
    pub fn derivative(&self, a: f64) -> f64 {
        if a < 0.0 {
            return 0.0;
        }
        self.segments[self.segment_index(a)].derivative(a)
    }

    pub fn second_derivative(&self, a: f64) -> Option<f64> {
        if a < 0.0 {
            return Some(0.0);
        }
        self.segments[self.segment_index(a)].second(a)
    }

    /// `f(a+)` and `f(a−)` evaluated from the adjoining segments.
    pub fn right_limit(&self, a: f64) -> f64 {
        if a < 0.0 {
            return 0.0;
        }
        self.segments[self.segment_index(a)].value(a)
    }

    pub fn left_limit(&self, a: f64) -> f64 {
        if a <= 0.0 {
            return 0.0;
        }
        let k = self.breakpoints.partition_point(|b| b.at < a);
        self.segments[k].value(a)
    }

    pub fn has_second_derivative(&self) -> bool {
        self.segments.iter().all(|s| s.second.is_some())
    }

    /// Breakpoints with non-zero jumps contribute `(s, Δ₋f, Δ₊f)`; continuous
    /// breakpoints contribute `(s, 0, 0)`. The point 0 is listed only when
    /// `f(0+) ≠ f(0)`.
    pub fn jumps(&self) -> Vec<Jump> {
        let mut out = Vec::with_capacity(self.breakpoints.len() + 1);
        let zero_plus = self.segments[0].value(0.0);
        if zero_plus != self.value_at_zero {
            out.push(Jump {
                at: 0.0,
                minus: 0.0,
                plus: zero_plus - self.value_at_zero,
            });
        }
        out.extend(self.breakpoints.iter().map(|b| Jump {
            at: b.at,
            minus: b.value - b.left,
            plus: b.right - b.value,
        }));
        out
    }

    /// Derivative jumps `f′(s+) − f′(s−)`, starting with `f′(0+)` at the origin.
    pub fn kinks(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.breakpoints.len() + 1);
        out.push((0.0, self.segments[0].derivative(0.0)));
        out.extend(
            self.breakpoints
                .iter()
                .map(|b| (b.at, b.right_slope - b.left_slope)),
        );
        out
    }

    /// Checks membership in the admissible payoff class: finitely many
    /// breakpoints with finite jumps, and a polynomial bound on f′ that holds
    /// on a log-spaced sample of `[1e-6, 1e6]` plus both sides of every
    /// breakpoint.
    pub fn validate_pi_class(&self) -> PiCheck {
        let Some(bound) = self.poly_bound else {
            return PiCheck::fail(format!("{}: no polynomial bound certificate", self.name));
        };
        if !(bound.p >= 0.0 && bound.c1 >= 0.0 && bound.c2 >= 0.0) {
            return PiCheck::fail(format!(
                "{}: bound coefficients must be non-negative, got {bound:?}",
                self.name
            ));
        }
        for j in self.jumps() {
            if !(j.minus.is_finite() && j.plus.is_finite()) {
                return PiCheck::fail(format!("{}: infinite jump at {}", self.name, j.at));
            }
        }
        const SAMPLES: usize = 2000;
        let (lo, hi) = (1e-6f64.ln(), 1e6f64.ln());
        let grid = (0..=SAMPLES).map(|i| (lo + (hi - lo) * i as f64 / SAMPLES as f64).exp());
        let near_breaks = self.breakpoints.iter().flat_map(|b| {
            let h = 1e-9 * b.at.max(1.0);
            [b.at - h, b.at, b.at + h]
        });
        for a in grid.chain(near_breaks) {
            let v = self.eval(a);
            let d = self.derivative(a);
            if !v.is_finite() || !d.is_finite() {
                return PiCheck::fail(format!("{}: non-finite value or slope at a = {a:e}", self.name));
            }
            let cap = bound.at(a);
            if d.abs() > cap * (1.0 + 1e-9) + 1e-12 {
                return PiCheck::fail(format!(
                    "{}: |f'({a:e})| = {:e} exceeds bound {cap:e}",
                    self.name,
                    d.abs()
                ));
            }
        }
        PiCheck::pass()
    }

    /// Bound on |f| over [0, x] implied by the derivative certificate and the jumps.
    pub fn value_bound(&self, x: f64) -> f64 {
        let b = self.poly_bound.unwrap_or(PolyBound::new(0.0, 0.0, 0.0));
        let jumps: f64 = self.jumps().iter().map(|j| j.minus.abs() + j.plus.abs()).sum();
        self.value_at_zero.abs() + jumps + b.c1 * x + b.c2 * x.powf(b.p + 1.0) / (b.p + 1.0)
    }
}

// ---- named payoffs ----

fn check_strike(k: f64) -> Result<f64> {
    if k.is_finite() && k > 0.0 {
        Ok(k)
    } else {
        Err(Error::InvalidPayoff(format!("strike must be positive, got {k}")))
    }
}

pub fn call(k: f64) -> Result<PiecewisePayoff> {
    let k = check_strike(k)?;
    PiecewisePayoff::builder(format!("call:{k}"))
        .piece(Segment::affine(0.0, 0.0))
        .cut(k, AtBreak::Left)
        .piece(Segment::affine(-k, 1.0))
        .smoothness(Smoothness::AbsContDerivative)
        .bound(PolyBound::new(0.0, 1.0, 0.0))
        .kind(PayoffKind::Call(k))
        .build()
}

pub fn put(k: f64) -> Result<PiecewisePayoff> {
    let k = check_strike(k)?;
    PiecewisePayoff::builder(format!("put:{k}"))
        .piece(Segment::affine(k, -1.0))
        .cut(k, AtBreak::Left)
        .piece(Segment::affine(0.0, 0.0))
        .smoothness(Smoothness::AbsContDerivative)
        .bound(PolyBound::new(0.0, 1.0, 0.0))
        .kind(PayoffKind::Put(k))
        .build()
}

/// `1{a ≥ k}`
pub fn digital_geq(k: f64) -> Result<PiecewisePayoff> {
    let k = check_strike(k)?;
    PiecewisePayoff::builder(format!("digital_geq:{k}"))
        .piece(Segment::affine(0.0, 0.0))
        .cut(k, AtBreak::Right)
        .piece(Segment::affine(1.0, 0.0))
        .smoothness(Smoothness::PiecewiseC1)
        .bound(PolyBound::new(0.0, 0.0, 0.0))
        .kind(PayoffKind::DigitalGeq(k))
        .build()
}

/// `1{a > k}`
pub fn digital_gt(k: f64) -> Result<PiecewisePayoff> {
    let k = check_strike(k)?;
    PiecewisePayoff::builder(format!("digital_gt:{k}"))
        .piece(Segment::affine(0.0, 0.0))
        .cut(k, AtBreak::Left)
        .piece(Segment::affine(1.0, 0.0))
        .smoothness(Smoothness::PiecewiseC1)
        .bound(PolyBound::new(0.0, 0.0, 0.0))
        .kind(PayoffKind::DigitalGt(k))
        .build()
}

pub fn straddle(k: f64) -> Result<PiecewisePayoff> {
    let k = check_strike(k)?;
    PiecewisePayoff::builder(format!("straddle:{k}"))
        .piece(Segment::affine(k, -1.0))
        .cut(k, AtBreak::Left)
        .piece(Segment::affine(-k, 1.0))
        .smoothness(Smoothness::AbsContDerivative)
        .bound(PolyBound::new(0.0, 1.0, 0.0))
        .kind(PayoffKind::Straddle(k))
        .build()
}

/// `((a − k)⁺)⁴`, three times continuously differentiable.
pub fn power_call4(k: f64) -> Result<PiecewisePayoff> {
    let k = check_strike(k)?;
    let above = Segment::new(
        move |a| (a - k).powi(4),
        move |a| 4.0 * (a - k).powi(3),
    )
    .with_second(move |a| 12.0 * (a - k).powi(2));
    PiecewisePayoff::builder(format!("powercall4:{k}"))
        .piece(Segment::affine(0.0, 0.0))
        .cut(k, AtBreak::Left)
        .piece(above)
        .smoothness(Smoothness::C3Smooth)
        .bound(PolyBound::new(3.0, 0.0, 4.0))
        .kind(PayoffKind::PowerCall4(k))
        .build()
}

/// `(a − k1)⁺ − 2(a − k2)⁺ + (a − k3)⁺`
pub fn butterfly(k1: f64, k2: f64, k3: f64) -> Result<PiecewisePayoff> {
    let (k1, k2, k3) = (check_strike(k1)?, check_strike(k2)?, check_strike(k3)?);
    if !(k1 < k2 && k2 < k3) {
        return Err(Error::InvalidPayoff(format!(
            "butterfly strikes must increase, got {k1},{k2},{k3}"
        )));
    }
    PiecewisePayoff::builder(format!("butterfly:{k1},{k2},{k3}"))
        .piece(Segment::affine(0.0, 0.0))
        .cut(k1, AtBreak::Left)
        .piece(Segment::affine(-k1, 1.0))
        .cut(k2, AtBreak::Left)
        .piece(Segment::affine(2.0 * k2 - k1, -1.0))
        .cut(k3, AtBreak::Left)
        .piece(Segment::affine(2.0 * k2 - k1 - k3, 0.0))
        .smoothness(Smoothness::AbsContDerivative)
        .bound(PolyBound::new(0.0, 1.0, 0.0))
        .kind(PayoffKind::Butterfly(k1, k2, k3))
        .build()
}

pub fn constant(c: f64) -> Result<PiecewisePayoff> {
    PiecewisePayoff::builder(format!("constant:{c}"))
        .piece(Segment::affine(c, 0.0).with_second(|_| 0.0))
        .smoothness(Smoothness::C3Smooth)
        .bound(PolyBound::new(0.0, 0.0, 0.0))
        .kind(PayoffKind::Constant(c))
        .build()
}

/// `f(a) = a`, the stock itself.
pub fn identity() -> Result<PiecewisePayoff> {
    PiecewisePayoff::builder("identity")
        .piece(Segment::affine(0.0, 1.0))
        .smoothness(Smoothness::C3Smooth)
        .bound(PolyBound::new(0.0, 1.0, 0.0))
        .kind(PayoffKind::Identity)
        .build()
}

/// Resolve a payoff id such as `call:100` or `butterfly:90,100,110`.
pub fn from_id(id: &str) -> Result<PiecewisePayoff> {
    let (name, args) = match id.split_once(':') {
        Some((n, a)) => (n.trim(), a.trim()),
        None => (id.trim(), ""),
    };
    let nums: Vec<f64> = if args.is_empty() {
        Vec::new()
    } else {
        args.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidPayoff(format!("bad number {s:?} in payoff id {id:?}")))
            })
            .collect::<Result<_>>()?
    };
    let one = || -> Result<f64> {
        match nums.as_slice() {
            [k] => Ok(*k),
            _ => Err(Error::InvalidPayoff(format!("payoff id {id:?} needs exactly one strike"))),
        }
    };
    match name {
        "call" => call(one()?),
        "put" => put(one()?),
        "digital_geq" => digital_geq(one()?),
        "digital_gt" => digital_gt(one()?),
        "straddle" => straddle(one()?),
        "powercall4" => power_call4(one()?),
        "butterfly" => match nums.as_slice() {
            [a, b, c] => butterfly(*a, *b, *c),
            _ => Err(Error::InvalidPayoff(format!("payoff id {id:?} needs three strikes"))),
        },
        "constant" => constant(one()?),
        "identity" => identity(),
        _ => Err(Error::InvalidPayoff(format!("unknown payoff id {id:?}"))),
    }
}
