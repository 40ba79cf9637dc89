//! Study configuration and its flat `key = value` file format.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::composite::DEFAULT_ALPHA;
use crate::error::{Error, Result};
use crate::lattice::Scheme;
use crate::market::MarketParams;
use crate::payoff::{self, PiecewisePayoff};

/// How approximate prices are produced along the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StudyMode {
    /// Terminal-distribution lattice prices.
    Direct,
    /// The digital representation formula over the lattice digital curve.
    Repform,
    /// The composite estimator on per-strike centered lattices.
    Smooth,
    /// Direct prices plus the predicted error from the expansions.
    ExpansionCheck,
}

impl fmt::Display for StudyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StudyMode::Direct => "DIRECT",
            StudyMode::Repform => "REPFORM",
            StudyMode::Smooth => "SMOOTH",
            StudyMode::ExpansionCheck => "EXPANSION_CHECK",
        })
    }
}

impl FromStr for StudyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "DIRECT" => Ok(StudyMode::Direct),
            "REPFORM" => Ok(StudyMode::Repform),
            "SMOOTH" => Ok(StudyMode::Smooth),
            "EXPANSION_CHECK" | "EXPANSION" => Ok(StudyMode::ExpansionCheck),
            _ => Err(Error::Config(format!(
                "unknown mode {s:?}; expected DIRECT, REPFORM, SMOOTH or EXPANSION_CHECK"
            ))),
        }
    }
}

/// Numerical tolerances used by a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Tolerance handed to `price_via_digitals` in REPFORM mode.
    pub repform_tol: f64,
    /// Relative tolerance of the quadrature reference price.
    pub oracle_tol: f64,
    /// Largest median `|r_{2n}/r_n|` accepted by the residual check.
    pub residual_ratio_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            repform_tol: crate::repform::LATTICE_TOL,
            oracle_tol: 1e-12,
            residual_ratio_max: 0.45,
        }
    }
}

pub const DEFAULT_LADDER: [usize; 6] = [100, 200, 400, 800, 1600, 3200];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyConfig {
    pub market: MarketParams,
    pub payoff_id: String,
    pub scheme: Scheme,
    pub n_ladder: Vec<usize>,
    pub mode: StudyMode,
    pub alpha: f64,
    pub output_path: Option<PathBuf>,
    pub tolerances: Tolerances,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            market: MarketParams::default(),
            payoff_id: "call:100".into(),
            scheme: Scheme::Crr,
            n_ladder: DEFAULT_LADDER.to_vec(),
            mode: StudyMode::Direct,
            alpha: DEFAULT_ALPHA,
            output_path: None,
            tolerances: Tolerances::default(),
        }
    }
}

/// Keys accepted in a config file; the market fields appear flattened.
pub const CONFIG_KEYS: [&str; 13] = [
    "spot",
    "volatility",
    "rate",
    "maturity",
    "payoff_id",
    "scheme",
    "n_ladder",
    "mode",
    "alpha",
    "output_path",
    "repform_tol",
    "oracle_tol",
    "residual_ratio_max",
];

/// Parse a comma-separated ladder such as `100,200,400`.
pub fn parse_ladder(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad ladder entry {x:?}")))
        })
        .collect()
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| Error::Config(format!("{key}: not a number: {v:?}")))
}

impl StudyConfig {
    /// Parse the flat `key = value` format. Blank lines and lines starting
    /// with `#` are ignored; unknown or repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = StudyConfig::default();
        let mut seen: Vec<&str> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let known = CONFIG_KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| Error::Config(format!("line {}: unknown key {key:?}", i + 1)))?;
            if seen.contains(known) {
                return Err(Error::Config(format!("line {}: key {key:?} given twice", i + 1)));
            }
            seen.push(known);
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    /// Set one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "spot" => self.market.spot = parse_f64(key, value)?,
            "volatility" => self.market.volatility = parse_f64(key, value)?,
            "rate" => self.market.rate = parse_f64(key, value)?,
            "maturity" => self.market.maturity = parse_f64(key, value)?,
            "payoff_id" => self.payoff_id = value.to_string(),
            "scheme" => self.scheme = value.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
            "n_ladder" => self.n_ladder = parse_ladder(value)?,
            "mode" => self.mode = value.parse()?,
            "alpha" => self.alpha = parse_f64(key, value)?,
            "output_path" => self.output_path = Some(PathBuf::from(value)),
            "repform_tol" => self.tolerances.repform_tol = parse_f64(key, value)?,
            "oracle_tol" => self.tolerances.oracle_tol = parse_f64(key, value)?,
            "residual_ratio_max" => self.tolerances.residual_ratio_max = parse_f64(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.market
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.n_ladder.is_empty() {
            return Err(Error::Config("n_ladder is empty".into()));
        }
        if self.n_ladder[0] == 0 {
            return Err(Error::Config("n_ladder entries must be positive".into()));
        }
        if self.n_ladder.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("n_ladder must be strictly increasing".into()));
        }
        if self.mode == StudyMode::Smooth && !(self.alpha > 0.0 && self.alpha < 1.0 / 3.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1/3), got {}", self.alpha)));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("repform_tol", t.repform_tol),
            ("oracle_tol", t.oracle_tol),
            ("residual_ratio_max", t.residual_ratio_max),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        self.payoff()?;
        Ok(())
    }

    pub fn payoff(&self) -> Result<PiecewisePayoff> {
        payoff::from_id(&self.payoff_id)
    }
}
