use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Black-Scholes market: spot, volatility, continuously compounded rate, maturity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    pub spot: f64,
    pub volatility: f64,
    pub rate: f64,
    pub maturity: f64,
}

impl MarketParams {
    pub fn new(spot: f64, volatility: f64, rate: f64, maturity: f64) -> Result<Self> {
        let m = Self {
            spot,
            volatility,
            rate,
            maturity,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.spot) {
            return Err(Error::InvalidMarket(format!("spot must be > 0, got {}", self.spot)));
        }
        if !positive(self.volatility) {
            return Err(Error::InvalidMarket(format!(
                "volatility must be > 0, got {}",
                self.volatility
            )));
        }
        if !positive(self.maturity) {
            return Err(Error::InvalidMarket(format!(
                "maturity must be > 0, got {}",
                self.maturity
            )));
        }
        if !self.rate.is_finite() {
            return Err(Error::InvalidMarket(format!("rate must be finite, got {}", self.rate)));
        }
        Ok(())
    }

    /// e^{-rT}
    pub fn discount(&self) -> f64 {
        (-self.rate * self.maturity).exp()
    }

    /// σ√T
    pub fn total_vol(&self) -> f64 {
        self.volatility * self.maturity.sqrt()
    }
}

impl Default for MarketParams {
    fn default() -> Self {
        Self {
            spot: 100.0,
            volatility: 0.2,
            rate: 0.05,
            maturity: 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive_inputs() {
        assert!(MarketParams::new(0.0, 0.2, 0.05, 1.0).is_err());
        assert!(MarketParams::new(100.0, -0.2, 0.05, 1.0).is_err());
        assert!(MarketParams::new(100.0, 0.2, 0.05, 0.0).is_err());
        assert!(MarketParams::new(100.0, 0.2, f64::NAN, 1.0).is_err());
        assert!(MarketParams::new(100.0, 0.2, -0.01, 1.0).is_ok());
    }
}
