//! Empirical convergence diagnostics: rate fits, residual order, oscillation.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    /// Slope of `log|error|` against `log n`
    pub slope: f64,
    /// `exp(intercept)`, so `|error| ≈ coefficient · n^slope`
    pub coefficient: f64,
    pub r_squared: f64,
    /// Rungs left out because their error was exactly zero
    pub excluded: Vec<usize>,
}

/// Least-squares fit of `log|error|` against `log n`.
pub fn fit_rate(errors: &BTreeMap<usize, f64>) -> Result<RateFit> {
    let mut excluded = Vec::new();
    let mut pts = Vec::with_capacity(errors.len());
    for (&n, &e) in errors {
        if e == 0.0 {
            excluded.push(n);
        } else if e.is_finite() {
            pts.push(((n as f64).ln(), e.abs().ln()));
        } else {
            return Err(Error::InsufficientData(format!("non-finite error at n = {n}")));
        }
    }
    if pts.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "rate fit needs at least 4 nonzero errors, got {}",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit {
        slope,
        coefficient: intercept.exp(),
        r_squared,
        excluded,
    })
}

/// Number of sign changes along a sequence, ignoring exact zeros.
pub fn sign_changes(values: &[f64]) -> usize {
    let signs: Vec<bool> = values.iter().filter(|v| **v != 0.0).map(|v| *v > 0.0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// True when the error changes sign anywhere along the ladder.
pub fn oscillation_flag(errors: &[f64]) -> bool {
    sign_changes(errors) > 0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualVerdict {
    /// `|r_next| / |r_n|` for consecutive rungs
    pub ratios: Vec<f64>,
    pub median_ratio: f64,
    pub threshold: f64,
    pub pass: bool,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Checks that `actual − predicted` shrinks like `n^{−3/2}` on a doubling
/// ladder: the median of consecutive `|r_{2n}|/|r_n|` must not exceed
/// `threshold` (the pure signature is `2^{−3/2} ≈ 0.354`).
pub fn residual_order_check(
    actual: &BTreeMap<usize, f64>,
    predicted: &BTreeMap<usize, f64>,
    threshold: f64,
) -> Result<ResidualVerdict> {
    if actual.keys().ne(predicted.keys()) {
        return Err(Error::InvalidArgument("actual and predicted ladders differ".into()));
    }
    let residuals: Vec<f64> = actual.iter().map(|(n, a)| a - predicted[n]).collect();
    if residuals.len() < 2 {
        return Err(Error::InsufficientData("residual check needs at least 2 rungs".into()));
    }
    let ratios: Vec<f64> = residuals.windows(2).map(|w| (w[1] / w[0]).abs()).collect();
    let median_ratio = median(&ratios);
    Ok(ResidualVerdict {
        pass: median_ratio <= threshold,
        ratios,
        median_ratio,
        threshold,
    })
}

/// Order `β` estimated from the last three rungs of a doubling ladder,
/// `log₂(|a_n − a_{2n}| / |a_{2n} − a_{4n}|)`, when those differences keep
/// their sign.
pub fn smooth_order(values: &BTreeMap<usize, f64>) -> Option<f64> {
    let tail: Vec<(usize, f64)> = values.iter().rev().take(3).map(|(n, v)| (*n, *v)).collect();
    let [(n4, a4), (n2, a2), (n1, a1)] = tail.as_slice() else {
        return None;
    };
    if *n2 != 2 * n1 || *n4 != 2 * n2 {
        return None;
    }
    let (d1, d2) = (a1 - a2, a2 - a4);
    if d1 == 0.0 || d2 == 0.0 || (d1 > 0.0) != (d2 > 0.0) {
        return None;
    }
    Some((d1 / d2).abs().log2())
}
