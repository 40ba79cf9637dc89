//! Convergence ladders: approximate prices, references, predictions, output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::analysis::{self, RateFit, ResidualVerdict};
use super::config::{StudyConfig, StudyMode};
use crate::analytic;
use crate::composite::{self, GridOrigin};
use crate::error::{Error, Result};
use crate::expansion;
use crate::lattice::{Lattice, Scheme};
use crate::market::MarketParams;
use crate::payoff::{PayoffKind, PiecewisePayoff, Smoothness};
use crate::repform::{self, DigitalCurve};

/// Header of the study CSV.
pub const CSV_HEADER: &str = "n,approx_price,reference_price,error,predicted_error,residual";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSource {
    ClosedForm,
    QuadratureOracle,
}

/// Black-Scholes price of `payoff`: closed form for the named families,
/// otherwise the quadrature oracle at relative tolerance `oracle_tol`.
pub fn reference_price(m: &MarketParams, payoff: &PiecewisePayoff, oracle_tol: f64) -> Result<(f64, ReferenceSource)> {
    use analytic::{bs_call, bs_digital, bs_put};
    let closed = match payoff.kind() {
        PayoffKind::Call(k) => Some(bs_call(m, k)),
        PayoffKind::Put(k) => Some(bs_put(m, k)),
        PayoffKind::DigitalGeq(k) | PayoffKind::DigitalGt(k) => Some(bs_digital(m, k)),
        PayoffKind::Straddle(k) => Some(bs_call(m, k) + bs_put(m, k)),
        PayoffKind::Butterfly(a, b, c) => Some(bs_call(m, a) - 2.0 * bs_call(m, b) + bs_call(m, c)),
        PayoffKind::Constant(c) => Some(c * m.discount()),
        PayoffKind::Identity => Some(m.spot),
        PayoffKind::PowerCall4(_) | PayoffKind::Custom => None,
    };
    match closed {
        Some(v) => Ok((v, ReferenceSource::ClosedForm)),
        None => Ok((analytic::bs_price_payoff_oracle(m, payoff, oracle_tol)?, ReferenceSource::QuadratureOracle)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub n: usize,
    pub approx_price: f64,
    pub reference_price: f64,
    /// `approx_price − reference_price`
    pub error: f64,
    pub predicted_error: Option<f64>,
    /// `error − predicted_error`
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub mode: StudyMode,
    pub payoff_id: String,
    pub scheme: Scheme,
    pub market: MarketParams,
    pub reference_price: f64,
    pub reference_source: ReferenceSource,
    pub rows: Vec<ReportRow>,
    /// Fit of `log|error|` on `log n`; absent with fewer than 4 usable rungs
    pub fit: Option<RateFit>,
    /// Sign changes of the error anywhere along the ladder
    pub oscillation_flag: bool,
    /// Order estimated from the top three rungs when they are monotone
    pub smooth_order: Option<f64>,
    /// EXPANSION_CHECK only
    pub residual_check: Option<ResidualVerdict>,
    /// SMOOTH only: the 1/n constant of the composite estimator
    pub smooth_constant: Option<f64>,
    pub notes: Vec<String>,
}

impl ConvergenceReport {
    pub fn errors(&self) -> BTreeMap<usize, f64> {
        self.rows.iter().map(|r| (r.n, r.error)).collect()
    }

    pub fn approx_prices(&self) -> BTreeMap<usize, f64> {
        self.rows.iter().map(|r| (r.n, r.approx_price)).collect()
    }

    pub fn fitted_rate(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.slope)
    }

    pub fn fitted_coeff(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.coefficient)
    }

    /// Oscillation restricted to the last `k` rungs.
    pub fn oscillation_in_top(&self, k: usize) -> bool {
        let errs: Vec<f64> = self.rows.iter().rev().take(k).map(|r| r.error).collect();
        analysis::oscillation_flag(&errs)
    }

    /// Write the study CSV; every run with the same config produces the same bytes.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{},{}",
                r.n,
                r.approx_price,
                r.reference_price,
                r.error,
                opt(r.predicted_error),
                opt(r.residual)
            )?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Summary JSON (everything except the rows), written next to the CSV.
    pub fn summary_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report is serializable");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("rows");
        }
        serde_json::to_string_pretty(&v).expect("json value")
    }

    /// Write `path` (CSV) and `path.json` (summary).
    pub fn write_files(&self, path: &Path) -> Result<PathBuf> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))?;
        let side = sidecar_path(path);
        std::fs::write(&side, self.summary_json() + "\n")?;
        Ok(side)
    }
}

/// `out.csv` → `out.csv.json`
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn at_rung<T>(n: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::AtLadderPoint { n, source: Box::new(e) })
}

/// Predicted `lattice − Black-Scholes` price error for `payoff` on the
/// lattice: the f″ route when every segment has f″, else the f′ route.
pub fn predicted_error(m: &MarketParams, lattice: &Lattice, payoff: &PiecewisePayoff) -> Result<f64> {
    let p = if payoff.has_second_derivative() {
        expansion::predicted_payoff_error_c2(m, &lattice.spec, payoff)?
    } else {
        expansion::predicted_payoff_error(m, &lattice.spec, payoff)?
    };
    Ok(p.total)
}

struct Rung {
    approx: f64,
    predicted: Option<f64>,
}

fn evaluate_rung(cfg: &StudyConfig, payoff: &PiecewisePayoff, n: usize) -> Result<Rung> {
    let m = &cfg.market;
    match cfg.mode {
        StudyMode::Direct => Ok(Rung {
            approx: Lattice::build(m, n, cfg.scheme)?.price(payoff),
            predicted: None,
        }),
        StudyMode::Repform => {
            let lat = Lattice::build(m, n, cfg.scheme)?;
            Ok(Rung {
                approx: repform::price_via_digitals(&DigitalCurve::Lattice(&lat), payoff, cfg.tolerances.repform_tol)?,
                predicted: None,
            })
        }
        StudyMode::Smooth => {
            let est = if payoff.smoothness() == Smoothness::C3Smooth {
                composite::smooth_estimate(m, payoff, n, cfg.alpha)?
            } else {
                composite::smooth_estimate_piecewise(m, payoff, n, cfg.alpha, GridOrigin::Auto)?
            };
            Ok(Rung {
                approx: est.value,
                predicted: None,
            })
        }
        StudyMode::ExpansionCheck => {
            let lat = Lattice::build(m, n, cfg.scheme)?;
            Ok(Rung {
                approx: lat.price(payoff),
                predicted: Some(predicted_error(m, &lat, payoff)?),
            })
        }
    }
}

/// Run the ladder described by `cfg`. Rungs are evaluated in parallel and
/// assembled in ladder order.
pub fn run_study(cfg: &StudyConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let payoff = cfg.payoff()?;
    let m = cfg.market;
    let (reference, source) = reference_price(&m, &payoff, cfg.tolerances.oracle_tol)?;

    let rungs: Vec<Rung> = cfg
        .n_ladder
        .par_iter()
        .map(|&n| at_rung(n, evaluate_rung(cfg, &payoff, n)))
        .collect::<Result<_>>()?;

    let rows: Vec<ReportRow> = cfg
        .n_ladder
        .iter()
        .zip(&rungs)
        .map(|(&n, r)| {
            let error = r.approx - reference;
            ReportRow {
                n,
                approx_price: r.approx,
                reference_price: reference,
                error,
                predicted_error: r.predicted,
                residual: r.predicted.map(|p| error - p),
            }
        })
        .collect();

    let mut notes = Vec::new();
    let errors: BTreeMap<usize, f64> = rows.iter().map(|r| (r.n, r.error)).collect();
    let fit = match analysis::fit_rate(&errors) {
        Ok(f) => {
            if !f.excluded.is_empty() {
                notes.push(format!("rate fit excluded zero-error rungs {:?}", f.excluded));
            }
            Some(f)
        }
        Err(e) => {
            notes.push(format!("no rate fit: {e}"));
            None
        }
    };
    let error_list: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let approx: BTreeMap<usize, f64> = rows.iter().map(|r| (r.n, r.approx_price)).collect();

    let residual_check = if cfg.mode == StudyMode::ExpansionCheck && rows.len() >= 2 {
        let predicted: BTreeMap<usize, f64> = rows.iter().map(|r| (r.n, r.predicted_error.unwrap_or(0.0))).collect();
        Some(analysis::residual_order_check(&errors, &predicted, cfg.tolerances.residual_ratio_max)?)
    } else {
        None
    };
    let smooth_constant = if cfg.mode == StudyMode::Smooth {
        Some(composite::smooth_constant_of(&m, &payoff)?)
    } else {
        None
    };
    if cfg.mode == StudyMode::Smooth && payoff.smoothness() != Smoothness::C3Smooth {
        notes.push("payoff is not C3: piecewise estimator, smooth order holds per segment only".into());
    }

    Ok(ConvergenceReport {
        mode: cfg.mode,
        payoff_id: cfg.payoff_id.clone(),
        scheme: cfg.scheme,
        market: m,
        reference_price: reference,
        reference_source: source,
        oscillation_flag: analysis::oscillation_flag(&error_list),
        smooth_order: analysis::smooth_order(&approx),
        rows,
        fit,
        residual_check,
        smooth_constant,
        notes,
    })
}
