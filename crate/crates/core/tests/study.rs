use std::io::Write;

use binomial_convergence::analytic::{bs_call, bs_digital, bs_price_payoff_oracle};
use binomial_convergence::error::Error;
use binomial_convergence::expansion::{predicted_payoff_error, predicted_payoff_error_c2};
use binomial_convergence::harness::{self, ReferenceSource, StudyConfig, StudyMode, CSV_HEADER};
use binomial_convergence::lattice::{build_lattice, Scheme};
use binomial_convergence::market::MarketParams;
use binomial_convergence::payoff;
use binomial_convergence::repform::{price_via_calls, price_via_digitals, DigitalCurve, TabulatedCurve, QUADRATURE_TOL};

fn config(payoff_id: &str, ladder: &[usize], mode: StudyMode) -> StudyConfig {
    StudyConfig {
        payoff_id: payoff_id.into(),
        n_ladder: ladder.to_vec(),
        mode,
        ..StudyConfig::default()
    }
}

#[test]
fn rows_are_consistent() {
    let r = harness::run_study(&config("straddle:105", &[50, 100, 200, 400], StudyMode::Direct)).unwrap();
    assert_eq!(r.reference_source, ReferenceSource::ClosedForm);
    assert_eq!(r.rows.iter().map(|x| x.n).collect::<Vec<_>>(), vec![50, 100, 200, 400]);
    for row in &r.rows {
        assert_eq!(row.reference_price, r.reference_price);
        assert_eq!(row.error, row.approx_price - row.reference_price);
        assert!(row.predicted_error.is_none() && row.residual.is_none());
    }
}

#[test]
fn repform_mode_matches_direct_mode() {
    let ladder = [10, 101, 500];
    for id in ["butterfly:90,100,110", "digital_gt:97", "powercall4:100"] {
        let a = harness::run_study(&config(id, &ladder, StudyMode::Direct)).unwrap();
        let b = harness::run_study(&config(id, &ladder, StudyMode::Repform)).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((x.approx_price - y.approx_price).abs() <= 1e-10 * x.approx_price.abs(), "{id}");
        }
    }
}

#[test]
fn oracle_reference_for_power_payoff() {
    let r = harness::run_study(&config("powercall4:100", &[100, 200], StudyMode::Direct)).unwrap();
    assert_eq!(r.reference_source, ReferenceSource::QuadratureOracle);
    assert!(r.fit.is_none());
    assert!(r.notes.iter().any(|n| n.contains("rate fit")));
}

#[test]
fn fitted_rates_of_call_and_digital() {
    let ladder = [100, 200, 400, 800, 1600, 3200];
    let call = harness::run_study(&config("call:100", &ladder, StudyMode::Direct)).unwrap();
    assert!((call.fitted_rate().unwrap() + 1.0).abs() < 0.05);
    let digital = harness::run_study(&config("digital_geq:95", &ladder, StudyMode::Direct)).unwrap();
    assert!((digital.fitted_rate().unwrap() + 0.5).abs() < 0.15);
    assert!(digital.oscillation_flag);
}

#[test]
fn csv_layout() {
    let mut cfg = config("call:95", &[100, 200], StudyMode::ExpansionCheck);
    cfg.scheme = Scheme::JarrowRudd;
    let r = harness::run_study(&cfg).unwrap();
    let text = r.to_csv_string();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    for (line, row) in lines.zip(&r.rows) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 6);
        assert_eq!(cols[0].parse::<usize>().unwrap(), row.n);
        // 17 significant digits round-trip exactly
        assert_eq!(cols[1].parse::<f64>().unwrap(), row.approx_price);
        assert_eq!(cols[3].parse::<f64>().unwrap(), row.error);
        assert_eq!(cols[4].parse::<f64>().unwrap(), row.predicted_error.unwrap());
        assert_eq!(cols[5].parse::<f64>().unwrap(), row.residual.unwrap());
        assert_eq!(cols[1].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
    }
    let direct = harness::run_study(&config("call:95", &[100], StudyMode::Direct)).unwrap();
    assert!(direct.to_csv_string().lines().nth(1).unwrap().ends_with(",,"));
}

#[test]
fn sidecar_records_reference_source() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("study.csv");
    let r = harness::run_study(&config("powercall4:110", &[20, 40], StudyMode::Direct)).unwrap();
    let side = r.write_files(&path).unwrap();
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(side).unwrap()).unwrap();
    assert_eq!(json["reference_source"], "quadrature_oracle");
    assert_eq!(json["mode"], "DIRECT");
    assert!(json.get("rows").is_none());
}

#[test]
fn failing_rung_is_reported() {
    // the tilt violates the no-arbitrage band only for coarse lattices
    let mut cfg = config("call:100", &[4, 100], StudyMode::Direct);
    cfg.scheme = Scheme::Custom(20.0);
    match harness::run_study(&cfg).unwrap_err() {
        Error::AtLadderPoint { n, source } => {
            assert_eq!(n, 4);
            assert!(matches!(*source, Error::Arbitrage { .. }));
        }
        e => panic!("unexpected {e:?}"),
    }
    assert!(harness::run_study(&cfg).unwrap_err().is_numerical());
}

#[test]
fn smooth_mode_settles() {
    let r = harness::run_study(&config("powercall4:100", &[100, 200, 400, 800], StudyMode::Smooth)).unwrap();
    assert!(!r.oscillation_in_top(3));
    let c = r.smooth_constant.unwrap();
    let last = r.rows.last().unwrap();
    assert!((last.n as f64 * last.error / c - 1.0).abs() < 0.05);
    assert!((r.smooth_order.unwrap() - 1.0).abs() < 0.3);
}

#[test]
fn smooth_mode_on_kinked_payoff_is_labelled() {
    let r = harness::run_study(&config("call:100", &[50, 100], StudyMode::Smooth)).unwrap();
    assert!(r.notes.iter().any(|n| n.contains("piecewise")));
    assert!(r.rows[1].error.abs() < 0.05);
}

/// The f′ and f″ routes of the general expansion agree up to the common
/// O(n^{−3/2}) remainder, not to quadrature precision.
#[test]
fn expansion_routes_agree_to_remainder_order() {
    let m = MarketParams::default();
    for f in [payoff::call(95.0).unwrap(), payoff::power_call4(100.0).unwrap(), payoff::butterfly(90.0, 100.0, 110.0).unwrap()] {
        let mut scaled = Vec::new();
        for n in [100, 400, 1600] {
            let spec = build_lattice(&m, n, Scheme::Crr).unwrap();
            let a = predicted_payoff_error(&m, &spec, &f).unwrap().total;
            let b = predicted_payoff_error_c2(&m, &spec, &f).unwrap().total;
            scaled.push((n as f64).powf(1.5) * (a - b).abs() / f.value_bound(m.spot).max(1.0));
            assert!((a - b).abs() < 0.2 * b.abs().max(1e-6), "{}: {a} vs {b} at n={n}", f.name());
        }
        let first = scaled[0].max(1e-3);
        assert!(scaled.iter().all(|s| *s <= 10.0 * first), "{}: {scaled:?}", f.name());
    }
}

#[test]
fn black_scholes_curve_matches_oracle() {
    let m = MarketParams::default();
    for id in ["powercall4:100", "straddle:90", "butterfly:90,100,110", "digital_gt:120", "identity"] {
        let f = payoff::from_id(id).unwrap();
        let oracle = bs_price_payoff_oracle(&m, &f, 1e-12).unwrap();
        let via = price_via_digitals(&DigitalCurve::Bs(m), &f, QUADRATURE_TOL).unwrap();
        assert!((via - oracle).abs() <= 1e-8 * oracle.abs().max(1.0), "{id}: {via} vs {oracle}");
        if f.has_second_derivative() {
            let calls = price_via_calls(&DigitalCurve::Bs(m), &f, QUADRATURE_TOL).unwrap();
            assert!((calls - via).abs() <= 2.0 * QUADRATURE_TOL * via.abs().max(1.0), "{id}");
        }
    }
    let call = price_via_digitals(&DigitalCurve::Bs(m), &payoff::call(100.0).unwrap(), QUADRATURE_TOL).unwrap();
    assert!((call - bs_call(&m, 100.0)).abs() < 1e-8);
    let dg = price_via_digitals(&DigitalCurve::Bs(m), &payoff::digital_geq(100.0).unwrap(), QUADRATURE_TOL).unwrap();
    assert_eq!(dg, bs_digital(&m, 100.0));
}

#[test]
fn tabulated_curve_from_file() {
    let m = MarketParams::default();
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "strike,price").unwrap();
    for i in 1..=400 {
        let k = 0.5 * i as f64;
        writeln!(file, "{k},{}", bs_digital(&m, k)).unwrap();
    }
    file.flush().unwrap();
    let t = TabulatedCurve::from_csv_path(m.discount(), file.path()).unwrap();
    let curve = DigitalCurve::Tabulated(&t);
    let f = payoff::call(100.0).unwrap();
    let v = price_via_digitals(&curve, &f, QUADRATURE_TOL).unwrap();
    // the table ends at 200; interpolation error of the 0.5 grid is ~h²/12·|ΔV′|
    let truncated = bs_call(&m, 100.0) - bs_call(&m, 200.0);
    assert!((v - truncated).abs() < 1e-3, "{v} vs {truncated}");
    let w = price_via_calls(&curve, &f, QUADRATURE_TOL).unwrap();
    assert!((v - w).abs() < 1e-9);
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("study.cfg");
    std::fs::write(&path, "payoff_id = put:110\nscheme = tian\nn_ladder = 10,20\nmode = REPFORM\n").unwrap();
    let cfg = StudyConfig::from_path(&path).unwrap();
    assert_eq!(cfg.scheme, Scheme::Tian);
    let r = harness::run_study(&cfg).unwrap();
    assert_eq!(r.rows.len(), 2);
    assert!(matches!(StudyConfig::from_path(dir.path().join("missing.cfg")), Err(Error::Config(_))));
}
