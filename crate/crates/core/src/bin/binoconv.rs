//! Command-line front end: single prices, convergence studies, the composite
//! estimator, and expansion terms.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use binomial_convergence::composite;
use binomial_convergence::error::{Error, Result};
use binomial_convergence::expansion;
use binomial_convergence::harness::{self, ConvergenceReport, StudyConfig, StudyMode};
use binomial_convergence::lattice::{build_lattice, Lattice, Scheme};
use binomial_convergence::market::MarketParams;
use binomial_convergence::payoff;
use binomial_convergence::repform::{self, DigitalCurve};

#[derive(Parser)]
#[command(name = "binoconv", version, about = "Binomial-lattice convergence laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price one payoff on one lattice
    Price(PriceArgs),
    /// Run a convergence ladder and write the study CSV
    Study(StudyArgs),
    /// Run the composite smooth estimator over a ladder
    Smooth(SmoothArgs),
    /// Print the error-expansion terms at a strike as JSON
    Expand(ExpandArgs),
}

#[derive(Args, Clone, Copy)]
struct MarketArgs {
    #[arg(long, default_value_t = 100.0)]
    s0: f64,
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    #[arg(long, default_value_t = 0.05)]
    rate: f64,
    #[arg(long, default_value_t = 1.0)]
    maturity: f64,
}

impl MarketArgs {
    fn market(&self) -> Result<MarketParams> {
        MarketParams::new(self.s0, self.sigma, self.rate, self.maturity)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PriceMode {
    Direct,
    Repform,
}

#[derive(Args)]
struct PriceArgs {
    #[arg(long)]
    payoff: String,
    #[arg(long, default_value = "crr")]
    scheme: String,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    market: MarketArgs,
    #[arg(long, value_enum, default_value = "direct")]
    mode: PriceMode,
}

#[derive(Args)]
struct StudyArgs {
    /// Flat key = value config file; explicit flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    payoff: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    /// Comma-separated ladder, e.g. 100,200,400
    #[arg(long)]
    ladder: Option<String>,
    /// DIRECT, REPFORM, SMOOTH or EXPANSION_CHECK
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    s0: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    maturity: Option<f64>,
    /// CSV destination (a `.json` summary is written next to it); stdout if absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SmoothArgs {
    #[arg(long, default_value = "powercall4:100")]
    payoff: String,
    #[arg(long, default_value_t = composite::DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value = "200,400,800,1600")]
    ladder: String,
    #[command(flatten)]
    market: MarketArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also print order-1 Richardson extrapolations of adjacent rungs
    #[arg(long)]
    richardson: bool,
}

#[derive(Args)]
struct ExpandArgs {
    #[arg(long)]
    strike: f64,
    #[arg(long, default_value = "crr")]
    scheme: String,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    market: MarketArgs,
}

fn emit(report: &ConvergenceReport, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => {
            let side = report.write_files(path)?;
            eprintln!("wrote {} and {}", path.display(), side.display());
        }
        None => report.write_csv(std::io::stdout().lock())?,
    }
    if let Some(fit) = &report.fit {
        eprintln!(
            "fitted rate {:.4} (coefficient {:.4e}, r² {:.4}); oscillation: {}",
            fit.slope, fit.coefficient, fit.r_squared, report.oscillation_flag
        );
    }
    if let Some(v) = &report.residual_check {
        eprintln!(
            "residual check: median ratio {:.4} vs {:.2} → {}",
            v.median_ratio,
            v.threshold,
            if v.pass { "PASS" } else { "FAIL" }
        );
    }
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    Ok(())
}

fn price(a: PriceArgs) -> Result<()> {
    let m = a.market.market()?;
    let scheme: Scheme = a.scheme.parse()?;
    let f = payoff::from_id(&a.payoff)?;
    let lat = Lattice::build(&m, a.n, scheme)?;
    let (value, mode) = match a.mode {
        PriceMode::Direct => (lat.price(&f), "direct"),
        PriceMode::Repform => (
            repform::price_via_digitals(&DigitalCurve::Lattice(&lat), &f, repform::LATTICE_TOL)?,
            "repform",
        ),
    };
    let (reference, source) = harness::reference_price(&m, &f, 1e-12)?;
    let out = serde_json::json!({
        "payoff": a.payoff,
        "scheme": scheme.to_string(),
        "n": a.n,
        "mode": mode,
        "price": value,
        "reference_price": reference,
        "reference_source": source,
        "error": value - reference,
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("json"));
    Ok(())
}

fn study(a: StudyArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => StudyConfig::from_path(p)?,
        None => StudyConfig::default(),
    };
    let overrides = [
        ("payoff_id", a.payoff),
        ("scheme", a.scheme),
        ("n_ladder", a.ladder),
        ("mode", a.mode),
        ("alpha", a.alpha.map(|x| x.to_string())),
        ("spot", a.s0.map(|x| x.to_string())),
        ("volatility", a.sigma.map(|x| x.to_string())),
        ("rate", a.rate.map(|x| x.to_string())),
        ("maturity", a.maturity.map(|x| x.to_string())),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    if let Some(out) = a.out {
        cfg.output_path = Some(out);
    }
    cfg.validate()?;
    let report = harness::run_study(&cfg)?;
    emit(&report, cfg.output_path.as_ref())
}

fn smooth(a: SmoothArgs) -> Result<()> {
    let cfg = StudyConfig {
        market: a.market.market()?,
        payoff_id: a.payoff,
        n_ladder: harness::config::parse_ladder(&a.ladder)?,
        mode: StudyMode::Smooth,
        alpha: a.alpha,
        output_path: a.out,
        ..StudyConfig::default()
    };
    cfg.validate()?;
    let report = harness::run_study(&cfg)?;
    emit(&report, cfg.output_path.as_ref())?;
    if let Some(c) = report.smooth_constant {
        eprintln!("predicted constant C = {c:.6e}");
        for r in &report.rows {
            eprintln!("n = {:>6}: n·error = {:.6e}", r.n, r.n as f64 * r.error);
        }
    }
    if a.richardson {
        let ex = composite::richardson(&report.approx_prices(), 1.0)?;
        for (n, v) in &ex.values {
            eprintln!(
                "richardson n = {n} & {}: {v:.16e} (error {:.6e})",
                2 * n,
                v - report.reference_price
            );
        }
        for note in &ex.notes {
            eprintln!("note: {note}");
        }
    }
    Ok(())
}

fn expand(a: ExpandArgs) -> Result<()> {
    let m = a.market.market()?;
    let scheme: Scheme = a.scheme.parse()?;
    let spec = build_lattice(&m, a.n, scheme)?;
    let terms = expansion::expansion_terms(&m, &spec, a.strike)?;
    println!("{}", serde_json::to_string_pretty(&terms).expect("json"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Price(a) => price(a),
        Command::Study(a) => study(a),
        Command::Smooth(a) => smooth(a),
        Command::Expand(a) => expand(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}
