//! Run a study from a flat config and write the CSV plus its JSON summary.
//!
//!     cargo run --release --example convergence_study -- target/study.csv

use binomial_convergence::harness::{run_study, StudyConfig};

const CONFIG: &str = "\
# digital option off the lattice nodes
payoff_id = digital_geq:95
scheme = crr
n_ladder = 100,200,400,800,1600,3200
mode = EXPANSION_CHECK
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "study.csv".into());
    let cfg = StudyConfig::parse(CONFIG)?;
    let report = run_study(&cfg)?;
    let side = report.write_files(out.as_ref())?;
    print!("{}", report.to_csv_string());
    if let Some(fit) = &report.fit {
        println!("\nfitted rate {:.4}, coefficient {:.4}, oscillating: {}", fit.slope, fit.coefficient, report.oscillation_flag);
    }
    if let Some(v) = &report.residual_check {
        println!("residual ratios {:?} median {:.3} pass {}", v.ratios, v.median_ratio, v.pass);
    }
    println!("wrote {out} and {}", side.display());
    Ok(())
}
