//! Prints the joint-distribution test report.
//!
//! cargo run --release -p prumidas --example geweke -- [collapsed|diagonal|conditional] [iterations] [sigma2 rate factor]

use prumidas::config::GammaStep;
use prumidas::synthetic::{geweke_test, GewekeConfig};

fn main() -> prumidas::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut cfg = GewekeConfig::default();
    cfg.gamma_step = match args.first().map(String::as_str) {
        Some("diagonal") => GammaStep::Diagonal,
        Some("conditional") => GammaStep::Conditional,
        _ => GammaStep::Collapsed,
    };
    if let Some(n) = args.get(1) {
        cfg.successive_iterations = n.parse().expect("iterations");
    }
    if let Some(f) = args.get(2) {
        cfg.sigma2_rate_factor = f.parse().expect("rate factor");
    }
    let t = std::time::Instant::now();
    let report = geweke_test(&cfg)?;
    for r in &report.rows {
        println!(
            "{:<18} {:>10.4} {:>10.4} {:>8.4} {:>8.4} {:>7.2}",
            r.name, r.marginal_mean, r.successive_mean, r.marginal_se, r.successive_se, r.z
        );
    }
    println!(
        "within 3: {:.2}, max |z| {:.2}, {:.1}s",
        report.fraction_within(3.0),
        report.max_abs_z(),
        t.elapsed().as_secs_f64()
    );
    Ok(())
}
