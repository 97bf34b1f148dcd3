//! Loads a TOML run configuration and solves it.
//!
//! ```text
//! cargo run -p opim --example config_file -- crates/core/configs/isothermal.toml
//! ```

use opim::bench::{emit, solve_report, ReportFormat, SolveSettings};
use opim::config::ConfigFile;
use opim::optimize::FitMode;

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/example1.toml").to_string());
    let cfg = ConfigFile::load(path.as_ref()).unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(1);
    });
    let entry = cfg.problem.build::<f64>(cfg.solver.exp_order_or_default()).unwrap();
    println!("{}", entry.problem);

    let mut settings = SolveSettings::new(
        cfg.solver.order.unwrap_or(3),
        cfg.mode().unwrap_or(FitMode::Collocation),
    );
    settings.degree_cap = cfg.solver.degree_cap;
    settings.fit.points = cfg.solver.points.clone();
    settings.fit.init = cfg.solver.init.clone();
    if let Some(tol) = cfg.solver.ref_tol {
        settings.ref_tol = tol;
    }
    let report = solve_report(&entry, &settings).unwrap();
    print!("{}", emit(&report, ReportFormat::Text));
}
