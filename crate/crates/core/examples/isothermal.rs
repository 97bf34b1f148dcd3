//! Isothermal gas sphere `y'' + (2/x) y' + e^y = 0` at order 4, checked
//! against the reference integrator out to x = 2.

use opim::bench::{emit, example2_report, ReportFormat, ISOTHERMAL_ORDER4_CONSTANTS, ISOTHERMAL_ORDER4_EVEN_COEFFS};

fn main() {
    let report = example2_report(4, None).unwrap();
    print!("{}", emit(&report, ReportFormat::Text));

    println!("\npublished constants: {ISOTHERMAL_ORDER4_CONSTANTS:?}");
    for (i, published) in ISOTHERMAL_ORDER4_EVEN_COEFFS.iter().enumerate() {
        let deg = 2 * (i + 1);
        println!(
            "x^{deg}: {:>20.12e}   published {published:>20.12e}",
            report.approximant.coeff(deg)
        );
    }
}
