//! Order-3 collocation fit for `y'' + (2/x) y' - (4x^2 + 6) y = 0`.

use opim::bench::EXAMPLE1_ORDER3_CONSTANTS;
use opim::opia::{default_degree_cap, iterate};
use opim::optimize::solve_collocation;
use opim::problem::catalog_default;

fn main() {
    let entry = catalog_default::<f64>("example1").unwrap();
    let p = &entry.problem;
    let cap = default_degree_cap(3);
    let fit = solve_collocation(p, 3, cap, &[0.3, 0.6, 0.9], &[0.3, 0.3, 0.2]).unwrap();
    print!("{}", fit.to_text());
    for (c, published) in fit.constants.iter().zip(EXAMPLE1_ORDER3_CONSTANTS) {
        println!("{c:>22.16} vs {published:>22.16}  diff {:.2e}", (c - published).abs());
    }

    let trace = iterate(p, 3, &fit.constants, cap).unwrap();
    let exact = entry.exact.unwrap();
    println!("\n   x        y3(x)          exp(x^2)       error");
    for i in 1..=10 {
        let x = i as f64 / 10.0;
        let y = trace.approximant().eval(&x);
        let e = (exact.value)(x);
        println!("{x:>4.1} {y:>14.10} {e:>14.10} {:>11.3e}", (y - e).abs());
    }
}
