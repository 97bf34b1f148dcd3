//! Exact rational iterates for the two worked problems.
//!
//! ```text
//! cargo run -p opim --example first_iterates
//! ```

use opim::opia::{initial_guess, iterate, opia1_correction};
use opim::problem::catalog_default;
use opim::scalar::{Rational, Scalar};

fn main() {
    for name in ["example1", "isothermal"] {
        let p = catalog_default::<Rational>(name).unwrap().problem;
        println!("{p}");
        let y0 = initial_guess(&p);
        let yc0 = opia1_correction(&y0, &p, 16).unwrap();
        println!("  (y_c)_0 = {}", yc0.pretty());

        // all-ones constants: the plain perturbation iteration
        let ones = vec![Rational::from_i64(1); 3];
        let trace = iterate(&p, 3, &ones, 16).unwrap();
        for (n, y) in trace.iterates.iter().enumerate() {
            println!("  y{n}(1) = {:.12}", y.eval_f64(1.0));
        }
        println!();
    }
}
