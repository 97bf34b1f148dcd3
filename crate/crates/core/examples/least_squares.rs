//! Least-squares fit of the constants versus the plain iteration (all ones).

use opim::opia::default_degree_cap;
use opim::optimize::{minimize_objective, objective_j};
use opim::problem::catalog_default;

fn main() {
    for name in ["example1", "isothermal"] {
        let p = catalog_default::<f64>(name).unwrap().problem;
        println!("{name}");
        for m in 1..=4 {
            let cap = default_degree_cap(m);
            let ones = vec![1.0; m];
            let j_ones = objective_j(&ones, &p, m, cap, 0.0, 1.0).unwrap();
            let fit = minimize_objective(&p, m, cap, (0.0, 1.0), &ones).unwrap();
            println!(
                "  m={m}  J(ones) = {j_ones:.3e}  J* = {:.3e}  ({} evals, {})",
                fit.objective, fit.iterations, fit.stop
            );
        }
    }
}
