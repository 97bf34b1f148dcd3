//! Series bootstrap plus Dormand-Prince on the closed-form Lane-Emden cases.
//! Pass a path to also write the `x,y,yp` nodes of the s = 5 run.

use opim::problem::catalog_default;
use opim::reference::integrate;

fn main() {
    let out = std::env::args().nth(1);
    for name in ["lane_emden_s1", "lane_emden_s5"] {
        let entry = catalog_default::<f64>(name).unwrap();
        let exact = entry.exact.unwrap();
        for tol in [1e-8, 1e-10, 1e-12] {
            let sol = integrate(&entry.problem, 1.0, tol).unwrap();
            let worst = (0..=200)
                .map(|i| i as f64 / 200.0)
                .map(|x| (sol.eval(x).unwrap() - (exact.value)(x)).abs())
                .fold(0.0, f64::max);
            println!(
                "{name:<14} tol {tol:.0e}: {:>4} steps, {:>3} rejected, max error {worst:.2e}",
                sol.nodes.len() - 1,
                sol.rejected_steps
            );
            if let (Some(path), "lane_emden_s5", true) = (&out, name, tol == 1e-12) {
                std::fs::write(path, sol.to_csv()).unwrap();
            }
        }
    }
}
