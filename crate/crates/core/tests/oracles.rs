//! Checks against values computed independently of the solver.

use opim::bench::{solve_report, SolveSettings};
use opim::opia::iterate;
use opim::optimize::{minimize_objective, objective_j, FitMode};
use opim::poly::Polynomial;
use opim::problem::{catalog_default, EmdenFowlerProblem, CATALOG_NAMES};
use opim::reference::{integrate, integrate_with, ReferenceOptions};
use opim::scalar::{Rational, Scalar};
use opim::series::PowerSeries;

fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

/// Hand-derived order-2 iterate of Example 1 for general `C0, C1`.
fn example1_y2(x: f64, c0: f64, c1: f64) -> f64 {
    let x2 = x * x;
    1.0 + c0 * (x2 * x2 / 3.0 + 3.0 * x2)
        + (c0 + c1)
            * (x2 / 630.0)
            * (15.0 * c0 * x2.powi(3) + 294.0 * c0 * x2 * x2 + 595.0 * c0 * x2 - 5670.0 * c0 + 210.0 * x2 + 1890.0)
}

/// Hand-derived order-2 iterate of the isothermal problem.
fn isothermal_y2(x: f64, c0: f64, c1: f64) -> f64 {
    let x2 = x * x;
    -c0 / 2.0 * x2 + (c0 + c1) / 24.0 * x2 * (c0 * x2 + 36.0 * c0 - 12.0)
}

#[test]
fn second_iterates_match_closed_forms() {
    let e1 = catalog_default::<Rational>("example1").unwrap().problem;
    let iso = catalog_default::<Rational>("isothermal").unwrap().problem;
    for (c0, c1) in [(q(1, 1), q(1, 1)), (q(1, 3), q(-2, 7)), (q(5, 4), q(3, 10))] {
        let cs = [c0.clone(), c1.clone()];
        let y = iterate(&e1, 2, &cs, 12).unwrap();
        let z = iterate(&iso, 2, &cs, 12).unwrap();
        let (f0, f1) = (c0.to_f64(), c1.to_f64());
        for x in [0.25, 0.5, 0.75, 1.0] {
            let xr = Rational::from_f64(x);
            let got = y.approximant().eval(&xr).to_f64();
            assert!((got - example1_y2(x, f0, f1)).abs() < 1e-12, "example1 x={x}");
            let got = z.approximant().eval(&xr).to_f64();
            assert!((got - isothermal_y2(x, f0, f1)).abs() < 1e-12, "isothermal x={x}");
        }
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    while b - a > tol {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    0.5 * (a + b)
}

#[test]
fn one_constant_minimizer_matches_golden_section() {
    let p = catalog_default::<f64>("example1").unwrap().problem;
    let j = |c: f64| objective_j(&[c], &p, 1, 8, 0.0, 1.0).unwrap();
    let oracle = golden_section(j, 0.0, 2.0, 1e-10);
    let fit = minimize_objective(&p, 1, 8, (0.0, 1.0), &[0.5]).unwrap();
    assert!(
        (fit.constants[0] - oracle).abs() < 1e-5,
        "{} vs {oracle}",
        fit.constants[0]
    );
}

#[test]
fn manufactured_source_is_recovered_by_least_squares() {
    // y = 1 + x^2 solves y'' + (2/x) y' - 6 = 0; the first correction is 3x^2,
    // so C0 = 1/3 makes the order-1 approximant exact
    let p = EmdenFowlerProblem {
        name: "manufactured".into(),
        k: 2.0,
        beta: Polynomial::zero(),
        gamma: PowerSeries::power(1),
        g: Polynomial::constant(-6.0),
        y0: 1.0,
        yp0: 0.0,
        domain: (0.0, 1.0),
    };
    let fit = minimize_objective(&p, 1, 8, (0.0, 1.0), &[0.5]).unwrap();
    assert!((fit.constants[0] - 1.0 / 3.0).abs() < 1e-6, "{:?}", fit.constants);
    assert!(fit.objective < 1e-10);
}

#[test]
fn catalog_problems_validate() {
    for name in CATALOG_NAMES {
        let e = catalog_default::<f64>(name).unwrap();
        assert!(e.problem.validate().is_ok(), "{name}");
        if let Some(ex) = e.exact {
            let (_, r) = ex.max_residual(&e.problem, 50);
            assert!(r < 1e-8, "{name}: {r:e}");
        }
    }
}

fn max_error(name: &str, tol: f64) -> f64 {
    let e = catalog_default::<f64>(name).unwrap();
    let exact = e.exact.unwrap();
    let sol = integrate(&e.problem, 1.0, tol).unwrap();
    (0..=100)
        .map(|i| i as f64 / 100.0)
        .map(|x| (sol.eval(x).unwrap() - (exact.value)(x)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn tighter_tolerance_never_hurts() {
    for name in ["lane_emden_s1", "lane_emden_s5"] {
        let errs: Vec<f64> = [1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12]
            .iter()
            .map(|&t| max_error(name, t))
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0], "{name}: {errs:?}");
        }
    }
}

#[test]
fn bootstrap_order_barely_matters() {
    let tol = 1e-10;
    for name in CATALOG_NAMES {
        let p = catalog_default::<f64>(name).unwrap().problem;
        let y1 = |order| {
            let opts = ReferenceOptions {
                series_order: order,
                ..ReferenceOptions::default()
            };
            integrate_with(&p, 1.0, tol, opts).unwrap().eval(1.0).unwrap()
        };
        let (a, b) = (y1(8), y1(10));
        assert!((a - b).abs() < tol, "{name}: {a} vs {b}");
    }
}

#[test]
fn dense_output_hits_the_nodes() {
    let p = catalog_default::<f64>("isothermal").unwrap().problem;
    let sol = integrate(&p, 2.0, 1e-10).unwrap();
    for (x, y) in sol.nodes.iter().zip(&sol.values).skip(1) {
        assert_eq!(sol.eval(*x), Some(*y));
    }
}

#[test]
fn truth_column_is_the_closed_form() {
    for name in ["example1", "lane_emden_s1", "lane_emden_s5"] {
        let e = catalog_default::<f64>(name).unwrap();
        let exact = e.exact.unwrap();
        let report = solve_report(&e, &SolveSettings::new(2, FitMode::LeastSquares)).unwrap();
        for row in &report.table.rows {
            assert!((row.truth - (exact.value)(row.x)).abs() <= 1e-14);
            assert_eq!(row.abs_error(), (row.approx - row.truth).abs());
        }
    }
}
