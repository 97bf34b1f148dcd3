//! Optimal perturbation iteration (OPIA-1) for singular initial value problems
//!
//! ```text
//! y'' + (k/x) y' + β(x) γ(y) + g(x) = 0,    y(0) = y0,  y'(0) = 0
//! ```
//!
//! The iterates are polynomials ([`poly`]) built by [`opia`]; the free
//! convergence-control constants are fixed by collocation or least squares
//! in [`optimize`]. [`reference`] is an independent series-bootstrapped
//! Runge-Kutta integrator used as ground truth when no closed form exists,
//! and [`bench`] puts the two side by side.
//!
//! ```
//! use opim::opia::{default_degree_cap, iterate};
//! use opim::optimize::solve_collocation;
//! use opim::problem::catalog_default;
//!
//! let p = catalog_default::<f64>("example1").unwrap().problem;
//! let fit = solve_collocation(&p, 3, default_degree_cap(3), &[0.3, 0.6, 0.9], &[0.3, 0.3, 0.2]).unwrap();
//! let y3 = iterate(&p, 3, &fit.constants, default_degree_cap(3)).unwrap();
//! assert!((y3.approximant().eval(&0.5) - 0.25f64.exp()).abs() < 1e-3);
//! ```

// `!(a < b)` is deliberate throughout: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod config;
pub mod opia;
pub mod optimize;
pub mod poly;
pub mod problem;
pub mod reference;
pub mod scalar;
pub mod series;
