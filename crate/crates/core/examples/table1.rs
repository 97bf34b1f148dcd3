//! Example 1 at orders 4 and 5 against the published error table.

use opim::bench::{table1, TABLE1_SLACK};

fn main() {
    let report = table1(&[4, 5], TABLE1_SLACK).unwrap();
    print!("{}", report.to_text());
}
