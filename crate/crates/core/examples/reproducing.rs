//! Reproducing holomorphic data from boundary values with the three kernels,
//! and the failure on the non-holomorphic control `conj(w1)`.
//!
//! Run with `cargo run --release --example reproducing`.

use cauchy_fantappie::kernels::KernelChoice;
use cauchy_fantappie::operators::{interior_targets, reproduce_report, TestFunction};
use cauchy_fantappie::{geometry, Result};

fn main() -> Result<()> {
    let d = geometry::make_ellipsoid(&[1.0, 2.0])?;
    let targets = interior_targets(&d, 6, 0.2, 11)?;
    let mut functions = TestFunction::SUITE.to_vec();
    functions.push(TestFunction::ConjW1);
    let report = reproduce_report(&KernelChoice::ALL, &d, &functions, &targets, &[8, 16, 32], None, Some(0.2))?;
    println!("{:<6} {:<12} {:>4} {:>7} {:>11}", "kernel", "function", "res", "nodes", "max error");
    for r in &report.rows {
        println!("{:<6} {:<12} {:>4} {:>7} {:>11.3e}", r.kernel, r.function, r.resolution, r.nodes, r.max_error);
    }
    Ok(())
}
