//! The Szego projection from the Cauchy-Leray kernel by the Kerzman-Stein equation.
//!
//! Run with `cargo run --release --example kerzman_stein`.

use cauchy_fantappie::operators::{default_delta, kerzman_stein_szego, projection_defect, BoundarySamples, TestFunction};
use cauchy_fantappie::quadrature::{boundary_quadrature, Resolution};
use cauchy_fantappie::{geometry, Result};

fn main() -> Result<()> {
    for d in [geometry::make_unit_ball(2)?, geometry::make_ellipsoid(&[1.0, 2.0])?] {
        for p in [4, 6] {
            let q = boundary_quadrature(&d, Resolution::square(p))?;
            let delta = default_delta(&q, 0.5);
            let ks = kerzman_stein_szego(&d, &q, delta)?;
            let r = &ks.residuals;
            let holo = projection_defect(&ks.s, &BoundarySamples::from_test(&q, TestFunction::W1));
            println!(
                "{} p = {p} ({} nodes, delta {:.3}): |A| {:.2e}, |S-C|/|C| {:.2e}, |S^2-S| {:.2e}, |S*-S| {:.2e}, algebraic {:.1e}, |S w1 - w1| {:.2e}",
                d.label, q.len(), delta, r.a_norm, r.s_minus_c, r.idempotence, r.self_adjointness, r.algebraic, holo
            );
        }
    }
    Ok(())
}
