//! The Bochner-Martinelli kernel reproduces 1 at every interior point,
//! on the ball and on a non-convex-looking ellipsoid alike.
//!
//! Run with `cargo run --release --example bm_uniformity`.

use cauchy_fantappie::kernels::bm_density;
use cauchy_fantappie::linalg::c;
use cauchy_fantappie::operators::{apply_boundary, interior_targets, BoundarySamples};
use cauchy_fantappie::quadrature::{boundary_quadrature, Resolution};
use cauchy_fantappie::{geometry, Result};

fn main() -> Result<()> {
    for d in [geometry::make_unit_ball(2)?, geometry::make_ellipsoid(&[1.0, 2.0])?] {
        let kernel = bm_density(d.dimension());
        let targets = interior_targets(&d, 8, 0.2, 3)?;
        for p in [8, 16, 32] {
            let q = boundary_quadrature(&d, Resolution::square(p))?;
            let one = BoundarySamples::from_fn(&q, |_| c(1.0, 0.0));
            let mut worst = 0.0f64;
            for z in &targets {
                let v = apply_boundary(&kernel, &q, &one, z, Some(0.2))?;
                worst = worst.max((v - 1.0).norm());
            }
            println!("{} p = {p:>2} ({} nodes): max |BM[1] - 1| = {worst:.2e}", d.label, q.len());
        }
    }
    Ok(())
}
