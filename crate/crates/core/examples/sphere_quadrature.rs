//! Product rules on the unit sphere and on an ellipsoid boundary.
//!
//! Run with `cargo run --release --example sphere_quadrature`.

use cauchy_fantappie::linalg::{c, sphere_area};
use cauchy_fantappie::quadrature::{boundary_quadrature, sphere_quadrature, Resolution};
use cauchy_fantappie::{geometry, Result};

fn main() -> Result<()> {
    for (n, p) in [(2, 8), (3, 6), (3, 10)] {
        let q = sphere_quadrature(n, p, 2 * p)?;
        let area = q.total_measure();
        println!("S^{} rule {p}x{}: {} nodes, area error {:.2e}", 2 * n - 1, 2 * p, q.len(), (area - sphere_area(n)).abs());
    }

    // |w_1|^2 integrates to area / n on the sphere
    let q = sphere_quadrature(2, 8, 16)?;
    let m = q.integrate(|w| c(w[0].norm_sqr(), 0.0));
    println!("int |w1|^2 dsigma = {:.15} (exact {:.15})", m.re, sphere_area(2) / 2.0);

    // the boundary rule of a star-shaped domain is the sphere rule pushed out radially
    let e = geometry::make_ellipsoid(&[1.0, 2.0])?;
    for p in [8, 16, 32] {
        let q = boundary_quadrature(&e, Resolution::square(p))?;
        let mu: f64 = q.levi_leray_weights().iter().sum();
        println!("ellipsoid 1,2 at {p}: sigma = {:.12}, mu_rho = {:.12}", q.total_measure(), mu);
    }
    Ok(())
}
