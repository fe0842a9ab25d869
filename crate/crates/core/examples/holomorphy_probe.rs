//! Finite-difference dbar_z of boundary kernel densities: the Cauchy-Leray
//! density is holomorphic in z, the Bochner-Martinelli density is not.
//!
//! Run with `cargo run --release --example holomorphy_probe`.

use cauchy_fantappie::forms::TangentFrame;
use cauchy_fantappie::kernels::{bm_density_closed, cauchy_leray_density, dbar_z_residual};
use cauchy_fantappie::{geometry, Result};

fn main() -> Result<()> {
    let d = geometry::make_ellipsoid(&[1.0, 2.0])?;
    let ws = geometry::random_boundary_points(&d, 6, 21)?;
    let zs = geometry::random_interior_points(&d, 6, 0.8, 22)?;
    println!("{:>8} {:>12} {:>12}", "|w - z|", "CL", "BM");
    for (w, z) in ws.iter().zip(&zs) {
        let normal = d.unit_normal(w)?;
        let frame = TangentFrame::from_normal(w.clone(), &normal)?;
        let cl = dbar_z_residual(|y| cauchy_leray_density(&d, w, &frame, y), z, 1e-5)?;
        let bm = dbar_z_residual(|y| bm_density_closed(w, &normal, y), z, 1e-5)?;
        println!("{:>8.3} {:>12.2e} {:>12.2e}", (w - z).norm(), cl, bm);
    }
    Ok(())
}
