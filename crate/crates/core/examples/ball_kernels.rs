//! On the ball the Cauchy-Leray kernel is the Szego kernel, and the
//! Leray form of the Bergman kernel matches its closed form.
//!
//! Run with `cargo run --release --example ball_kernels`.

use cauchy_fantappie::kernels::{bergman_ball, bergman_leray_density, cauchy_leray_density, szego_ball};
use cauchy_fantappie::forms::TangentFrame;
use cauchy_fantappie::{geometry, Result};

fn main() -> Result<()> {
    let n = 2;
    let d = geometry::make_unit_ball(n)?;
    let ws = geometry::random_boundary_points(&d, 4, 5)?;
    let zs = geometry::random_interior_points(&d, 4, 0.8, 6)?;
    for (w, z) in ws.iter().zip(&zs) {
        let frame = TangentFrame::from_normal(w.clone(), &d.unit_normal(w)?)?;
        let cl = cauchy_leray_density(&d, w, &frame, z)?;
        let s = szego_ball(n, w, z)?;
        println!("|w - z| = {:.3}: Cauchy-Leray {:.6}, Szego {:.6}", (w - z).norm(), cl, s);
    }
    let z = &zs[0];
    for w in &zs[1..] {
        let k = bergman_leray_density(&d, w, z)?;
        let b = bergman_ball(n, w, z)?;
        println!("Bergman: Leray form {:.6}, closed form {:.6}", k, b);
    }
    Ok(())
}
