//! Algebraic identities of Cauchy-Fantappie forms, checked pointwise.
//!
//! Run with `cargo run --release --example form_identities`.

use cauchy_fantappie::experiments::{bp1_residual, bp2_residual, bp3_residual, bp4_residual, random_pairs, surface_measure_residual};
use cauchy_fantappie::kernels::{BochnerMartinelliForm, CauchyLerayForm};
use cauchy_fantappie::{geometry, Result};

fn main() -> Result<()> {
    for n in [2, 3] {
        let bm = BochnerMartinelliForm { n };
        let mut worst = [0.0f64; 4];
        for (w, z) in random_pairs(n, 20, 1) {
            worst[0] = worst[0].max(bp1_residual(n, &w, &z)?);
            worst[1] = worst[1].max(bp2_residual(&bm, &w, &z));
            worst[2] = worst[2].max(bp3_residual(n, &w, &z)?);
            worst[3] = worst[3].max(bp4_residual(&bm, &w, &z, 1e-4)?);
        }
        println!("n = {n}: rescaling {:.1e}, (dbar eta)^n {:.1e}, BM closed form {:.1e}, homotopy {:.1e}", worst[0], worst[1], worst[2], worst[3]);
    }

    // the Cauchy-Leray generating form on the ellipsoid
    let e = geometry::make_ellipsoid(&[1.0, 2.0])?;
    let cl = CauchyLerayForm { domain: e.clone() };
    let mut worst = 0.0f64;
    for (w, z) in random_pairs(2, 20, 2) {
        worst = worst.max(bp2_residual(&cl, &w, &z));
    }
    println!("ellipsoid Cauchy-Leray (dbar eta)^n {:.1e}", worst);
    let mut worst = 0.0f64;
    for w in geometry::random_boundary_points(&e, 20, 3)? {
        worst = worst.max(surface_measure_residual(&e, &w)?);
    }
    println!("ellipsoid surface-measure identity {:.1e}", worst);
    Ok(())
}
