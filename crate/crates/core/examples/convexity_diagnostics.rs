//! Sampled convexity margins and the classes they imply, including two local
//! models that separate the notions.
//!
//! Run with `cargo run --release --example convexity_diagnostics`.

use cauchy_fantappie::geometry::{self, classify, clin_shrink_study, diagnose, Shape};
use cauchy_fantappie::Result;

fn main() -> Result<()> {
    let domains = [
        geometry::make_unit_ball(2)?,
        geometry::make_ellipsoid(&[1.0, 2.0])?,
        geometry::make_local_model_pscvx_not_clin(),
        geometry::make_local_model_strict_not_strong(2)?,
    ];
    for d in &domains {
        let report = diagnose(d, 9, 1)?;
        let shrink = match d.shape {
            Shape::LocalGraph { .. } => Some(clin_shrink_study(d, &[0.4, 0.2, 0.1], 9)?),
            Shape::StarShaped => None,
        };
        let class = classify(&report, shrink.as_ref());
        println!("{}", d.label);
        println!("  margins: pseudoconvex {:.4e}, C-linear {:.4e}, real {:.4e}", report.pseudoconvexity, report.clin, report.real_convexity);
        if let Some(s) = &shrink {
            println!("  C-linear margin on shrinking patches {:?}: {:?}", s.radii, s.margins);
        }
        println!("  {class:?}");
    }
    Ok(())
}
