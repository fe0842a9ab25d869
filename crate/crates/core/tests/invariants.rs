//! Property tests for the operator and geometry invariants.

use cauchy_fantappie::geometry;
use cauchy_fantappie::kernels::{bm_density, BoundaryKernelDensity, CauchyLeray, KernelChoice};
use cauchy_fantappie::linalg::c;
use cauchy_fantappie::operators::{adjoint_wrt, apply_boundary, assemble_matrix, default_delta, weighted_inner, BoundarySamples};
use cauchy_fantappie::quadrature::{boundary_quadrature, radial_solve, Resolution};
use cauchy_fantappie::CxVector;
use num_complex::Complex64;
use proptest::prelude::*;

fn cx2() -> impl Strategy<Value = Complex64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| c(a, b))
}

fn target() -> impl Strategy<Value = CxVector> {
    // points of the ball of radius 0.5, inside both test domains
    ((0.0f64..0.5), (-1.0f64..1.0), (-1.0f64..1.0), (-1.0f64..1.0), (-1.0f64..1.0)).prop_filter_map("nonzero direction", |(r, a, b, x, y)| {
        let v = CxVector::from_vec(vec![c(a, b), c(x, y)]);
        let n = v.norm();
        (n > 1e-3).then(|| v * c(r / n, 0.0))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn apply_boundary_is_linear(alpha in cx2(), beta in cx2(), z in target(), seed in 0u64..1000) {
        let d = geometry::make_ellipsoid(&[1.0, 2.0]).unwrap();
        let q = boundary_quadrature(&d, Resolution::square(6)).unwrap();
        let f = BoundarySamples::from_fn(&q, |w| (w[0] * c(seed as f64 * 1e-3, 1.0)).exp());
        let g = BoundarySamples::from_fn(&q, |w| w[1].conj() + w[0] * w[0]);
        let h = BoundarySamples { values: f.values.iter().zip(&g.values).map(|(a, b)| alpha * a + beta * b).collect() };
        for kernel in KernelChoice::ALL {
            let k = kernel.build(&d, None).unwrap();
            let lhs = apply_boundary(k.as_ref(), &q, &h, &z, Some(0.1)).unwrap();
            let rhs = alpha * apply_boundary(k.as_ref(), &q, &f, &z, Some(0.1)).unwrap()
                + beta * apply_boundary(k.as_ref(), &q, &g, &z, Some(0.1)).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()), "{} {}", kernel.name(), (lhs - rhs).norm());
        }
    }

    #[test]
    fn cauchy_leray_reproduces_constants(z in target()) {
        let d = geometry::make_ellipsoid(&[1.0, 2.0]).unwrap();
        let q = boundary_quadrature(&d, Resolution::square(24)).unwrap();
        let one = BoundarySamples::from_fn(&q, |_| c(1.0, 0.0));
        let v = apply_boundary(&CauchyLeray { domain: d.clone() }, &q, &one, &z, Some(0.1)).unwrap();
        prop_assert!((v - 1.0).norm() < 1e-6, "{}", (v - 1.0).norm());
    }

    #[test]
    fn weighted_adjoint_pairs(seed in 0u64..10_000) {
        let d = geometry::make_ellipsoid(&[1.0, 2.0]).unwrap();
        let q = boundary_quadrature(&d, Resolution::square(3)).unwrap();
        let k = CauchyLeray { domain: d.clone() };
        let m = assemble_matrix(&k, &q, default_delta(&q, 0.5)).unwrap();
        let a = adjoint_wrt(&m, &m.weights).unwrap();
        let s = seed as f64;
        let f = CxVector::from_fn(q.len(), |i, _| c((s + i as f64).sin(), (2.0 * s + i as f64).cos()));
        let g = CxVector::from_fn(q.len(), |i, _| c((3.0 * s - i as f64).cos(), (s * i as f64).sin()));
        let lhs = weighted_inner(&m.apply(&f), &g, &m.weights);
        let rhs = weighted_inner(&f, &a.apply(&g), &m.weights);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn radial_solve_lands_on_the_boundary(a in -1.0f64..1.0, b in -1.0f64..1.0, x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let u = CxVector::from_vec(vec![c(a, b), c(x, y)]);
        prop_assume!(u.norm() > 1e-3);
        let u = u.clone() * c(1.0 / u.norm(), 0.0);
        let d = geometry::make_ellipsoid(&[1.0, 2.0]).unwrap();
        let r = radial_solve(&d, &u).unwrap();
        prop_assert!(d.rho(&(u * c(r, 0.0))).abs() < 1e-12);
    }
}

#[test]
fn bm_density_paths_agree() {
    let d = geometry::make_unit_ball(2).unwrap();
    let q = boundary_quadrature(&d, Resolution::square(4)).unwrap();
    let z = CxVector::from_vec(vec![c(0.1, 0.2), c(-0.3, 0.05)]);
    let closed = bm_density(2);
    let forms = cauchy_fantappie::kernels::BochnerMartinelli { n: 2, path: cauchy_fantappie::kernels::BmPath::Forms };
    for node in &q.nodes {
        let a = closed.density(node, &z).unwrap();
        let b = forms.density(node, &z).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
    }
}
