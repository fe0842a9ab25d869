//! Product quadrature on spheres, on radial-graph boundaries of star-shaped
//! domains, and on their interiors.
//!
//! Directions use hyperspherical angles on `S^{2n-1} ⊂ R^{2n}` with real
//! coordinates ordered `(x_1, y_1, ..., x_n, y_n)`:
//!
//! ```text
//! x_1 = cos θ_1,  x_2 = sin θ_1 cos θ_2, ...,  x_{2n-1} = (∏ sin θ) cos φ,  x_{2n} = (∏ sin θ) sin φ
//! ```
//!
//! Each polar angle `θ_k ∈ [0, π]` carries the weight `sin^{2n-1-k} θ_k`; the
//! rule there is Gaussian in `cos θ_k` against that weight (Gauss-Jacobi, which
//! reduces to Gauss-Legendre for the last polar angle). The periodic angle `φ`
//! uses the trapezoidal rule.

use std::io::Write;

use gauss_quad::{GaussJacobi, GaussLegendre};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forms::TangentFrame;
use crate::geometry::{Domain, Shape, BOUNDARY_TOL};
use crate::linalg::{c, from_real, real_dot, CxVector};

/// Accuracy of the radial root solve.
pub const RADIAL_TOL: f64 = 1e-12;

/// Rays whose cosine with the normal falls below this are rejected as tangential.
pub const MIN_RAY_COSINE: f64 = 1e-6;

/// Resolution of a product rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolution {
    pub polar: usize,
    pub azimuthal: usize,
}

impl Resolution {
    pub fn new(polar: usize, azimuthal: usize) -> Self {
        Resolution { polar, azimuthal }
    }

    /// The schedule convention used by the experiments: `N_a = 2 N_p`.
    pub fn square(polar: usize) -> Self {
        Resolution { polar, azimuthal: 2 * polar }
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryNode {
    pub point: CxVector,
    /// Surface-measure weight.
    pub weight: f64,
    pub frame: TangentFrame,
    /// `d rho / d w_j` at the node.
    pub gradient: CxVector,
    /// Density of the Levi-Leray measure against surface measure.
    pub levi_leray: Complex64,
}

#[derive(Debug, Clone)]
pub struct BoundaryQuadrature {
    pub dimension: usize,
    pub nodes: Vec<BoundaryNode>,
    pub resolution: Resolution,
}

impl BoundaryQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_measure(&self) -> f64 {
        self.nodes.iter().map(|q| q.weight).sum()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.nodes.iter().map(|q| q.weight).collect()
    }

    pub fn points(&self) -> Vec<CxVector> {
        self.nodes.iter().map(|q| q.point.clone()).collect()
    }

    /// Node weights of the Levi-Leray measure `dμ_ρ = 𝒟̃ dσ`.
    pub fn levi_leray_weights(&self) -> Vec<f64> {
        self.nodes.iter().map(|q| q.levi_leray.re * q.weight).collect()
    }

    /// `∫ f dσ` by the rule.
    pub fn integrate(&self, f: impl Fn(&CxVector) -> Complex64 + Sync) -> Complex64 {
        let parts: Vec<Complex64> = self.nodes.par_iter().map(|q| f(&q.point) * q.weight).collect();
        parts.into_iter().sum()
    }

    /// Typical node spacing `(σ / m)^{1/(2n-1)}`.
    pub fn spacing(&self) -> f64 {
        let k = (2 * self.dimension - 1) as f64;
        (self.total_measure() / self.len() as f64).powf(1.0 / k)
    }

    /// Writes `index, re_1, im_1, ..., re_n, im_n, weight, levi_leray`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["index".to_string()];
        for j in 1..=self.dimension {
            header.push(format!("re_w{j}"));
            header.push(format!("im_w{j}"));
        }
        header.push("weight".into());
        header.push("levi_leray".into());
        wtr.write_record(&header)?;
        for (i, q) in self.nodes.iter().enumerate() {
            let mut row = vec![i.to_string()];
            for z in q.point.iter() {
                row.push(format!("{:.17e}", z.re));
                row.push(format!("{:.17e}", z.im));
            }
            row.push(format!("{:.17e}", q.weight));
            row.push(format!("{:.17e}", q.levi_leray.re));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct VolumeQuadrature {
    pub dimension: usize,
    pub nodes: Vec<CxVector>,
    pub weights: Vec<f64>,
}

impl VolumeQuadrature {
    pub fn total_volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(&CxVector) -> Complex64 + Sync) -> Complex64 {
        let parts: Vec<Complex64> = self.nodes.par_iter().zip(self.weights.par_iter()).map(|(w, q)| f(w) * *q).collect();
        parts.into_iter().sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["index".to_string()];
        for j in 1..=self.dimension {
            header.push(format!("re_w{j}"));
            header.push(format!("im_w{j}"));
        }
        header.push("weight".into());
        wtr.write_record(&header)?;
        for (i, (w, q)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let mut row = vec![i.to_string()];
            for z in w.iter() {
                row.push(format!("{:.17e}", z.re));
                row.push(format!("{:.17e}", z.im));
            }
            row.push(format!("{q:.17e}"));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Gauss-Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre(points: usize, a: f64, b: f64) -> Result<Vec<(f64, f64)>> {
    let rule = GaussLegendre::new(points.max(2))
        .map_err(|e| Error::InvalidParameter(format!("Gauss-Legendre rule: {e}")))?;
    let half = 0.5 * (b - a);
    Ok(rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (a + half * (x + 1.0), half * w))
        .collect())
}

/// Nodes `t = cos θ` and weights for `∫_0^π f(θ) sin^m θ dθ = ∫_{-1}^1 f (1 - t^2)^{(m-1)/2} dt`.
///
/// A Gauss-Jacobi rule with `α = β = (m - 1)/2`, which is Gauss-Legendre when `m = 1`.
fn polar_rule(points: usize, power: usize) -> Result<Vec<(f64, f64)>> {
    let a = (power as f64 - 1.0) / 2.0;
    let rule = GaussJacobi::new(points.max(2), a, a)
        .map_err(|e| Error::InvalidParameter(format!("Gauss-Jacobi rule: {e}")))?;
    Ok(rule.as_node_weight_pairs().to_vec())
}

/// Direction/weight pairs of the product rule on `S^{2n-1}`.
pub fn sphere_directions(n: usize, polar: usize, azimuthal: usize) -> Result<Vec<(CxVector, f64)>> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    if polar < 2 || azimuthal < 2 {
        return Err(Error::InvalidParameter(format!("resolution {polar}x{azimuthal} below 2")));
    }
    let d = 2 * n;
    let dphi = 2.0 * std::f64::consts::PI / azimuthal as f64;
    // (leading coordinates, product of sines so far, weight)
    let mut out = vec![(Vec::<f64>::new(), 1.0f64, 1.0f64)];
    for k in 0..d - 2 {
        let rule = polar_rule(polar, d - 2 - k)?;
        let mut next = Vec::with_capacity(out.len() * rule.len());
        for (coords, s, wt) in &out {
            for &(t, gw) in &rule {
                let mut x = coords.clone();
                x.push(s * t);
                next.push((x, s * (1.0 - t * t).max(0.0).sqrt(), wt * gw));
            }
        }
        out = next;
    }
    let mut dirs = Vec::with_capacity(out.len() * azimuthal);
    for (coords, s, wt) in out {
        for a in 0..azimuthal {
            let phi = a as f64 * dphi;
            let mut x = coords.clone();
            x.push(s * phi.cos());
            x.push(s * phi.sin());
            dirs.push((from_real(&x), wt * dphi));
        }
    }
    Ok(dirs)
}

/// Product rule on the unit sphere `S^{2n-1}` with frames and ball geometry cached.
pub fn sphere_quadrature(n: usize, polar: usize, azimuthal: usize) -> Result<BoundaryQuadrature> {
    let ball = crate::geometry::make_unit_ball(n)?;
    let dirs = sphere_directions(n, polar, azimuthal)?;
    let nodes = dirs
        .into_par_iter()
        .map(|(u, weight)| make_node(&ball, u, weight))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryQuadrature { dimension: n, nodes, resolution: Resolution::new(polar, azimuthal) })
}

fn make_node(d: &Domain, point: CxVector, weight: f64) -> Result<BoundaryNode> {
    let normal = d.unit_normal(&point)?;
    let frame = TangentFrame::from_normal(point.clone(), &normal)?;
    let levi_leray = crate::kernels::levi_leray_density(d, &point, &frame)?;
    Ok(BoundaryNode { gradient: d.gradient(&point), point, weight, frame, levi_leray })
}

/// Boundary radius `r(u)` along the ray `center + t u`.
///
/// Brackets the sign change by doubling, bisects and polishes with Newton.
pub fn radial_solve(d: &Domain, u: &CxVector) -> Result<f64> {
    d.check(u)?;
    if d.shape != Shape::StarShaped {
        return Err(Error::InvalidParameter(format!("{} is not a bounded star-shaped domain", d.label)));
    }
    let nu = u.norm();
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter("zero direction".into()));
    }
    let u = u / c(nu, 0.0);
    let center = &d.star_center;
    let f = |t: f64| d.rho(&(center + &u * c(t, 0.0)));
    if !(f(0.0) < 0.0) {
        return Err(Error::InvalidParameter("star center is not inside the domain".into()));
    }
    let mut hi = 1.0;
    let mut tries = 0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::NoBracket);
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 * hi {
            break;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..8 {
        let w = center + &u * c(t, 0.0);
        let value = d.rho(&w);
        if value.abs() <= RADIAL_TOL {
            break;
        }
        let slope = real_dot(&d.real_gradient(&w), &u);
        if slope.abs() < 1e-300 {
            break;
        }
        let next = t - value / slope;
        if !(next > lo - 1e-9 && next < hi + 1e-9) {
            break;
        }
        t = next;
    }
    if f(t).abs() > BOUNDARY_TOL {
        return Err(Error::NoBracket);
    }
    Ok(t)
}

/// Boundary rule for a star-shaped domain, pulled back from a rule on the sphere of rays.
pub fn radial_graph_quadrature(d: &Domain, sphere: &BoundaryQuadrature) -> Result<BoundaryQuadrature> {
    let n = d.dimension();
    if sphere.dimension != n {
        return Err(Error::DimensionMismatch { expected: n, found: sphere.dimension });
    }
    let k = (2 * n - 1) as i32;
    let nodes = sphere
        .nodes
        .par_iter()
        .map(|s| {
            let u = &s.point;
            let r = radial_solve(d, u)?;
            let w = &d.star_center + u * c(r, 0.0);
            let g = d.real_gradient(&w);
            let gn = g.norm();
            if !(gn > 1e-300) {
                return Err(Error::DegenerateBoundary);
            }
            let cosine = real_dot(&g, u) / gn;
            if cosine.abs() < MIN_RAY_COSINE {
                return Err(Error::StarShapeViolation { cosine });
            }
            make_node(d, w, s.weight * r.powi(k) / cosine.abs())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryQuadrature { dimension: n, nodes, resolution: sphere.resolution })
}

/// Boundary rule for a star-shaped domain at a given resolution.
pub fn boundary_quadrature(d: &Domain, res: Resolution) -> Result<BoundaryQuadrature> {
    let sphere = sphere_quadrature(d.dimension(), res.polar, res.azimuthal)?;
    if d.claimed_class == crate::geometry::DomainClass::Ball && d.star_center.norm() == 0.0 {
        return Ok(sphere);
    }
    radial_graph_quadrature(d, &sphere)
}

/// Volume rule on the unit ball: Gauss-Legendre in `r` against `r^{2n-1}` times the sphere rule.
pub fn ball_volume_quadrature(n: usize, radial: usize, sphere: &BoundaryQuadrature) -> Result<VolumeQuadrature> {
    let ball = crate::geometry::make_unit_ball(n)?;
    star_volume_quadrature(&ball, radial, sphere)
}

/// Volume rule on a star-shaped domain: `r ∈ [0, R(u)]` on each ray.
pub fn star_volume_quadrature(d: &Domain, radial: usize, sphere: &BoundaryQuadrature) -> Result<VolumeQuadrature> {
    let n = d.dimension();
    if sphere.dimension != n {
        return Err(Error::DimensionMismatch { expected: n, found: sphere.dimension });
    }
    let gl = gauss_legendre(radial, 0.0, 1.0)?;
    let k = (2 * n - 1) as i32;
    let per_ray = sphere
        .nodes
        .par_iter()
        .map(|s| {
            let r_max = radial_solve(d, &s.point)?;
            Ok(gl
                .iter()
                .map(|&(t, gw)| {
                    let r = t * r_max;
                    (&d.star_center + &s.point * c(r, 0.0), s.weight * gw * r_max * r.powi(k))
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let (nodes, weights) = per_ray.into_iter().flatten().unzip();
    Ok(VolumeQuadrature { dimension: n, nodes, weights })
}
