//! Domains given by defining functions, their Levi form and complex tangent
//! structure, and sampled convexity diagnostics.
//!
//! A domain is `D = {w : rho(w) < 0}`. Every geometric quantity downstream
//! (normals, tangent frames, Levi-Leray densities, kernel denominators) is
//! derived from the defining function and its first and second complex
//! derivatives, evaluated either analytically or by central differences.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{c, check_dim, herm, pair, CxMatrix, CxVector};

/// Tolerance that defines "on the boundary" everywhere in the crate.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Central-difference step used in finite-difference derivative mode.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Default radius of the sampled patch for the unbounded local models.
pub const DEFAULT_PATCH_RADIUS: f64 = 0.5;

/// Minimum number of unit tangent directions swept per boundary point.
pub const TANGENT_SWEEP: usize = 64;

const HERMITIAN_TOL_ANALYTIC: f64 = 1e-10;
const HERMITIAN_TOL_FD: f64 = 1e-6;

/// A real defining function together with its complex derivatives.
///
/// `gradient` returns `d rho / d w_j` with `d/dw_j = (d/dx_j - i d/dy_j) / 2`,
/// `hess_holo` the symmetric block `d^2 rho / dw_j dw_k` and `hess_mixed` the
/// Hermitian block `d^2 rho / dw_j d conj(w_k)`.
pub trait DefiningFunction: Send + Sync + fmt::Debug {
    fn dimension(&self) -> usize;
    fn rho(&self, w: &CxVector) -> f64;
    fn gradient(&self, w: &CxVector) -> CxVector;
    fn hess_holo(&self, w: &CxVector) -> CxMatrix;
    fn hess_mixed(&self, w: &CxVector) -> CxMatrix;
}

/// `rho(w) = sum_j a_j |w_j|^2 - 1`; the unit ball when all `a_j = 1`.
#[derive(Debug, Clone)]
pub struct EllipsoidRho {
    pub axes: Vec<f64>,
}

impl DefiningFunction for EllipsoidRho {
    fn dimension(&self) -> usize {
        self.axes.len()
    }
    fn rho(&self, w: &CxVector) -> f64 {
        self.axes.iter().zip(w.iter()).map(|(a, z)| a * z.norm_sqr()).sum::<f64>() - 1.0
    }
    fn gradient(&self, w: &CxVector) -> CxVector {
        CxVector::from_iterator(w.len(), self.axes.iter().zip(w.iter()).map(|(a, z)| z.conj() * *a))
    }
    fn hess_holo(&self, _w: &CxVector) -> CxMatrix {
        CxMatrix::zeros(self.axes.len(), self.axes.len())
    }
    fn hess_mixed(&self, _w: &CxVector) -> CxMatrix {
        CxMatrix::from_diagonal(&CxVector::from_iterator(
            self.axes.len(),
            self.axes.iter().map(|&a| c(a, 0.0)),
        ))
    }
}

/// `rho(z) = 2 (Re z_1)^2 - (Im z_1)^2 - Im z_2`: strongly pseudoconvex at the
/// origin but not C-linearly convex there.
#[derive(Debug, Clone, Copy)]
pub struct PseudoconvexModelRho;

impl DefiningFunction for PseudoconvexModelRho {
    fn dimension(&self) -> usize {
        2
    }
    fn rho(&self, w: &CxVector) -> f64 {
        let (x, y) = (w[0].re, w[0].im);
        2.0 * x * x - y * y - w[1].im
    }
    fn gradient(&self, w: &CxVector) -> CxVector {
        // d/dw of 2x^2 - y^2 is (4x + 2iy)/2; d/dw_2 of -Im w_2 is i/2.
        CxVector::from_vec(vec![c(2.0 * w[0].re, w[0].im), c(0.0, 0.5)])
    }
    fn hess_holo(&self, _w: &CxVector) -> CxMatrix {
        let mut m = CxMatrix::zeros(2, 2);
        m[(0, 0)] = c(1.5, 0.0);
        m
    }
    fn hess_mixed(&self, _w: &CxVector) -> CxMatrix {
        let mut m = CxMatrix::zeros(2, 2);
        m[(0, 0)] = c(0.5, 0.0);
        m
    }
}

/// `rho(z) = (|z_1|^2 + ... + |z_{n-1}|^2)^2 - Im z_n`: strictly but not
/// strongly C-linearly convex at the origin.
#[derive(Debug, Clone, Copy)]
pub struct FlatModelRho {
    pub n: usize,
}

impl DefiningFunction for FlatModelRho {
    fn dimension(&self) -> usize {
        self.n
    }
    fn rho(&self, w: &CxVector) -> f64 {
        let s: f64 = w.iter().take(self.n - 1).map(|z| z.norm_sqr()).sum();
        s * s - w[self.n - 1].im
    }
    fn gradient(&self, w: &CxVector) -> CxVector {
        let n = self.n;
        let s: f64 = w.iter().take(n - 1).map(|z| z.norm_sqr()).sum();
        CxVector::from_fn(n, |j, _| if j + 1 < n { w[j].conj() * (2.0 * s) } else { c(0.0, 0.5) })
    }
    fn hess_holo(&self, w: &CxVector) -> CxMatrix {
        let n = self.n;
        CxMatrix::from_fn(n, n, |j, k| {
            if j + 1 < n && k + 1 < n {
                w[j].conj() * w[k].conj() * 2.0
            } else {
                c(0.0, 0.0)
            }
        })
    }
    fn hess_mixed(&self, w: &CxVector) -> CxMatrix {
        let n = self.n;
        let s: f64 = w.iter().take(n - 1).map(|z| z.norm_sqr()).sum();
        CxMatrix::from_fn(n, n, |j, k| {
            if j + 1 < n && k + 1 < n {
                let d = if j == k { 2.0 * s } else { 0.0 };
                w[j].conj() * w[k] * 2.0 + d
            } else {
                c(0.0, 0.0)
            }
        })
    }
}

/// `factor * rho` for a positive factor; used to probe scaling covariance.
#[derive(Debug, Clone)]
pub struct ScaledRho {
    pub inner: Arc<dyn DefiningFunction>,
    pub factor: f64,
}

impl DefiningFunction for ScaledRho {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }
    fn rho(&self, w: &CxVector) -> f64 {
        self.factor * self.inner.rho(w)
    }
    fn gradient(&self, w: &CxVector) -> CxVector {
        self.inner.gradient(w) * c(self.factor, 0.0)
    }
    fn hess_holo(&self, w: &CxVector) -> CxMatrix {
        self.inner.hess_holo(w) * c(self.factor, 0.0)
    }
    fn hess_mixed(&self, w: &CxVector) -> CxMatrix {
        self.inner.hess_mixed(w) * c(self.factor, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference { step: f64 },
}

impl DerivativeMode {
    pub fn fd() -> Self {
        DerivativeMode::FiniteDifference { step: DEFAULT_FD_STEP }
    }
    fn hermitian_tol(self) -> f64 {
        match self {
            DerivativeMode::Analytic => HERMITIAN_TOL_ANALYTIC,
            DerivativeMode::FiniteDifference { .. } => HERMITIAN_TOL_FD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainClass {
    Ball,
    Ellipsoid,
    StronglyConvex,
    StronglyPseudoconvexNonconvex,
    LocalModel,
}

/// Shape information used by the boundary samplers.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Bounded and star-shaped about `star_center`.
    StarShaped,
    /// Unbounded graph `Im z_n > F(z_1, ..., z_{n-1})`, sampled on `{|z| < patch_radius}`.
    LocalGraph { patch_radius: f64 },
}

#[derive(Debug, Clone)]
pub struct Domain {
    pub defining: Arc<dyn DefiningFunction>,
    pub mode: DerivativeMode,
    pub star_center: CxVector,
    pub label: String,
    pub claimed_class: DomainClass,
    pub shape: Shape,
}

pub fn make_unit_ball(n: usize) -> Result<Domain> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    Ok(Domain {
        defining: Arc::new(EllipsoidRho { axes: vec![1.0; n] }),
        mode: DerivativeMode::Analytic,
        star_center: CxVector::zeros(n),
        label: "ball".into(),
        claimed_class: DomainClass::Ball,
        shape: Shape::StarShaped,
    })
}

pub fn make_ellipsoid(axes: &[f64]) -> Result<Domain> {
    if axes.is_empty() {
        return Err(Error::InvalidParameter("ellipsoid needs at least one axis".into()));
    }
    if let Some(a) = axes.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
        return Err(Error::InvalidParameter(format!("ellipsoid coefficient {a} is not positive")));
    }
    let label = format!(
        "ellipsoid:{}",
        axes.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
    );
    Ok(Domain {
        defining: Arc::new(EllipsoidRho { axes: axes.to_vec() }),
        mode: DerivativeMode::Analytic,
        star_center: CxVector::zeros(axes.len()),
        label,
        claimed_class: DomainClass::Ellipsoid,
        shape: Shape::StarShaped,
    })
}

pub fn make_local_model_pscvx_not_clin() -> Domain {
    Domain {
        defining: Arc::new(PseudoconvexModelRho),
        mode: DerivativeMode::Analytic,
        star_center: CxVector::from_vec(vec![c(0.0, 0.0), c(0.0, 0.1)]),
        label: "model1".into(),
        claimed_class: DomainClass::LocalModel,
        shape: Shape::LocalGraph { patch_radius: DEFAULT_PATCH_RADIUS },
    }
}

pub fn make_local_model_strict_not_strong(n: usize) -> Result<Domain> {
    if n < 2 {
        return Err(Error::InvalidParameter("flat model needs n >= 2".into()));
    }
    let mut center = CxVector::zeros(n);
    center[n - 1] = c(0.0, 0.1);
    Ok(Domain {
        defining: Arc::new(FlatModelRho { n }),
        mode: DerivativeMode::Analytic,
        star_center: center,
        label: "model2".into(),
        claimed_class: DomainClass::LocalModel,
        shape: Shape::LocalGraph { patch_radius: DEFAULT_PATCH_RADIUS },
    })
}

impl Domain {
    /// Parses `ball[:n]`, `ellipsoid:a1,a2,...`, `model1`, `model2[:n]`.
    pub fn from_spec(spec: &str, default_n: usize) -> Result<Domain> {
        let (name, args) = match spec.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (spec, None),
        };
        let parse_n = |s: Option<&str>| -> Result<usize> {
            match s {
                None => Ok(default_n),
                Some(t) => t.trim().parse().map_err(|_| Error::Parse(format!("bad dimension {t:?}"))),
            }
        };
        match name.trim() {
            "ball" => make_unit_ball(parse_n(args)?),
            "ellipsoid" => {
                let raw = args.ok_or_else(|| Error::Parse("ellipsoid needs coefficients".into()))?;
                let axes = raw
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad coefficient {t:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                make_ellipsoid(&axes)
            }
            "model1" => Ok(make_local_model_pscvx_not_clin()),
            "model2" => make_local_model_strict_not_strong(parse_n(args)?.max(2)),
            other => Err(Error::Parse(format!("unknown domain {other:?}"))),
        }
    }

    pub fn dimension(&self) -> usize {
        self.defining.dimension()
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_patch_radius(mut self, radius: f64) -> Self {
        if let Shape::LocalGraph { patch_radius } = &mut self.shape {
            *patch_radius = radius;
        }
        self
    }

    /// The same domain with defining function `factor * rho`.
    pub fn scaled(&self, factor: f64) -> Domain {
        Domain {
            defining: Arc::new(ScaledRho { inner: self.defining.clone(), factor }),
            label: format!("{}*{}", factor, self.label),
            ..self.clone()
        }
    }

    pub fn check(&self, w: &CxVector) -> Result<()> {
        check_dim(self.dimension(), w)
    }

    pub fn rho(&self, w: &CxVector) -> f64 {
        self.defining.rho(w)
    }

    /// `d rho / d w_j` in the active derivative mode.
    pub fn gradient(&self, w: &CxVector) -> CxVector {
        match self.mode {
            DerivativeMode::Analytic => self.defining.gradient(w),
            DerivativeMode::FiniteDifference { step } => {
                let n = self.dimension();
                CxVector::from_fn(n, |j, _| {
                    let dx = self.central_first(w, j, false, step);
                    let dy = self.central_first(w, j, true, step);
                    c(0.5 * dx, -0.5 * dy)
                })
            }
        }
    }

    pub fn hess_holo(&self, w: &CxVector) -> CxMatrix {
        match self.mode {
            DerivativeMode::Analytic => self.defining.hess_holo(w),
            DerivativeMode::FiniteDifference { step } => {
                let r = self.real_hessian_fd(w, step);
                let n = self.dimension();
                CxMatrix::from_fn(n, n, |j, k| {
                    let (xx, yy) = (r[2 * j][2 * k], r[2 * j + 1][2 * k + 1]);
                    let (xy, yx) = (r[2 * j][2 * k + 1], r[2 * j + 1][2 * k]);
                    c(0.25 * (xx - yy), -0.25 * (xy + yx))
                })
            }
        }
    }

    pub fn hess_mixed(&self, w: &CxVector) -> CxMatrix {
        match self.mode {
            DerivativeMode::Analytic => self.defining.hess_mixed(w),
            DerivativeMode::FiniteDifference { step } => {
                let r = self.real_hessian_fd(w, step);
                let n = self.dimension();
                CxMatrix::from_fn(n, n, |j, k| {
                    let (xx, yy) = (r[2 * j][2 * k], r[2 * j + 1][2 * k + 1]);
                    let (xy, yx) = (r[2 * j][2 * k + 1], r[2 * j + 1][2 * k]);
                    c(0.25 * (xx + yy), 0.25 * (xy - yx))
                })
            }
        }
    }

    /// Real gradient of rho viewed as a vector of `C^n = R^{2n}`: `2 conj(d rho)`.
    pub fn real_gradient(&self, w: &CxVector) -> CxVector {
        self.gradient(w).map(|z| z.conj() * 2.0)
    }

    /// Outward unit normal at `w` as a complex vector.
    pub fn unit_normal(&self, w: &CxVector) -> Result<CxVector> {
        let g = self.real_gradient(w);
        let norm = g.norm();
        if norm < 1e-300 || !norm.is_finite() {
            return Err(Error::DegenerateBoundary);
        }
        Ok(g / c(norm, 0.0))
    }

    /// Real Hessian quadratic form `D^2 rho(w)[v, v]` for a real direction `v`.
    pub fn real_hessian_form(&self, w: &CxVector, v: &CxVector) -> f64 {
        let hh = self.hess_holo(w);
        let hm = self.hess_mixed(w);
        let holo = (v.transpose() * &hh * v)[(0, 0)];
        let mixed = (v.transpose() * &hm * v.map(|z| z.conj()))[(0, 0)];
        2.0 * holo.re + 2.0 * mixed.re
    }

    /// `true` when `|rho(w)| <= BOUNDARY_TOL`.
    pub fn on_boundary(&self, w: &CxVector) -> bool {
        self.rho(w).abs() <= BOUNDARY_TOL
    }

    fn shifted(w: &CxVector, j: usize, imag: bool, t: f64) -> CxVector {
        let mut v = w.clone();
        if imag {
            v[j] += c(0.0, t);
        } else {
            v[j] += c(t, 0.0);
        }
        v
    }

    fn central_first(&self, w: &CxVector, j: usize, imag: bool, h: f64) -> f64 {
        let p = self.rho(&Self::shifted(w, j, imag, h));
        let m = self.rho(&Self::shifted(w, j, imag, -h));
        (p - m) / (2.0 * h)
    }

    fn real_hessian_fd(&self, w: &CxVector, h: f64) -> Vec<Vec<f64>> {
        let x = crate::linalg::to_real(w);
        let d = x.len();
        let eval = |dx: &[(usize, f64)]| {
            let mut y = x.clone();
            for &(i, t) in dx {
                y[i] += t;
            }
            self.rho(&crate::linalg::from_real(&y))
        };
        let mut out = vec![vec![0.0; d]; d];
        for a in 0..d {
            for b in a..d {
                let v = if a == b {
                    (eval(&[(a, h)]) - 2.0 * eval(&[]) + eval(&[(a, -h)])) / (h * h)
                } else {
                    (eval(&[(a, h), (b, h)]) - eval(&[(a, h), (b, -h)]) - eval(&[(a, -h), (b, h)])
                        + eval(&[(a, -h), (b, -h)]))
                        / (4.0 * h * h)
                };
                out[a][b] = v;
                out[b][a] = v;
            }
        }
        out
    }
}

/// Levi form `sum_{j,k} d^2 rho / dw_j d conj(w_k) (w) xi_j conj(xi_k)`.
pub fn levi_form(d: &Domain, w: &CxVector, xi: &CxVector) -> Result<f64> {
    d.check(w)?;
    d.check(xi)?;
    let h = d.hess_mixed(w);
    let defect = crate::linalg::hermitian_defect(&h);
    let tol = d.mode.hermitian_tol();
    if defect > tol {
        return Err(Error::NonHermitian { deviation: defect });
    }
    let value = (xi.transpose() * &h * xi.map(|z| z.conj()))[(0, 0)];
    let scale = xi.norm_squared() * h.norm().max(1.0);
    if value.im.abs() > tol.max(1e-12) * scale {
        return Err(Error::NonHermitian { deviation: value.im.abs() });
    }
    Ok(value.re)
}

/// Orthonormal basis of `T^C_w = {xi : <d rho(w), xi> = 0}`.
pub fn complex_tangent_basis(d: &Domain, w: &CxVector) -> Result<Vec<CxVector>> {
    d.check(w)?;
    let r = d.rho(w);
    if r.abs() > BOUNDARY_TOL {
        return Err(Error::NotOnBoundary { residual: r.abs() });
    }
    tangent_basis_unchecked(d, w)
}

fn tangent_basis_unchecked(d: &Domain, w: &CxVector) -> Result<Vec<CxVector>> {
    let n = d.dimension();
    let g = d.gradient(w).map(|z| z.conj());
    let norm = g.norm();
    if norm < 1e-14 {
        return Err(Error::DegenerateBoundary);
    }
    let mut basis: Vec<CxVector> = vec![g / c(norm, 0.0)];
    let mut candidates: Vec<CxVector> = (0..n)
        .map(|k| {
            let mut e = CxVector::zeros(n);
            e[k] = c(1.0, 0.0);
            e
        })
        .collect();
    while basis.len() < n {
        // Pivot: largest remaining norm after projection.
        let residuals: Vec<CxVector> = candidates
            .iter()
            .map(|e| {
                let mut v = e.clone();
                for b in &basis {
                    let coef = herm(&v, b);
                    v -= b * coef;
                }
                v
            })
            .collect();
        let (best, _) = residuals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .expect("nonempty candidates");
        let mut v = residuals[best].clone();
        for b in &basis {
            let coef = herm(&v, b);
            v -= b * coef;
        }
        let nv = v.norm();
        basis.push(v / c(nv, 0.0));
        candidates.remove(best);
    }
    Ok(basis.split_off(1))
}

/// Deterministic low-discrepancy unit vectors in `C^k` (the basis vectors
/// first, then Halton points pushed through Box-Muller and normalized).
pub fn unit_sweep(k: usize, count: usize) -> Vec<CxVector> {
    const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
    let mut out: Vec<CxVector> = (0..k)
        .map(|j| {
            let mut e = CxVector::zeros(k);
            e[j] = c(1.0, 0.0);
            e
        })
        .collect();
    if k == 0 {
        return out;
    }
    let mut idx = 1u64;
    while out.len() < count.max(k) {
        let u: Vec<f64> = (0..2 * k).map(|d| halton(idx, PRIMES[d % PRIMES.len()])).collect();
        let mut v = CxVector::zeros(k);
        for j in 0..k {
            let (u1, u2) = (u[2 * j].max(1e-12), u[2 * j + 1]);
            let rad = (-2.0 * u1.ln()).sqrt();
            let ang = 2.0 * std::f64::consts::PI * u2;
            v[j] = c(rad * ang.cos(), rad * ang.sin());
        }
        let nv = v.norm();
        if nv > 1e-12 {
            out.push(v / c(nv, 0.0));
        }
        idx += 1;
    }
    out
}

fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

fn check_boundary_samples(d: &Domain, samples: &[CxVector]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    for w in samples {
        d.check(w)?;
        let r = d.rho(w);
        if r.abs() > BOUNDARY_TOL {
            return Err(Error::NotOnBoundary { residual: r.abs() });
        }
    }
    Ok(())
}

/// Minimum of the Levi form over boundary samples and unit complex tangent
/// directions: an empirical lower bound for the pseudoconvexity constant.
/// Returns `+inf` in dimension 1 where the complex tangent space is trivial.
pub fn pseudoconvexity_margin(d: &Domain, boundary_samples: &[CxVector]) -> Result<f64> {
    check_boundary_samples(d, boundary_samples)?;
    let n = d.dimension();
    let sweep = unit_sweep(n - 1, TANGENT_SWEEP);
    let mut worst = f64::INFINITY;
    for w in boundary_samples {
        let basis = tangent_basis_unchecked(d, w)?;
        for coeffs in &sweep {
            let mut xi = CxVector::zeros(n);
            for (a, b) in coeffs.iter().zip(&basis) {
                xi += b * *a;
            }
            worst = worst.min(levi_form(d, w, &xi)?);
        }
    }
    Ok(worst)
}

/// Minimum over sampled pairs of `|<d rho(w), w - z>| / |w - z|^2`, boundary
/// `w`, closure `z`; pairs closer than `1e-8` are skipped.
pub fn clin_convexity_margin(d: &Domain, boundary_samples: &[CxVector], closure_samples: &[CxVector]) -> Result<f64> {
    check_boundary_samples(d, boundary_samples)?;
    if closure_samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    for z in closure_samples {
        d.check(z)?;
        if d.rho(z) > BOUNDARY_TOL {
            return Err(Error::InvalidParameter("closure sample lies outside the domain".into()));
        }
    }
    let mut worst = f64::INFINITY;
    for w in boundary_samples {
        let g = d.gradient(w);
        for z in closure_samples {
            let diff = w - z;
            let dist2 = diff.norm_squared();
            if dist2.sqrt() < 1e-8 {
                continue;
            }
            worst = worst.min(pair(&g, &diff).norm() / dist2);
        }
    }
    if worst.is_infinite() {
        return Err(Error::EmptySamples);
    }
    Ok(worst)
}

/// Minimum real Hessian of rho over boundary samples and unit real tangent
/// directions (a strong-convexity margin).
pub fn real_convexity_margin(d: &Domain, boundary_samples: &[CxVector]) -> Result<f64> {
    check_boundary_samples(d, boundary_samples)?;
    let n = d.dimension();
    let mut worst = f64::INFINITY;
    for w in boundary_samples {
        let nu = d.unit_normal(w)?;
        // Real tangent directions: Halton sweep in R^{2n} projected off the normal.
        let sweep = unit_sweep(n, TANGENT_SWEEP);
        for v in sweep.iter().chain(sweep.iter().map(|v| v.map(|z| z * crate::linalg::I)).collect::<Vec<_>>().iter()) {
            let proj = crate::linalg::real_dot(v, &nu);
            let t = v - &nu * c(proj, 0.0);
            let nt = t.norm();
            if nt < 1e-8 {
                continue;
            }
            let t = t / c(nt, 0.0);
            worst = worst.min(d.real_hessian_form(w, &t));
        }
    }
    Ok(worst)
}

/// `|<d rho(w), w - z>|^{1/2}`.
pub fn quasi_distance(d: &Domain, w: &CxVector, z: &CxVector) -> Result<f64> {
    d.check(w)?;
    d.check(z)?;
    let g = d.gradient(w);
    Ok(pair(&g, &(w - z)).norm().sqrt())
}

/// Largest observed ratio `d(w, z) / (d(w, u) + d(u, z))` over triples of
/// boundary samples: an empirical quasi-triangle constant.
pub fn quasi_triangle_constant(d: &Domain, samples: &[CxVector]) -> Result<f64> {
    check_boundary_samples(d, samples)?;
    let grads: Vec<CxVector> = samples.iter().map(|w| d.gradient(w)).collect();
    let m = samples.len();
    let mut dist = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            dist[i * m + j] = pair(&grads[i], &(&samples[i] - &samples[j])).norm().sqrt();
        }
    }
    let mut worst: f64 = 1.0;
    for i in 0..m {
        for j in 0..m {
            let dij = dist[i * m + j];
            if dij < 1e-8 {
                continue;
            }
            for k in 0..m {
                let denom = dist[i * m + k] + dist[k * m + j];
                if denom > 1e-12 {
                    worst = worst.max(dij / denom);
                }
            }
        }
    }
    Ok(worst)
}

/// Sampled boundary and closure points of the bounded patch of a local graph model.
#[derive(Debug, Clone)]
pub struct PatchSamples {
    pub boundary: Vec<CxVector>,
    pub closure: Vec<CxVector>,
}

/// Structured samples of `{|z| < radius}` for the graph models
/// `Im z_n > F(z')`: a symmetric grid in `(z', Re z_n)` lifted to the boundary,
/// plus interior points on a grid of heights. The grid is a fixed pattern
/// rescaled with the radius.
pub fn patch_samples(d: &Domain, radius: f64, per_axis: usize) -> Result<PatchSamples> {
    let n = d.dimension();
    let k = per_axis.max(2) | 1; // odd so that 0 is a grid value
    let grid: Vec<f64> = (0..k).map(|i| radius * (2.0 * i as f64 / (k - 1) as f64 - 1.0)).collect();
    let free = 2 * (n - 1) + 1;
    let mut boundary = Vec::new();
    let mut closure = Vec::new();
    let mut index = vec![0usize; free];
    loop {
        let mut w = CxVector::zeros(n);
        for j in 0..n - 1 {
            w[j] = c(grid[index[2 * j]], grid[index[2 * j + 1]]);
        }
        let s = grid[index[free - 1]];
        w[n - 1] = c(s, 0.0);
        // Im z_n solving rho = 0: rho is affine in Im z_n with slope -1.
        let height = d.rho(&w);
        w[n - 1] = c(s, height);
        if w.norm() < radius {
            boundary.push(w.clone());
            closure.push(w.clone());
        }
        for &t in &grid {
            let mut z = w.clone();
            z[n - 1] = c(s, t);
            if t > height && z.norm() < radius {
                closure.push(z);
            }
        }
        let mut pos = 0;
        loop {
            if pos == free {
                return Ok(PatchSamples { boundary, closure });
            }
            index[pos] += 1;
            if index[pos] < k {
                break;
            }
            index[pos] = 0;
            pos += 1;
        }
    }
}

/// Random boundary points of a bounded star-shaped domain (directions
/// uniform on the sphere of rays, radius from a root solve).
pub fn random_boundary_points(d: &Domain, count: usize, seed: u64) -> Result<Vec<CxVector>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = d.dimension();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = random_unit_vector(&mut rng, n);
        let r = crate::quadrature::radial_solve(d, &u)?;
        out.push(&d.star_center + u * c(r, 0.0));
    }
    Ok(out)
}

/// Random points `center + t r(u) u` with `t` uniform in `[0, max_fraction]`.
pub fn random_interior_points(d: &Domain, count: usize, max_fraction: f64, seed: u64) -> Result<Vec<CxVector>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = d.dimension();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = random_unit_vector(&mut rng, n);
        let r = crate::quadrature::radial_solve(d, &u)?;
        let t: f64 = rng.gen_range(0.0..max_fraction);
        out.push(&d.star_center + u * c(t * r, 0.0));
    }
    Ok(out)
}

pub fn random_unit_vector<R: Rng>(rng: &mut R, n: usize) -> CxVector {
    loop {
        let v = CxVector::from_fn(n, |_, _| c(gaussian(rng), gaussian(rng)));
        let nv = v.norm();
        if nv > 1e-8 {
            return v / c(nv, 0.0);
        }
    }
}

pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Margins and the resulting classification of a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport {
    pub pseudoconvexity: f64,
    pub clin: f64,
    pub real_convexity: f64,
}

impl ConvexityReport {
    pub fn strongly_pseudoconvex(&self) -> bool {
        self.pseudoconvexity > 0.0
    }
    pub fn strongly_convex(&self) -> bool {
        self.real_convexity > 0.0
    }
    /// Positive for every sampled distinct pair.
    pub fn strictly_clin_convex(&self) -> bool {
        self.clin > 0.0
    }
}

/// Margins over the natural sample set of the domain: a sphere-of-rays
/// sample for bounded domains, the structured patch for local models.
pub fn diagnose(d: &Domain, resolution: usize, seed: u64) -> Result<ConvexityReport> {
    let (boundary, closure) = match d.shape {
        Shape::StarShaped => {
            let b = random_boundary_points(d, resolution * resolution, seed)?;
            let mut z = random_interior_points(d, resolution * resolution, 1.0, seed ^ 0x9e37)?;
            z.extend(b.iter().cloned());
            (b, z)
        }
        Shape::LocalGraph { patch_radius } => {
            let p = patch_samples(d, patch_radius, resolution)?;
            (p.boundary, p.closure)
        }
    };
    Ok(ConvexityReport {
        pseudoconvexity: pseudoconvexity_margin(d, &boundary)?,
        clin: clin_convexity_margin(d, &boundary, &closure)?,
        real_convexity: real_convexity_margin(d, &boundary)?,
    })
}

/// Margins at or below this value are treated as vanishing.
pub const MARGIN_ZERO: f64 = 1e-12;

/// C-linear convexity margins of a local model on shrinking patches.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkStudy {
    pub radii: Vec<f64>,
    pub margins: Vec<f64>,
}

impl ShrinkStudy {
    /// `margin(first radius) / margin(last radius)`; infinite once the last margin vanishes.
    pub fn decrease_factor(&self) -> f64 {
        match (self.margins.first(), self.margins.last()) {
            (Some(&a), Some(&b)) if b > MARGIN_ZERO => a / b,
            (Some(_), Some(_)) => f64::INFINITY,
            _ => f64::NAN,
        }
    }

    pub fn min_margin(&self) -> f64 {
        self.margins.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// `clin_convexity_margin` on `{|z| < r}` for each radius; local models only.
pub fn clin_shrink_study(d: &Domain, radii: &[f64], per_axis: usize) -> Result<ShrinkStudy> {
    if !matches!(d.shape, Shape::LocalGraph { .. }) {
        return Err(Error::InvalidParameter(format!("{} is not a local graph model", d.label)));
    }
    let margins = radii
        .iter()
        .map(|&r| {
            let p = patch_samples(d, r, per_axis)?;
            clin_convexity_margin(d, &p.boundary, &p.closure)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ShrinkStudy { radii: radii.to_vec(), margins })
}

/// Yes/no convexity classes read off sampled margins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub strongly_convex: bool,
    pub strongly_pseudoconvex: bool,
    pub strictly_clin_convex: bool,
    pub strongly_clin_convex: bool,
}

/// Bounded domains: a positive sampled minimum is a uniform constant.
/// Local models additionally need the shrink study: strong C-linear convexity
/// fails when the margin decays tenfold as the patch shrinks.
pub fn classify(report: &ConvexityReport, shrink: Option<&ShrinkStudy>) -> Classification {
    let positive = |v: f64| v > MARGIN_ZERO;
    match shrink {
        None => Classification {
            strongly_convex: positive(report.real_convexity),
            strongly_pseudoconvex: positive(report.pseudoconvexity),
            strictly_clin_convex: positive(report.clin),
            strongly_clin_convex: positive(report.clin),
        },
        Some(s) => {
            let strict = positive(report.clin) && positive(s.min_margin());
            Classification {
                strongly_convex: positive(report.real_convexity),
                strongly_pseudoconvex: positive(report.pseudoconvexity),
                strictly_clin_convex: strict,
                strongly_clin_convex: strict && s.decrease_factor() < 10.0,
            }
        }
    }
}
