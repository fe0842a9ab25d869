//! Boundary and solid kernels built from generating forms.
//!
//! Boundary densities are returned against the measure named by
//! [`BoundaryKernelDensity::measure`]; [`BoundaryKernelDensity::density_sigma`]
//! converts to surface measure using the node's cached Levi-Leray density.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forms::{
    self, cf0, pullback_density, top_form_density, FormAtPoint, FormField, Generator, TangentFrame, Variable,
};
use crate::geometry::{self, Domain};
use crate::linalg::{c, factorial, herm, pair, CxMatrix, CxVector};
use crate::quadrature::BoundaryNode;

/// Denominators below this modulus are treated as vanishing.
pub const DENOMINATOR_FLOOR: f64 = 1e-14;

// ---------------------------------------------------------------------------
// Configuration

/// Smoothed holomorphic Hessian `τ^ε(w)` used in the Levi-polynomial construction.
pub type TauProvider = Arc<dyn Fn(&CxVector, f64) -> CxMatrix + Send + Sync>;

#[derive(Clone)]
pub struct KernelConfig {
    pub eps: f64,
    /// Outer radius of the cutoff: `χ₁ = 1` below `eps0 / 2`, `0` above `eps0`.
    pub eps0: f64,
    /// Pseudoconvexity constant in use.
    pub c0: f64,
    pub mu0: f64,
    pub delta0: f64,
    /// `None` uses the exact holomorphic Hessian.
    pub tau: Option<TauProvider>,
}

impl fmt::Debug for KernelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelConfig")
            .field("eps", &self.eps)
            .field("eps0", &self.eps0)
            .field("c0", &self.c0)
            .field("mu0", &self.mu0)
            .field("delta0", &self.delta0)
            .field("tau", &self.tau.as_ref().map(|_| "custom"))
            .finish()
    }
}

/// Cap on the cutoff radius when the Hessian is (nearly) constant.
pub const MAX_EPS0: f64 = 1.0;

impl KernelConfig {
    pub fn new(eps: f64, eps0: f64, c0: f64) -> Result<Self> {
        let cfg = KernelConfig {
            eps,
            eps0,
            c0,
            mu0: c0 * eps0 * eps0 / 16.0,
            delta0: c0 * eps0 * eps0 / 16.0,
            tau: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0 && self.eps0.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps0 = {} must be positive", self.eps0)));
        }
        if !(self.eps > 0.0 && self.eps < self.eps0) {
            return Err(Error::InvalidParameter(format!("eps = {} must lie in (0, eps0 = {})", self.eps, self.eps0)));
        }
        if !(self.c0 > 0.0) {
            return Err(Error::InvalidParameter(format!("c0 = {} must be positive", self.c0)));
        }
        Ok(())
    }

    /// Constants measured on the domain: `c0` from the pseudoconvexity margin,
    /// `eps0 = min(0.5 c0 / Lip(τ), MAX_EPS0)`, `eps = eps0 / 10`.
    pub fn for_domain(d: &Domain, seed: u64) -> Result<Self> {
        let samples = geometry::random_boundary_points(d, 64, seed)?;
        let c0 = geometry::pseudoconvexity_margin(d, &samples)?;
        if !(c0 > 0.0) {
            return Err(Error::InvalidParameter(format!("{} is not strongly pseudoconvex (margin {c0:e})", d.label)));
        }
        let lip = hessian_lipschitz(d, &samples);
        let eps0 = if lip > 0.0 { (0.5 * c0 / lip).min(MAX_EPS0) } else { MAX_EPS0 };
        KernelConfig::new(eps0 / 10.0, eps0, c0)
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self> {
        self.eps = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn with_tau(mut self, tau: TauProvider) -> Self {
        self.tau = Some(tau);
        self
    }

    fn tau(&self, d: &Domain, w: &CxVector) -> CxMatrix {
        match &self.tau {
            Some(t) => t(w, self.eps),
            None => d.hess_holo(w),
        }
    }
}

/// Largest sampled `|τ(w) - τ(w')| / |w - w'|` (Frobenius norm).
pub fn hessian_lipschitz(d: &Domain, samples: &[CxVector]) -> f64 {
    let hs: Vec<CxMatrix> = samples.iter().map(|w| d.hess_holo(w)).collect();
    let mut worst = 0.0f64;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let dist = (&samples[i] - &samples[j]).norm();
            if dist > 1e-8 {
                worst = worst.max((&hs[i] - &hs[j]).norm() / dist);
            }
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// Scalar building blocks

/// `⟨∂ρ(w), w - z⟩ = sum_j dρ/dw_j (w) (w_j - z_j)`.
pub fn leray_denominator(d: &Domain, w: &CxVector, z: &CxVector) -> Result<Complex64> {
    d.check(w)?;
    d.check(z)?;
    Ok(pair(&d.gradient(w), &(w - z)))
}

/// Levi polynomial `Δ(w, z) = ⟨∂ρ(w), w - z⟩ - ½ (w - z)ᵀ ∂²ρ(w) (w - z)`.
pub fn levi_polynomial(d: &Domain, w: &CxVector, z: &CxVector) -> Result<Complex64> {
    d.check(w)?;
    d.check(z)?;
    let v = w - z;
    let h = d.hess_holo(w);
    Ok(pair(&d.gradient(w), &v) - 0.5 * (v.transpose() * h * &v)[(0, 0)])
}

fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

fn smooth_step_derivative(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a * b * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t))) / ((a + b) * (a + b))
}

/// Cutoff `χ₁` as a function of `t = |w - z|`.
pub fn cutoff(t: f64, eps0: f64) -> f64 {
    let half = 0.5 * eps0;
    1.0 - smooth_step((t - half) / half)
}

/// `dχ₁/dt`.
pub fn cutoff_derivative(t: f64, eps0: f64) -> f64 {
    let half = 0.5 * eps0;
    -smooth_step_derivative((t - half) / half) / half
}

fn delta_eps_components(d: &Domain, w: &CxVector, z: &CxVector, cfg: &KernelConfig) -> CxVector {
    let v = w - z;
    let tau = cfg.tau(d, w);
    d.gradient(w) - (tau * v) * c(0.5, 0.0)
}

/// Glued denominator `g^ε = χ₁ Δ^ε + (1 - χ₁)|w - z|^2`.
pub fn g_glued(d: &Domain, w: &CxVector, z: &CxVector, cfg: &KernelConfig) -> Result<Complex64> {
    d.check(w)?;
    d.check(z)?;
    let v = w - z;
    let chi = cutoff(v.norm(), cfg.eps0);
    let near = if chi > 0.0 { pair(&delta_eps_components(d, w, z, cfg), &v) } else { c(0.0, 0.0) };
    Ok(near * chi + c((1.0 - chi) * v.norm_squared(), 0.0))
}

/// `|g^ε(w, z) - conj(g^ε(z, w))|`.
pub fn symmetry_defect(d: &Domain, w: &CxVector, z: &CxVector, cfg: &KernelConfig) -> Result<f64> {
    Ok((g_glued(d, w, z, cfg)? - g_glued(d, z, w, cfg)?.conj()).norm())
}

/// Coefficients of the Levi-polynomial generating form `η^ε`.
pub fn eta_eps_coefficients(d: &Domain, w: &CxVector, z: &CxVector, cfg: &KernelConfig) -> Result<CxVector> {
    let g = g_glued(d, w, z, cfg)?;
    if g.norm() < DENOMINATOR_FLOOR {
        return Err(Error::VanishingDenominator { value: g.norm() });
    }
    let v = w - z;
    let chi = cutoff(v.norm(), cfg.eps0);
    let far = v.map(|x| x.conj() * (1.0 - chi));
    let num = if chi > 0.0 { delta_eps_components(d, w, z, cfg) * c(chi, 0.0) + far } else { far };
    Ok(num / g)
}

pub fn eta_eps(d: &Domain, w: &CxVector, z: &CxVector, cfg: &KernelConfig) -> Result<FormAtPoint> {
    let coeffs = eta_eps_coefficients(d, w, z, cfg)?;
    Ok(FormAtPoint::one_form(coeffs.as_slice()))
}

// ---------------------------------------------------------------------------
// Generating forms as fields

/// Bochner-Martinelli form `∂_w β / β`, `β = |w - z|^2`, with analytic partials.
#[derive(Debug, Clone, Copy)]
pub struct BochnerMartinelliForm {
    pub n: usize,
}

impl FormField for BochnerMartinelliForm {
    fn dimension(&self) -> usize {
        self.n
    }
    fn bidegree(&self) -> (usize, usize) {
        (1, 0)
    }
    fn eval(&self, w: &CxVector, z: &CxVector) -> FormAtPoint {
        let v = w - z;
        let beta = v.norm_squared();
        FormAtPoint::one_form(&v.iter().map(|x| x.conj() / beta).collect::<Vec<_>>())
    }
    fn partials(&self, w: &CxVector, z: &CxVector, var: Variable) -> Option<Vec<FormAtPoint>> {
        let v = w - z;
        let beta = v.norm_squared();
        let n = self.n;
        let out = (0..n)
            .map(|k| {
                let coeffs: Vec<Complex64> = (0..n)
                    .map(|j| {
                        let vbj = v[j].conj();
                        match var {
                            Variable::W => -vbj * v[k].conj() / (beta * beta),
                            Variable::WBar | Variable::ZBar => {
                                let kron = if j == k { 1.0 / beta } else { 0.0 };
                                let val = c(kron, 0.0) - vbj * v[k] / (beta * beta);
                                if var == Variable::ZBar {
                                    -val
                                } else {
                                    val
                                }
                            }
                        }
                    })
                    .collect();
                FormAtPoint::one_form(&coeffs)
            })
            .collect();
        Some(out)
    }
}

/// Cauchy-Leray form `∂ρ(w) / ⟨∂ρ(w), w - z⟩` with analytic `w̄`/`z̄` partials.
#[derive(Debug, Clone)]
pub struct CauchyLerayForm {
    pub domain: Domain,
}

impl FormField for CauchyLerayForm {
    fn dimension(&self) -> usize {
        self.domain.dimension()
    }
    fn bidegree(&self) -> (usize, usize) {
        (1, 0)
    }
    fn eval(&self, w: &CxVector, z: &CxVector) -> FormAtPoint {
        let g = self.domain.gradient(w);
        let l = pair(&g, &(w - z));
        FormAtPoint::one_form(&g.iter().map(|x| x / l).collect::<Vec<_>>())
    }
    fn partials(&self, w: &CxVector, z: &CxVector, var: Variable) -> Option<Vec<FormAtPoint>> {
        let d = &self.domain;
        let g = d.gradient(w);
        let v = w - z;
        let l = pair(&g, &v);
        let n = g.len();
        match var {
            Variable::W => None,
            Variable::WBar => {
                let h = d.hess_mixed(w);
                Some(
                    (0..n)
                        .map(|m| {
                            let dl: Complex64 = (0..n).map(|k| h[(k, m)] * v[k]).sum();
                            let coeffs: Vec<Complex64> = (0..n).map(|j| h[(j, m)] / l - g[j] * dl / (l * l)).collect();
                            FormAtPoint::one_form(&coeffs)
                        })
                        .collect(),
                )
            }
            // the denominator is holomorphic in z
            Variable::ZBar => Some((0..n).map(|_| FormAtPoint::zero(n)).collect()),
        }
    }
}

/// Levi-polynomial generating form `η^ε`.
///
/// `w̄` and `z̄` partials are analytic except for `∂τ/∂w̄`, which is a
/// central difference of `τ` taken only inside the cutoff support.
#[derive(Debug, Clone)]
pub struct LeviPolynomialForm {
    pub domain: Domain,
    pub cfg: KernelConfig,
}

impl LeviPolynomialForm {
    fn tau_wbar(&self, w: &CxVector, m: usize) -> CxMatrix {
        let h = crate::forms::FORM_FD_STEP;
        let shifted = |dz: Complex64| {
            let mut p = w.clone();
            p[m] += dz;
            self.cfg.tau(&self.domain, &p)
        };
        let dx = (shifted(c(h, 0.0)) - shifted(c(-h, 0.0))) / c(2.0 * h, 0.0);
        let dy = (shifted(c(0.0, h)) - shifted(c(0.0, -h))) / c(2.0 * h, 0.0);
        (dx + dy * crate::linalg::I) * c(0.5, 0.0)
    }
}

impl FormField for LeviPolynomialForm {
    fn dimension(&self) -> usize {
        self.domain.dimension()
    }
    fn bidegree(&self) -> (usize, usize) {
        (1, 0)
    }
    fn eval(&self, w: &CxVector, z: &CxVector) -> FormAtPoint {
        match eta_eps(&self.domain, w, z, &self.cfg) {
            Ok(f) => f,
            Err(_) => FormAtPoint::one_form(&vec![c(f64::NAN, f64::NAN); self.dimension()]),
        }
    }
    fn partials(&self, w: &CxVector, z: &CxVector, var: Variable) -> Option<Vec<FormAtPoint>> {
        if var == Variable::W {
            return None;
        }
        let d = &self.domain;
        let n = w.len();
        let v = w - z;
        let r = v.norm();
        let chi = cutoff(r, self.cfg.eps0);
        let dchi = cutoff_derivative(r, self.cfg.eps0);
        let a = if chi > 0.0 { delta_eps_components(d, w, z, &self.cfg) } else { CxVector::zeros(n) };
        let av = pair(&a, &v);
        let r2 = v.norm_squared();
        let num: Vec<Complex64> = (0..n).map(|j| a[j] * chi + v[j].conj() * (1.0 - chi)).collect();
        let g = av * chi + c((1.0 - chi) * r2, 0.0);
        let hm = if chi > 0.0 && var == Variable::WBar { Some(d.hess_mixed(w)) } else { None };
        let sign = if var == Variable::WBar { 1.0 } else { -1.0 };
        let out = (0..n)
            .map(|m| {
                // derivative of |v| along conj(w_m) is v_m / 2|v|
                let dchi_m = if r > 0.0 { v[m] * (sign * dchi / (2.0 * r)) } else { c(0.0, 0.0) };
                let da: Vec<Complex64> = match &hm {
                    Some(h) => {
                        let dt = self.tau_wbar(w, m) * &v;
                        (0..n).map(|j| h[(j, m)] - dt[j] * 0.5).collect()
                    }
                    None => vec![c(0.0, 0.0); n],
                };
                let dav: Complex64 = (0..n).map(|j| da[j] * v[j]).sum();
                let dg = dchi_m * (av - r2) + dav * chi + v[m] * (sign * (1.0 - chi));
                let coeffs: Vec<Complex64> = (0..n)
                    .map(|j| {
                        let kron = if j == m { sign * (1.0 - chi) } else { 0.0 };
                        let dnum = dchi_m * (a[j] - v[j].conj()) + da[j] * chi + c(kron, 0.0);
                        (dnum * g - num[j] * dg) / (g * g)
                    })
                    .collect();
                FormAtPoint::one_form(&coeffs)
            })
            .collect();
        Some(out)
    }
}

/// `η̃ = ∂ρ(w) / (⟨∂ρ(w), w - z⟩ - ρ(w))`, the interior extension used for solid kernels.
#[derive(Debug, Clone)]
pub struct EtaTildeForm {
    pub domain: Domain,
}

impl FormField for EtaTildeForm {
    fn dimension(&self) -> usize {
        self.domain.dimension()
    }
    fn bidegree(&self) -> (usize, usize) {
        (1, 0)
    }
    fn eval(&self, w: &CxVector, z: &CxVector) -> FormAtPoint {
        let d = &self.domain;
        let g = d.gradient(w);
        let den = pair(&g, &(w - z)) - d.rho(w);
        FormAtPoint::one_form(&g.iter().map(|x| x / den).collect::<Vec<_>>())
    }
    fn partials(&self, w: &CxVector, z: &CxVector, var: Variable) -> Option<Vec<FormAtPoint>> {
        if var != Variable::WBar {
            return None;
        }
        let d = &self.domain;
        let g = d.gradient(w);
        let h = d.hess_mixed(w);
        let v = w - z;
        let den = pair(&g, &v) - d.rho(w);
        let n = g.len();
        Some(
            (0..n)
                .map(|m| {
                    let dden: Complex64 = (0..n).map(|k| h[(k, m)] * v[k]).sum::<Complex64>() - g[m].conj();
                    let coeffs: Vec<Complex64> = (0..n).map(|j| h[(j, m)] / den - g[j] * dden / (den * den)).collect();
                    FormAtPoint::one_form(&coeffs)
                })
                .collect(),
        )
    }
}

pub fn eta_tilde(d: &Domain, w: &CxVector, z: &CxVector) -> Result<FormAtPoint> {
    d.check(w)?;
    d.check(z)?;
    let value = (leray_denominator(d, w, z)? - d.rho(w)).re;
    if !(value > 0.0) {
        return Err(Error::ConvexityViolation { value });
    }
    Ok(EtaTildeForm { domain: d.clone() }.eval(w, z))
}

// ---------------------------------------------------------------------------
// Densities

fn two_pi_i_pow(n: usize) -> Complex64 {
    c(0.0, 2.0 * PI).powi(n as i32)
}

/// `∂̄∂ρ(w) = sum_{j,k} ∂²ρ/∂w_j∂w̄_k dw̄_k ∧ dw_j`.
pub fn dbar_d_rho(d: &Domain, w: &CxVector) -> FormAtPoint {
    let n = d.dimension();
    let h = d.hess_mixed(w);
    let mut out = FormAtPoint::zero(n);
    for j in 0..n {
        for k in 0..n {
            out = out.add(&FormAtPoint::monomial(n, h[(j, k)], &[Generator::DwBar(k), Generator::Dw(j)]));
        }
    }
    out
}

/// `(2πi)^{-n} ∂ρ ∧ (∂̄∂ρ)^{n-1}` at `w`.
pub fn levi_leray_form(d: &Domain, w: &CxVector) -> FormAtPoint {
    let n = d.dimension();
    let dr = FormAtPoint::one_form(d.gradient(w).as_slice());
    dr.wedge(&dbar_d_rho(d, w).wedge_power(n - 1)).scale(two_pi_i_pow(n).inv())
}

/// `𝒟̃(w)` with `dμ_ρ = 𝒟̃ dσ`.
pub fn levi_leray_density(d: &Domain, w: &CxVector, frame: &TangentFrame) -> Result<Complex64> {
    d.check(w)?;
    if (&frame.base - w).norm() > 1e-12 * (1.0 + w.norm()) {
        return Err(Error::InvalidParameter("frame is attached to a different point".into()));
    }
    pullback_density(&levi_leray_form(d, w), frame)
}

/// `𝒟̃(w) / (|∇ρ(w)| det L_w|_{T^C})`; constant across the boundary up to sampling.
pub fn levi_leray_det_ratio(d: &Domain, w: &CxVector, frame: &TangentFrame) -> Result<f64> {
    let basis = geometry::complex_tangent_basis(d, w)?;
    let h = d.hess_mixed(w);
    let k = basis.len();
    let restricted = CxMatrix::from_fn(k, k, |a, b| (basis[b].transpose() * &h * basis[a].map(|z| z.conj()))[(0, 0)]);
    let det = if k == 0 { c(1.0, 0.0) } else { restricted.determinant() };
    let grad = 2.0 * d.gradient(w).norm();
    Ok(levi_leray_density(d, w, frame)?.re / (grad * det.re))
}

/// Cauchy-Leray kernel against surface measure: `𝒟̃(w) / ⟨∂ρ(w), w - z⟩^n`.
pub fn cauchy_leray_density(d: &Domain, w: &CxVector, frame: &TangentFrame, z: &CxVector) -> Result<Complex64> {
    let l = leray_denominator(d, w, z)?;
    if l.norm() < DENOMINATOR_FLOOR {
        return Err(Error::LinearConvexityViolation { value: l.norm() });
    }
    Ok(levi_leray_density(d, w, frame)? / l.powi(d.dimension() as i32))
}

/// Closed form of `j^*Ω₀(∂β/β)` against surface measure at a boundary node with unit normal `N`:
/// `(n-1)! / (2π^n β^n) sum_j (w̄_j - z̄_j) N_j`.
pub fn bm_density_closed(w: &CxVector, normal: &CxVector, z: &CxVector) -> Result<Complex64> {
    let n = w.len();
    let v = w - z;
    let beta = v.norm_squared();
    if beta < DENOMINATOR_FLOOR {
        return Err(Error::SingularPoint);
    }
    let s: Complex64 = v.iter().zip(normal.iter()).map(|(a, b)| a.conj() * b).sum();
    Ok(s * (factorial(n - 1) / (2.0 * PI.powi(n as i32) * beta.powi(n as i32))))
}

/// The same density through the forms engine.
pub fn bm_density_forms(frame: &TangentFrame, z: &CxVector) -> Result<Complex64> {
    let w = &frame.base;
    if (w - z).norm_squared() < DENOMINATOR_FLOOR {
        return Err(Error::SingularPoint);
    }
    let omega = cf0(&BochnerMartinelliForm { n: w.len() }, w, z)?;
    pullback_density(&omega, frame)
}

/// `(n-1)! / (2π^n (1 - [z, w])^n)`.
pub fn szego_ball(n: usize, w: &CxVector, z: &CxVector) -> Result<Complex64> {
    let q = c(1.0, 0.0) - herm(z, w);
    if q.norm() < DENOMINATOR_FLOOR {
        return Err(Error::SingularPoint);
    }
    Ok(c(factorial(n - 1) / (2.0 * PI.powi(n as i32)), 0.0) / q.powi(n as i32))
}

/// `n! / (π^n (1 - [z, w])^{n+1})`.
pub fn bergman_ball(n: usize, w: &CxVector, z: &CxVector) -> Result<Complex64> {
    let q = c(1.0, 0.0) - herm(z, w);
    if q.norm() < DENOMINATOR_FLOOR {
        return Err(Error::SingularPoint);
    }
    Ok(c(factorial(n) / PI.powi(n as i32), 0.0) / q.powi(n as i32 + 1))
}

/// Leray-Bergman kernel against volume: density of `(2πi)^{-n} (∂̄_w η̃)^n`.
pub fn bergman_leray_density(d: &Domain, w: &CxVector, z: &CxVector) -> Result<Complex64> {
    d.check(w)?;
    d.check(z)?;
    let value = (leray_denominator(d, w, z)? - d.rho(w)).re;
    if !(value > 0.0) {
        return Err(Error::ConvexityViolation { value });
    }
    let n = d.dimension();
    let field = EtaTildeForm { domain: d.clone() };
    let de = forms::dbar_w(&field, w, z);
    top_form_density(&de.wedge_power(n).scale(two_pi_i_pow(n).inv()))
}

/// Max over `k` of the central-difference `|∂f/∂z̄_k|`.
pub fn dbar_z_residual(f: impl Fn(&CxVector) -> Result<Complex64>, z: &CxVector, h: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..z.len() {
        let at = |delta: Complex64| {
            let mut y = z.clone();
            y[k] += delta;
            f(&y)
        };
        let dx = (at(c(h, 0.0))? - at(c(-h, 0.0))?) / (2.0 * h);
        let dy = (at(c(0.0, h))? - at(c(0.0, -h))?) / (2.0 * h);
        worst = worst.max(((dx + crate::linalg::I * dy) * 0.5).norm());
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Boundary kernel objects

/// Measure a kernel density is taken against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Surface,
    LeviLeray,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Surface => "dsigma",
            Measure::LeviLeray => "dmu_rho",
        })
    }
}

/// How the kernel blows up as `z -> w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Singularity {
    /// `|w - z|^{-order}`.
    Euclidean { order: usize },
    /// `d(w, z)^{-order}` in the boundary quasi-metric.
    QuasiMetric { order: usize },
}

pub trait BoundaryKernelDensity: Send + Sync {
    fn name(&self) -> &'static str;
    fn measure(&self) -> Measure;
    fn singularity(&self) -> Singularity;
    /// Density against [`Self::measure`].
    fn density(&self, node: &BoundaryNode, z: &CxVector) -> Result<Complex64>;

    /// Density against surface measure.
    fn density_sigma(&self, node: &BoundaryNode, z: &CxVector) -> Result<Complex64> {
        let k = self.density(node, z)?;
        Ok(match self.measure() {
            Measure::Surface => k,
            Measure::LeviLeray => k * node.levi_leray,
        })
    }
}

/// Which path evaluates the Bochner-Martinelli density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BmPath {
    ClosedForm,
    Forms,
}

#[derive(Debug, Clone, Copy)]
pub struct BochnerMartinelli {
    pub n: usize,
    pub path: BmPath,
}

pub fn bm_density(n: usize) -> BochnerMartinelli {
    BochnerMartinelli { n, path: BmPath::ClosedForm }
}

impl BoundaryKernelDensity for BochnerMartinelli {
    fn name(&self) -> &'static str {
        "bm"
    }
    fn measure(&self) -> Measure {
        Measure::Surface
    }
    fn singularity(&self) -> Singularity {
        Singularity::Euclidean { order: 2 * self.n - 1 }
    }
    fn density(&self, node: &BoundaryNode, z: &CxVector) -> Result<Complex64> {
        crate::linalg::check_dim(self.n, z)?;
        match self.path {
            BmPath::ClosedForm => bm_density_closed(&node.point, &node.frame.normal, z),
            BmPath::Forms => bm_density_forms(&node.frame, z),
        }
    }
}

/// `1 / ⟨∂ρ(w), w - z⟩^n` against `dμ_ρ`.
#[derive(Debug, Clone)]
pub struct CauchyLeray {
    pub domain: Domain,
}

impl BoundaryKernelDensity for CauchyLeray {
    fn name(&self) -> &'static str {
        "cl"
    }
    fn measure(&self) -> Measure {
        Measure::LeviLeray
    }
    fn singularity(&self) -> Singularity {
        Singularity::QuasiMetric { order: 2 * self.domain.dimension() }
    }
    fn density(&self, node: &BoundaryNode, z: &CxVector) -> Result<Complex64> {
        self.domain.check(z)?;
        let l = pair(&node.gradient, &(&node.point - z));
        if l.norm() < DENOMINATOR_FLOOR {
            return Err(Error::LinearConvexityViolation { value: l.norm() });
        }
        Ok(l.powi(self.domain.dimension() as i32).inv())
    }
}

/// Uncorrected Levi-polynomial kernel `j^*Ω₀(η^ε)` against surface measure.
#[derive(Debug, Clone)]
pub struct LeviPolynomialKernel {
    pub form: LeviPolynomialForm,
}

impl LeviPolynomialKernel {
    pub fn new(domain: Domain, cfg: KernelConfig) -> Self {
        LeviPolynomialKernel { form: LeviPolynomialForm { domain, cfg } }
    }
}

impl BoundaryKernelDensity for LeviPolynomialKernel {
    fn name(&self) -> &'static str {
        "levi"
    }
    fn measure(&self) -> Measure {
        Measure::Surface
    }
    fn singularity(&self) -> Singularity {
        Singularity::QuasiMetric { order: 2 * self.form.domain.dimension() }
    }
    fn density(&self, node: &BoundaryNode, z: &CxVector) -> Result<Complex64> {
        let d = &self.form.domain;
        d.check(z)?;
        let g = g_glued(d, &node.point, z, &self.form.cfg)?;
        if g.norm() < DENOMINATOR_FLOOR {
            return Err(Error::VanishingDenominator { value: g.norm() });
        }
        // outside the cutoff support η^ε is the Bochner-Martinelli form
        if cutoff((&node.point - z).norm(), self.form.cfg.eps0) == 0.0 {
            return bm_density_closed(&node.point, &node.frame.normal, z);
        }
        let omega = cf0(&self.form, &node.point, z)?;
        pullback_density(&omega, &node.frame)
    }
}

/// Kernel families selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelChoice {
    BochnerMartinelli,
    CauchyLeray,
    LeviPolynomial,
}

impl KernelChoice {
    pub const ALL: [KernelChoice; 3] = [KernelChoice::BochnerMartinelli, KernelChoice::CauchyLeray, KernelChoice::LeviPolynomial];

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bm" | "bochner-martinelli" => Ok(KernelChoice::BochnerMartinelli),
            "cl" | "cauchy-leray" => Ok(KernelChoice::CauchyLeray),
            "levi" | "eta-eps" | "omega0" => Ok(KernelChoice::LeviPolynomial),
            other => Err(Error::Parse(format!("unknown kernel {other:?} (expected bm, cl or levi)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelChoice::BochnerMartinelli => "bm",
            KernelChoice::CauchyLeray => "cl",
            KernelChoice::LeviPolynomial => "levi",
        }
    }

    /// Builds the kernel, measuring `KernelConfig` on the domain when `cfg` is `None`.
    pub fn build(self, d: &Domain, cfg: Option<KernelConfig>) -> Result<Box<dyn BoundaryKernelDensity>> {
        Ok(match self {
            KernelChoice::BochnerMartinelli => Box::new(bm_density(d.dimension())),
            KernelChoice::CauchyLeray => Box::new(CauchyLeray { domain: d.clone() }),
            KernelChoice::LeviPolynomial => {
                let cfg = match cfg {
                    Some(c) => c,
                    None => KernelConfig::for_domain(d, 7)?,
                };
                Box::new(LeviPolynomialKernel::new(d.clone(), cfg))
            }
        })
    }
}
