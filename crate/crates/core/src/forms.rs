//! Pointwise exterior algebra of complex differential forms on `C^n`.
//!
//! A monomial is a set of generators stored as a bit mask. Generators are
//! ordered canonically as
//!
//! ```text
//! dw_1 .. dw_n | dw̄_1 .. dw̄_n | dz̄_1 .. dz̄_n
//! ```
//!
//! so that a form of type (p, q) in `w` (optionally carrying `dz̄` factors of a
//! second variable `z`) is a table of complex coefficients over canonical
//! monomials. All signs come from sorting generators into this order.
//!
//! Forms are evaluated on real tangent vectors through the identification
//! `(x_j, y_j) -> x_j + i y_j`: `dw_j(v) = v_j`, `dw̄_j(v) = conj(v_j)`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, factorial, CxVector, I};

/// Generator families in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Dw(usize),
    DwBar(usize),
    DzBar(usize),
}

impl Generator {
    fn bit(self, n: usize) -> u32 {
        match self {
            Generator::Dw(j) => j as u32,
            Generator::DwBar(j) => (n + j) as u32,
            Generator::DzBar(j) => (2 * n + j) as u32,
        }
    }
}

/// A (possibly inhomogeneous) form at a point, `sum_M c_M dM` over canonical monomials `M`.
#[derive(Clone, PartialEq)]
pub struct FormAtPoint {
    n: usize,
    terms: BTreeMap<u64, Complex64>,
}

impl fmt::Debug for FormAtPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (mask, v) in &self.terms {
            m.entry(&monomial_label(self.n, *mask), v);
        }
        m.finish()
    }
}

fn monomial_label(n: usize, mask: u64) -> String {
    let mut parts = Vec::new();
    for bit in 0..3 * n {
        if mask >> bit & 1 == 1 {
            let (name, j) = match bit / n {
                0 => ("dw", bit % n),
                1 => ("dwb", bit % n),
                _ => ("dzb", bit % n),
            };
            parts.push(format!("{name}{}", j + 1));
        }
    }
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("^")
    }
}

/// Sign of `a ∧ b` relative to the canonical order of `a | b`, or 0 if they share a generator.
fn wedge_sign(a: u64, b: u64) -> i32 {
    if a & b != 0 {
        return 0;
    }
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        swaps += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    if swaps % 2 == 0 {
        1
    } else {
        -1
    }
}

impl FormAtPoint {
    pub fn zero(n: usize) -> Self {
        assert!(n >= 1 && n <= 16, "dimension out of range");
        FormAtPoint { n, terms: BTreeMap::new() }
    }

    /// The constant 0-form `value`.
    pub fn scalar(n: usize, value: Complex64) -> Self {
        let mut f = Self::zero(n);
        f.add_term(0, value);
        f
    }

    /// `value * g_1 ∧ ... ∧ g_k` for generators given in any order.
    pub fn monomial(n: usize, value: Complex64, gens: &[Generator]) -> Self {
        let mut f = Self::scalar(n, value);
        for g in gens {
            f = f.wedge(&Self::generator(n, *g));
        }
        f
    }

    pub fn generator(n: usize, g: Generator) -> Self {
        let mut f = Self::zero(n);
        f.add_term(1u64 << g.bit(n), c(1.0, 0.0));
        f
    }

    /// `sum_j coeffs[j] dw_j`.
    pub fn one_form(coeffs: &[Complex64]) -> Self {
        let n = coeffs.len();
        let mut f = Self::zero(n);
        for (j, v) in coeffs.iter().enumerate() {
            f.add_term(1u64 << j, *v);
        }
        f
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    fn add_term(&mut self, mask: u64, value: Complex64) {
        if value == c(0.0, 0.0) {
            return;
        }
        *self.terms.entry(mask).or_insert(c(0.0, 0.0)) += value;
    }

    fn split(&self, mask: u64) -> (u32, u32, u32) {
        let n = self.n as u32;
        let low = (1u64 << n) - 1;
        (
            (mask & low).count_ones(),
            ((mask >> n) & low).count_ones(),
            ((mask >> (2 * n)) & low).count_ones(),
        )
    }

    /// `(p, q)` when every stored term has the same type in `w`, ignoring `dz̄` factors.
    pub fn bidegree(&self) -> Option<(usize, usize)> {
        let mut out = None;
        for mask in self.terms.keys() {
            let (p, q, _) = self.split(*mask);
            let d = (p as usize, q as usize);
            match out {
                None => out = Some(d),
                Some(e) if e != d => return None,
                _ => {}
            }
        }
        out
    }

    /// Number of `dz̄` factors when homogeneous in them.
    pub fn zbar_degree(&self) -> Option<usize> {
        let mut out = None;
        for mask in self.terms.keys() {
            let (_, _, r) = self.split(*mask);
            match out {
                None => out = Some(r as usize),
                Some(e) if e != r as usize => return None,
                _ => {}
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|v| *v == c(0.0, 0.0))
    }

    /// Coefficient of `dw_I ∧ dw̄_J` (0-based strictly increasing index lists).
    pub fn coefficient(&self, holo: &[usize], anti: &[usize]) -> Complex64 {
        self.coefficient_mixed(holo, anti, &[])
    }

    pub fn coefficient_mixed(&self, holo: &[usize], anti: &[usize], zbar: &[usize]) -> Complex64 {
        let mut mask = 0u64;
        for &j in holo {
            mask |= 1 << j;
        }
        for &j in anti {
            mask |= 1 << (self.n + j);
        }
        for &j in zbar {
            mask |= 1 << (2 * self.n + j);
        }
        self.terms.get(&mask).copied().unwrap_or(c(0.0, 0.0))
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.terms.iter().map(|(m, v)| (*m, *v))
    }

    pub fn wedge(&self, other: &FormAtPoint) -> FormAtPoint {
        assert_eq!(self.n, other.n, "wedge of forms in different dimensions");
        let mut out = FormAtPoint::zero(self.n);
        for (ma, va) in &self.terms {
            for (mb, vb) in &other.terms {
                let s = wedge_sign(*ma, *mb);
                if s != 0 {
                    out.add_term(ma | mb, va * vb * s as f64);
                }
            }
        }
        out
    }

    /// k-fold wedge power; the 0-th power is the constant 1.
    pub fn wedge_power(&self, k: usize) -> FormAtPoint {
        let mut out = FormAtPoint::scalar(self.n, c(1.0, 0.0));
        for _ in 0..k {
            out = out.wedge(self);
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> FormAtPoint {
        FormAtPoint {
            n: self.n,
            terms: self.terms.iter().map(|(m, v)| (*m, v * s)).collect(),
        }
    }

    pub fn add(&self, other: &FormAtPoint) -> FormAtPoint {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (m, v) in &other.terms {
            out.add_term(*m, *v);
        }
        out
    }

    pub fn sub(&self, other: &FormAtPoint) -> FormAtPoint {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    /// Max coefficient modulus, missing terms counting as zero.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &FormAtPoint) -> f64 {
        self.sub(other).max_abs()
    }

    /// Coefficient-wise map, used to assemble finite differences.
    fn zip_with(&self, other: &FormAtPoint, f: impl Fn(Complex64, Complex64) -> Complex64) -> FormAtPoint {
        let mut out = FormAtPoint::zero(self.n);
        let keys: std::collections::BTreeSet<u64> = self.terms.keys().chain(other.terms.keys()).copied().collect();
        for k in keys {
            let a = self.terms.get(&k).copied().unwrap_or(c(0.0, 0.0));
            let b = other.terms.get(&k).copied().unwrap_or(c(0.0, 0.0));
            out.add_term(k, f(a, b));
        }
        out
    }

    /// Wedges `gen_k` in front of the k-th partial form and sums: `sum_k d_k ∧ self_k`.
    fn exterior_from_partials(n: usize, partials: &[FormAtPoint], family: fn(usize) -> Generator) -> FormAtPoint {
        let mut out = FormAtPoint::zero(n);
        for (k, p) in partials.iter().enumerate() {
            out = out.add(&FormAtPoint::generator(n, family(k)).wedge(p));
        }
        out
    }
}

/// Variables a form field can be differentiated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    W,
    WBar,
    ZBar,
}

/// Default central-difference step for form-field derivatives.
pub const FORM_FD_STEP: f64 = 1e-5;

/// A form-valued function of `(w, z)`.
///
/// Implementors supply `eval`; `partials` may return analytic Wirtinger
/// partials of every coefficient, and otherwise central differences are used.
pub trait FormField: Sync {
    fn dimension(&self) -> usize;
    fn bidegree(&self) -> (usize, usize);
    fn eval(&self, w: &CxVector, z: &CxVector) -> FormAtPoint;

    /// `[d self / d var_k for k in 0..n]`, coefficientwise, if known in closed form.
    fn partials(&self, _w: &CxVector, _z: &CxVector, _var: Variable) -> Option<Vec<FormAtPoint>> {
        None
    }

    fn fd_step(&self) -> f64 {
        FORM_FD_STEP
    }
}

/// Wirtinger partials `d/d var_k` of a field at `(w, z)`, analytic when available.
pub fn field_partials<F: FormField + ?Sized>(f: &F, w: &CxVector, z: &CxVector, var: Variable) -> Vec<FormAtPoint> {
    if let Some(p) = f.partials(w, z, var) {
        return p;
    }
    fd_partials(|w, z| f.eval(w, z), f.dimension(), w, z, var, f.fd_step())
}

/// Central-difference Wirtinger partials for any form-valued map.
pub fn fd_partials(
    eval: impl Fn(&CxVector, &CxVector) -> FormAtPoint,
    n: usize,
    w: &CxVector,
    z: &CxVector,
    var: Variable,
    h: f64,
) -> Vec<FormAtPoint> {
    let shift = |k: usize, delta: Complex64| -> FormAtPoint {
        match var {
            Variable::W | Variable::WBar => {
                let mut ws = w.clone();
                ws[k] += delta;
                eval(&ws, z)
            }
            Variable::ZBar => {
                let mut zs = z.clone();
                zs[k] += delta;
                eval(w, &zs)
            }
        }
    };
    (0..n)
        .map(|k| {
            let dx = shift(k, c(h, 0.0)).zip_with(&shift(k, c(-h, 0.0)), |a, b| (a - b) / (2.0 * h));
            let dy = shift(k, c(0.0, h)).zip_with(&shift(k, c(0.0, -h)), |a, b| (a - b) / (2.0 * h));
            // d/dw = (d/dx - i d/dy)/2, d/dw̄ = (d/dx + i d/dy)/2
            let sign = if var == Variable::W { -1.0 } else { 1.0 };
            dx.zip_with(&dy, |a, b| (a + I * b * sign) * 0.5)
        })
        .collect()
}

/// `∂̄_w f = sum_j d f / d w̄_j  dw̄_j ∧ (...)`.
pub fn dbar_w<F: FormField + ?Sized>(f: &F, w: &CxVector, z: &CxVector) -> FormAtPoint {
    let p = field_partials(f, w, z, Variable::WBar);
    FormAtPoint::exterior_from_partials(f.dimension(), &p, Generator::DwBar)
}

/// `∂_w f = sum_j d f / d w_j  dw_j ∧ (...)`.
pub fn partial_w<F: FormField + ?Sized>(f: &F, w: &CxVector, z: &CxVector) -> FormAtPoint {
    let p = field_partials(f, w, z, Variable::W);
    FormAtPoint::exterior_from_partials(f.dimension(), &p, Generator::Dw)
}

/// `∂̄_z f = sum_j d f / d z̄_j  dz̄_j ∧ (...)`.
pub fn dbar_z<F: FormField + ?Sized>(f: &F, w: &CxVector, z: &CxVector) -> FormAtPoint {
    let p = field_partials(f, w, z, Variable::ZBar);
    FormAtPoint::exterior_from_partials(f.dimension(), &p, Generator::DzBar)
}

/// Exterior derivative in `w` (`∂_w + ∂̄_w`) of a form-valued map, by central differences.
pub fn d_w_fd(eval: impl Fn(&CxVector, &CxVector) -> FormAtPoint, n: usize, w: &CxVector, z: &CxVector, h: f64) -> FormAtPoint {
    let pw = fd_partials(&eval, n, w, z, Variable::W, h);
    let pb = fd_partials(&eval, n, w, z, Variable::WBar, h);
    FormAtPoint::exterior_from_partials(n, &pw, Generator::Dw).add(&FormAtPoint::exterior_from_partials(n, &pb, Generator::DwBar))
}

/// `∂̄_z` of a form-valued map by central differences.
pub fn dbar_z_fd(eval: impl Fn(&CxVector, &CxVector) -> FormAtPoint, n: usize, w: &CxVector, z: &CxVector, h: f64) -> FormAtPoint {
    let p = fd_partials(&eval, n, w, z, Variable::ZBar, h);
    FormAtPoint::exterior_from_partials(n, &p, Generator::DzBar)
}

fn two_pi_i_pow(n: usize) -> Complex64 {
    (c(0.0, 2.0 * std::f64::consts::PI)).powi(n as i32)
}

fn require_one_zero<F: FormField + ?Sized>(eta: &F) -> Result<()> {
    if eta.bidegree() != (1, 0) {
        return Err(Error::DegreeMismatch(format!("expected a (1,0)-form, got {:?}", eta.bidegree())));
    }
    Ok(())
}

/// Cauchy-Fantappiè form of order 0: `(2πi)^{-n} η ∧ (∂̄_w η)^{n-1}`.
pub fn cf0<F: FormField + ?Sized>(eta: &F, w: &CxVector, z: &CxVector) -> Result<FormAtPoint> {
    require_one_zero(eta)?;
    let n = eta.dimension();
    let e = eta.eval(w, z);
    let de = dbar_w(eta, w, z);
    Ok(e.wedge(&de.wedge_power(n - 1)).scale(two_pi_i_pow(n).inv()))
}

/// Cauchy-Fantappiè form of order 1: `(n-1)(2πi)^{-n} η ∧ (∂̄_w η)^{n-2} ∧ ∂̄_z η`.
pub fn cf1<F: FormField + ?Sized>(eta: &F, w: &CxVector, z: &CxVector) -> Result<FormAtPoint> {
    require_one_zero(eta)?;
    let n = eta.dimension();
    if n < 2 {
        return Err(Error::InvalidParameter("order-1 Cauchy-Fantappiè form needs n >= 2".into()));
    }
    let e = eta.eval(w, z);
    let dw = dbar_w(eta, w, z);
    let dz = dbar_z(eta, w, z);
    Ok(e
        .wedge(&dw.wedge_power(n - 2))
        .wedge(&dz)
        .scale(two_pi_i_pow(n).inv() * (n as f64 - 1.0)))
}

/// Hodge star of a (1,0)-form: `*dw_j = 2 (2i)^{-n} dw_j ∧ ⋀_{ν≠j} (dw̄_ν ∧ dw_ν)`.
pub fn star_one_zero(alpha: &FormAtPoint) -> Result<FormAtPoint> {
    let n = alpha.dimension();
    match alpha.bidegree() {
        Some((1, 0)) | None if alpha.is_zero() || alpha.bidegree() == Some((1, 0)) => {}
        other => return Err(Error::DegreeMismatch(format!("star expects a (1,0)-form, got {other:?}"))),
    }
    if alpha.zbar_degree().unwrap_or(0) != 0 {
        return Err(Error::DegreeMismatch("star expects a form in w only".into()));
    }
    let norm = c(0.0, 2.0).powi(n as i32).inv() * 2.0;
    let mut out = FormAtPoint::zero(n);
    for j in 0..n {
        let a = alpha.coefficient(&[j], &[]);
        if a == c(0.0, 0.0) {
            continue;
        }
        let mut term = FormAtPoint::monomial(n, a * norm, &[Generator::Dw(j)]);
        for nu in (0..n).filter(|&nu| nu != j) {
            term = term.wedge(&FormAtPoint::monomial(n, c(1.0, 0.0), &[Generator::DwBar(nu), Generator::Dw(nu)]));
        }
        out = out.add(&term);
    }
    Ok(out)
}

/// Orthonormal positively oriented frame `(ν, t_1, ..., t_{2n-1})` at a boundary point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFrame {
    pub base: CxVector,
    pub normal: CxVector,
    pub tangents: Vec<CxVector>,
}

impl TangentFrame {
    /// Gram-Schmidt on the real coordinate basis, largest remaining norm first,
    /// with the last tangent flipped if needed for positive orientation.
    pub fn from_normal(base: CxVector, normal: &CxVector) -> Result<TangentFrame> {
        let n = normal.len();
        let nn = normal.norm();
        if !(nn > 1e-300) {
            return Err(Error::DegenerateBoundary);
        }
        let nu = normal / c(nn, 0.0);
        let mut basis = vec![nu.clone()];
        let mut candidates: Vec<CxVector> = (0..2 * n)
            .map(|k| {
                let mut e = CxVector::zeros(n);
                e[k / 2] = if k % 2 == 0 { c(1.0, 0.0) } else { I };
                e
            })
            .collect();
        while basis.len() < 2 * n {
            let project = |e: &CxVector, basis: &[CxVector]| {
                let mut v = e.clone();
                for b in basis {
                    let coef = crate::linalg::real_dot(&v, b);
                    v -= b * c(coef, 0.0);
                }
                v
            };
            let (best, _) = candidates
                .iter()
                .enumerate()
                .map(|(i, e)| (i, project(e, &basis).norm()))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .expect("candidates remain");
            let mut v = project(&candidates[best], &basis);
            v = project(&v, &basis);
            let nv = v.norm();
            basis.push(v / c(nv, 0.0));
            candidates.remove(best);
        }
        let mut frame = TangentFrame { base, normal: nu, tangents: basis.split_off(1) };
        if frame.orientation() < 0.0 {
            let last = frame.tangents.len() - 1;
            frame.tangents[last] = -frame.tangents[last].clone();
        }
        Ok(frame)
    }

    /// Determinant of the real `2n x 2n` matrix with columns `(ν, t_1, ...)`.
    pub fn orientation(&self) -> f64 {
        let n = self.normal.len();
        let cols: Vec<Vec<f64>> = std::iter::once(&self.normal)
            .chain(self.tangents.iter())
            .map(crate::linalg::to_real)
            .collect();
        DMatrix::from_fn(2 * n, 2 * n, |i, j| cols[j][i]).determinant()
    }

    /// Max deviation of the real Gram matrix of `(ν, t_*)` from the identity.
    pub fn gram_defect(&self) -> f64 {
        let all: Vec<&CxVector> = std::iter::once(&self.normal).chain(self.tangents.iter()).collect();
        let mut worst = 0.0f64;
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((crate::linalg::real_dot(a, b) - expect).abs());
            }
        }
        worst
    }
}

/// Density `λ` with `j^*ω = λ dσ`: `ω` evaluated on `(t_1, ..., t_{2n-1})`.
pub fn pullback_density(omega: &FormAtPoint, frame: &TangentFrame) -> Result<Complex64> {
    let n = omega.dimension();
    if frame.normal.len() != n || frame.tangents.len() != 2 * n - 1 {
        return Err(Error::DimensionMismatch { expected: n, found: frame.normal.len() });
    }
    let k = 2 * n - 1;
    // rows: dw_1..dw_n, dw̄_1..dw̄_n evaluated on each tangent vector
    let values = DMatrix::from_fn(2 * n, k, |r, col| {
        let t = &frame.tangents[col];
        if r < n {
            t[r]
        } else {
            t[r - n].conj()
        }
    });
    let mut total = c(0.0, 0.0);
    for (mask, coef) in omega.terms() {
        if mask >> (2 * n) != 0 || mask.count_ones() as usize != k {
            return Err(Error::DegreeMismatch(format!(
                "pullback expects a form of real degree {k} in w, found monomial {}",
                monomial_label(n, mask)
            )));
        }
        let rows: Vec<usize> = (0..2 * n).filter(|b| mask >> b & 1 == 1).collect();
        let sub = DMatrix::from_fn(k, k, |i, j| values[(rows[i], j)]);
        total += coef * sub.determinant();
    }
    Ok(total)
}

/// Density `μ` with `ω = μ dV`, `dV = (i/2)^n dw_1 ∧ dw̄_1 ∧ ... ∧ dw_n ∧ dw̄_n`.
pub fn top_form_density(omega: &FormAtPoint) -> Result<Complex64> {
    let n = omega.dimension();
    let full = (1u64 << (2 * n)) - 1;
    let mut coef = c(0.0, 0.0);
    for (mask, v) in omega.terms() {
        if mask != full {
            return Err(Error::DegreeMismatch(format!(
                "expected an (n,n)-form, found monomial {}",
                monomial_label(n, mask)
            )));
        }
        coef += v;
    }
    Ok(coef / volume_form_coefficient(n))
}

/// Coefficient of `dV` on the canonical monomial `dw_1..dw_n ∧ dw̄_1..dw̄_n`.
pub fn volume_form_coefficient(n: usize) -> Complex64 {
    // interleaved -> canonical reorder sign (-1)^{n(n-1)/2}
    let sign = if (n * (n - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    c(0.0, 0.5).powi(n as i32) * sign
}

/// The volume form itself.
pub fn volume_form(n: usize) -> FormAtPoint {
    let mut f = FormAtPoint::zero(n);
    f.add_term((1u64 << (2 * n)) - 1, volume_form_coefficient(n));
    f
}

/// `(n-1)! / (2 π^n)`: reciprocal surface measure of the unit sphere.
pub fn bm_sphere_constant(n: usize) -> f64 {
    factorial(n - 1) / (2.0 * std::f64::consts::PI.powi(n as i32))
}

/// Proportionality `∂ρ ∧ (∂̄∂ρ)^{n-1} = κ_n * (∂ρ)` for `ρ = |w|^2 - 1`.
pub fn ball_star_ratio(n: usize) -> Complex64 {
    c(0.0, 2.0).powi(n as i32) * (factorial(n - 1) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cx, herm};
    use proptest::prelude::*;
    use Generator::*;

    fn one() -> Complex64 {
        c(1.0, 0.0)
    }

    #[test]
    fn wedge_basics() {
        let n = 2;
        let dw1 = FormAtPoint::generator(n, Dw(0));
        let dw2 = FormAtPoint::generator(n, Dw(1));
        assert!(dw1.wedge(&dw1).is_zero());
        assert_eq!(dw1.wedge(&dw2), dw2.wedge(&dw1).scale(c(-1.0, 0.0)));
        // (dw1 + dw2) ∧ (dw̄1 ∧ dw2) = dw1∧dw̄1∧dw2 + dw2∧dw̄1∧dw2;
        // the second vanishes and the first is canonical order dw1 dw2 dw̄1 with one swap.
        let a = dw1.add(&dw2);
        let b = FormAtPoint::monomial(n, one(), &[DwBar(0), Dw(1)]);
        let p = a.wedge(&b);
        assert_eq!(p.coefficient(&[0, 1], &[0]), c(-1.0, 0.0));
        assert_eq!(p.terms().count(), 1);
        // dw2 ∧ dw̄1 ∧ dw1 = -dw1 ∧ dw̄1 ∧ dw2 in canonical order
        let q = FormAtPoint::monomial(n, one(), &[Dw(1), DwBar(0), Dw(0)]);
        let r = FormAtPoint::monomial(n, one(), &[Dw(0), DwBar(0), Dw(1)]);
        assert_eq!(q, r.scale(c(-1.0, 0.0)));
    }

    fn arb_form(n: usize) -> impl Strategy<Value = FormAtPoint> {
        let gens = 2 * n;
        proptest::collection::vec((0u64..(1u64 << gens), -2.0f64..2.0, -2.0f64..2.0), 1..5).prop_map(move |ts| {
            let mut f = FormAtPoint::zero(n);
            for (mask, re, im) in ts {
                f.add_term(mask, c(re, im));
            }
            f
        })
    }

    fn homogeneous_degree(f: &FormAtPoint) -> Option<u32> {
        let mut d = None;
        for (m, _) in f.terms() {
            let k = m.count_ones();
            match d {
                None => d = Some(k),
                Some(e) if e != k => return None,
                _ => {}
            }
        }
        d
    }

    proptest! {
        #[test]
        fn wedge_is_associative(a in arb_form(3), b in arb_form(3), cc in arb_form(3)) {
            let l = a.wedge(&b).wedge(&cc);
            let r = a.wedge(&b.wedge(&cc));
            prop_assert!(l.max_abs_diff(&r) < 1e-12);
        }

        #[test]
        fn wedge_is_graded_commutative(a in arb_form(4), b in arb_form(4)) {
            if let (Some(p), Some(q)) = (homogeneous_degree(&a), homogeneous_degree(&b)) {
                let sign = if (p * q) % 2 == 0 { 1.0 } else { -1.0 };
                let l = a.wedge(&b);
                let r = b.wedge(&a).scale(c(sign, 0.0));
                prop_assert!(l.max_abs_diff(&r) < 1e-12);
            }
        }
    }

    /// `|w - z|^2` as a 0-form field.
    struct Beta {
        n: usize,
    }
    impl FormField for Beta {
        fn dimension(&self) -> usize {
            self.n
        }
        fn bidegree(&self) -> (usize, usize) {
            (0, 0)
        }
        fn eval(&self, w: &CxVector, z: &CxVector) -> FormAtPoint {
            FormAtPoint::scalar(self.n, c((w - z).norm_squared(), 0.0))
        }
    }

    /// A 1-form with given coefficient closures.
    struct Custom<F: Fn(&CxVector) -> Vec<Complex64> + Sync> {
        n: usize,
        f: F,
    }
    impl<F: Fn(&CxVector) -> Vec<Complex64> + Sync> FormField for Custom<F> {
        fn dimension(&self) -> usize {
            self.n
        }
        fn bidegree(&self) -> (usize, usize) {
            (1, 0)
        }
        fn eval(&self, w: &CxVector, _z: &CxVector) -> FormAtPoint {
            FormAtPoint::one_form(&(self.f)(w))
        }
    }

    #[test]
    fn dbar_examples() {
        let w = cx(&[(0.3, -0.2), (0.7, 0.4)]);
        let z = cx(&[(0.1, 0.1), (-0.2, 0.3)]);
        let f = Custom { n: 2, f: |w: &CxVector| vec![w[0].conj(), c(0.0, 0.0)] };
        let expect = FormAtPoint::monomial(2, one(), &[DwBar(0), Dw(0)]);
        assert!(dbar_w(&f, &w, &z).max_abs_diff(&expect) < 1e-9);

        let beta = Beta { n: 2 };
        let db = dbar_w(&beta, &w, &z);
        let d = &w - &z;
        let expect = FormAtPoint::zero(2)
            .add(&FormAtPoint::monomial(2, d[0], &[DwBar(0)]))
            .add(&FormAtPoint::monomial(2, d[1], &[DwBar(1)]));
        assert!(db.max_abs_diff(&expect) < 1e-9);

        let holo = Custom { n: 2, f: |w: &CxVector| vec![w[0] * w[1], (w[0] * 0.5).exp()] };
        assert!(dbar_w(&holo, &w, &z).max_abs() < 1e-9);
    }

    #[test]
    fn partial_examples() {
        let w = cx(&[(0.3, -0.2), (0.7, 0.4)]);
        let z = cx(&[(0.1, 0.1), (-0.2, 0.3)]);
        let pb = partial_w(&Beta { n: 2 }, &w, &z);
        let d = (&w - &z).map(|v| v.conj());
        let expect = FormAtPoint::one_form(&[d[0], d[1]]);
        assert!(pb.max_abs_diff(&expect) < 1e-9);

        let anti = Custom { n: 2, f: |w: &CxVector| vec![w[0].conj() * w[1].conj(), c(1.0, 0.0)] };
        assert!(partial_w(&anti, &w, &z).max_abs() < 1e-9);

        // ∂_w of (3 w_1 + 2i w_2) dw_2 = 3 dw_1 ∧ dw_2
        let lin = Custom { n: 2, f: |w: &CxVector| vec![c(0.0, 0.0), w[0] * 3.0 + w[1] * c(0.0, 2.0)] };
        let expect = FormAtPoint::monomial(2, c(3.0, 0.0), &[Dw(0), Dw(1)]);
        assert!(partial_w(&lin, &w, &z).max_abs_diff(&expect) < 1e-9);
    }

    #[test]
    fn dbar_squared_vanishes() {
        let w = cx(&[(0.3, -0.2), (0.7, 0.4), (0.1, 0.2)]);
        let z = CxVector::zeros(3);
        let f = Custom {
            n: 3,
            f: |w: &CxVector| vec![w[0].conj() * w[1], w[2].conj() * w[2].conj() * w[0], w.norm_squared().into()],
        };
        // ∂̄ of the analytic field ∂̄f, computed with nested differences.
        let outer = |w: &CxVector, z: &CxVector| dbar_w(&f, w, z);
        let inner = fd_partials(outer, 3, &w, &z, Variable::WBar, 1e-4);
        let dd = FormAtPoint::exterior_from_partials(3, &inner, DwBar);
        assert!(dd.max_abs() < 1e-6, "{dd:?}");
    }

    #[test]
    fn star_on_sphere_n2_matches_hand_formula() {
        let w = cx(&[(0.6, 0.0), (0.0, 0.8)]);
        let z = CxVector::zeros(2);
        let db = partial_w(&Beta { n: 2 }, &w, &z);
        let s = star_one_zero(&db).unwrap();
        let half = c(-0.5, 0.0); // 1/(2 i^2)
        let expect = FormAtPoint::monomial(2, half * w[0].conj(), &[Dw(0), DwBar(1), Dw(1)])
            .add(&FormAtPoint::monomial(2, half * w[1].conj(), &[Dw(1), DwBar(0), Dw(0)]));
        assert!(s.max_abs_diff(&expect) < 1e-9);
        assert!(star_one_zero(&FormAtPoint::monomial(2, one(), &[DwBar(0)])).is_err());
    }

    #[test]
    fn ball_footnote_identity_up_to_constant() {
        for n in [2usize, 3] {
            let w = CxVector::from_fn(n, |j, _| c(0.2 * j as f64 + 0.1, -0.3 + 0.1 * j as f64));
            let drho = FormAtPoint::one_form(&w.iter().map(|z| z.conj()).collect::<Vec<_>>());
            let ddr = (0..n).fold(FormAtPoint::zero(n), |acc, j| {
                acc.add(&FormAtPoint::monomial(n, one(), &[DwBar(j), Dw(j)]))
            });
            let lhs = drho.wedge(&ddr.wedge_power(n - 1));
            let rhs = star_one_zero(&drho).unwrap().scale(ball_star_ratio(n));
            assert!(lhs.max_abs_diff(&rhs) < 1e-12, "n={n}");
        }
    }

    #[test]
    fn frame_orientation_and_gram() {
        for n in 1..=4usize {
            let normal = CxVector::from_fn(n, |j, _| c(0.3 + j as f64, -0.7 * j as f64 + 0.2));
            let f = TangentFrame::from_normal(CxVector::zeros(n), &normal).unwrap();
            assert!(f.gram_defect() < 1e-10);
            assert!(f.orientation() > 0.0);
        }
    }

    fn sphere_frame(w: &CxVector) -> TangentFrame {
        TangentFrame::from_normal(w.clone(), w).unwrap()
    }

    #[test]
    fn surface_measure_identity_on_sphere() {
        for n in [2usize, 3] {
            let raw = CxVector::from_fn(n, |j, _| c(0.4 - 0.3 * j as f64, 0.2 + 0.25 * j as f64));
            let w = &raw / c(raw.norm(), 0.0);
            let drho = FormAtPoint::one_form(&w.iter().map(|z| z.conj()).collect::<Vec<_>>());
            let norm_drho = 2.0 * w.norm();
            let omega = star_one_zero(&drho).unwrap().scale(c(2.0 / norm_drho, 0.0));
            let lambda = pullback_density(&omega, &sphere_frame(&w)).unwrap();
            assert!((lambda - one()).norm() < 1e-10, "n={n} {lambda}");
        }
    }

    #[test]
    fn orientation_flip_negates_density() {
        let w = cx(&[(0.6, 0.0), (0.0, 0.8)]);
        let omega = star_one_zero(&FormAtPoint::one_form(&[w[0].conj(), w[1].conj()])).unwrap();
        let f = sphere_frame(&w);
        let mut g = f.clone();
        g.tangents.swap(0, 1);
        let a = pullback_density(&omega, &f).unwrap();
        let b = pullback_density(&omega, &g).unwrap();
        assert!((a + b).norm() < 1e-14 && a.norm() > 0.1);
        assert!(pullback_density(&FormAtPoint::generator(2, Dw(0)), &f).is_err());
    }

    #[test]
    fn volume_density_conventions() {
        for n in 1..=4 {
            assert!((top_form_density(&volume_form(n)).unwrap() - one()).norm() < 1e-15);
        }
        // dw ∧ dw̄ = -2i dx ∧ dy, so its dV-density is -2i.
        let f = FormAtPoint::monomial(1, one(), &[Dw(0), DwBar(0)]);
        assert!((top_form_density(&f).unwrap() - c(0.0, -2.0)).norm() < 1e-15);
        assert!(top_form_density(&FormAtPoint::generator(1, Dw(0))).is_err());
    }

    #[test]
    fn interpretation_of_real_vectors() {
        // dw_1(v) = v_1 and dw̄_1(v) = conj(v_1) on the frame vectors.
        let w = cx(&[(1.0, 0.0), (0.0, 0.0)]);
        let f = sphere_frame(&w);
        for t in &f.tangents {
            assert!(herm(t, &w).re.abs() < 1e-14);
        }
    }
}
