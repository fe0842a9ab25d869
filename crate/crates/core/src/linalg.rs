//! Small helpers on complex vectors and matrices shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CxVector = DVector<Complex64>;
pub type CxMatrix = DMatrix<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Builds a complex vector from `(re, im)` pairs.
pub fn cx(entries: &[(f64, f64)]) -> CxVector {
    CxVector::from_iterator(entries.len(), entries.iter().map(|&(re, im)| c(re, im)))
}

pub fn cx_real(entries: &[f64]) -> CxVector {
    CxVector::from_iterator(entries.len(), entries.iter().map(|&re| c(re, 0.0)))
}

/// Hermitian product `[z, w] = sum_j z_j conj(w_j)`.
pub fn herm(z: &CxVector, w: &CxVector) -> Complex64 {
    z.iter().zip(w.iter()).map(|(a, b)| a * b.conj()).sum()
}

/// Bilinear pairing `<a, b> = sum_j a_j b_j` (no conjugation).
pub fn pair(a: &CxVector, b: &CxVector) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn check_dim(expected: usize, v: &CxVector) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

/// Real coordinates `(x_1, y_1, ..., x_n, y_n)` of a complex vector.
pub fn to_real(v: &CxVector) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

pub fn from_real(x: &[f64]) -> CxVector {
    CxVector::from_iterator(x.len() / 2, x.chunks(2).map(|p| c(p[0], p[1])))
}

/// Euclidean real inner product of two complex vectors viewed in R^{2n}.
pub fn real_dot(a: &CxVector, b: &CxVector) -> f64 {
    herm(a, b).re
}

/// Max-entry deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &CxMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Surface measure of the unit sphere `S^{2n-1}` in `C^n`.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * std::f64::consts::PI.powi(n as i32) / factorial(n - 1)
}

/// Lebesgue volume of the unit ball in `C^n`.
pub fn ball_volume(n: usize) -> f64 {
    std::f64::consts::PI.powi(n as i32) / factorial(n)
}

/// Largest singular value by power iteration on `M^* M`.
pub fn spectral_norm(m: &CxMatrix) -> f64 {
    let w = vec![1.0; m.ncols()];
    weighted_operator_norm(|v| m * v, |v| m.ad_mul(v), &w)
}

/// Operator norm of `M` on `l^2(weights)`: `|| W^{1/2} M W^{-1/2} ||_2`.
pub fn weighted_spectral_norm(m: &CxMatrix, weights: &[f64]) -> f64 {
    weighted_operator_norm(|v| m * v, |v| m.ad_mul(v), weights)
}

/// Norm of a square operator on `l^2(weights)` given its action `M v` and
/// the action of its plain conjugate transpose `M^H v`.
///
/// Power iteration on `M^*_μ M` with `M^*_μ = W^{-1} M^H W`; the returned
/// value `|M x|_μ / |x|_μ` is a lower bound that converges to the norm.
pub fn weighted_operator_norm(
    apply: impl Fn(&CxVector) -> CxVector,
    apply_h: impl Fn(&CxVector) -> CxVector,
    weights: &[f64],
) -> f64 {
    let n = weights.len();
    if n == 0 {
        return 0.0;
    }
    let wnorm = |v: &CxVector| v.iter().zip(weights).map(|(z, w)| z.norm_sqr() * w).sum::<f64>().sqrt();
    let mut x = CxVector::from_fn(n, |i, _| c(1.0 + 0.37 * (i as f64).sin(), 0.11 * (i as f64).cos()));
    let mut estimate = 0.0f64;
    for _ in 0..POWER_ITERATIONS {
        let nx = wnorm(&x);
        if nx == 0.0 || !nx.is_finite() {
            return estimate;
        }
        x /= c(nx, 0.0);
        let y = apply(&x);
        let sigma = wnorm(&y);
        let converged = (sigma - estimate).abs() <= POWER_TOL * sigma.max(1e-300);
        estimate = estimate.max(sigma);
        if converged || sigma == 0.0 {
            break;
        }
        let wy = CxVector::from_fn(n, |i, _| y[i] * weights[i]);
        let z = apply_h(&wy);
        x = CxVector::from_fn(n, |i, _| z[i] / weights[i]);
    }
    estimate
}

const POWER_ITERATIONS: usize = 300;
const POWER_TOL: f64 = 1e-10;
