//! Shared dense complex linear algebra helpers.
//!
//! Everything here is a thin wrapper around nalgebra on `DMatrix<Complex64>`;
//! the domain-specific calculus lives in the other modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn cident(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn czeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

/// Largest singular value.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect()
}

/// sigma_max / sigma_min; infinity for a singular matrix.
pub fn condition_number(m: &CMat) -> f64 {
    let sv = singular_values(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

pub fn max_abs_entry(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff shape mismatch");
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Spectral-norm distance of `m` from its own adjoint.
pub fn herm_residual(m: &CMat) -> f64 {
    spectral_norm(&(m - m.adjoint()))
}

/// (m + m^*)/2
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).map(|z| z * cr(0.5))
}

/// (m - m^*)/(2i), the matrix imaginary part; hermitian for any square m.
pub fn imag_part(m: &CMat) -> CMat {
    (m - m.adjoint()).map(|z| z / (cr(2.0) * I))
}

/// Eigenvalues of a (numerically) hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let se = hermitian_part(m).symmetric_eigen();
    let mut ev: Vec<f64> = se.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

pub fn min_eig_hermitian(m: &CMat) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// i(Z^* - Z), the defect of membership in the matrix upper half-plane;
/// PSD iff Z lies in the closed upper half-plane.
pub fn upper_half_plane_defect(z: &CMat) -> CMat {
    (z.adjoint() - z).map(|w| w * I)
}

pub fn in_closed_upper_half_plane(z: &CMat, tol: f64) -> bool {
    min_eig_hermitian(&upper_half_plane_defect(z)) >= -tol
}

/// Inverse together with the condition number actually encountered.
/// Fails with `MoebiusSingular` above `cond_max`.
pub fn checked_inverse(m: &CMat, cond_max: f64) -> Result<(CMat, f64)> {
    let cond = condition_number(m);
    if !cond.is_finite() || cond > cond_max {
        return Err(Error::MoebiusSingular { cond });
    }
    let inv = m
        .clone()
        .try_inverse()
        .ok_or(Error::MoebiusSingular { cond: f64::INFINITY })?;
    Ok((inv, cond))
}

/// Plain inverse for matrices that are invertible by construction.
pub fn inverse(m: &CMat) -> Result<CMat> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::SolveFailure("matrix not invertible".into()))
}

/// The fixed symplectic form J = [[0, -1], [1, 0]] in L x L blocks.
pub fn symplectic_form(l: usize) -> CMat {
    let mut j = czeros(2 * l, 2 * l);
    for k in 0..l {
        j[(k, l + k)] = cr(-1.0);
        j[(l + k, k)] = cr(1.0);
    }
    j
}

/// The Cayley matrix (1/sqrt 2) [[1, -i], [1, i]] in L x L blocks.
pub fn cayley(l: usize) -> CMat {
    let s = cr(1.0 / 2.0_f64.sqrt());
    let mut c = czeros(2 * l, 2 * l);
    for k in 0..l {
        c[(k, k)] = s;
        c[(k, l + k)] = -I * s;
        c[(l + k, k)] = s;
        c[(l + k, l + k)] = I * s;
    }
    c
}

/// The signature form G = diag(1, -1) in L x L blocks.
pub fn signature_form(l: usize) -> CMat {
    let mut g = czeros(2 * l, 2 * l);
    for k in 0..l {
        g[(k, k)] = cr(1.0);
        g[(l + k, l + k)] = cr(-1.0);
    }
    g
}

/// Stack two L x L-column blocks into a 2L x L matrix (top; bottom).
pub fn stack(top: &CMat, bottom: &CMat) -> CMat {
    assert_eq!(top.ncols(), bottom.ncols());
    let l = top.ncols();
    let mut out = czeros(top.nrows() + bottom.nrows(), l);
    out.view_mut((0, 0), (top.nrows(), l)).copy_from(top);
    out.view_mut((top.nrows(), 0), (bottom.nrows(), l))
        .copy_from(bottom);
    out
}

/// Split a 2L x 2L matrix into its four L x L blocks (a, b, c, d).
pub fn split_blocks(m: &CMat) -> (CMat, CMat, CMat, CMat) {
    let l = m.nrows() / 2;
    assert_eq!(m.nrows(), 2 * l);
    assert_eq!(m.ncols(), 2 * l);
    (
        m.view((0, 0), (l, l)).into_owned(),
        m.view((0, l), (l, l)).into_owned(),
        m.view((l, 0), (l, l)).into_owned(),
        m.view((l, l), (l, l)).into_owned(),
    )
}

/// Assemble [[a, b], [c, d]].
pub fn from_blocks(a: &CMat, b: &CMat, c: &CMat, d: &CMat) -> CMat {
    let l = a.nrows();
    let mut m = czeros(2 * l, 2 * l);
    m.view_mut((0, 0), (l, l)).copy_from(a);
    m.view_mut((0, l), (l, l)).copy_from(b);
    m.view_mut((l, 0), (l, l)).copy_from(c);
    m.view_mut((l, l), (l, l)).copy_from(d);
    m
}

/// Thin QR: returns (q, r) with q of the same shape-class (m x n, n <= m)
/// having orthonormal columns and r upper triangular n x n.
pub fn thin_qr(m: &CMat) -> (CMat, CMat) {
    let qr = m.clone().qr();
    (qr.q(), qr.r())
}

/// Default numerical tolerances used across the crate.
#[derive(Debug, Clone)]
pub struct Tolerances {
    /// Relative hermiticity tolerance for diagonal blocks and boundary data.
    pub herm_rel: f64,
    /// Relative floor on the smallest singular value of off-diagonal blocks.
    pub sigma_min_rel: f64,
    /// Relative rank threshold for frames and intersections.
    pub rank_rel: f64,
    /// Scale for symplectic-residual checks.
    pub symp_rel: f64,
    /// Condition-number ceiling before a Moebius inverse is declared singular.
    pub moebius_cond_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herm_rel: 1e-10,
            sigma_min_rel: 1e-10,
            rank_rel: 1e-8,
            symp_rel: 1e-10,
            moebius_cond_max: 1e8,
        }
    }
}
