//! Transfer-matrix calculus: single-site and iterated transfer matrices,
//! boundary-condition inclusion, Lagrangian-plane propagation, intersection
//! dimension, and symplectic-structure checks.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    cident, cr, czeros, from_blocks, inverse, singular_values, spectral_norm, split_blocks, stack,
    symplectic_form, thin_qr, CMat, Tolerances,
};
use crate::model::BlockJacobiModel;

/// A 2L x 2L transfer matrix together with the energy and site range it
/// propagates across.
#[derive(Debug, Clone)]
pub struct Transfer2L {
    pub m: CMat,
    pub z: Complex64,
    /// `(n, m)` meaning propagation from site m to site n.
    pub span: (usize, usize),
}

/// The four L x L blocks of a transfer matrix.
#[derive(Debug, Clone)]
pub struct CornerBlocks {
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
    pub d: CMat,
}

impl CornerBlocks {
    pub fn reassemble(&self) -> CMat {
        from_blocks(&self.a, &self.b, &self.c, &self.d)
    }
}

impl Transfer2L {
    pub fn l(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn corner_blocks(&self) -> CornerBlocks {
        let (a, b, c, d) = split_blocks(&self.m);
        CornerBlocks { a, b, c, d }
    }
}

/// A 2L x L frame of maximal rank spanning a Lagrangian plane.
#[derive(Debug, Clone)]
pub struct LagrangianFrame {
    pub phi: CMat,
}

impl LagrangianFrame {
    /// Validates rank and isotropy with the default tolerances.
    pub fn new(phi: CMat) -> Result<Self> {
        Self::with_tolerances(phi, &Tolerances::default())
    }

    pub fn with_tolerances(phi: CMat, tol: &Tolerances) -> Result<Self> {
        if phi.nrows() != 2 * phi.ncols() || phi.ncols() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "frame must be 2L x L, got {}x{}",
                phi.nrows(),
                phi.ncols()
            )));
        }
        let sv = singular_values(&phi);
        let smax = sv.first().copied().unwrap_or(0.0);
        let smin = sv.last().copied().unwrap_or(0.0);
        if smin <= tol.rank_rel * smax {
            return Err(Error::FrameDegenerate { sigma: smin });
        }
        let l = phi.ncols();
        let iso = spectral_norm(&(phi.adjoint() * symplectic_form(l) * &phi));
        if iso > 1e-10 * smax * smax {
            return Err(Error::InvalidInput(format!(
                "frame is not Lagrangian (isotropy residual {iso:.3e})"
            )));
        }
        Ok(LagrangianFrame { phi })
    }

    pub fn l(&self) -> usize {
        self.phi.ncols()
    }

    /// Top L x L block.
    pub fn top(&self) -> CMat {
        let l = self.l();
        self.phi.view((0, 0), (l, l)).into_owned()
    }

    /// Bottom L x L block.
    pub fn bottom(&self) -> CMat {
        let l = self.l();
        self.phi.view((l, 0), (l, l)).into_owned()
    }

    /// Left boundary plane (1; -Zhat) for hermitian Zhat.
    pub fn left_boundary(zhat: &CMat) -> Self {
        LagrangianFrame {
            phi: stack(&cident(zhat.nrows()), &zhat.map(|w| -w)),
        }
    }

    /// Right boundary plane (-Z; 1) for hermitian Z.
    pub fn right_boundary(z: &CMat) -> Self {
        LagrangianFrame {
            phi: stack(&z.map(|w| -w), &cident(z.nrows())),
        }
    }

    /// The Dirichlet left plane (1; 0).
    pub fn dirichlet_left(l: usize) -> Self {
        LagrangianFrame {
            phi: stack(&cident(l), &czeros(l, l)),
        }
    }

    /// The Dirichlet right plane (0; 1).
    pub fn dirichlet_right(l: usize) -> Self {
        LagrangianFrame {
            phi: stack(&czeros(l, l), &cident(l)),
        }
    }

    /// Class-preserving orthonormalization (columns replaced by an
    /// orthonormal basis of the same plane).
    pub fn orthonormalized(&self) -> Self {
        let (q, _) = thin_qr(&self.phi);
        LagrangianFrame { phi: q }
    }

    /// Isotropy residual ||Phi^* J Phi||.
    pub fn isotropy_residual(&self) -> f64 {
        spectral_norm(&(self.phi.adjoint() * symplectic_form(self.l()) * &self.phi))
    }
}

/// Single-site transfer matrix from raw blocks:
/// [[(z - V) T^{-1}, -T^*], [T^{-1}, 0]].
pub fn site_transfer(t: &CMat, v: &CMat, z: Complex64) -> Result<CMat> {
    let l = t.nrows();
    let t_inv = inverse(t)?;
    let zv = CMat::from_fn(l, l, |i, j| {
        let diag = if i == j { z } else { cr(0.0) };
        diag - v[(i, j)]
    });
    let a = &zv * &t_inv;
    let b = t.adjoint().map(|w| -w);
    let d = czeros(l, l);
    Ok(from_blocks(&a, &b, &t_inv, &d))
}

/// Transfer matrix of site `n` at energy `z` (T_1 = 1 by convention).
pub fn single_transfer(model: &BlockJacobiModel, n: usize, z: Complex64) -> Result<Transfer2L> {
    if n < 1 || n > model.n() {
        return Err(Error::IndexOutOfRange(format!(
            "site {n} outside 1..={}",
            model.n()
        )));
    }
    let m = site_transfer(&model.t_block(n), model.v_block(n), z)?;
    Ok(Transfer2L {
        m,
        z,
        span: (n, n - 1),
    })
}

/// Iterated transfer matrix across sites: the ordered product
/// T_n ... T_{m+1} for n > m, the identity for n = m, and the inverse of the
/// reversed product for n < m.
pub fn transfer_product(
    model: &BlockJacobiModel,
    z: Complex64,
    n: usize,
    m: usize,
) -> Result<Transfer2L> {
    if n > model.n() || m > model.n() {
        return Err(Error::IndexOutOfRange(format!(
            "range ({n}, {m}) outside 0..={}",
            model.n()
        )));
    }
    let l = model.l();
    if n == m {
        return Ok(Transfer2L {
            m: cident(2 * l),
            z,
            span: (n, m),
        });
    }
    if n > m {
        let mut acc = cident(2 * l);
        for k in (m + 1)..=n {
            acc = single_transfer(model, k, z)?.m * acc;
        }
        Ok(Transfer2L {
            m: acc,
            z,
            span: (n, m),
        })
    } else {
        let forward = transfer_product(model, z, m, n)?;
        let inv = inverse(&forward.m)?;
        Ok(Transfer2L {
            m: inv,
            z,
            span: (n, m),
        })
    }
}

/// Includes boundary conditions into a whole-sample transfer matrix:
/// [[1, Z], [0, 1]] * T * [[1, 0], [-Zhat, 1]].
pub fn with_boundary(t: &Transfer2L, zhat: &CMat, z: &CMat) -> Result<Transfer2L> {
    if t.span.1 != 0 {
        return Err(Error::InvalidInput(format!(
            "boundary inclusion needs a transfer matrix spanning (N, 0), got {:?}",
            t.span
        )));
    }
    let l = t.l();
    if zhat.nrows() != l || z.nrows() != l {
        return Err(Error::ShapeMismatch(
            "boundary blocks must match the transfer block size".into(),
        ));
    }
    let left = from_blocks(&cident(l), z, &czeros(l, l), &cident(l));
    let right = from_blocks(&cident(l), &czeros(l, l), &zhat.map(|w| -w), &cident(l));
    Ok(Transfer2L {
        m: left * &t.m * right,
        z: t.z,
        span: t.span,
    })
}

/// Propagates a Lagrangian plane from site 0 to site n.
pub fn propagate_plane(
    model: &BlockJacobiModel,
    z: Complex64,
    phi0: &LagrangianFrame,
    n: usize,
) -> Result<LagrangianFrame> {
    let t = transfer_product(model, z, n, 0)?;
    let phi = &t.m * &phi0.phi;
    let sv = singular_values(&phi);
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    if smin <= Tolerances::default().rank_rel * smax {
        return Err(Error::FrameDegenerate { sigma: smin });
    }
    Ok(LagrangianFrame { phi })
}

/// Dimension of the intersection of two planes: 2L minus the numerical rank
/// of the concatenation of orthonormalized frames.
pub fn intersection_dimension(phi: &LagrangianFrame, psi: &LagrangianFrame) -> Result<usize> {
    intersection_dimension_with(phi, psi, &Tolerances::default())
}

pub fn intersection_dimension_with(
    phi: &LagrangianFrame,
    psi: &LagrangianFrame,
    tol: &Tolerances,
) -> Result<usize> {
    let l = phi.l();
    if psi.l() != l {
        return Err(Error::ShapeMismatch("frame sizes differ".into()));
    }
    let a = phi.orthonormalized();
    let b = psi.orthonormalized();
    let mut cat = czeros(2 * l, 2 * l);
    cat.view_mut((0, 0), (2 * l, l)).copy_from(&a.phi);
    cat.view_mut((0, l), (2 * l, l)).copy_from(&b.phi);
    let sv = singular_values(&cat);
    let smax = sv.first().copied().unwrap_or(0.0);
    let threshold = tol.rank_rel * smax;
    for &s in &sv {
        if s > threshold / 10.0 && s < threshold * 10.0 {
            return Err(Error::RankIndeterminate {
                sigma: s,
                threshold,
            });
        }
    }
    let rank = sv.iter().filter(|&&s| s >= threshold).count();
    Ok(2 * l - rank)
}

/// ||M^* J M - J|| in spectral norm; zero (up to roundoff) exactly when the
/// matrix is hermitian symplectic, which holds for transfer matrices at real
/// energies.
pub fn symplectic_residual(t: &Transfer2L) -> f64 {
    let j = symplectic_form(t.l());
    spectral_norm(&(t.m.adjoint() * &j * &t.m - &j))
}

/// One step of a QR-renormalized plane propagation.
///
/// Maintains an orthonormal frame `q` spanning the propagated plane together
/// with the accumulated inverse triangular factor `r_inv` such that the true
/// (unnormalized) frame is `q * r_inv^{-1}`. The Gram inverse of the true
/// frame is then `r_inv * r_inv^*`, which stays representable even when the
/// plane itself grows exponentially.
#[derive(Debug, Clone)]
pub struct RenormalizedFrame {
    pub q: CMat,
    pub r_inv: CMat,
}

impl RenormalizedFrame {
    pub fn start(phi0: &LagrangianFrame) -> Result<Self> {
        let (q, r) = thin_qr(&phi0.phi);
        Ok(RenormalizedFrame {
            q,
            r_inv: inverse(&r)?,
        })
    }

    /// Applies one site transfer and re-orthonormalizes.
    pub fn step(&mut self, transfer: &CMat) -> Result<()> {
        let y = transfer * &self.q;
        let (q, r) = thin_qr(&y);
        self.q = q;
        self.r_inv = &self.r_inv * inverse(&r)?;
        Ok(())
    }

    /// Inverse Gram matrix [Psi^* Psi]^{-1} of the underlying true frame.
    pub fn inverse_gram(&self) -> CMat {
        &self.r_inv * self.r_inv.adjoint()
    }

    pub fn frame(&self) -> LagrangianFrame {
        LagrangianFrame {
            phi: self.q.clone(),
        }
    }
}
