//! Seeded generation of random models, boundary conditions, and coupling
//! families. Used by the verification suite and the tests; all generators are
//! deterministic functions of the supplied RNG state.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c64, cr, hermitian_part, CMat};
use crate::model::{BlockJacobiModel, BoundaryPair, CouplingFamily};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent substream for sample `index` under a common `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn random_complex(rng: &mut impl Rng) -> num_complex::Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) / 2.0_f64.sqrt()
}

/// Square matrix of independent standard complex Gaussians.
pub fn ginibre(l: usize, rng: &mut impl Rng) -> CMat {
    CMat::from_fn(l, l, |_, _| random_complex(rng))
}

pub fn random_hermitian(l: usize, rng: &mut impl Rng, scale: f64) -> CMat {
    hermitian_part(&ginibre(l, rng)).map(|z| z * cr(scale))
}

/// Positive semi-definite matrix A^* A (almost surely positive definite).
pub fn random_psd(l: usize, rng: &mut impl Rng) -> CMat {
    let a = ginibre(l, rng).map(|z| z * cr(1.0 / (l as f64).sqrt()));
    a.adjoint() * &a
}

/// Invertible matrix with singular values in [0.5, 1.5].
pub fn random_invertible(l: usize, rng: &mut impl Rng) -> CMat {
    let (q1, _) = crate::linalg::thin_qr(&ginibre(l, rng));
    let (q2, _) = crate::linalg::thin_qr(&ginibre(l, rng));
    let d = CMat::from_fn(l, l, |i, j| {
        if i == j {
            cr(0.5 + rng.random::<f64>())
        } else {
            cr(0.0)
        }
    });
    q1 * d * q2.adjoint()
}

/// Random valid block Jacobi model with O(1) blocks.
pub fn random_model(l: usize, n: usize, rng: &mut impl Rng) -> BlockJacobiModel {
    let v: Vec<CMat> = (0..n).map(|_| random_hermitian(l, rng, 1.0)).collect();
    let t: Vec<CMat> = (0..n.saturating_sub(1))
        .map(|_| random_invertible(l, rng))
        .collect();
    BlockJacobiModel::new(l, n, v, t).expect("random model must validate")
}

pub fn random_hermitian_bc(l: usize, rng: &mut impl Rng) -> BoundaryPair {
    BoundaryPair::new(random_hermitian(l, rng, 1.0), random_hermitian(l, rng, 1.0))
        .expect("hermitian boundary pair must validate")
}

/// Point of the open upper half-plane: hermitian + i * PSD.
pub fn random_uhp_point(l: usize, rng: &mut impl Rng) -> CMat {
    let x = random_hermitian(l, rng, 1.0);
    let y = random_psd(l, rng);
    x + y.map(|w| w * crate::linalg::I)
}

/// Boundary pair in the open upper half-plane.
pub fn random_uhp_bc(l: usize, rng: &mut impl Rng) -> BoundaryPair {
    let zhat = random_uhp_point(l, rng);
    let z = random_uhp_point(l, rng);
    BoundaryPair::new(zhat, z).expect("upper half-plane pair must validate")
}

/// Random family with positive-definite weights on every site.
pub fn random_positive_family(
    l: usize,
    n: usize,
    interval: (f64, f64),
    rng: &mut impl Rng,
) -> CouplingFamily {
    let base = random_model(l, n, rng);
    let w: Vec<CMat> = (0..n)
        .map(|_| {
            let p = random_psd(l, rng);
            p + CMat::identity(l, l).map(|z| z * cr(0.1))
        })
        .collect();
    CouplingFamily::new(base, w, interval).expect("random family must validate")
}
