//! Matrix Moebius action, the Cayley transform between the matrix upper
//! half-plane and the matrix unit disc, and the diffeomorphism identifying
//! Lagrangian planes with the unitary group.

use crate::error::{Error, Result};
use crate::linalg::{
    cayley, checked_inverse, cident, cr, in_closed_upper_half_plane, max_abs_entry, spectral_norm,
    split_blocks, stack, CMat, Tolerances, I,
};
use crate::symplectic::LagrangianFrame;

/// An L x L unitary matrix.
#[derive(Debug, Clone)]
pub struct UnitaryMatrix {
    pub u: CMat,
}

impl UnitaryMatrix {
    pub fn new(u: CMat) -> Result<Self> {
        let residual = unitarity_residual(&u);
        if residual > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "matrix is not unitary (residual {residual:.3e})"
            )));
        }
        Ok(UnitaryMatrix { u })
    }

    pub fn identity(l: usize) -> Self {
        UnitaryMatrix { u: cident(l) }
    }

    pub fn minus_identity(l: usize) -> Self {
        UnitaryMatrix {
            u: cident(l).map(|z| -z),
        }
    }

    pub fn l(&self) -> usize {
        self.u.nrows()
    }
}

pub fn unitarity_residual(u: &CMat) -> f64 {
    spectral_norm(&(u.adjoint() * u - cident(u.ncols())))
}

/// A point of the closed matrix upper half-plane.
#[derive(Debug, Clone)]
pub struct HalfPlanePoint {
    pub z: CMat,
}

impl HalfPlanePoint {
    pub fn new(z: CMat) -> Result<Self> {
        let tol = Tolerances::default().herm_rel * (1.0 + max_abs_entry(&z));
        if !in_closed_upper_half_plane(&z, tol) {
            return Err(Error::InvalidInput(
                "matrix is not in the closed upper half-plane".into(),
            ));
        }
        Ok(HalfPlanePoint { z })
    }
}

/// Moebius action (AZ + B)(CZ + D)^{-1} of a 2L x 2L matrix on an L x L one.
pub fn mobius(t: &CMat, z: &CMat) -> Result<CMat> {
    mobius_with(t, z, Tolerances::default().moebius_cond_max)
}

pub fn mobius_with(t: &CMat, z: &CMat, cond_max: f64) -> Result<CMat> {
    let (a, b, c, d) = split_blocks(t);
    let denom = &c * z + &d;
    let (inv, _) = checked_inverse(&denom, cond_max)?;
    Ok((&a * z + &b) * inv)
}

/// Inverse Moebius action W : T = (WC - A)^{-1}(B - WD).
pub fn mobius_inverse(w: &CMat, t: &CMat) -> Result<CMat> {
    mobius_inverse_with(w, t, Tolerances::default().moebius_cond_max)
}

pub fn mobius_inverse_with(w: &CMat, t: &CMat, cond_max: f64) -> Result<CMat> {
    let (a, b, c, d) = split_blocks(t);
    let denom = w * &c - &a;
    let (inv, _) = checked_inverse(&denom, cond_max)?;
    Ok(inv * (&b - w * &d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscDirection {
    ToDisc,
    ToHalfPlane,
}

/// The mutually inverse maps U = (Z - i)(Z + i)^{-1} and
/// Z = i (1 + U)(1 - U)^{-1} between half-plane and disc.
pub fn disc_half_maps(x: &CMat, direction: DiscDirection) -> Result<CMat> {
    let l = x.nrows();
    let id = cident(l);
    match direction {
        DiscDirection::ToDisc => {
            let denom = x + id.map(|w| I * w);
            let (inv, _) = checked_inverse(&denom, Tolerances::default().moebius_cond_max)?;
            Ok((x - id.map(|w| I * w)) * inv)
        }
        DiscDirection::ToHalfPlane => {
            let denom = &id - x;
            let (inv, _) = checked_inverse(&denom, Tolerances::default().moebius_cond_max)?;
            Ok((&id + x).map(|w| I * w) * inv)
        }
    }
}

/// The diffeomorphism from Lagrangian planes to U(L):
/// Pi(a; b) = (a - i b)(a + i b)^{-1}, invariant under the plane's
/// equivalence class.
///
/// The frame is orthonormalized first, which makes a + i b exactly
/// unitary-conditioned, so the inverse is benign.
pub fn plane_to_unitary(phi: &LagrangianFrame) -> Result<UnitaryMatrix> {
    let on = phi.orthonormalized();
    let a = on.top();
    let b = on.bottom();
    let apb = &a + b.map(|w| I * w);
    let (inv, _) = checked_inverse(&apb, 1e6).map_err(|_| Error::FrameDegenerate {
        sigma: crate::linalg::singular_values(&apb).last().copied().unwrap_or(0.0),
    })?;
    let mut u = (&a - b.map(|w| I * w)) * inv;
    let residual = unitarity_residual(&u);
    if residual > 1e-8 {
        return Err(Error::FrameDegenerate { sigma: residual });
    }
    if residual > 1e-13 {
        // isotropy roundoff accumulated along long propagations; snap to the
        // nearest unitary through the polar factor
        let svd = u.clone().svd(true, true);
        u = svd.u.expect("svd with factors") * svd.v_t.expect("svd with factors");
        let snapped = unitarity_residual(&u);
        if snapped > 1e-12 {
            return Err(Error::FrameDegenerate { sigma: snapped });
        }
    }
    Ok(UnitaryMatrix { u })
}

/// Smooth section of Pi: the frame ((1 + U)/2; (1 - U)/(2i)), exactly
/// Lagrangian for unitary U and mapped back to U exactly.
pub fn unitary_section(u: &UnitaryMatrix) -> LagrangianFrame {
    let l = u.l();
    let id = cident(l);
    let top = (&id + &u.u).map(|w| w * cr(0.5));
    let bottom = (&id - &u.u).map(|w| w / (cr(2.0) * I));
    LagrangianFrame {
        phi: stack(&top, &bottom),
    }
}

/// The boundary-condition dictionary: hermitian pairs (Zhat, Z) as planes and
/// as unitaries. Both the closed formulas Uhat = -C.Zhat, U = C.(-Z) and the
/// Pi route are evaluated and must agree.
pub fn boundary_to_unitaries(
    zhat: &CMat,
    z: &CMat,
) -> Result<(UnitaryMatrix, UnitaryMatrix, LagrangianFrame, LagrangianFrame)> {
    let l = zhat.nrows();
    let cay = cayley(l);
    let phihat = LagrangianFrame::left_boundary(zhat);
    let phi = LagrangianFrame::right_boundary(z);

    let uhat_pi = plane_to_unitary(&phihat)?;
    let u_pi = plane_to_unitary(&phi)?;

    let uhat_formula = mobius(&cay, zhat)?.map(|w| -w);
    let u_formula = mobius(&cay, &z.map(|w| -w))?;

    let d1 = crate::linalg::max_abs_diff(&uhat_pi.u, &uhat_formula);
    let d2 = crate::linalg::max_abs_diff(&u_pi.u, &u_formula);
    if d1 > 1e-12 * (1.0 + max_abs_entry(&uhat_pi.u)) || d2 > 1e-12 * (1.0 + max_abs_entry(&u_pi.u))
    {
        return Err(Error::InvalidInput(format!(
            "boundary parametrization routes disagree ({d1:.3e}, {d2:.3e})"
        )));
    }
    Ok((uhat_pi, u_pi, phihat, phi))
}

/// Hermitian chart coordinate of a left-boundary unitary:
/// Zhat = C^* . (-Uhat), defined off the set where 1 + Uhat is singular.
pub fn left_unitary_to_hermitian(uhat: &UnitaryMatrix) -> Result<CMat> {
    let cay = cayley(uhat.l());
    mobius(&cay.adjoint(), &uhat.u.map(|w| -w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, max_abs_diff, symplectic_form};
    use proptest::prelude::*;

    #[test]
    fn mobius_identity_fixes_points() {
        let mut rng = crate::random::rng_from_seed(1);
        let z = crate::random::random_hermitian(2, &mut rng, 1.0);
        let id = cident(4);
        assert!(max_abs_diff(&mobius(&id, &z).unwrap(), &z) < 1e-14);
    }

    #[test]
    fn mobius_symplectic_form_inverts() {
        let mut rng = crate::random::rng_from_seed(2);
        let z = crate::random::random_invertible(2, &mut rng);
        let j = symplectic_form(2);
        let out = mobius(&j, &z).unwrap();
        let expect = crate::linalg::inverse(&z).unwrap().map(|w| -w);
        assert!(max_abs_diff(&out, &expect) < 1e-12);
    }

    #[test]
    fn mobius_affine_shift() {
        let mut rng = crate::random::rng_from_seed(3);
        let z = crate::random::random_hermitian(2, &mut rng, 1.0);
        let b = crate::random::random_hermitian(2, &mut rng, 1.0);
        let t = crate::linalg::from_blocks(&cident(2), &b, &crate::linalg::czeros(2, 2), &cident(2));
        let out = mobius(&t, &z).unwrap();
        assert!(max_abs_diff(&out, &(&z + &b)) < 1e-14);
    }

    #[test]
    fn mobius_inverse_of_identity() {
        let mut rng = crate::random::rng_from_seed(4);
        let w = crate::random::random_hermitian(2, &mut rng, 1.0);
        let out = mobius_inverse(&w, &cident(4)).unwrap();
        assert!(max_abs_diff(&out, &w) < 1e-14);
    }

    #[test]
    fn mobius_round_trip_on_half_plane() {
        let mut rng = crate::random::rng_from_seed(5);
        for _ in 0..20 {
            let model = crate::random::random_model(2, 4, &mut rng);
            let t = crate::symplectic::transfer_product(&model, cr(0.3), 4, 0).unwrap();
            let x = crate::random::random_hermitian(2, &mut rng, 1.0);
            let y = crate::random::random_psd(2, &mut rng) + cident(2).map(|w| w * cr(0.05));
            let z = &x + y.map(|w| I * w);
            let w = mobius(&t.m, &z).unwrap();
            let back = mobius_inverse(&w, &t.m).unwrap();
            assert!(max_abs_diff(&back, &z) < 1e-10 * (1.0 + spectral_norm(&z)));
        }
    }

    #[test]
    fn disc_half_examples() {
        let z = cident(1).map(|w| I * w);
        let u = disc_half_maps(&z, DiscDirection::ToDisc).unwrap();
        assert!(max_abs_diff(&u, &crate::linalg::czeros(1, 1)) < 1e-15);

        let z_back = disc_half_maps(&crate::linalg::czeros(1, 1), DiscDirection::ToHalfPlane).unwrap();
        assert!(max_abs_diff(&z_back, &z) < 1e-15);

        let zero = crate::linalg::czeros(1, 1);
        let u0 = disc_half_maps(&zero, DiscDirection::ToDisc).unwrap();
        assert!((u0[(0, 0)] - cr(-1.0)).norm() < 1e-15);
    }

    #[test]
    fn disc_half_maps_open_half_plane_into_open_disc() {
        let mut rng = crate::random::rng_from_seed(6);
        for _ in 0..10 {
            let x = crate::random::random_hermitian(2, &mut rng, 1.0);
            let y = crate::random::random_psd(2, &mut rng) + cident(2).map(|w| w * cr(0.05));
            let z = &x + y.map(|w| I * w);
            let u = disc_half_maps(&z, DiscDirection::ToDisc).unwrap();
            let gram = u.adjoint() * &u;
            assert!(crate::linalg::min_eig_hermitian(&(cident(2) - gram)) > 0.0);
        }
    }

    #[test]
    fn plane_to_unitary_examples() {
        let u1 = plane_to_unitary(&LagrangianFrame::dirichlet_left(1)).unwrap();
        assert!((u1.u[(0, 0)] - cr(1.0)).norm() < 1e-14);
        let u2 = plane_to_unitary(&LagrangianFrame::dirichlet_right(1)).unwrap();
        assert!((u2.u[(0, 0)] - cr(-1.0)).norm() < 1e-14);
        let phi = LagrangianFrame::new(stack(&cident(1), &cident(1))).unwrap();
        let u3 = plane_to_unitary(&phi).unwrap();
        assert!((u3.u[(0, 0)] - c64(0.0, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn boundary_dictionary_examples() {
        let zero = crate::linalg::czeros(2, 2);
        let (uhat, u, _, _) = boundary_to_unitaries(&zero, &zero).unwrap();
        assert!(max_abs_diff(&uhat.u, &cident(2)) < 1e-13);
        assert!(max_abs_diff(&u.u, &cident(2).map(|w| -w)) < 1e-13);
    }

    #[test]
    fn boundary_dictionary_scalar_cotangent() {
        for &theta in &[0.3, 1.1, 2.5, -0.7] {
            let z = CMat::from_row_slice(1, 1, &[cr((theta / 2.0_f64).tan().recip())]);
            let (_, u, _, phi) = boundary_to_unitaries(&crate::linalg::czeros(1, 1), &z).unwrap();
            let expect = c64(theta.cos(), theta.sin());
            assert!((u.u[(0, 0)] - expect).norm() < 1e-12);
            let via_pi = plane_to_unitary(&phi).unwrap();
            assert!((via_pi.u[(0, 0)] - u.u[(0, 0)]).norm() < 1e-13);
        }
    }

    #[test]
    fn section_round_trip_is_exact_on_haar_samples() {
        let mut rng = crate::random::rng_from_seed(7);
        for l in 1..=3 {
            for _ in 0..10 {
                let u = crate::haar::sample_haar(l, &mut rng);
                let frame = unitary_section(&u);
                assert!(frame.isotropy_residual() < 1e-14);
                let back = plane_to_unitary(&frame).unwrap();
                assert!(max_abs_diff(&back.u, &u.u) < 1e-12);
            }
        }
    }

    #[test]
    fn left_action_on_random_symplectic_pairs() {
        let mut rng = crate::random::rng_from_seed(8);
        let mut checked = 0;
        for _ in 0..100 {
            let m1 = crate::random::random_model(2, 3, &mut rng);
            let m2 = crate::random::random_model(2, 2, &mut rng);
            let t = crate::symplectic::transfer_product(&m1, cr(0.1), 3, 0).unwrap().m;
            let s = crate::symplectic::transfer_product(&m2, cr(-0.6), 2, 0).unwrap().m;
            let x = crate::random::random_hermitian(2, &mut rng, 1.0);
            let y = crate::random::random_psd(2, &mut rng) + cident(2).map(|w| w * cr(0.05));
            let z = &x + y.map(|w| I * w);
            let lhs = mobius(&(&t * &s), &z).unwrap();
            let rhs = mobius(&t, &mobius(&s, &z).unwrap()).unwrap();
            let scale = 1.0 + spectral_norm(&lhs);
            assert!(max_abs_diff(&lhs, &rhs) < 1e-9 * scale);
            checked += 1;
        }
        assert_eq!(checked, 100);
    }

    #[test]
    fn symplectic_action_respects_classes() {
        let mut rng = crate::random::rng_from_seed(9);
        let model = crate::random::random_model(2, 4, &mut rng);
        let t = crate::symplectic::transfer_product(&model, cr(0.9), 4, 0).unwrap().m;
        let zhat = crate::random::random_hermitian(2, &mut rng, 1.0);
        let phi = LagrangianFrame::left_boundary(&zhat);
        let c = crate::random::random_invertible(2, &mut rng);
        let rep1 = LagrangianFrame { phi: &t * &phi.phi };
        let rep2 = LagrangianFrame {
            phi: &t * (&phi.phi * &c),
        };
        let u1 = plane_to_unitary(&rep1).unwrap();
        let u2 = plane_to_unitary(&rep2).unwrap();
        assert!(max_abs_diff(&u1.u, &u2.u) < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn pi_is_class_invariant(seed in 0u64..1000) {
            let mut rng = crate::random::rng_from_seed(seed);
            let zhat = crate::random::random_hermitian(2, &mut rng, 1.0);
            let phi = LagrangianFrame::left_boundary(&zhat);
            let c = crate::random::random_invertible(2, &mut rng);
            let scaled = LagrangianFrame { phi: &phi.phi * &c };
            let u1 = plane_to_unitary(&phi).unwrap();
            let u2 = plane_to_unitary(&scaled).unwrap();
            prop_assert!(max_abs_diff(&u1.u, &u2.u) < 1e-10);
        }
    }
}
