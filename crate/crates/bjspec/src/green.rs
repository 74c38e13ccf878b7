//! Green's matrix of the block Jacobi operator through the whole-sample
//! transfer matrix, a homogeneous frame-based evaluation that stays finite at
//! boundary-parametrization singularities, and the truncation limit for
//! semi-infinite operators in the limit point case.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    checked_inverse, condition_number, max_abs_diff, max_abs_entry, spectral_norm, CMat,
    Tolerances,
};
use crate::model::{BlockJacobiModel, BoundaryPair, SemiInfiniteModel};
use crate::moebius::{left_unitary_to_hermitian, unitary_section, UnitaryMatrix};
use crate::symplectic::{transfer_product, LagrangianFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreenRoute {
    FormulaOne,
    FormulaTwo,
    DirectSolve,
    Frame,
}

/// An evaluated corner Green's matrix together with the route taken and the
/// worst inverse conditioning encountered on the way.
#[derive(Debug, Clone)]
pub struct GreenEvaluation {
    pub value: CMat,
    pub z: Complex64,
    pub route: GreenRoute,
    pub condition: f64,
}

impl GreenEvaluation {
    /// Smallest eigenvalue of the matrix imaginary part; nonnegative (up to
    /// tolerance) when the boundary data lies in the closed upper half-plane.
    pub fn herglotz_defect(&self) -> f64 {
        crate::linalg::min_eig_hermitian(&crate::linalg::imag_part(&self.value))
    }
}

/// Corner Green's matrix
/// G = [A + ZC - B Zhat - Z D Zhat]^{-1} [B + Z D]
/// from the blocks of the whole-sample transfer matrix. For hermitian
/// boundary pairs the adjoint form at the conjugate energy is evaluated as
/// well and both must agree.
pub fn green_corner(
    model: &BlockJacobiModel,
    bc: &BoundaryPair,
    z: Complex64,
) -> Result<GreenEvaluation> {
    if z.im <= 0.0 {
        return Err(Error::InvalidInput(format!("need Im z > 0, got z = {z}")));
    }
    let (g1, cond) = green_corner_formula(model, bc, z)?;
    if bc.is_hermitian(1e-10) {
        let (g2_raw, _) = green_corner_formula(model, bc, z.conj())?;
        let g2 = g2_raw.adjoint();
        let scale = 1.0 + spectral_norm(&g1);
        let diff = spectral_norm(&(&g1 - &g2));
        if diff > 1e-9 * scale {
            return Err(Error::SolveFailure(format!(
                "the two closed-form expressions disagree ({diff:.3e} at z = {z})"
            )));
        }
    }
    Ok(GreenEvaluation {
        value: g1,
        z,
        route: GreenRoute::FormulaOne,
        condition: cond,
    })
}

fn green_corner_formula(
    model: &BlockJacobiModel,
    bc: &BoundaryPair,
    z: Complex64,
) -> Result<(CMat, f64)> {
    let t = transfer_product(model, z, model.n(), 0)?;
    let cb = t.corner_blocks();
    let bracket = &cb.a + &bc.z * &cb.c - &cb.b * &bc.zhat - &bc.z * &cb.d * &bc.zhat;
    let (inv, cond) = checked_inverse(&bracket, Tolerances::default().moebius_cond_max)?;
    Ok((inv * (&cb.b + &bc.z * &cb.d), cond))
}

/// Homogeneous evaluation of the corner Green's matrix with the right
/// boundary given as a Lagrangian frame (p; q). Uses the annihilating row
/// R = (q^*, -p^*), so the result is finite even where q is singular.
pub fn green_corner_frame(
    model: &BlockJacobiModel,
    zhat: &CMat,
    right_frame: &LagrangianFrame,
    z: Complex64,
) -> Result<GreenEvaluation> {
    if z.im <= 0.0 {
        return Err(Error::InvalidInput(format!("need Im z > 0, got z = {z}")));
    }
    let l = model.l();
    if right_frame.l() != l || zhat.nrows() != l {
        return Err(Error::ShapeMismatch(
            "frame and boundary sizes must match the model".into(),
        ));
    }
    let t = transfer_product(model, z, model.n(), 0)?;
    let on = right_frame.orthonormalized();
    let p = on.top();
    let q = on.bottom();
    // R = (q^*, -p^*), a 1 x 2 block row annihilating the frame.
    let mut r = crate::linalg::czeros(l, 2 * l);
    r.view_mut((0, 0), (l, l)).copy_from(&q.adjoint());
    r.view_mut((0, l), (l, l)).copy_from(&p.adjoint().map(|w| -w));

    let left_frame = LagrangianFrame::left_boundary(zhat);
    let dirichlet_col = LagrangianFrame::dirichlet_right(l);

    let denom = &r * &t.m * &left_frame.phi;
    let numer = &r * &t.m * &dirichlet_col.phi;
    let (inv, cond) = checked_inverse(&denom, Tolerances::default().moebius_cond_max)?;
    Ok(GreenEvaluation {
        value: inv * numer,
        z,
        route: GreenRoute::Frame,
        condition: cond,
    })
}

/// Result of a truncation limit: the common Green value and the truncation
/// size at which the stopping rule fired.
#[derive(Debug, Clone)]
pub struct LimitGreen {
    pub eval: GreenEvaluation,
    pub n_achieved: usize,
}

/// Green's matrix of a semi-infinite operator in the limit point case, by
/// truncation with two different right boundary planes until both sequences
/// agree with each other and with their previous iterates.
pub fn limit_green(
    semi: &SemiInfiniteModel,
    uhat: &UnitaryMatrix,
    z: Complex64,
    tol: f64,
    n_max: usize,
) -> Result<LimitGreen> {
    if !semi.limit_point() {
        return Err(Error::InvalidInput(
            "the caller has not declared the limit point case".into(),
        ));
    }
    if z.im <= 0.0 {
        return Err(Error::InvalidInput(format!("need Im z > 0, got z = {z}")));
    }
    let l = semi.l();
    let zhat = left_unitary_to_hermitian(uhat)?;
    let right_a = unitary_section(&UnitaryMatrix::identity(l));
    let right_b = unitary_section(&UnitaryMatrix::minus_identity(l));

    let mut n = 8usize;
    let mut prev: Option<(CMat, CMat)> = None;
    let mut history: Vec<(usize, f64)> = Vec::new();
    let mut worst_cond: f64 = 1.0;
    while n <= n_max {
        let model = semi.truncate(n)?;
        let ga = green_corner_frame(&model, &zhat, &right_a, z)?;
        let gb = green_corner_frame(&model, &zhat, &right_b, z)?;
        worst_cond = worst_cond.max(ga.condition).max(gb.condition);
        let split = max_abs_diff(&ga.value, &gb.value);
        let settled = match &prev {
            Some((pa, pb)) => {
                max_abs_diff(&ga.value, pa) <= tol && max_abs_diff(&gb.value, pb) <= tol
            }
            None => false,
        };
        history.push((n, split));
        if split <= tol && settled {
            let value = (&ga.value + &gb.value).map(|w| w * crate::linalg::cr(0.5));
            return Ok(LimitGreen {
                eval: GreenEvaluation {
                    value,
                    z,
                    route: GreenRoute::Frame,
                    condition: worst_cond,
                },
                n_achieved: n,
            });
        }
        prev = Some((ga.value, gb.value));
        n *= 2;
    }
    Err(Error::NoConvergence {
        n_max,
        detail: format!(
            "boundary-split trajectory {:?}",
            history
                .iter()
                .map(|(n, d)| format!("N={n}: {d:.3e}"))
                .collect::<Vec<_>>()
        ),
    })
}

/// Scale-aware relative difference used by tests and the verification suite.
pub fn relative_diff(a: &CMat, b: &CMat) -> f64 {
    let scale = max_abs_entry(a).max(max_abs_entry(b)).max(1e-30);
    max_abs_diff(a, b) / scale
}

/// Relative agreement between the transfer-matrix corner Green's matrix and
/// the dense resolvent solve at one energy.
pub fn cross_check_against_oracle(
    model: &BlockJacobiModel,
    bc: &BoundaryPair,
    z: Complex64,
) -> Result<f64> {
    let g = green_corner(model, bc, z)?;
    let oracle = crate::model::resolvent_corner_oracle(model, bc, z)?;
    let _ = condition_number(&g.value);
    Ok(relative_diff(&g.value, &oracle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, cr, czeros};
    use crate::model::resolvent_corner_oracle;

    fn scalar(x: f64) -> CMat {
        CMat::from_row_slice(1, 1, &[cr(x)])
    }

    fn free_model(n: usize) -> BlockJacobiModel {
        BlockJacobiModel::new(1, n, vec![scalar(0.0); n], vec![scalar(1.0); n - 1]).unwrap()
    }

    #[test]
    fn single_site_dirichlet() {
        let m = free_model(1);
        for &z in &[c64(0.0, 1.0), c64(0.5, 0.2), c64(-1.0, 0.7)] {
            let g = green_corner(&m, &BoundaryPair::dirichlet(1), z).unwrap();
            assert!((g.value[(0, 0)] - (-1.0 / z)).norm() < 1e-14);
        }
    }

    #[test]
    fn single_site_general_boundary() {
        let m = BlockJacobiModel::new(1, 1, vec![scalar(1.3)], vec![]).unwrap();
        let bc = BoundaryPair::new(scalar(0.4), scalar(-0.2)).unwrap();
        let z = c64(0.3, 0.6);
        let g = green_corner(&m, &bc, z).unwrap();
        let expect = 1.0 / (cr(1.3 - 0.4 + 0.2) - z);
        assert!((g.value[(0, 0)] - expect).norm() < 1e-14);
        let oracle = resolvent_corner_oracle(&m, &bc, z).unwrap();
        assert!((g.value[(0, 0)] - oracle[(0, 0)]).norm() < 1e-14);
    }

    #[test]
    fn matches_dense_resolvent_on_random_models() {
        let mut rng = crate::random::rng_from_seed(21);
        for &(l, n) in &[(1usize, 6usize), (2, 5), (3, 4)] {
            let model = crate::random::random_model(l, n, &mut rng);
            let bc = crate::random::random_hermitian_bc(l, &mut rng);
            let z = c64(0.3, 0.7);
            assert!(cross_check_against_oracle(&model, &bc, z).unwrap() < 1e-10);
        }
    }

    #[test]
    fn dual_formula_agreement_on_hermitian_pairs() {
        let mut rng = crate::random::rng_from_seed(22);
        for k in 0..200 {
            let l = 1 + k % 3;
            let n = 1 + k % 5;
            let model = crate::random::random_model(l, n, &mut rng);
            let bc = crate::random::random_hermitian_bc(l, &mut rng);
            // green_corner itself asserts the two expressions agree to 1e-9
            green_corner(&model, &bc, c64(0.2, 0.5)).unwrap();
        }
    }

    #[test]
    fn herglotz_for_upper_half_plane_boundaries() {
        let mut rng = crate::random::rng_from_seed(23);
        for _ in 0..30 {
            let model = crate::random::random_model(2, 4, &mut rng);
            let bc = crate::random::random_uhp_bc(2, &mut rng);
            let g = green_corner(&model, &bc, c64(-0.1, 0.9)).unwrap();
            assert!(g.herglotz_defect() > -1e-10);
        }
    }

    #[test]
    fn frame_route_equals_boundary_route_for_hermitian_z() {
        let mut rng = crate::random::rng_from_seed(24);
        for _ in 0..40 {
            let model = crate::random::random_model(2, 4, &mut rng);
            let zhat = crate::random::random_hermitian(2, &mut rng, 1.0);
            let z_right = crate::random::random_hermitian(2, &mut rng, 1.0);
            let bc = BoundaryPair::new(zhat.clone(), z_right.clone()).unwrap();
            let z = c64(0.4, 0.6);
            let direct = green_corner(&model, &bc, z).unwrap();
            let frame = LagrangianFrame::right_boundary(&z_right);
            let hom = green_corner_frame(&model, &zhat, &frame, z).unwrap();
            assert!(relative_diff(&direct.value, &hom.value) < 1e-10);
        }
    }

    #[test]
    fn frame_route_finite_at_singular_bottom_block() {
        let m = free_model(1);
        let frame = LagrangianFrame::dirichlet_left(1); // (1; 0): "infinite" right boundary
        let g = green_corner_frame(&m, &czeros(1, 1), &frame, c64(0.0, 1.0)).unwrap();
        assert!(g.value[(0, 0)].norm() < 1e-14);
    }

    #[test]
    fn frame_scaling_invariance() {
        let mut rng = crate::random::rng_from_seed(25);
        let model = crate::random::random_model(2, 3, &mut rng);
        let zhat = crate::random::random_hermitian(2, &mut rng, 1.0);
        let zr = crate::random::random_hermitian(2, &mut rng, 1.0);
        let base = LagrangianFrame::right_boundary(&zr);
        let c = crate::random::random_invertible(2, &mut rng);
        let scaled = LagrangianFrame {
            phi: &base.phi * &c,
        };
        let z = c64(0.1, 0.8);
        let g1 = green_corner_frame(&model, &zhat, &base, z).unwrap();
        let g2 = green_corner_frame(&model, &zhat, &scaled, z).unwrap();
        assert!(max_abs_diff(&g1.value, &g2.value) < 1e-10);
    }

    fn free_half_line() -> SemiInfiniteModel {
        SemiInfiniteModel::periodic(1, vec![scalar(0.0)], vec![scalar(1.0)], true).unwrap()
    }

    #[test]
    fn limit_green_free_half_line() {
        let semi = free_half_line();
        let z = c64(0.0, 0.5);
        let out = limit_green(&semi, &UnitaryMatrix::identity(1), z, 1e-9, 4096).unwrap();
        // fixed point of m = 1/(-z - m) with positive imaginary part
        let root = (z * z - cr(4.0)).sqrt();
        let root = if root.im > 0.0 { root } else { -root };
        let expect = (-z + root) / 2.0;
        assert!((out.eval.value[(0, 0)] - expect).norm() < 1e-8);
    }

    #[test]
    fn limit_green_near_real_axis() {
        let semi = free_half_line();
        let z = c64(0.0, 0.01);
        let out = limit_green(&semi, &UnitaryMatrix::identity(1), z, 1e-2, 8192).unwrap();
        assert!((out.eval.value[(0, 0)] - c64(0.0, 1.0)).norm() < 2e-2);
    }

    #[test]
    fn limit_green_reports_no_convergence() {
        let semi = free_half_line();
        let err = limit_green(
            &semi,
            &UnitaryMatrix::identity(1),
            c64(0.0, 0.01),
            1e-12,
            16,
        )
        .unwrap_err();
        match err {
            Error::NoConvergence { n_max, .. } => assert_eq!(n_max, 16),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
