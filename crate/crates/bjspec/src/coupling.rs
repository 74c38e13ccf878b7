//! Coupling-constant averaging: Dirichlet solutions of the coupled family,
//! the P-matrix speed bounds, the mu-winding criterion, and the
//! coupling-averaged spectral density with its two-sided bounds.

use crate::error::{Error, Result};
use crate::linalg::{cr, hermitian_part, symplectic_form, thin_qr, CMat};
use crate::model::{coupled_model, BoundaryPair, CouplingFamily};
use crate::moebius::plane_to_unitary;
use crate::oscillation::{track_unitary_path, winding_of_path, Monotonicity};
use crate::symplectic::{single_transfer, transfer_product, LagrangianFrame};

/// The Dirichlet solution frame Psi = T^E(N, 0, mu) (1; 0).
#[derive(Debug, Clone)]
pub struct DirichletSolution {
    pub psi: LagrangianFrame,
    pub e: f64,
    pub mu: f64,
    pub n: usize,
}

pub fn dirichlet_solution(family: &CouplingFamily, e: f64, mu: f64) -> Result<DirichletSolution> {
    let model = coupled_model(family, mu);
    let n = model.n();
    let t = transfer_product(&model, cr(e), n, 0)?;
    let phi = &t.m * LagrangianFrame::dirichlet_left(model.l()).phi;
    Ok(DirichletSolution {
        psi: LagrangianFrame { phi },
        e,
        mu,
        n,
    })
}

/// The hermitian speed matrix P = -Psi^* J (d/dmu) Psi.
#[derive(Debug, Clone)]
pub struct PMatrix {
    pub p: CMat,
    pub e: f64,
    pub mu: f64,
}

/// P computed from the exact analytic mu-derivative of the single-site
/// transfer matrices: a sum over perturbed sites of
/// phi_n^* W_n phi_n with phi_n = T_n^{-1} (top block of the frame at n - 1).
pub fn p_matrix(family: &CouplingFamily, e: f64, mu: f64) -> Result<PMatrix> {
    let model = coupled_model(family, mu);
    let l = model.l();
    let mut frame = LagrangianFrame::dirichlet_left(l).phi;
    let mut p = crate::linalg::czeros(l, l);
    for n in 1..=model.n() {
        let w = family.w_block(n);
        if crate::linalg::max_abs_entry(&w) > 0.0 {
            let t_inv = crate::linalg::inverse(&model.t_block(n))?;
            let top = frame.view((0, 0), (l, l)).into_owned();
            let phi_n = t_inv * top;
            p += phi_n.adjoint() * w * phi_n;
        }
        frame = single_transfer(&model, n, cr(e))?.m * frame;
    }
    Ok(PMatrix {
        p: hermitian_part(&p),
        e,
        mu,
    })
}

/// Central-difference cross-check of the P-matrix from its definition
/// -Psi^* J (d/dmu) Psi.
pub fn p_matrix_finite_difference(
    family: &CouplingFamily,
    e: f64,
    mu: f64,
    h: f64,
) -> Result<PMatrix> {
    let psi = dirichlet_solution(family, e, mu)?.psi.phi;
    let plus = dirichlet_solution(family, e, mu + h)?.psi.phi;
    let minus = dirichlet_solution(family, e, mu - h)?.psi.phi;
    let dpsi = (plus - minus).map(|w| w / cr(2.0 * h));
    let l = psi.ncols();
    let p = (psi.adjoint() * symplectic_form(l) * dpsi).map(|w| -w);
    Ok(PMatrix {
        p: hermitian_part(&p),
        e,
        mu,
    })
}

/// The unitary attached to the Dirichlet solution at coupling mu,
/// QR-stabilized site by site.
pub fn dirichlet_unitary_at(
    family: &CouplingFamily,
    e: f64,
    mu: f64,
) -> Result<crate::moebius::UnitaryMatrix> {
    let model = coupled_model(family, mu);
    let l = model.l();
    let mut q = LagrangianFrame::dirichlet_left(l).orthonormalized().phi;
    for n in 1..=model.n() {
        let t = single_transfer(&model, n, cr(e))?;
        let (qq, _) = thin_qr(&(&t.m * &q));
        q = qq;
    }
    plane_to_unitary(&LagrangianFrame { phi: q })
}

/// Accumulated winding of mu -> Pi(Psi(mu)) over the interval; negative for
/// positive perturbations, since the phases decrease in mu. The base grid is
/// doubled until two consecutive refinements agree, which protects the
/// integer part of the winding against turns hiding between grid nodes.
pub fn mu_phase_winding(
    family: &CouplingFamily,
    e: f64,
    interval: (f64, f64),
    grid_nodes: usize,
) -> Result<f64> {
    let (mu0, mu1) = interval;
    if !(mu0 < mu1) {
        return Err(Error::InvalidInput(format!(
            "need mu0 < mu1, got [{mu0}, {mu1}]"
        )));
    }
    let mut nodes = grid_nodes.max(9);
    let mut prev: Option<f64> = None;
    for _ in 0..7 {
        let grid: Vec<f64> = (0..nodes)
            .map(|k| mu0 + (mu1 - mu0) * k as f64 / (nodes - 1) as f64)
            .collect();
        let path = track_unitary_path(&grid, Monotonicity::Decreasing, |mu| {
            dirichlet_unitary_at(family, e, mu)
        })?;
        let w = winding_of_path(&path);
        if let Some(p) = prev {
            if (w - p).abs() <= 1e-3 * (1.0 + w.abs()) {
                return Ok(w);
            }
        }
        prev = Some(w);
        nodes = nodes * 2 - 1;
    }
    Err(Error::RefinementLimit { points: nodes })
}

/// Certified two-sided P-matrix bounds plus the winding criterion.
#[derive(Debug, Clone)]
pub struct CriteriaReport {
    pub c1: f64,
    pub c2: f64,
    pub winding: f64,
    pub passes_i: bool,
    pub passes_ii: bool,
    /// Final mu-grid resolution used for the bounds.
    pub grid: usize,
}

pub fn criteria_report(
    family: &CouplingFamily,
    e: f64,
    interval: (f64, f64),
    grid_nodes: usize,
) -> Result<CriteriaReport> {
    let (mu0, mu1) = interval;
    if !(mu0 < mu1) {
        return Err(Error::InvalidInput(format!(
            "need mu0 < mu1, got [{mu0}, {mu1}]"
        )));
    }
    let l = family.base.l();
    let mut nodes = grid_nodes.max(11);
    let mut prev: Option<(f64, f64)> = None;
    let (c1, c2, final_nodes) = loop {
        let mut cmin = f64::INFINITY;
        let mut cmax = f64::NEG_INFINITY;
        for k in 0..nodes {
            let mu = mu0 + (mu1 - mu0) * k as f64 / (nodes - 1) as f64;
            let p = p_matrix(family, e, mu)?;
            let eigs = crate::linalg::hermitian_eigenvalues(&p.p);
            cmin = cmin.min(*eigs.first().unwrap());
            cmax = cmax.max(*eigs.last().unwrap());
        }
        if let Some((p1, p2)) = prev {
            let moved = ((cmin - p1).abs() / (1.0 + p1.abs()))
                .max((cmax - p2).abs() / (1.0 + p2.abs()));
            if moved < 0.01 {
                break (cmin, cmax, nodes);
            }
        }
        prev = Some((cmin, cmax));
        if nodes > 100_000 {
            return Err(Error::RefinementLimit { points: nodes });
        }
        nodes = nodes * 2 - 1;
    };
    let winding = mu_phase_winding(family, e, interval, 201)?;
    Ok(CriteriaReport {
        c1,
        c2,
        winding,
        passes_i: c1 > 0.0,
        passes_ii: winding < -(l as f64),
        grid: final_nodes,
    })
}

/// Binned, mu-integrated trace density over an energy window, from the dense
/// eigensolve oracle of the coupled operator with Dirichlet boundaries.
#[derive(Debug, Clone)]
pub struct CoupledDensityTable {
    /// (bin center, integrated trace density per unit energy).
    pub bins: Vec<(f64, f64)>,
    pub min_density: f64,
    pub max_density: f64,
    pub mu_nodes: usize,
}

pub fn coupling_averaged_density(
    family: &CouplingFamily,
    window: (f64, f64),
    mu_nodes: usize,
    n_bins: usize,
) -> Result<CoupledDensityTable> {
    let (e0, e1) = window;
    if !(e0 < e1) || n_bins == 0 || mu_nodes < 2 {
        return Err(Error::InvalidInput(
            "coupled density needs E0 < E1, at least one bin and two mu nodes".into(),
        ));
    }
    let (mu0, mu1) = family.interval;
    let l = family.base.l();
    let bc = BoundaryPair::dirichlet(l);
    let bin_w = (e1 - e0) / n_bins as f64;
    let dmu = (mu1 - mu0) / (mu_nodes - 1) as f64;

    let nodes: Vec<Vec<(f64, f64)>> = (0..mu_nodes)
        .map(|k| {
            let mu = mu0 + dmu * k as f64;
            crate::model::corner_weighted_eigenvalues(&coupled_model(family, mu), &bc)
        })
        .collect::<Result<_>>()?;

    // deposit each eigenvalue branch segment, linearized over the mu step,
    // splitting its trapezoid mass exactly across the bins it sweeps; this
    // avoids the aliasing of point histograms against bin edges
    let mut masses = vec![0.0_f64; n_bins];
    let mut deposit = |x0: f64, x1: f64, mass: f64| {
        let (lo, hi) = if x0 <= x1 { (x0, x1) } else { (x1, x0) };
        if hi < e0 || lo >= e1 {
            return;
        }
        if hi - lo < 1e-300 {
            let idx = (((lo - e0) / bin_w) as usize).min(n_bins - 1);
            masses[idx] += mass;
            return;
        }
        let width = hi - lo;
        for (idx, m) in masses.iter_mut().enumerate() {
            let b0 = e0 + idx as f64 * bin_w;
            let b1 = b0 + bin_w;
            let overlap = (hi.min(b1) - lo.max(b0)).max(0.0);
            *m += mass * overlap / width;
        }
    };
    for pair in nodes.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        for (ea, eb) in a.iter().zip(b.iter()) {
            let mass = 0.5 * (ea.1 + eb.1) * dmu;
            deposit(ea.0, eb.0, mass);
        }
    }

    let bins: Vec<(f64, f64)> = masses
        .iter()
        .enumerate()
        .map(|(i, m)| (e0 + (i as f64 + 0.5) * bin_w, m / bin_w))
        .collect();
    let min_density = bins.iter().map(|b| b.1).fold(f64::INFINITY, f64::min);
    let max_density = bins.iter().map(|b| b.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(CoupledDensityTable {
        bins,
        min_density,
        max_density,
        mu_nodes,
    })
}

/// Oracle count of the eigenvalues of the coupled operator crossing `e` as mu
/// sweeps the interval (eigenvalues increase in mu, so this is the difference
/// of counting functions).
pub fn oracle_crossing_count(
    family: &CouplingFamily,
    e: f64,
    interval: (f64, f64),
) -> Result<usize> {
    let bc = BoundaryPair::dirichlet(family.base.l());
    let below = |mu: f64| -> Result<usize> {
        let eigs = crate::model::eigenvalues_oracle(&coupled_model(family, mu), &bc)?;
        Ok(eigs.iter().filter(|&&x| x < e).count())
    };
    let n0 = below(interval.0)?;
    let n1 = below(interval.1)?;
    Ok(n0.saturating_sub(n1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::model::BlockJacobiModel;

    fn scalar(x: f64) -> CMat {
        CMat::from_row_slice(1, 1, &[cr(x)])
    }

    fn scalar_family(v: f64, w: f64, interval: (f64, f64)) -> CouplingFamily {
        let base = BlockJacobiModel::new(1, 1, vec![scalar(v)], vec![]).unwrap();
        CouplingFamily::new(base, vec![scalar(w)], interval).unwrap()
    }

    /// L=1, N=2 free chain with unit weights on both sites.
    fn two_site_family(interval: (f64, f64)) -> CouplingFamily {
        let base = BlockJacobiModel::new(
            1,
            2,
            vec![scalar(0.0), scalar(0.0)],
            vec![scalar(1.0)],
        )
        .unwrap();
        CouplingFamily::new(base, vec![scalar(1.0), scalar(1.0)], interval).unwrap()
    }

    #[test]
    fn dirichlet_solution_scalar() {
        let fam = scalar_family(0.0, 2.0, (0.0, 1.0));
        let sol = dirichlet_solution(&fam, 0.7, 0.3).unwrap();
        // Psi = (E - mu w; 1)
        assert!((sol.psi.phi[(0, 0)] - cr(0.7 - 0.3 * 2.0)).norm() < 1e-14);
        assert!((sol.psi.phi[(1, 0)] - cr(1.0)).norm() < 1e-14);
    }

    #[test]
    fn dirichlet_solution_is_lagrangian() {
        let mut rng = crate::random::rng_from_seed(51);
        let fam = crate::random::random_positive_family(2, 4, (0.0, 1.0), &mut rng);
        let sol = dirichlet_solution(&fam, 0.4, 0.6).unwrap();
        let scale = crate::linalg::spectral_norm(&sol.psi.phi).powi(2);
        assert!(sol.psi.isotropy_residual() <= 1e-10 * scale);
    }

    #[test]
    fn p_matrix_hand_value() {
        let fam = scalar_family(0.0, 1.7, (0.0, 1.0));
        for &(e, mu) in &[(0.0, 0.0), (0.8, 0.5)] {
            let p = p_matrix(&fam, e, mu).unwrap();
            assert!((p.p[(0, 0)].re - 1.7).abs() < 1e-12, "P = {}", p.p[(0, 0)]);
        }
    }

    #[test]
    fn p_matrix_zero_weights() {
        let base = BlockJacobiModel::new(1, 2, vec![scalar(0.1), scalar(-0.4)], vec![scalar(1.0)])
            .unwrap();
        let fam = CouplingFamily::new(base, vec![scalar(0.0), scalar(0.0)], (0.0, 1.0)).unwrap();
        let p = p_matrix(&fam, 0.3, 0.5).unwrap();
        assert!(crate::linalg::max_abs_entry(&p.p) < 1e-14);
    }

    #[test]
    fn p_matrix_positive_for_consecutive_positive_weights() {
        let mut rng = crate::random::rng_from_seed(52);
        for _ in 0..20 {
            let fam = crate::random::random_positive_family(2, 3, (0.0, 1.0), &mut rng);
            let p = p_matrix(&fam, 0.2, 0.4).unwrap();
            assert!(crate::linalg::min_eig_hermitian(&p.p) > 0.0);
        }
    }

    #[test]
    fn p_matrix_matches_finite_difference() {
        let mut rng = crate::random::rng_from_seed(53);
        for _ in 0..5 {
            let fam = crate::random::random_positive_family(2, 4, (0.0, 1.0), &mut rng);
            let exact = p_matrix(&fam, 0.3, 0.5).unwrap();
            let fd = p_matrix_finite_difference(&fam, 0.3, 0.5, 1e-5).unwrap();
            assert!(max_abs_diff(&exact.p, &fd.p) < 1e-6 * (1.0 + crate::linalg::spectral_norm(&exact.p)));
        }
    }

    #[test]
    fn p_matrix_site_terms_are_monotone() {
        // dropping a site weight decreases P in the semidefinite order
        let mut rng = crate::random::rng_from_seed(54);
        let fam = crate::random::random_positive_family(2, 3, (0.0, 1.0), &mut rng);
        let full = p_matrix(&fam, 0.1, 0.7).unwrap();
        let w_reduced: Vec<CMat> = (1..=2).map(|n| fam.w_block(n)).collect();
        let reduced_fam =
            CouplingFamily::new(fam.base.clone(), w_reduced, fam.interval).unwrap();
        let reduced = p_matrix(&reduced_fam, 0.1, 0.7).unwrap();
        assert!(crate::linalg::min_eig_hermitian(&(&full.p - &reduced.p)) > -1e-12);
    }

    #[test]
    fn winding_zero_for_zero_weights() {
        let base = BlockJacobiModel::new(1, 2, vec![scalar(0.2), scalar(-0.1)], vec![scalar(1.0)])
            .unwrap();
        let fam = CouplingFamily::new(base, vec![scalar(0.0)], (0.0, 1.0)).unwrap();
        let w = mu_phase_winding(&fam, 0.0, (0.0, 1.0), 51).unwrap();
        assert!(w.abs() < 1e-12);
    }

    #[test]
    fn winding_scalar_large_interval_approaches_minus_one() {
        let fam = scalar_family(0.0, 1.0, (-60.0, 60.0));
        let w = mu_phase_winding(&fam, 0.0, (-60.0, 60.0), 601).unwrap();
        assert!((w + 1.0).abs() < 0.05, "winding {w}");
    }

    #[test]
    fn winding_negative_for_positive_families() {
        let mut rng = crate::random::rng_from_seed(55);
        for _ in 0..5 {
            let fam = crate::random::random_positive_family(1, 3, (0.0, 5.0), &mut rng);
            let w = mu_phase_winding(&fam, 0.1, (0.0, 5.0), 201).unwrap();
            assert!(w < 0.0, "winding {w}");
        }
    }

    #[test]
    fn criteria_zero_weights_fail_first_criterion() {
        let base = BlockJacobiModel::new(1, 2, vec![scalar(0.0), scalar(0.0)], vec![scalar(1.0)])
            .unwrap();
        let fam = CouplingFamily::new(base, vec![scalar(0.0)], (0.0, 1.0)).unwrap();
        let report = criteria_report(&fam, 0.0, (0.0, 1.0), 21).unwrap();
        assert!(!report.passes_i);
        assert!(report.c1 <= 0.0 && report.c2 >= report.c1);
    }

    #[test]
    fn criteria_flip_with_interval_size() {
        let fam_wide = two_site_family((-2.0, 2.0));
        let report_wide = criteria_report(&fam_wide, 0.0, (-2.0, 2.0), 41).unwrap();
        assert!(report_wide.passes_i);
        assert!(
            report_wide.passes_ii,
            "wide interval winding {}",
            report_wide.winding
        );
        assert_eq!(oracle_crossing_count(&fam_wide, 0.0, (-2.0, 2.0)).unwrap(), 2);

        let fam_narrow = two_site_family((-0.5, 0.5));
        let report_narrow = criteria_report(&fam_narrow, 0.0, (-0.5, 0.5), 41).unwrap();
        assert!(!report_narrow.passes_ii);
        assert_eq!(oracle_crossing_count(&fam_narrow, 0.0, (-0.5, 0.5)).unwrap(), 0);
    }

    #[test]
    fn winding_tracks_oracle_crossings() {
        let mut rng = crate::random::rng_from_seed(56);
        for _ in 0..5 {
            let fam = crate::random::random_positive_family(1, 2, (-3.0, 3.0), &mut rng);
            let w = mu_phase_winding(&fam, 0.0, (-3.0, 3.0), 201).unwrap();
            let crossings = oracle_crossing_count(&fam, 0.0, (-3.0, 3.0)).unwrap();
            assert!(
                (crossings as f64 + w).abs() <= 1.0,
                "crossings {crossings}, winding {w}"
            );
        }
    }

    #[test]
    fn coupled_density_flat_for_linear_sweep() {
        let fam = two_site_family((-2.0, 2.0));
        let table = coupling_averaged_density(&fam, (-0.3, 0.3), 401, 12).unwrap();
        assert!(table.min_density > 0.0);
        // the two-site sweep deposits unit density in each bin
        assert!(
            (table.max_density / table.min_density) < 1.05,
            "spread {} / {}",
            table.max_density,
            table.min_density
        );
    }

    #[test]
    fn coupled_density_zero_weights_have_empty_bins() {
        let base = BlockJacobiModel::new(1, 2, vec![scalar(0.9), scalar(-0.9)], vec![scalar(1.0)])
            .unwrap();
        let fam = CouplingFamily::new(base, vec![scalar(0.0)], (0.0, 1.0)).unwrap();
        let table = coupling_averaged_density(&fam, (-0.4, 0.4), 101, 8).unwrap();
        assert_eq!(table.min_density, 0.0);
    }

    #[test]
    fn coupled_density_stable_under_grid_refinement() {
        let fam = two_site_family((-2.0, 2.0));
        let coarse = coupling_averaged_density(&fam, (-0.3, 0.3), 401, 8).unwrap();
        let fine = coupling_averaged_density(&fam, (-0.3, 0.3), 801, 8).unwrap();
        for (a, b) in coarse.bins.iter().zip(fine.bins.iter()) {
            assert!((a.1 - b.1).abs() <= 0.02 * (1.0 + b.1.abs()));
        }
    }
}
