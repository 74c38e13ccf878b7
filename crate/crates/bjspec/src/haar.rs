//! Haar sampling on U(L), deterministic Monte Carlo integration with
//! per-entry error bars, the Cauchy reproducing kernel of the matrix disc,
//! the reflection identity in the hermitian chart, and the radial average
//! over positive matrices of the signature group.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    cayley, checked_inverse, cident, cr, czeros, min_eig_hermitian, signature_form, spectral_norm,
    stack, CMat, RMat, Tolerances,
};
use crate::moebius::{mobius, UnitaryMatrix};
use crate::random::{ginibre, substream};

/// Haar-distributed unitary via the phase-corrected QR of a complex Ginibre
/// matrix (the raw QR factor alone is not Haar).
pub fn sample_haar(l: usize, rng: &mut impl Rng) -> UnitaryMatrix {
    let g = ginibre(l, rng);
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = q;
    for k in 0..l {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { cr(1.0) };
        for i in 0..l {
            u[(i, k)] *= phase;
        }
    }
    UnitaryMatrix { u }
}

/// Monte Carlo mean of a matrix-valued function on U(L), with per-entry
/// standard errors for the real and imaginary parts.
#[derive(Debug, Clone)]
pub struct MCEstimate {
    pub mean: CMat,
    pub stderr_re: RMat,
    pub stderr_im: RMat,
    pub samples: usize,
    pub seed: u64,
    pub skipped: usize,
}

impl MCEstimate {
    /// Worst per-entry distance to `expected` in units of the standard error
    /// (real and imaginary parts checked separately; a tiny floor guards
    /// exactly-constant integrands).
    pub fn sigma_distance(&self, expected: &CMat) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.mean.nrows() {
            for j in 0..self.mean.ncols() {
                let d = self.mean[(i, j)] - expected[(i, j)];
                let floor = 1e-12 * (1.0 + expected[(i, j)].norm());
                let se_re = self.stderr_re[(i, j)].max(floor);
                let se_im = self.stderr_im[(i, j)].max(floor);
                worst = worst.max(d.re.abs() / se_re).max(d.im.abs() / se_im);
            }
        }
        worst
    }

    pub fn within(&self, expected: &CMat, k_sigma: f64) -> bool {
        self.sigma_distance(expected) <= k_sigma
    }

    pub fn max_stderr(&self) -> f64 {
        self.stderr_re
            .iter()
            .chain(self.stderr_im.iter())
            .copied()
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct McOptions {
    /// Pair each sample U with its reflected point U^* and average the two
    /// evaluations. Exact variance elimination for integrands odd under the
    /// hermitian-chart reflection.
    pub antithetic: bool,
}

const MC_BLOCK: usize = 256;

/// Welford accumulator; block merging follows the pairwise update so that a
/// constant integrand yields an exactly zero variance.
struct BlockAccum {
    mean: CMat,
    m2_re: RMat,
    m2_im: RMat,
    count: usize,
    skipped: usize,
}

impl BlockAccum {
    fn new(shape: (usize, usize)) -> Self {
        BlockAccum {
            mean: czeros(shape.0, shape.1),
            m2_re: RMat::zeros(shape.0, shape.1),
            m2_im: RMat::zeros(shape.0, shape.1),
            count: 0,
            skipped: 0,
        }
    }

    fn push(&mut self, v: &CMat) {
        self.count += 1;
        let nf = self.count as f64;
        for i in 0..self.mean.nrows() {
            for j in 0..self.mean.ncols() {
                let delta = v[(i, j)] - self.mean[(i, j)];
                self.mean[(i, j)] += delta / nf;
                let delta2 = v[(i, j)] - self.mean[(i, j)];
                self.m2_re[(i, j)] += delta.re * delta2.re;
                self.m2_im[(i, j)] += delta.im * delta2.im;
            }
        }
    }

    fn merge(mut self, other: BlockAccum) -> BlockAccum {
        if other.count == 0 {
            self.skipped += other.skipped;
            return self;
        }
        if self.count == 0 {
            let mut out = other;
            out.skipped += self.skipped;
            return out;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        for i in 0..self.mean.nrows() {
            for j in 0..self.mean.ncols() {
                let delta = other.mean[(i, j)] - self.mean[(i, j)];
                self.mean[(i, j)] += delta * (nb / n);
                self.m2_re[(i, j)] +=
                    other.m2_re[(i, j)] + delta.re * delta.re * (na * nb / n);
                self.m2_im[(i, j)] +=
                    other.m2_im[(i, j)] + delta.im * delta.im * (na * nb / n);
            }
        }
        self.count += other.count;
        self.skipped += other.skipped;
        self
    }
}

fn skippable(err: &Error) -> bool {
    matches!(
        err,
        Error::MoebiusSingular { .. } | Error::FrameDegenerate { .. } | Error::RankIndeterminate { .. }
    )
}

/// Deterministic Haar Monte Carlo: sample `index` draws its own RNG substream
/// from `(seed, index)`, and the reduction runs blockwise in index order, so
/// the estimate is bit-identical for any degree of parallelism.
pub fn mc_average<F>(
    l: usize,
    n_samples: usize,
    seed: u64,
    opts: McOptions,
    f: F,
) -> Result<MCEstimate>
where
    F: Fn(&UnitaryMatrix) -> Result<CMat> + Sync,
{
    if n_samples < 100 {
        return Err(Error::InvalidInput(format!(
            "need at least 100 samples, got {n_samples}"
        )));
    }
    let shape = probe_shape(l, seed, &f)?;
    let n_blocks = n_samples.div_ceil(MC_BLOCK);
    let blocks: Vec<Result<BlockAccum>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * MC_BLOCK;
            let hi = ((b + 1) * MC_BLOCK).min(n_samples);
            let mut acc = BlockAccum::new(shape);
            for idx in lo..hi {
                let mut rng = substream(seed, idx as u64);
                let u = sample_haar(l, &mut rng);
                let value = if opts.antithetic {
                    let u_reflected = UnitaryMatrix { u: u.u.adjoint() };
                    match (f(&u), f(&u_reflected)) {
                        (Ok(a), Ok(b)) => Ok((a + b).map(|w| w * cr(0.5))),
                        (Err(e), _) | (_, Err(e)) => Err(e),
                    }
                } else {
                    f(&u)
                };
                match value {
                    Ok(v) => {
                        if v.shape() != shape {
                            return Err(Error::ShapeMismatch(format!(
                                "integrand changed shape at sample {idx}"
                            )));
                        }
                        acc.push(&v);
                    }
                    Err(e) if skippable(&e) => acc.skipped += 1,
                    Err(e) => return Err(e),
                }
            }
            Ok(acc)
        })
        .collect();

    let mut total = BlockAccum::new(shape);
    for b in blocks {
        total = total.merge(b?);
    }
    if total.skipped * 1000 > n_samples || total.count == 0 {
        return Err(Error::TooManySingular {
            skipped: total.skipped,
            samples: n_samples,
        });
    }
    let count = total.count;
    let nf = count as f64;
    let stderr = |m2: &RMat| {
        RMat::from_fn(shape.0, shape.1, |i, j| {
            if count < 2 {
                0.0
            } else {
                (m2[(i, j)].max(0.0) / ((nf - 1.0) * nf)).sqrt()
            }
        })
    };
    let stderr_re = stderr(&total.m2_re);
    let stderr_im = stderr(&total.m2_im);
    Ok(MCEstimate {
        mean: total.mean,
        stderr_re,
        stderr_im,
        samples: count,
        seed,
        skipped: total.skipped,
    })
}

fn probe_shape<F>(l: usize, seed: u64, f: &F) -> Result<(usize, usize)>
where
    F: Fn(&UnitaryMatrix) -> Result<CMat>,
{
    // probe a handful of substreams until the integrand evaluates
    for probe in 0..16u64 {
        let mut rng = substream(seed ^ 0x9e37_79b9_7f4a_7c15, probe);
        let u = sample_haar(l, &mut rng);
        match f(&u) {
            Ok(v) => return Ok(v.shape()),
            Err(e) if skippable(&e) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::TooManySingular {
        skipped: 16,
        samples: 16,
    })
}

/// Built-in analytic test family for the reproducing-kernel check.
#[derive(Debug, Clone)]
pub enum AnalyticTest {
    Constant(CMat),
    /// Matrix power U -> U^k.
    Power(u32),
}

impl AnalyticTest {
    pub fn eval(&self, m: &CMat) -> CMat {
        match self {
            AnalyticTest::Constant(k) => k.clone(),
            AnalyticTest::Power(p) => {
                let l = m.nrows();
                let mut acc = cident(l);
                for _ in 0..*p {
                    acc = &acc * m;
                }
                acc
            }
        }
    }
}

/// Both sides of the reproducing-kernel identity
/// f(Z) = integral dU det(1 - Z U^*)^{-L} f(U) for Z strictly inside the
/// matrix unit disc.
pub fn hua_cauchy_check(
    f: &AnalyticTest,
    z: &CMat,
    n_samples: usize,
    seed: u64,
) -> Result<(CMat, MCEstimate)> {
    let l = z.nrows();
    let margin = 1.0 - spectral_norm(z);
    if margin < 1e-6 {
        return Err(Error::InvalidInput(format!(
            "Z must lie strictly inside the disc (margin {margin:.3e})"
        )));
    }
    let lhs = f.eval(z);
    let rhs = mc_average(l, n_samples, seed, McOptions::default(), |u| {
        let det = (cident(l) - z * u.u.adjoint()).determinant();
        if det.norm() < 1e-300 {
            return Err(Error::MoebiusSingular { cond: f64::INFINITY });
        }
        let kernel = det.powi(-(l as i32));
        Ok(f.eval(&u.u).map(|w| w * kernel))
    })?;
    Ok((lhs, rhs))
}

/// Monte Carlo estimates of integral dU F(C^* . U) and integral dU F(-C^* . U);
/// the reflection identity makes them equal for integrable F.
pub fn reflection_check<F>(
    f: F,
    l: usize,
    n_samples: usize,
    seed: u64,
    opts: McOptions,
) -> Result<(MCEstimate, MCEstimate)>
where
    F: Fn(&CMat) -> CMat + Sync,
{
    let cay = cayley(l);
    let cay_adj = cay.adjoint();
    let plus = mc_average(l, n_samples, seed, opts, |u| {
        let xi = mobius(&cay_adj, &u.u)?;
        Ok(f(&xi))
    })?;
    let minus = mc_average(l, n_samples, seed, opts, |u| {
        let xi = mobius(&cay_adj, &u.u)?;
        Ok(f(&xi.map(|w| -w)))
    })?;
    Ok((plus, minus))
}

/// A positive matrix of the signature-(L, L) group together with its normal
/// form data (W, W', eta).
#[derive(Debug, Clone)]
pub struct LorentzPositive {
    pub m: CMat,
    pub eta: Vec<f64>,
    pub w: UnitaryMatrix,
    pub wp: UnitaryMatrix,
}

impl LorentzPositive {
    pub fn l(&self) -> usize {
        self.m.nrows() / 2
    }

    /// ||M^* G M - G|| with G = diag(1, -1).
    pub fn signature_residual(&self) -> f64 {
        let g = signature_form(self.l());
        spectral_norm(&(self.m.adjoint() * &g * &self.m - &g))
    }
}

/// Builds M = diag(W, W') [[cosh eta, sinh eta], [sinh eta, cosh eta]]
/// diag(W, W')^*, positive and signature-preserving by construction.
pub fn positive_lorentz_from_normal_form(
    w: &UnitaryMatrix,
    wp: &UnitaryMatrix,
    eta: &[f64],
) -> Result<LorentzPositive> {
    let l = w.l();
    if wp.l() != l || eta.len() != l {
        return Err(Error::ShapeMismatch(
            "normal form needs two L x L unitaries and L exponents".into(),
        ));
    }
    if eta.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidInput(
            "normal form exponents must be nonnegative".into(),
        ));
    }
    let ch = CMat::from_fn(l, l, |i, j| if i == j { cr(eta[i].cosh()) } else { cr(0.0) });
    let sh = CMat::from_fn(l, l, |i, j| if i == j { cr(eta[i].sinh()) } else { cr(0.0) });
    let t_eta = crate::linalg::from_blocks(&ch, &sh, &sh, &ch);
    let mut big = czeros(2 * l, 2 * l);
    big.view_mut((0, 0), (l, l)).copy_from(&w.u);
    big.view_mut((l, l), (l, l)).copy_from(&wp.u);
    let m = &big * t_eta * big.adjoint();
    let lp = LorentzPositive {
        m,
        eta: eta.to_vec(),
        w: w.clone(),
        wp: wp.clone(),
    };
    let res = lp.signature_residual();
    if res > 1e-12 * (1.0 + spectral_norm(&lp.m).powi(2)) {
        return Err(Error::InvalidInput(format!(
            "normal form violated the signature relation (residual {res:.3e})"
        )));
    }
    if min_eig_hermitian(&lp.m) <= 0.0 {
        return Err(Error::InvalidInput("normal form is not positive".into()));
    }
    Ok(lp)
}

#[derive(Debug, Clone, Copy)]
pub enum RadavMethod {
    MonteCarlo { n_samples: usize, seed: u64 },
    /// Trapezoid rule on the unit circle; L = 1 only. Spectrally accurate for
    /// these smooth periodic integrands.
    Quadrature { n_nodes: usize },
}

#[derive(Debug, Clone)]
pub struct RadavEstimate {
    pub value: CMat,
    pub mc: Option<MCEstimate>,
}

fn radav_integrand(t: &CMat, v: &CMat, u: &CMat) -> Result<CMat> {
    let s = stack(u, v);
    let g = s.adjoint() * t * s;
    let (inv, _) = checked_inverse(&g, Tolerances::default().moebius_cond_max)?;
    Ok(inv)
}

/// The radial average integral dU [ (U; V)^* T (U; V) ]^{-1}. Its value is
/// c_radav * 1 with c_radav = 1/2, independently of V and of the normal form
/// data; the L = 1 quadrature is the oracle that pins the constant.
pub fn radav_integral(
    t: &LorentzPositive,
    v: &UnitaryMatrix,
    method: RadavMethod,
) -> Result<RadavEstimate> {
    let l = t.l();
    if v.l() != l {
        return Err(Error::ShapeMismatch("V must match the block size".into()));
    }
    match method {
        RadavMethod::MonteCarlo { n_samples, seed } => {
            let est = mc_average(l, n_samples, seed, McOptions::default(), |u| {
                radav_integrand(&t.m, &v.u, &u.u)
            })?;
            Ok(RadavEstimate {
                value: est.mean.clone(),
                mc: Some(est),
            })
        }
        RadavMethod::Quadrature { n_nodes } => {
            if l != 1 {
                return Err(Error::InvalidInput(
                    "circle quadrature is defined for L = 1 only".into(),
                ));
            }
            if n_nodes == 0 {
                return Err(Error::InvalidInput("need at least one node".into()));
            }
            let mut acc = czeros(1, 1);
            for k in 0..n_nodes {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / n_nodes as f64;
                let u = CMat::from_row_slice(1, 1, &[Complex64::from_polar(1.0, theta)]);
                acc += radav_integrand(&t.m, &v.u, &u)?;
            }
            Ok(RadavEstimate {
                value: acc.map(|w| w / cr(n_nodes as f64)),
                mc: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, max_abs_entry};
    use crate::moebius::unitarity_residual;
    use crate::random::rng_from_seed;

    #[test]
    fn haar_samples_are_unitary() {
        let mut rng = rng_from_seed(1);
        for l in 1..=4 {
            for _ in 0..5 {
                let u = sample_haar(l, &mut rng);
                assert!(unitarity_residual(&u.u) <= 1e-12);
            }
        }
    }

    #[test]
    fn haar_mean_is_zero() {
        let est = mc_average(2, 20_000, 42, McOptions::default(), |u| Ok(u.u.clone())).unwrap();
        assert!(est.within(&czeros(2, 2), 4.0), "distance {}", est.sigma_distance(&czeros(2, 2)));
    }

    #[test]
    fn haar_second_moment_is_one_over_l() {
        let l = 2;
        let est = mc_average(l, 20_000, 43, McOptions::default(), |u| {
            let m = u.u[(0, 0)].norm_sqr();
            Ok(CMat::from_row_slice(1, 1, &[cr(m)]))
        })
        .unwrap();
        let expect = CMat::from_row_slice(1, 1, &[cr(1.0 / l as f64)]);
        assert!(est.within(&expect, 4.0));
    }

    #[test]
    fn haar_translation_invariance_moments() {
        let l = 2;
        let mut rng = rng_from_seed(7);
        let a = sample_haar(l, &mut rng);
        let first = mc_average(l, 20_000, 44, McOptions::default(), |u| Ok(&a.u * &u.u)).unwrap();
        assert!(first.within(&czeros(l, l), 4.0));
        let second = mc_average(l, 20_000, 45, McOptions::default(), |u| {
            let m = &a.u * &u.u;
            Ok(CMat::from_row_slice(1, 1, &[cr(m[(0, 0)].norm_sqr())]))
        })
        .unwrap();
        let expect = CMat::from_row_slice(1, 1, &[cr(1.0 / l as f64)]);
        assert!(second.within(&expect, 4.0));
    }

    #[test]
    fn constant_integrand_has_zero_stderr() {
        let mut rng = rng_from_seed(3);
        let k = crate::random::random_hermitian(2, &mut rng, 1.0);
        let kk = k.clone();
        let est = mc_average(2, 500, 9, McOptions::default(), move |_| Ok(kk.clone())).unwrap();
        assert!(max_abs_diff(&est.mean, &k) < 1e-14);
        assert!(est.max_stderr() == 0.0);
    }

    #[test]
    fn conjugation_averages_to_normalized_trace() {
        let l = 2;
        let mut rng = rng_from_seed(5);
        let x = crate::random::random_hermitian(l, &mut rng, 1.0);
        let trace = x[(0, 0)] + x[(1, 1)];
        let expect = cident(l).map(|w| w * trace / cr(l as f64));
        let xc = x.clone();
        let est = mc_average(l, 20_000, 46, McOptions::default(), move |u| {
            Ok(&u.u * &xc * u.u.adjoint())
        })
        .unwrap();
        assert!(est.within(&expect, 4.0));
    }

    #[test]
    fn determinism_across_runs_and_thread_counts() {
        let f = |u: &UnitaryMatrix| Ok(&u.u * &u.u);
        let a = mc_average(2, 3000, 77, McOptions::default(), f).unwrap();
        let b = mc_average(2, 3000, 77, McOptions::default(), f).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.stderr_re, b.stderr_re);

        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| mc_average(2, 3000, 77, McOptions::default(), f).unwrap());
        assert_eq!(a.mean, c.mean);
        assert_eq!(a.stderr_im, c.stderr_im);
    }

    #[test]
    fn hua_kernel_normalizes() {
        let mut rng = rng_from_seed(11);
        for l in 1..=2 {
            let mut z = crate::random::random_hermitian(l, &mut rng, 0.35);
            // shrink inside the disc if needed
            let norm = spectral_norm(&z);
            if norm > 0.7 {
                z = z.map(|w| w * cr(0.7 / norm));
            }
            let (lhs, rhs) =
                hua_cauchy_check(&AnalyticTest::Constant(cident(l)), &z, 20_000, 48).unwrap();
            assert!(rhs.within(&lhs, 4.0), "distance {}", rhs.sigma_distance(&lhs));
        }
    }

    #[test]
    fn hua_reproduces_linear_monomial() {
        let z = CMat::from_row_slice(1, 1, &[cr(0.3)]);
        let (lhs, rhs) = hua_cauchy_check(&AnalyticTest::Power(1), &z, 20_000, 49).unwrap();
        assert!((lhs[(0, 0)] - cr(0.3)).norm() < 1e-15);
        assert!(rhs.within(&lhs, 4.0));
    }

    #[test]
    fn hua_square_vanishes_at_origin() {
        let z = czeros(1, 1);
        let (lhs, rhs) = hua_cauchy_check(&AnalyticTest::Power(2), &z, 20_000, 50).unwrap();
        assert!(max_abs_entry(&lhs) < 1e-15);
        assert!(rhs.within(&lhs, 4.0));
    }

    #[test]
    fn hua_matrix_monomials() {
        let mut rng = rng_from_seed(13);
        let mut z = crate::random::random_hermitian(2, &mut rng, 0.25);
        let norm = spectral_norm(&z);
        if norm > 0.6 {
            z = z.map(|w| w * cr(0.6 / norm));
        }
        for p in [1u32, 2, 3] {
            let (lhs, rhs) = hua_cauchy_check(&AnalyticTest::Power(p), &z, 20_000, 51 + p as u64).unwrap();
            assert!(rhs.within(&lhs, 4.0), "power {p}: distance {}", rhs.sigma_distance(&lhs));
        }
    }

    #[test]
    fn reflection_checks() {
        // bounded even function: both sides near 1/2 for L = 1
        let f_even = |xi: &CMat| {
            let g = cident(1) + xi * xi.adjoint();
            crate::linalg::inverse(&g).unwrap()
        };
        let (plus, minus) = reflection_check(f_even, 1, 20_000, 52, McOptions::default()).unwrap();
        let half = CMat::from_row_slice(1, 1, &[cr(0.5)]);
        assert!(plus.within(&half, 4.0));
        assert!(minus.within(&half, 4.0));
        assert!(plus.within(&minus.mean, 6.0));

        // odd function under antithetic pairing: zero up to inversion roundoff
        let f_odd = |xi: &CMat| xi.clone();
        let (p2, m2) =
            reflection_check(f_odd, 1, 1000, 53, McOptions { antithetic: true }).unwrap();
        assert!(max_abs_entry(&p2.mean) < 1e-8);
        assert!(max_abs_entry(&m2.mean) < 1e-8);

        // odd bounded function without pairing: means agree within errors
        let f_odd_bounded = |xi: &CMat| {
            let g = cident(1) + xi * xi.adjoint();
            &crate::linalg::inverse(&g).unwrap() * xi
        };
        let (p3, m3) =
            reflection_check(f_odd_bounded, 1, 20_000, 54, McOptions::default()).unwrap();
        let sum = &p3.mean + &m3.mean;
        let combined = (p3.max_stderr().powi(2) + m3.max_stderr().powi(2)).sqrt();
        assert!(max_abs_entry(&sum) <= 4.0 * combined + 1e-12);
    }

    #[test]
    fn normal_form_examples() {
        let id = UnitaryMatrix::identity(1);
        let t0 = positive_lorentz_from_normal_form(&id, &id, &[0.0]).unwrap();
        assert!(max_abs_diff(&t0.m, &cident(2)) < 1e-15);

        let eta = 0.8;
        let t1 = positive_lorentz_from_normal_form(&id, &id, &[eta]).unwrap();
        let eigs = crate::linalg::hermitian_eigenvalues(&t1.m);
        assert!((eigs[0] - (-eta).exp()).abs() < 1e-12);
        assert!((eigs[1] - eta.exp()).abs() < 1e-12);
    }

    #[test]
    fn normal_form_signature_residual_random() {
        let mut rng = rng_from_seed(17);
        for l in 1..=3 {
            let w = sample_haar(l, &mut rng);
            let wp = sample_haar(l, &mut rng);
            let eta: Vec<f64> = (0..l).map(|_| rng.random::<f64>() * 2.0).collect();
            let t = positive_lorentz_from_normal_form(&w, &wp, &eta).unwrap();
            assert!(t.signature_residual() <= 1e-12 * (1.0 + spectral_norm(&t.m).powi(2)));
        }
    }

    #[test]
    fn radav_quadrature_value_is_half_for_all_eta() {
        let id = UnitaryMatrix::identity(1);
        for &eta in &[0.0, 0.5, 2.0] {
            let t = positive_lorentz_from_normal_form(&id, &id, &[eta]).unwrap();
            let out = radav_integral(&t, &id, RadavMethod::Quadrature { n_nodes: 2048 }).unwrap();
            assert!(
                (out.value[(0, 0)] - cr(0.5)).norm() < 1e-10,
                "eta = {eta}: got {}",
                out.value[(0, 0)]
            );
        }
    }

    #[test]
    fn radav_quadrature_invariant_under_phases_and_v() {
        let mut rng = rng_from_seed(19);
        for _ in 0..5 {
            let w = sample_haar(1, &mut rng);
            let wp = sample_haar(1, &mut rng);
            let v = sample_haar(1, &mut rng);
            let eta = [rng.random::<f64>() * 2.0];
            let t = positive_lorentz_from_normal_form(&w, &wp, &eta).unwrap();
            let out = radav_integral(&t, &v, RadavMethod::Quadrature { n_nodes: 2048 }).unwrap();
            assert!((out.value[(0, 0)] - cr(0.5)).norm() < 1e-10);
        }
    }

    #[test]
    fn radav_mc_matches_oracle_constant_at_l2() {
        let mut rng = rng_from_seed(23);
        let w = sample_haar(2, &mut rng);
        let wp = sample_haar(2, &mut rng);
        let v = sample_haar(2, &mut rng);
        let t = positive_lorentz_from_normal_form(&w, &wp, &[0.4, 1.1]).unwrap();
        let out = radav_integral(
            &t,
            &v,
            RadavMethod::MonteCarlo {
                n_samples: 20_000,
                seed: 55,
            },
        )
        .unwrap();
        let expect = cident(2).map(|z| z * cr(0.5));
        let mc = out.mc.unwrap();
        assert!(mc.within(&expect, 4.0), "distance {}", mc.sigma_distance(&expect));
    }
}
