//! Finite and semi-infinite block Jacobi operators, dense assembly, and the
//! dense-eigensolve oracles that every transfer-matrix formula is validated
//! against.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    c64, cident, cr, czeros, herm_residual, hermitian_part, in_closed_upper_half_plane,
    max_abs_entry, singular_values, CMat, Tolerances,
};

/// A block Jacobi matrix with `N` sites of block size `L`: hermitian diagonal
/// blocks `V_1 .. V_N` and invertible off-diagonal blocks `T_2 .. T_N`
/// (with `T_1 = T_{N+1} = 1` by convention).
#[derive(Debug, Clone)]
pub struct BlockJacobiModel {
    l: usize,
    n: usize,
    v: Vec<CMat>,
    t: Vec<CMat>, // t[k] = T_{k+2}, k = 0 .. N-2
}

impl BlockJacobiModel {
    /// Validates and builds a model with the default tolerances.
    pub fn new(l: usize, n: usize, v: Vec<CMat>, t: Vec<CMat>) -> Result<Self> {
        Self::with_tolerances(l, n, v, t, &Tolerances::default())
    }

    /// Validates and builds a model; `v` holds `V_1..V_N`, `t` holds `T_2..T_N`.
    pub fn with_tolerances(
        l: usize,
        n: usize,
        v: Vec<CMat>,
        t: Vec<CMat>,
        tol: &Tolerances,
    ) -> Result<Self> {
        if l == 0 || n == 0 {
            return Err(Error::ShapeMismatch(format!(
                "L and N must be positive, got L={l}, N={n}"
            )));
        }
        if v.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "expected {n} diagonal blocks, got {}",
                v.len()
            )));
        }
        if t.len() + 1 != n {
            return Err(Error::ShapeMismatch(format!(
                "expected {} off-diagonal blocks, got {}",
                n - 1,
                t.len()
            )));
        }
        for (k, m) in v.iter().chain(t.iter()).enumerate() {
            if m.nrows() != l || m.ncols() != l {
                return Err(Error::ShapeMismatch(format!(
                    "block #{k} is {}x{}, expected {l}x{l}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        for (k, vb) in v.iter().enumerate() {
            let scale = 1.0 + max_abs_entry(vb);
            let res = herm_residual(vb);
            if res > tol.herm_rel * scale {
                return Err(Error::NonHermitianDiagonal {
                    n: k + 1,
                    residual: res,
                });
            }
        }
        for (k, tb) in t.iter().enumerate() {
            let sv = singular_values(tb);
            let smax = sv.first().copied().unwrap_or(0.0);
            let smin = sv.last().copied().unwrap_or(0.0);
            if smin < tol.sigma_min_rel * smax.max(1.0) {
                return Err(Error::SingularOffDiagonal {
                    n: k + 2,
                    sigma: smin,
                });
            }
        }
        Ok(BlockJacobiModel { l, n, v, t })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Diagonal block `V_n`, 1-based.
    pub fn v_block(&self, n: usize) -> &CMat {
        assert!((1..=self.n).contains(&n), "V index {n} out of range");
        &self.v[n - 1]
    }

    /// Off-diagonal block `T_n`, 1-based; `T_1 = T_{N+1} = 1`.
    pub fn t_block(&self, n: usize) -> CMat {
        assert!(
            n >= 1 && n <= self.n + 1,
            "T index {n} out of range 1..={}",
            self.n + 1
        );
        if n == 1 || n == self.n + 1 {
            cident(self.l)
        } else {
            self.t[n - 2].clone()
        }
    }
}

/// Left and right boundary conditions; hermitian matrices or any points of the
/// closed matrix upper half-plane. Dirichlet means zero.
#[derive(Debug, Clone)]
pub struct BoundaryPair {
    pub zhat: CMat,
    pub z: CMat,
}

impl BoundaryPair {
    pub fn new(zhat: CMat, z: CMat) -> Result<Self> {
        Self::with_tolerances(zhat, z, &Tolerances::default())
    }

    pub fn with_tolerances(zhat: CMat, z: CMat, tol: &Tolerances) -> Result<Self> {
        if zhat.nrows() != zhat.ncols() || z.nrows() != z.ncols() || zhat.nrows() != z.nrows() {
            return Err(Error::ShapeMismatch(
                "boundary conditions must be square matrices of equal size".into(),
            ));
        }
        let scale = 1.0 + max_abs_entry(&zhat).max(max_abs_entry(&z));
        let t = tol.herm_rel * scale;
        if !in_closed_upper_half_plane(&zhat, t) {
            return Err(Error::InvalidInput(
                "Zhat is not in the closed upper half-plane".into(),
            ));
        }
        if !in_closed_upper_half_plane(&z, t) {
            return Err(Error::InvalidInput(
                "Z is not in the closed upper half-plane".into(),
            ));
        }
        Ok(BoundaryPair { zhat, z })
    }

    pub fn dirichlet(l: usize) -> Self {
        BoundaryPair {
            zhat: czeros(l, l),
            z: czeros(l, l),
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = 1.0 + max_abs_entry(&self.zhat).max(max_abs_entry(&self.z));
        herm_residual(&self.zhat) <= tol * scale && herm_residual(&self.z) <= tol * scale
    }
}

/// A semi-infinite block Jacobi operator given by a site generator
/// `n >= 1 -> (T_n, V_n)` (with `T_1 = 1`) plus the caller's declaration
/// that the operator is in the limit point case.
#[derive(Clone)]
pub struct SemiInfiniteModel {
    l: usize,
    limit_point: bool,
    gen: std::sync::Arc<dyn Fn(usize) -> (CMat, CMat) + Send + Sync>,
}

impl std::fmt::Debug for SemiInfiniteModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SemiInfiniteModel")
            .field("l", &self.l)
            .field("limit_point", &self.limit_point)
            .finish()
    }
}

impl SemiInfiniteModel {
    pub fn new(
        l: usize,
        limit_point: bool,
        gen: impl Fn(usize) -> (CMat, CMat) + Send + Sync + 'static,
    ) -> Self {
        SemiInfiniteModel {
            l,
            limit_point,
            gen: std::sync::Arc::new(gen),
        }
    }

    /// Periodic repetition of the given blocks: `V_n = v[(n-1) mod p]` and
    /// `T_n = t[(n-2) mod p]` for `n >= 2`.
    pub fn periodic(l: usize, v: Vec<CMat>, t: Vec<CMat>, limit_point: bool) -> Result<Self> {
        if v.is_empty() || t.is_empty() || v.len() != t.len() {
            return Err(Error::ShapeMismatch(
                "periodic generator needs equally many V and T blocks (at least one each)".into(),
            ));
        }
        for m in v.iter().chain(t.iter()) {
            if m.nrows() != l || m.ncols() != l {
                return Err(Error::ShapeMismatch(format!(
                    "periodic block is {}x{}, expected {l}x{l}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let p = v.len();
        Ok(Self::new(l, limit_point, move |n| {
            let t_n = if n == 1 {
                cident(l)
            } else {
                t[(n - 2) % p].clone()
            };
            (t_n, v[(n - 1) % p].clone())
        }))
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn limit_point(&self) -> bool {
        self.limit_point
    }

    /// Site data `(T_n, V_n)` for `n >= 1`; `T_1` is forced to the identity.
    pub fn site(&self, n: usize) -> (CMat, CMat) {
        assert!(n >= 1, "site index must be >= 1");
        let (t, v) = (self.gen)(n);
        if n == 1 {
            (cident(self.l), v)
        } else {
            (t, v)
        }
    }

    /// Finite truncation to the first `n` sites (validated).
    pub fn truncate(&self, n: usize) -> Result<BlockJacobiModel> {
        let mut v = Vec::with_capacity(n);
        let mut t = Vec::with_capacity(n.saturating_sub(1));
        for k in 1..=n {
            let (tk, vk) = self.site(k);
            if k >= 2 {
                t.push(tk);
            }
            v.push(vk);
        }
        BlockJacobiModel::new(self.l, n, v, t)
    }

    /// Non-binding diagnostic: warns when the smallest singular values of the
    /// off-diagonal blocks drift below 1e-3, which often signals a model
    /// outside the limit point case.
    pub fn limit_point_diagnostic(&self, up_to: usize) -> Option<String> {
        for n in 2..=up_to {
            let (t, _) = self.site(n);
            let smin = singular_values(&t).last().copied().unwrap_or(0.0);
            if smin < 1e-3 {
                return Some(format!(
                    "off-diagonal block T_{n} has smallest singular value {smin:.3e}; \
                     the limit point declaration may be unwarranted"
                ));
            }
        }
        None
    }
}

/// A one-parameter family `H(mu)` obtained from a finite base model by adding
/// `mu * W_n` to the diagonal blocks of the first perturbed sites.
#[derive(Debug, Clone)]
pub struct CouplingFamily {
    pub base: BlockJacobiModel,
    w: Vec<CMat>,
    pub interval: (f64, f64),
}

impl CouplingFamily {
    pub fn new(base: BlockJacobiModel, w: Vec<CMat>, interval: (f64, f64)) -> Result<Self> {
        if w.is_empty() || w.len() > base.n() {
            return Err(Error::ShapeMismatch(format!(
                "need between 1 and N={} perturbation weights, got {}",
                base.n(),
                w.len()
            )));
        }
        let tol = Tolerances::default();
        for (k, wb) in w.iter().enumerate() {
            if wb.nrows() != base.l() || wb.ncols() != base.l() {
                return Err(Error::ShapeMismatch(format!(
                    "W_{} is {}x{}, expected {}x{}",
                    k + 1,
                    wb.nrows(),
                    wb.ncols(),
                    base.l(),
                    base.l()
                )));
            }
            let scale = 1.0 + max_abs_entry(wb);
            if herm_residual(wb) > tol.herm_rel * scale {
                return Err(Error::NonHermitianDiagonal {
                    n: k + 1,
                    residual: herm_residual(wb),
                });
            }
            let min_eig = crate::linalg::min_eig_hermitian(wb);
            if min_eig < -tol.herm_rel * scale {
                return Err(Error::InvalidInput(format!(
                    "W_{} is not positive semi-definite (min eigenvalue {min_eig:.3e})",
                    k + 1
                )));
            }
        }
        if !(interval.0 < interval.1) {
            return Err(Error::InvalidInput(format!(
                "coupling interval must satisfy mu0 < mu1, got [{}, {}]",
                interval.0, interval.1
            )));
        }
        Ok(CouplingFamily { base, w, interval })
    }

    pub fn n_perturbed(&self) -> usize {
        self.w.len()
    }

    /// Perturbation weight `W_n` (1-based); zero beyond the perturbed range.
    pub fn w_block(&self, n: usize) -> CMat {
        if n >= 1 && n <= self.w.len() {
            self.w[n - 1].clone()
        } else {
            czeros(self.base.l(), self.base.l())
        }
    }
}

/// The base model with `V_n` replaced by `V_n + mu W_n` on perturbed sites.
pub fn coupled_model(family: &CouplingFamily, mu: f64) -> BlockJacobiModel {
    let base = &family.base;
    let mut v: Vec<CMat> = (1..=base.n()).map(|k| base.v_block(k).clone()).collect();
    for (k, item) in v.iter_mut().enumerate().take(family.n_perturbed()) {
        *item += family.w[k].map(|z| z * cr(mu));
    }
    let t: Vec<CMat> = (2..=base.n()).map(|k| base.t_block(k)).collect();
    BlockJacobiModel {
        l: base.l(),
        n: base.n(),
        v,
        t,
    }
}

/// Dense `NL x NL` operator with corner blocks `V_1 - Zhat` and `V_N - Z`.
pub fn assemble_dense(model: &BlockJacobiModel, bc: &BoundaryPair) -> CMat {
    let (l, n) = (model.l(), model.n());
    assert_eq!(bc.zhat.nrows(), l, "boundary block size mismatch");
    let mut h = czeros(n * l, n * l);
    for k in 1..=n {
        let mut diag = model.v_block(k).clone();
        if k == 1 {
            diag -= &bc.zhat;
        }
        if k == n {
            diag -= &bc.z;
        }
        h.view_mut(((k - 1) * l, (k - 1) * l), (l, l)).copy_from(&diag);
        if k < n {
            let t = model.t_block(k + 1);
            h.view_mut(((k - 1) * l, k * l), (l, l)).copy_from(&t);
            h.view_mut((k * l, (k - 1) * l), (l, l))
                .copy_from(&t.adjoint());
        }
    }
    h
}

/// One atom of a matrix-valued corner spectral measure.
#[derive(Debug, Clone)]
pub struct SpectralAtom {
    pub energy: f64,
    /// The L x L corner `pi_1^* P pi_1` of the spectral projection.
    pub weight: CMat,
}

/// Atomic matrix-valued measure produced by the dense eigensolve oracle.
#[derive(Debug, Clone)]
pub struct AtomicMatrixMeasure {
    pub atoms: Vec<SpectralAtom>,
}

impl AtomicMatrixMeasure {
    pub fn l(&self) -> usize {
        self.atoms.first().map(|a| a.weight.nrows()).unwrap_or(0)
    }

    /// Sum of all weights; the identity by completeness of the projections.
    pub fn total_mass(&self) -> CMat {
        let l = self.l();
        self.atoms
            .iter()
            .fold(czeros(l, l), |acc, a| acc + &a.weight)
    }

    /// Stieltjes transform: sum of weight / (E - z).
    pub fn stieltjes(&self, z: Complex64) -> CMat {
        let l = self.l();
        self.atoms.iter().fold(czeros(l, l), |acc, a| {
            acc + a.weight.map(|w| w / (cr(a.energy) - z))
        })
    }

    /// Interval mass in the half-sum convention: atoms strictly inside count
    /// fully, atoms within `edge_tol` of an endpoint count half.
    pub fn mass_between(&self, e0: f64, e1: f64, edge_tol: f64) -> CMat {
        let l = self.l();
        let mut mass = czeros(l, l);
        for a in &self.atoms {
            let at_edge = (a.energy - e0).abs() <= edge_tol || (a.energy - e1).abs() <= edge_tol;
            if at_edge {
                mass += a.weight.map(|w| w * cr(0.5));
            } else if a.energy > e0 && a.energy < e1 {
                mass += &a.weight;
            }
        }
        mass
    }
}

/// All `NL` eigenvalues of the dense self-adjoint realization, ascending.
pub fn eigenvalues_oracle(model: &BlockJacobiModel, bc: &BoundaryPair) -> Result<Vec<f64>> {
    if !bc.is_hermitian(1e-10) {
        return Err(Error::InvalidInput(
            "eigenvalue oracle needs hermitian boundary conditions".into(),
        ));
    }
    let h = hermitian_part(&assemble_dense(model, bc));
    let se = h.symmetric_eigen();
    let mut ev: Vec<f64> = se.eigenvalues.iter().copied().collect();
    if ev.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigensolveFailure("non-finite eigenvalue".into()));
    }
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ev)
}

/// All eigenvalues (ascending, with multiplicity) together with the trace of
/// the site-1 corner weight of each eigenvector. Unlike the grouped measure
/// oracle this always returns exactly NL entries, which keeps eigenvalue
/// branches alignable across a parameter sweep.
pub fn corner_weighted_eigenvalues(
    model: &BlockJacobiModel,
    bc: &BoundaryPair,
) -> Result<Vec<(f64, f64)>> {
    if !bc.is_hermitian(1e-10) {
        return Err(Error::InvalidInput(
            "eigenvalue oracle needs hermitian boundary conditions".into(),
        ));
    }
    let l = model.l();
    let h = hermitian_part(&assemble_dense(model, bc));
    let se = h.symmetric_eigen();
    if se.eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigensolveFailure("non-finite eigenvalue".into()));
    }
    let mut out: Vec<(f64, f64)> = (0..se.eigenvalues.len())
        .map(|k| {
            let head = se.eigenvectors.column(k).rows(0, l).into_owned();
            (se.eigenvalues[k], head.norm_squared())
        })
        .collect();
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(out)
}

/// Dense eigensolve oracle for the corner spectral measure. Degenerate
/// eigenvalues are grouped and their weight is the corner of the full
/// projection onto the eigenspace.
pub fn spectral_measure_oracle(
    model: &BlockJacobiModel,
    bc: &BoundaryPair,
) -> Result<AtomicMatrixMeasure> {
    if !bc.is_hermitian(1e-10) {
        return Err(Error::InvalidInput(
            "spectral measure oracle needs hermitian boundary conditions".into(),
        ));
    }
    let l = model.l();
    let h = hermitian_part(&assemble_dense(model, bc));
    let se = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..se.eigenvalues.len()).collect();
    if se.eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigensolveFailure("non-finite eigenvalue".into()));
    }
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());

    let scale = 1.0 + se.eigenvalues.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let group_tol = 1e-9 * scale;

    let mut atoms: Vec<SpectralAtom> = Vec::new();
    let mut idx = 0;
    while idx < order.len() {
        let mut members = vec![order[idx]];
        let mut e_sum = se.eigenvalues[order[idx]];
        while idx + 1 < order.len()
            && (se.eigenvalues[order[idx + 1]] - se.eigenvalues[order[idx]]).abs() <= group_tol
        {
            idx += 1;
            members.push(order[idx]);
            e_sum += se.eigenvalues[order[idx]];
        }
        idx += 1;
        let mut weight = czeros(l, l);
        for &m in &members {
            let col = se.eigenvectors.column(m);
            let head = col.rows(0, l).into_owned();
            weight += &head * head.adjoint();
        }
        atoms.push(SpectralAtom {
            energy: e_sum / members.len() as f64,
            weight: hermitian_part(&weight),
        });
    }
    Ok(AtomicMatrixMeasure { atoms })
}

/// Corner block of the resolvent by a direct dense linear solve.
pub fn resolvent_corner_oracle(
    model: &BlockJacobiModel,
    bc: &BoundaryPair,
    z: Complex64,
) -> Result<CMat> {
    if z.im <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "resolvent oracle needs Im z > 0, got z = {z}"
        )));
    }
    let (l, n) = (model.l(), model.n());
    let mut a = assemble_dense(model, bc);
    for k in 0..n * l {
        a[(k, k)] -= z;
    }
    let mut rhs = czeros(n * l, l);
    rhs.view_mut((0, 0), (l, l)).copy_from(&cident(l));
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SolveFailure("resolvent system singular".into()))?;
    Ok(sol.view((0, 0), (l, l)).into_owned())
}

pub mod io {
    //! JSON schemas for model and family files.
    //!
    //! A matrix is a row-major list of `[re, im]` pairs; `null` boundary
    //! conditions mean Dirichlet (zero).

    use serde::{Deserialize, Serialize};

    use super::*;

    pub type MatrixData = Vec<[f64; 2]>;

    pub fn matrix_to_data(m: &CMat) -> MatrixData {
        let mut out = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        out
    }

    pub fn matrix_from_data(data: &MatrixData, l: usize, what: &str) -> Result<CMat> {
        if data.len() != l * l {
            return Err(Error::ShapeMismatch(format!(
                "{what}: expected {} entries for a {l}x{l} matrix, got {}",
                l * l,
                data.len()
            )));
        }
        Ok(CMat::from_fn(l, l, |i, j| {
            let [re, im] = data[i * l + j];
            c64(re, im)
        }))
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    pub struct ModelFile {
        #[serde(rename = "L")]
        pub l: usize,
        #[serde(rename = "N")]
        pub n: usize,
        #[serde(rename = "V")]
        pub v: Vec<MatrixData>,
        #[serde(rename = "T")]
        pub t: Vec<MatrixData>,
        #[serde(rename = "Zhat", default)]
        pub zhat: Option<MatrixData>,
        #[serde(rename = "Z", default)]
        pub z: Option<MatrixData>,
    }

    impl ModelFile {
        pub fn to_model(&self) -> Result<(BlockJacobiModel, BoundaryPair)> {
            let v = self
                .v
                .iter()
                .enumerate()
                .map(|(k, d)| matrix_from_data(d, self.l, &format!("V_{}", k + 1)))
                .collect::<Result<Vec<_>>>()?;
            let t = self
                .t
                .iter()
                .enumerate()
                .map(|(k, d)| matrix_from_data(d, self.l, &format!("T_{}", k + 2)))
                .collect::<Result<Vec<_>>>()?;
            let model = BlockJacobiModel::new(self.l, self.n, v, t)?;
            let zhat = match &self.zhat {
                Some(d) => matrix_from_data(d, self.l, "Zhat")?,
                None => czeros(self.l, self.l),
            };
            let z = match &self.z {
                Some(d) => matrix_from_data(d, self.l, "Z")?,
                None => czeros(self.l, self.l),
            };
            let bc = BoundaryPair::new(zhat, z)?;
            Ok((model, bc))
        }

        pub fn from_model(model: &BlockJacobiModel, bc: Option<&BoundaryPair>) -> Self {
            ModelFile {
                l: model.l(),
                n: model.n(),
                v: (1..=model.n())
                    .map(|k| matrix_to_data(model.v_block(k)))
                    .collect(),
                t: (2..=model.n()).map(|k| matrix_to_data(&model.t_block(k))).collect(),
                zhat: bc.map(|b| matrix_to_data(&b.zhat)),
                z: bc.map(|b| matrix_to_data(&b.z)),
            }
        }
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    pub struct FamilyFile {
        #[serde(rename = "L")]
        pub l: usize,
        #[serde(rename = "N")]
        pub n: usize,
        #[serde(rename = "V")]
        pub v: Vec<MatrixData>,
        #[serde(rename = "T")]
        pub t: Vec<MatrixData>,
        #[serde(rename = "W")]
        pub w: Vec<MatrixData>,
        pub interval: [f64; 2],
    }

    impl FamilyFile {
        pub fn to_family(&self) -> Result<CouplingFamily> {
            let model = ModelFile {
                l: self.l,
                n: self.n,
                v: self.v.clone(),
                t: self.t.clone(),
                zhat: None,
                z: None,
            };
            let (base, _) = model.to_model()?;
            let w = self
                .w
                .iter()
                .enumerate()
                .map(|(k, d)| matrix_from_data(d, self.l, &format!("W_{}", k + 1)))
                .collect::<Result<Vec<_>>>()?;
            CouplingFamily::new(base, w, (self.interval[0], self.interval[1]))
        }
    }

    /// Periodic description of a semi-infinite operator.
    #[derive(Debug, Clone, Serialize, Deserialize)]
    pub struct SemiInfiniteFile {
        #[serde(rename = "L")]
        pub l: usize,
        pub period: usize,
        #[serde(rename = "V")]
        pub v: Vec<MatrixData>,
        #[serde(rename = "T")]
        pub t: Vec<MatrixData>,
        pub limit_point: bool,
    }

    impl SemiInfiniteFile {
        pub fn to_model(&self) -> Result<SemiInfiniteModel> {
            if self.v.len() != self.period || self.t.len() != self.period {
                return Err(Error::ShapeMismatch(format!(
                    "periodic file declares period {} but has {} V and {} T blocks",
                    self.period,
                    self.v.len(),
                    self.t.len()
                )));
            }
            let v = self
                .v
                .iter()
                .map(|d| matrix_from_data(d, self.l, "V"))
                .collect::<Result<Vec<_>>>()?;
            let t = self
                .t
                .iter()
                .map(|d| matrix_from_data(d, self.l, "T"))
                .collect::<Result<Vec<_>>>()?;
            SemiInfiniteModel::periodic(self.l, v, t, self.limit_point)
        }
    }
}
