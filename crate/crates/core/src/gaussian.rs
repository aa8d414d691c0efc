//! Signed Gaussian-mixture representation of zero-mean Wigner functions.
//!
//! A state is a list of normalized Gaussian terms with signed weights.
//! Each term's Wigner function is π^{−n} det(γ)^{−1/2} exp(−rᵀγ⁻¹r) in the
//! interleaved quadrature ordering (q1, p1, ..., qn, pn); the vacuum
//! covariance is the identity. Symplectic and completely-positive maps,
//! loss channels, on-off POVM overlaps, and Gaussian marginals all keep
//! every term a normalized Gaussian, so the only bookkeeping is the signed
//! weight vector; the total integral of the mixture is the weight sum.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{
    self, asymmetry, min_eig_above, symmetrize, symplectic_residual, MIN_EIG, SYM_TOL,
};

/// One signed, zero-mean Gaussian Wigner term.
#[derive(Debug, Clone)]
pub struct GaussianTerm {
    weight: f64,
    covariance: DMatrix<f64>,
}

impl GaussianTerm {
    pub fn new(weight: f64, covariance: DMatrix<f64>) -> Result<Self> {
        if !weight.is_finite() || weight == 0.0 {
            return Err(Error::Range(format!("term weight must be finite and nonzero, got {weight}")));
        }
        if covariance.nrows() != covariance.ncols() {
            return Err(Error::DimensionMismatch("covariance must be square".into()));
        }
        if covariance.iter().any(|x| !x.is_finite()) {
            return Err(Error::SingularCovariance("non-finite covariance entry".into()));
        }
        if asymmetry(&covariance) > SYM_TOL {
            return Err(Error::SingularCovariance(format!(
                "covariance asymmetry {} exceeds {}",
                asymmetry(&covariance),
                SYM_TOL
            )));
        }
        let mut covariance = covariance;
        symmetrize(&mut covariance);
        if !min_eig_above(&covariance, MIN_EIG) {
            return Err(Error::SingularCovariance(format!(
                "minimum covariance eigenvalue at or below {MIN_EIG}"
            )));
        }
        Ok(Self { weight, covariance })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    /// Wigner value of this term alone (including its weight).
    fn evaluate(&self, point: &DVector<f64>) -> f64 {
        let d = self.dim();
        let chol = nalgebra::Cholesky::new(self.covariance.clone())
            .expect("term covariance is PD by construction");
        let half = chol.l_dirty().solve_lower_triangular(point).unwrap();
        let quad = half.dot(&half);
        let det = chol.determinant();
        self.weight * std::f64::consts::PI.powi(-(d as i32) / 2)
            * (if d % 2 == 1 { 1.0 / std::f64::consts::PI.sqrt() } else { 1.0 })
            * det.sqrt().recip()
            * (-quad).exp()
    }
}

/// Loss-channel convention for γ → L γ Lᵀ + G.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossConvention {
    /// γ → η γ + (1−η) I; η is the intensity efficiency. Default.
    Intensity,
    /// γ → η² γ + (1−η) I; the literal L(η) = η I reading.
    Literal,
}

/// Kind tag for a linear map acting on quadrature vectors.
#[derive(Debug, Clone)]
pub enum MapKind {
    /// S Ω Sᵀ = Ω.
    Symplectic,
    /// Rows orthonormal; acts identically on q and p sectors.
    OrthogonalEmbedding,
    /// γ → L γ Lᵀ + G with G ⪰ 0.
    CompletelyPositive { gain: DMatrix<f64> },
}

/// A mode-space linear map on quadrature vectors, validated on construction.
#[derive(Debug, Clone)]
pub struct ModeLinearMap {
    matrix: DMatrix<f64>,
    kind: MapKind,
}

impl ModeLinearMap {
    pub fn symplectic(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() % 2 != 0 {
            return Err(Error::DimensionMismatch("symplectic map must be square and even-dimensional".into()));
        }
        let resid = symplectic_residual(&matrix);
        if resid > SYM_TOL {
            return Err(Error::Range(format!(
                "matrix is not symplectic: residual {resid:e}"
            )));
        }
        Ok(Self { matrix, kind: MapKind::Symplectic })
    }

    /// Rectangular (2k×2n) or square map with orthonormal rows.
    pub fn orthogonal_embedding(matrix: DMatrix<f64>) -> Result<Self> {
        let prod = &matrix * matrix.transpose();
        let id = DMatrix::<f64>::identity(prod.nrows(), prod.ncols());
        let resid = (prod - id).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if resid > 1e-10 {
            return Err(Error::Range(format!(
                "rows are not orthonormal: residual {resid:e}"
            )));
        }
        Ok(Self { matrix, kind: MapKind::OrthogonalEmbedding })
    }

    pub fn completely_positive(l: DMatrix<f64>, g: DMatrix<f64>) -> Result<Self> {
        if g.nrows() != l.nrows() || g.ncols() != l.nrows() {
            return Err(Error::DimensionMismatch("gain matrix must be square matching L's output".into()));
        }
        if asymmetry(&g) > SYM_TOL {
            return Err(Error::Range("gain matrix must be symmetric".into()));
        }
        // G ⪰ 0 within tolerance
        if !min_eig_above(&(g.clone() + DMatrix::identity(g.nrows(), g.ncols()) * 1e-12), 0.0) {
            return Err(Error::Range("gain matrix must be positive semidefinite".into()));
        }
        Ok(Self { matrix: l, kind: MapKind::CompletelyPositive { gain: g } })
    }

    /// Two-mode beam splitter of transmissivity T, acting on
    /// (q1, p1, q2, p2): q1' = √T q1 + √(1−T) q2, q2' = −√(1−T) q1 + √T q2,
    /// same on p. Orthogonal and symplectic.
    pub fn beam_splitter(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Range(format!("transmissivity must lie in [0,1], got {t}")));
        }
        let c = t.sqrt();
        let s = (1.0 - t).sqrt();
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                c, 0.0, s, 0.0, //
                0.0, c, 0.0, s, //
                -s, 0.0, c, 0.0, //
                0.0, -s, 0.0, c,
            ],
        );
        Self::symplectic(m)
    }

    /// Single-mode phase-space rotation: q' = q cos φ + p sin φ.
    pub fn rotation(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        let m = DMatrix::from_row_slice(2, 2, &[c, s, -s, c]);
        Self { matrix: m, kind: MapKind::Symplectic }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    /// Number of modes the map consumes.
    pub fn input_modes(&self) -> usize {
        self.matrix.ncols() / 2
    }
}

/// 2×2 covariance of a single-mode squeezed vacuum: diag(e^{2s}, e^{−2s}).
/// Negative s squeezes the orthogonal quadrature.
pub fn squeezed_covariance(s: f64) -> Result<DMatrix<f64>> {
    if !s.is_finite() {
        return Err(Error::Range("squeezing parameter must be finite".into()));
    }
    if s.abs() > 20.0 {
        return Err(Error::Overflow(format!("|s| = {} exceeds the exp guard at 20", s.abs())));
    }
    Ok(DMatrix::from_diagonal(&DVector::from_vec(vec![(2.0 * s).exp(), (-2.0 * s).exp()])))
}

/// On-off POVM Wigner function (1 − 2 e^{−q²−p²}) / 2π.
pub fn onoff_povm_wigner(q: f64, p: f64) -> f64 {
    (1.0 - 2.0 * (-(q * q) - p * p).exp()) / (2.0 * std::f64::consts::PI)
}

/// A marginal density over an arbitrary subset of quadrature variables.
///
/// Same signed normalized-Gaussian representation as [`GaussianMixture`]
/// but without mode structure; produced by variable-level marginalization.
#[derive(Debug, Clone)]
pub struct VarMixture {
    dim: usize,
    terms: Vec<GaussianTerm>,
}

impl VarMixture {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[GaussianTerm] {
        &self.terms
    }

    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    pub fn evaluate(&self, point: &DVector<f64>) -> f64 {
        assert_eq!(point.len(), self.dim, "point dimension mismatch");
        self.terms.iter().map(|t| t.evaluate(point)).sum()
    }

    /// Gaussian marginal: keep the listed variables (sub-block of each
    /// covariance); weights are unchanged because the Schur-complement
    /// determinant factor of the inverse form cancels against the
    /// re-normalization of each Gaussian.
    pub fn marginalize(&self, keep: &[usize]) -> Result<VarMixture> {
        check_keep(keep, self.dim)?;
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let cov = t.covariance.select_rows(keep).select_columns(keep);
                GaussianTerm::new(t.weight, cov)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(VarMixture { dim: keep.len(), terms })
    }
}

fn check_keep(keep: &[usize], dim: usize) -> Result<()> {
    if keep.is_empty() {
        return Err(Error::Range("keep list must be nonempty".into()));
    }
    let mut seen = vec![false; dim];
    for &k in keep {
        if k >= dim {
            return Err(Error::Range(format!("variable index {k} out of range (dim {dim})")));
        }
        if seen[k] {
            return Err(Error::Range(format!("variable index {k} repeated")));
        }
        seen[k] = true;
    }
    Ok(())
}

/// A zero-mean multimode state as a signed mixture of normalized Gaussians.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    modes: usize,
    terms: Vec<GaussianTerm>,
    normalized: bool,
}

impl GaussianMixture {
    /// n-mode vacuum: one term, weight 1, identity covariance.
    pub fn vacuum(modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::Range("mode count must be at least 1".into()));
        }
        let term = GaussianTerm::new(1.0, DMatrix::identity(2 * modes, 2 * modes))?;
        Ok(Self { modes, terms: vec![term], normalized: true })
    }

    /// Product of single-mode squeezed vacua with the given parameters.
    pub fn squeezed_modes(s: &[f64]) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Range("need at least one mode".into()));
        }
        let n = s.len();
        let mut cov = DMatrix::identity(2 * n, 2 * n);
        for (i, &si) in s.iter().enumerate() {
            let block = squeezed_covariance(si)?;
            cov[(2 * i, 2 * i)] = block[(0, 0)];
            cov[(2 * i + 1, 2 * i + 1)] = block[(1, 1)];
        }
        let term = GaussianTerm::new(1.0, cov)?;
        Ok(Self { modes: n, terms: vec![term], normalized: true })
    }

    pub fn from_terms(modes: usize, terms: Vec<GaussianTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Range("mixture needs at least one term".into()));
        }
        for t in &terms {
            if t.dim() != 2 * modes {
                return Err(Error::DimensionMismatch(format!(
                    "term dimension {} does not match {} modes",
                    t.dim(),
                    modes
                )));
            }
        }
        let total: f64 = terms.iter().map(|t| t.weight).sum();
        let normalized = (total - 1.0).abs() < 1e-10;
        Ok(Self { modes, terms, normalized })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn terms(&self) -> &[GaussianTerm] {
        &self.terms
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    /// Tensor with another state (its modes appended after ours).
    pub fn tensor(&self, other: &GaussianMixture) -> Result<GaussianMixture> {
        let n = self.modes + other.modes;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut cov = DMatrix::identity(2 * n, 2 * n);
                cov.view_mut((0, 0), (2 * self.modes, 2 * self.modes))
                    .copy_from(&a.covariance);
                cov.view_mut(
                    (2 * self.modes, 2 * self.modes),
                    (2 * other.modes, 2 * other.modes),
                )
                .copy_from(&b.covariance);
                terms.push(GaussianTerm::new(a.weight * b.weight, cov)?);
            }
        }
        GaussianMixture::from_terms(n, terms)
    }

    /// Apply a linear map to the listed modes; all other modes see the
    /// identity. Symplectic and orthogonal maps send γ → SγSᵀ; CP maps add
    /// the gain matrix on the selected block.
    pub fn apply_map(&self, map: &ModeLinearMap, modes: &[usize]) -> Result<GaussianMixture> {
        let k = modes.len();
        if map.input_modes() != k {
            return Err(Error::DimensionMismatch(format!(
                "map consumes {} modes but {} were selected",
                map.input_modes(),
                k
            )));
        }
        let mut seen = vec![false; self.modes];
        for &m in modes {
            if m >= self.modes {
                return Err(Error::Range(format!("mode index {m} out of range")));
            }
            if seen[m] {
                return Err(Error::Range(format!("mode index {m} repeated")));
            }
            seen[m] = true;
        }
        if map.matrix.nrows() != map.matrix.ncols() {
            return Err(Error::DimensionMismatch(
                "only square maps can be embedded on a mode subset".into(),
            ));
        }
        let vars: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let cov = apply_to_block(&t.covariance, &map.matrix, &vars);
                let cov = match &map.kind {
                    MapKind::CompletelyPositive { gain } => add_on_block(cov, gain, &vars),
                    _ => cov,
                };
                GaussianTerm::new(t.weight, cov)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GaussianMixture { modes: self.modes, terms, normalized: self.normalized })
    }

    /// Loss channel on the selected modes with the default intensity
    /// convention γ → ηγ + (1−η)I.
    pub fn apply_loss(&self, eta: f64, modes: &[usize]) -> Result<GaussianMixture> {
        self.apply_loss_with(eta, modes, LossConvention::Intensity)
    }

    pub fn apply_loss_with(
        &self,
        eta: f64,
        modes: &[usize],
        convention: LossConvention,
    ) -> Result<GaussianMixture> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::Range(format!("efficiency must lie in [0,1], got {eta}")));
        }
        let k = modes.len();
        let scale = match convention {
            LossConvention::Intensity => eta.sqrt(),
            LossConvention::Literal => eta,
        };
        let l = DMatrix::<f64>::identity(2 * k, 2 * k) * scale;
        let g = DMatrix::<f64>::identity(2 * k, 2 * k) * (1.0 - eta);
        let map = ModeLinearMap::completely_positive(l, g)?;
        self.apply_map(&map, modes)
    }

    /// Multiply by the on-off click factor (1 − 2 e^{−q²−p²}) on one mode.
    ///
    /// Doubles the term count: each (w, γ) spawns (w, γ) and
    /// (−2w / √det(I₂ + γ_aa), (γ⁻¹ + E_a)⁻¹) where E_a is the identity
    /// quadratic form on that mode and γ_aa its 2×2 covariance block; the
    /// second covariance comes from a rank-2 Woodbury downdate so no full
    /// inversion is needed. Result is unnormalized.
    pub fn multiply_onoff_povm(&self, mode: usize) -> Result<GaussianMixture> {
        if mode >= self.modes {
            return Err(Error::Range(format!("mode index {mode} out of range")));
        }
        let (iq, ip) = (2 * mode, 2 * mode + 1);
        let mut terms = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            terms.push(t.clone());
            let g = &t.covariance;
            let block = DMatrix::from_row_slice(
                2,
                2,
                &[g[(iq, iq)] + 1.0, g[(iq, ip)], g[(ip, iq)], g[(ip, ip)] + 1.0],
            );
            let det = block[(0, 0)] * block[(1, 1)] - block[(0, 1)] * block[(1, 0)];
            if det <= 0.0 {
                return Err(Error::SingularCovariance(
                    "POVM update block is not positive definite".into(),
                ));
            }
            let inv = DMatrix::from_row_slice(
                2,
                2,
                &[block[(1, 1)] / det, -block[(0, 1)] / det, -block[(1, 0)] / det, block[(0, 0)] / det],
            );
            // γ' = γ − γ Pᵀ (I + γ_aa)⁻¹ P γ
            let d = g.nrows();
            let mut cols = DMatrix::zeros(d, 2);
            cols.column_mut(0).copy_from(&g.column(iq));
            cols.column_mut(1).copy_from(&g.column(ip));
            let mut cov = g - &cols * inv * cols.transpose();
            symmetrize(&mut cov);
            terms.push(GaussianTerm::new(-2.0 * t.weight / det.sqrt(), cov)?);
        }
        Ok(GaussianMixture { modes: self.modes, terms, normalized: false })
    }

    /// Marginal over an arbitrary subset of quadrature variables.
    ///
    /// Equivalent to the inverse-form Schur complement
    /// Γ^S − σᵀ(Γ^A)⁻¹σ with its 1/√det(Γ^A) weight factor, which for
    /// normalized Gaussian terms reduces exactly to taking the kept
    /// sub-block of each covariance with unchanged weights.
    pub fn marginalize(&self, keep: &[usize]) -> Result<VarMixture> {
        check_keep(keep, 2 * self.modes)?;
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let cov = t.covariance.select_rows(keep).select_columns(keep);
                GaussianTerm::new(t.weight, cov)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(VarMixture { dim: keep.len(), terms })
    }

    /// Marginal keeping whole modes, preserving mode structure.
    pub fn marginalize_modes(&self, keep_modes: &[usize]) -> Result<GaussianMixture> {
        let vars: Vec<usize> = keep_modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let marg = self.marginalize(&vars)?;
        Ok(GaussianMixture {
            modes: keep_modes.len(),
            terms: marg.terms,
            normalized: self.normalized,
        })
    }

    /// Reorder quadrature variables: output variable i is input `perm[i]`.
    pub fn reorder_variables(&self, perm: &[usize]) -> Result<GaussianMixture> {
        if perm.len() != 2 * self.modes {
            return Err(Error::DimensionMismatch("permutation must cover all variables".into()));
        }
        check_keep(perm, 2 * self.modes)?;
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let cov = t.covariance.select_rows(perm).select_columns(perm);
                GaussianTerm::new(t.weight, cov)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GaussianMixture { modes: self.modes, terms, normalized: self.normalized })
    }

    /// Divide all weights by the weight sum; returns the normalized state
    /// and the pre-normalization total (the heralding probability when this
    /// follows a POVM overlap).
    pub fn normalize(&self) -> Result<(GaussianMixture, f64)> {
        let total = self.total_weight();
        if !(total > 1e-12) {
            return Err(Error::UnphysicalHeralding);
        }
        let terms = self
            .terms
            .iter()
            .map(|t| GaussianTerm::new(t.weight / total, t.covariance.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok((GaussianMixture { modes: self.modes, terms, normalized: true }, total))
    }

    /// Wigner value at a phase-space point (2n components, interleaved).
    pub fn evaluate(&self, point: &DVector<f64>) -> f64 {
        assert_eq!(point.len(), 2 * self.modes, "point dimension mismatch");
        self.terms.iter().map(|t| t.evaluate(point)).sum()
    }

    /// Total mean photon number, Σ_k w_k Σ_i (γ_qq + γ_pp − 2)/4.
    pub fn mean_photons(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let per_mode: f64 = (0..self.modes)
                    .map(|i| {
                        (t.covariance[(2 * i, 2 * i)] + t.covariance[(2 * i + 1, 2 * i + 1)] - 2.0)
                            / 4.0
                    })
                    .sum();
                t.weight * per_mode
            })
            .sum()
    }

    /// Check γ + iΩ ⪰ 0 on every term via Williamson symplectic
    /// eigenvalues ν_j ≥ 1 − tol. Post-POVM bookkeeping terms are exempt
    /// from this; call it on pipeline inputs.
    pub fn satisfies_uncertainty(&self, tol: f64) -> bool {
        self.terms.iter().all(|t| {
            linalg::symplectic_eigenvalues(&t.covariance)
                .iter()
                .all(|&nu| nu >= 1.0 - tol)
        })
    }
}

/// γ' = A γ Aᵀ restricted to the selected variables (identity elsewhere).
fn apply_to_block(gamma: &DMatrix<f64>, a: &DMatrix<f64>, vars: &[usize]) -> DMatrix<f64> {
    let d = gamma.nrows();
    // rows of γ touching the block
    let sel = gamma.select_rows(vars); // k×d
    let new_rows = a * sel; // k×d
    let mut out = gamma.clone();
    for (bi, &vi) in vars.iter().enumerate() {
        for j in 0..d {
            out[(vi, j)] = new_rows[(bi, j)];
        }
    }
    // columns
    let sel_c = out.select_columns(vars); // d×k
    let new_cols = sel_c * a.transpose(); // d×k
    for (bj, &vj) in vars.iter().enumerate() {
        for i in 0..d {
            out[(i, vj)] = new_cols[(i, bj)];
        }
    }
    symmetrize(&mut out);
    out
}

fn add_on_block(mut gamma: DMatrix<f64>, g: &DMatrix<f64>, vars: &[usize]) -> DMatrix<f64> {
    for (bi, &vi) in vars.iter().enumerate() {
        for (bj, &vj) in vars.iter().enumerate() {
            gamma[(vi, vj)] += g[(bi, bj)];
        }
    }
    gamma
}

/// The two-mode quadrature reordering (q1,p1,q2,p2) → (p1,p2,q1,q2) used
/// at integration boundaries, as a variable permutation.
pub fn switch_qp_two_modes() -> [usize; 4] {
    // output i takes input perm[i]
    [1, 3, 0, 2]
}
