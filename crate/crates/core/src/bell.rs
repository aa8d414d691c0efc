//! Dichotomized-homodyne correlators and Bell inequality evaluation.
//!
//! Each party measures a rotated quadrature and the outcome is binned to
//! ±1 by sign. For a signed Gaussian mixture the correlator of N parties
//! is a weighted sum over terms of E[Π sign(q_i)], which reduces to
//! orthant probabilities of the rotated q-sector covariances: the arcsin
//! closed form for two parties, signed orthant sums for more.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::GaussianMixture;
use crate::orthant::OrthantIntegrator;

/// Which inequality a Bell evaluation targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InequalityKind {
    Chsh,
    Mk4,
    Mermin4,
}

impl InequalityKind {
    pub fn party_count(&self) -> usize {
        match self {
            InequalityKind::Chsh => 2,
            InequalityKind::Mk4 | InequalityKind::Mermin4 => 4,
        }
    }

    /// Largest value the signed combination can reach algebraically.
    pub fn algebraic_cap(&self) -> f64 {
        match self {
            InequalityKind::Chsh => 2.0,
            InequalityKind::Mk4 => 4.0,
            InequalityKind::Mermin4 => 2.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InequalityKind::Chsh => "chsh",
            InequalityKind::Mk4 => "mk4",
            InequalityKind::Mermin4 => "mermin4",
        }
    }
}

impl std::str::FromStr for InequalityKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chsh" => Ok(InequalityKind::Chsh),
            "mk4" => Ok(InequalityKind::Mk4),
            "mermin4" => Ok(InequalityKind::Mermin4),
            other => Err(Error::Config(format!(
                "inequality must be chsh|mk4|mermin4, got {other}"
            ))),
        }
    }
}

/// Two measurement angles per party plus optional per-party global
/// rotations (the first party's offset is pinned to zero). Offsets are a
/// reporting convention: they reparameterize the same search space as the
/// angles themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSettings {
    pub angles: Vec<[f64; 2]>,
    pub global_offsets: Vec<f64>,
}

impl MeasurementSettings {
    pub fn new(angles: Vec<[f64; 2]>, global_offsets: Vec<f64>) -> Result<Self> {
        if angles.len() != global_offsets.len() {
            return Err(Error::DimensionMismatch(
                "one global offset per party required".into(),
            ));
        }
        if angles.iter().flatten().any(|a| !a.is_finite())
            || global_offsets.iter().any(|o| !o.is_finite())
        {
            return Err(Error::Range("angles must be finite".into()));
        }
        if global_offsets.first().map_or(false, |o| *o != 0.0) {
            return Err(Error::Range("the first party's global offset is fixed at 0".into()));
        }
        Ok(Self { angles, global_offsets })
    }

    pub fn zero(parties: usize) -> Self {
        Self { angles: vec![[0.0, 0.0]; parties], global_offsets: vec![0.0; parties] }
    }

    pub fn party_count(&self) -> usize {
        self.angles.len()
    }

    /// Effective measurement angle of one party at setting 0 or 1.
    pub fn effective(&self, party: usize, setting: usize) -> f64 {
        self.angles[party][setting] + self.global_offsets[party]
    }
}

/// The q-sector of a rotated mixture: signed weights and N×N covariances
/// of the sign-binned quadratures.
#[derive(Debug, Clone)]
pub struct QMixture {
    weights: Vec<f64>,
    q_covariances: Vec<DMatrix<f64>>,
}

impl QMixture {
    pub fn party_count(&self) -> usize {
        self.q_covariances.first().map_or(0, |c| c.nrows())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn q_covariances(&self) -> &[DMatrix<f64>] {
        &self.q_covariances
    }
}

/// Rotate mode i by θ_i and keep only the q sector.
///
/// Only the 2×2 inter-mode blocks enter: the rotated q covariance is
/// Q_ij = u(θ_i)ᵀ γ_ij u(θ_j) with u(θ) = (cos θ, sin θ).
pub fn q_marginal(state: &GaussianMixture, thetas: &[f64]) -> Result<QMixture> {
    let n = state.modes();
    if thetas.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} angles for {} modes",
            thetas.len(),
            n
        )));
    }
    let trig: Vec<(f64, f64)> = thetas.iter().map(|t| t.sin_cos()).collect();
    let mut weights = Vec::with_capacity(state.terms().len());
    let mut q_covariances = Vec::with_capacity(state.terms().len());
    for term in state.terms() {
        let g = term.covariance();
        let mut q = DMatrix::zeros(n, n);
        for i in 0..n {
            let (si, ci) = trig[i];
            for j in i..n {
                let (sj, cj) = trig[j];
                let v = ci * cj * g[(2 * i, 2 * j)]
                    + ci * sj * g[(2 * i, 2 * j + 1)]
                    + si * cj * g[(2 * i + 1, 2 * j)]
                    + si * sj * g[(2 * i + 1, 2 * j + 1)];
                q[(i, j)] = v;
                q[(j, i)] = v;
            }
        }
        weights.push(term.weight());
        q_covariances.push(q);
    }
    Ok(QMixture { weights, q_covariances })
}

/// E[Π_i sign(q_i)] of a signed q-sector mixture.
///
/// Two parties use the per-term arcsin form (2/π)·asin(ρ); more parties
/// sum signed orthant probabilities, halved by central symmetry.
pub fn correlator(qmix: &QMixture, integrator: &OrthantIntegrator) -> Result<f64> {
    let mut total = 0.0;
    for (w, q) in qmix.weights.iter().zip(&qmix.q_covariances) {
        total += w * term_correlator(q, integrator)?;
    }
    Ok(total.clamp(-1.0 - 1e-9, 1.0 + 1e-9))
}

fn term_correlator(q: &DMatrix<f64>, integrator: &OrthantIntegrator) -> Result<f64> {
    let n = q.nrows();
    if n == 2 {
        let d = q[(0, 0)] * q[(1, 1)];
        if d <= 0.0 {
            return Err(Error::SingularCovariance("nonpositive q variance".into()));
        }
        let rho = (q[(0, 1)] / d.sqrt()).clamp(-1.0, 1.0);
        return Ok(2.0 / std::f64::consts::PI * rho.asin());
    }
    // signed orthant sum over half the patterns (P(s) = P(−s))
    let mut acc = 0.0;
    for bits in 0..(1u32 << (n - 1)) {
        let mut signs = vec![1i8; n];
        let mut parity = 1.0;
        for (i, s) in signs.iter_mut().enumerate().skip(1) {
            if bits >> (i - 1) & 1 == 1 {
                *s = -1;
                parity = -parity;
            }
        }
        let p = integrator.probability(q, &signs)?;
        acc += parity * p.value;
    }
    Ok(2.0 * acc)
}

/// The long-form correlator route: E = 2 P₊₁ − 1 with
/// P₊₁ = 2 ∫∫_{q>0} W_f, evaluated through the numerical orthant path for
/// every party count. Kept as an independent cross-check of [`correlator`].
pub fn correlator_longform(qmix: &QMixture, integrator: &OrthantIntegrator) -> Result<f64> {
    let n = qmix.party_count();
    // P(+1 outcome) = sum of orthants with positive sign product
    let mut p_plus = 0.0;
    for bits in 0..(1u32 << n) {
        let signs: Vec<i8> = (0..n).map(|i| if bits >> i & 1 == 1 { -1 } else { 1 }).collect();
        let parity: i32 = signs.iter().map(|s| *s as i32).product();
        if parity < 0 {
            continue;
        }
        for (w, q) in qmix.weights.iter().zip(&qmix.q_covariances) {
            let est = integrator.sequential_conditioning(&fold_signs(q, &signs))?;
            p_plus += w * est.value;
        }
    }
    Ok(2.0 * p_plus - 1.0)
}

fn fold_signs(q: &DMatrix<f64>, signs: &[i8]) -> DMatrix<f64> {
    let n = q.nrows();
    DMatrix::from_fn(n, n, |i, j| q[(i, j)] * (signs[i] * signs[j]) as f64)
}

/// One correlator entry of a Bell outcome: which setting index each party
/// used, the effective angles, and the value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelatorEntry {
    pub settings: Vec<u8>,
    pub angles: Vec<f64>,
    pub value: f64,
}

/// Result of evaluating one inequality at fixed settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BellOutcome {
    pub kind: InequalityKind,
    /// Signed Bell combination; violation when |value| > 1.
    pub value: f64,
    pub settings: MeasurementSettings,
    pub correlators: Vec<CorrelatorEntry>,
}

/// CHSH layout: ½ [E(a1,b1) + E(a1,b2) + E(a2,b1) − E(a2,b2)].
pub const CHSH_TERMS: [([usize; 2], f64); 4] = [
    ([0, 0], 1.0),
    ([0, 1], 1.0),
    ([1, 0], 1.0),
    ([1, 1], -1.0),
];

/// Mermin-Klyshko four-party layout: 16 terms with prefactor ¼
/// (6 plus signs, 10 minus signs).
pub const MK4_TERMS: [([usize; 4], f64); 16] = [
    ([0, 0, 0, 0], 1.0),
    ([1, 0, 0, 0], 1.0),
    ([0, 1, 0, 0], 1.0),
    ([1, 1, 0, 0], -1.0),
    ([0, 0, 1, 0], 1.0),
    ([1, 0, 1, 0], -1.0),
    ([0, 1, 1, 0], -1.0),
    ([1, 1, 1, 0], -1.0),
    ([0, 0, 0, 1], 1.0),
    ([1, 0, 0, 1], -1.0),
    ([0, 1, 0, 1], -1.0),
    ([1, 1, 0, 1], -1.0),
    ([0, 0, 1, 1], -1.0),
    ([1, 0, 1, 1], -1.0),
    ([0, 1, 1, 1], -1.0),
    ([1, 1, 1, 1], 1.0),
];

/// Four-party Mermin layout: 8 terms with prefactor ¼.
pub const MERMIN4_TERMS: [([usize; 4], f64); 8] = [
    ([1, 0, 0, 0], 1.0),
    ([0, 1, 0, 0], 1.0),
    ([0, 0, 1, 0], 1.0),
    ([1, 1, 1, 0], -1.0),
    ([0, 0, 0, 1], 1.0),
    ([1, 1, 0, 1], -1.0),
    ([1, 0, 1, 1], -1.0),
    ([0, 1, 1, 1], -1.0),
];

/// CHSH from a correlator table indexed by (setting_a, setting_b).
pub fn chsh_from_correlators(e: &[[f64; 2]; 2]) -> f64 {
    0.5 * CHSH_TERMS
        .iter()
        .map(|([a, b], sign)| sign * e[*a][*b])
        .sum::<f64>()
}

/// MK4 from a correlator table indexed by the four setting choices.
pub fn mk4_from_correlators(e: &dyn Fn(usize, usize, usize, usize) -> f64) -> f64 {
    0.25 * MK4_TERMS
        .iter()
        .map(|([a, b, c, d], sign)| sign * e(*a, *b, *c, *d))
        .sum::<f64>()
}

pub fn mermin4_from_correlators(e: &dyn Fn(usize, usize, usize, usize) -> f64) -> f64 {
    0.25 * MERMIN4_TERMS
        .iter()
        .map(|([a, b, c, d], sign)| sign * e(*a, *b, *c, *d))
        .sum::<f64>()
}

fn check_parties(state: &GaussianMixture, kind: InequalityKind) -> Result<()> {
    if state.modes() != kind.party_count() {
        return Err(Error::PartyCount { expected: kind.party_count(), got: state.modes() });
    }
    Ok(())
}

fn settings_angles(settings: &MeasurementSettings, choice: &[usize]) -> Vec<f64> {
    choice
        .iter()
        .enumerate()
        .map(|(p, &s)| settings.effective(p, s))
        .collect()
}

fn evaluate_terms(
    state: &GaussianMixture,
    settings: &MeasurementSettings,
    terms: &[(Vec<usize>, f64)],
    prefactor: f64,
    kind: InequalityKind,
    integrator: &OrthantIntegrator,
) -> Result<BellOutcome> {
    check_parties(state, kind)?;
    if settings.party_count() != kind.party_count() {
        return Err(Error::PartyCount {
            expected: kind.party_count(),
            got: settings.party_count(),
        });
    }
    let mut entries = Vec::with_capacity(terms.len());
    let mut value = 0.0;
    for (choice, sign) in terms {
        let angles = settings_angles(settings, choice);
        let qmix = q_marginal(state, &angles)?;
        let e = correlator(&qmix, integrator)?;
        value += sign * e;
        entries.push(CorrelatorEntry {
            settings: choice.iter().map(|s| *s as u8).collect(),
            angles,
            value: e,
        });
    }
    value *= prefactor;
    debug_assert!(value.abs() <= kind.algebraic_cap() + 1e-6);
    Ok(BellOutcome { kind, value, settings: settings.clone(), correlators: entries })
}

/// CHSH value at fixed settings.
pub fn chsh(state: &GaussianMixture, settings: &MeasurementSettings) -> Result<BellOutcome> {
    let integrator = OrthantIntegrator::default();
    chsh_with(state, settings, &integrator)
}

pub fn chsh_with(
    state: &GaussianMixture,
    settings: &MeasurementSettings,
    integrator: &OrthantIntegrator,
) -> Result<BellOutcome> {
    let terms: Vec<(Vec<usize>, f64)> =
        CHSH_TERMS.iter().map(|(c, s)| (c.to_vec(), *s)).collect();
    evaluate_terms(state, settings, &terms, 0.5, InequalityKind::Chsh, integrator)
}

/// Mermin-Klyshko four-party value at fixed settings.
pub fn mk4(state: &GaussianMixture, settings: &MeasurementSettings) -> Result<BellOutcome> {
    let integrator = OrthantIntegrator::default().with_cache();
    mk4_with(state, settings, &integrator)
}

pub fn mk4_with(
    state: &GaussianMixture,
    settings: &MeasurementSettings,
    integrator: &OrthantIntegrator,
) -> Result<BellOutcome> {
    let terms: Vec<(Vec<usize>, f64)> =
        MK4_TERMS.iter().map(|(c, s)| (c.to_vec(), *s)).collect();
    evaluate_terms(state, settings, &terms, 0.25, InequalityKind::Mk4, integrator)
}

/// Four-party Mermin value at fixed settings.
pub fn mermin4(state: &GaussianMixture, settings: &MeasurementSettings) -> Result<BellOutcome> {
    let integrator = OrthantIntegrator::default().with_cache();
    mermin4_with(state, settings, &integrator)
}

pub fn mermin4_with(
    state: &GaussianMixture,
    settings: &MeasurementSettings,
    integrator: &OrthantIntegrator,
) -> Result<BellOutcome> {
    let terms: Vec<(Vec<usize>, f64)> =
        MERMIN4_TERMS.iter().map(|(c, s)| (c.to_vec(), *s)).collect();
    evaluate_terms(state, settings, &terms, 0.25, InequalityKind::Mermin4, integrator)
}

/// Evaluate the inequality's signed value at fixed settings.
pub fn evaluate(
    state: &GaussianMixture,
    kind: InequalityKind,
    settings: &MeasurementSettings,
    integrator: &OrthantIntegrator,
) -> Result<BellOutcome> {
    match kind {
        InequalityKind::Chsh => chsh_with(state, settings, integrator),
        InequalityKind::Mk4 => mk4_with(state, settings, integrator),
        InequalityKind::Mermin4 => mermin4_with(state, settings, integrator),
    }
}
