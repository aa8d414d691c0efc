//! Joint spectral coupling matrix of the comb-pumped parametric source and
//! its supermode decomposition.
//!
//! The coupling between frequency modes m and q is
//! 𝓛_mq = sinc(φ_mq) · α_{m+q}, with α a Gaussian pump envelope on the
//! sum-frequency axis and φ_mq = ζ₁(m+q−2m₀) + ζ₂(m−q)² the quadratic
//! phase-mismatch model. Diagonalizing 𝓛 yields the supermode basis; each
//! eigenvalue sets the single-mode squeezing of its supermode, scaled so
//! the leading supermode reaches a requested target.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian spectral amplitude on the tooth grid.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GaussianEnvelope {
    pub center: f64,
    pub width: f64,
}

impl GaussianEnvelope {
    pub fn value(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.width;
        (-0.5 * u * u).exp()
    }
}

/// Source configuration on a finite comb.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CombConfig {
    /// Number of frequency modes M.
    pub teeth_count: usize,
    /// Pump center m₀ in signal-tooth units (envelope peaks at m+q = 2m₀).
    pub center_index: usize,
    /// Pump amplitude envelope; `center` in signal-tooth units, `width` the
    /// standard deviation along the m+q axis.
    pub pump_envelope: GaussianEnvelope,
    /// (ζ₁, ζ₂) of the quadratic phase-mismatch model.
    pub mismatch_coefficients: (f64, f64),
    /// Dimensionless multiplier folded into both ζ coefficients.
    pub crystal_length_scale: f64,
    /// Squeezing parameter of the leading supermode.
    pub s1_target: f64,
    /// Number of supermodes kept.
    pub truncation: usize,
}

impl CombConfig {
    /// Desk-scale default: 256 teeth in the anticorrelated-frequencies
    /// regime (pump band much narrower than the phase-matching band), so
    /// eigenvalue signs alternate and the spectrum decays slowly before
    /// becoming negligible past mode 50. The first 50 supermodes carry
    /// ≈99% of the squeezing.
    pub fn desk_default() -> Self {
        CombConfig {
            teeth_count: 256,
            center_index: 128,
            pump_envelope: GaussianEnvelope { center: 127.5, width: 4.0 },
            mismatch_coefficients: (0.0, 6.5e-5),
            crystal_length_scale: 1.0,
            s1_target: 1.0,
            truncation: 50,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.teeth_count < 2 {
            return Err(Error::Config(format!(
                "comb.teeth: need at least 2 teeth, got {}",
                self.teeth_count
            )));
        }
        if !(self.pump_envelope.width > 0.0) {
            return Err(Error::Config(format!(
                "comb.pump_width: must be positive, got {}",
                self.pump_envelope.width
            )));
        }
        if self.truncation == 0 || self.truncation > self.teeth_count {
            return Err(Error::Config(format!(
                "comb.k: truncation {} outside 1..={}",
                self.truncation, self.teeth_count
            )));
        }
        if !(self.s1_target >= 0.0) {
            return Err(Error::Config(format!(
                "comb.s1: must be nonnegative, got {}",
                self.s1_target
            )));
        }
        if !self.crystal_length_scale.is_finite()
            || !self.mismatch_coefficients.0.is_finite()
            || !self.mismatch_coefficients.1.is_finite()
        {
            return Err(Error::Config("comb: mismatch coefficients must be finite".into()));
        }
        Ok(())
    }
}

/// The real symmetric frequency-mode coupling matrix.
#[derive(Debug, Clone)]
pub struct JsaMatrix {
    values: DMatrix<f64>,
}

impl JsaMatrix {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn size(&self) -> usize {
        self.values.nrows()
    }
}

/// Top-K eigenpairs of the coupling matrix with squeezing parameters.
#[derive(Debug, Clone)]
pub struct SupermodeBasis {
    /// Eigenvalues sorted by descending |λ|.
    eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, M×K, columns sampled on the tooth grid.
    eigenvectors: DMatrix<f64>,
    /// Signed squeezing parameters s_j = s₁ λ_j / λ₁.
    squeezings: Vec<f64>,
}

impl SupermodeBasis {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn squeezings(&self) -> &[f64] {
        &self.squeezings
    }

    pub fn truncation(&self) -> usize {
        self.eigenvalues.len()
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Build the coupling matrix 𝓛_mq = sinc(φ_mq) α_{m+q}.
pub fn build_jsa(config: &CombConfig) -> Result<JsaMatrix> {
    config.validate()?;
    let m = config.teeth_count;
    let (z1, z2) = config.mismatch_coefficients;
    let scale = config.crystal_length_scale;
    let (z1, z2) = (z1 * scale, z2 * scale);
    let m0 = config.center_index as f64;
    let env = config.pump_envelope;
    let mut values = DMatrix::zeros(m, m);
    for a in 0..m {
        // symmetric fill; φ and α depend on (a+b) and (a−b)² only
        for b in a..m {
            let sum = (a + b) as f64;
            let diff = a as f64 - b as f64;
            let phi = z1 * (sum - 2.0 * m0) + z2 * diff * diff;
            // α on the sum axis: Gaussian around 2·center with sd `width`
            let u = (sum - 2.0 * env.center) / env.width;
            let v = sinc(phi) * (-0.5 * u * u).exp();
            values[(a, b)] = v;
            values[(b, a)] = v;
        }
    }
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config("comb: coupling matrix has non-finite entries".into()));
    }
    Ok(JsaMatrix { values })
}

/// Diagonalize the coupling matrix and keep the top-K supermodes.
///
/// Eigenpairs are sorted by descending |λ| (ties broken by eigenvector
/// lexicographic order); each eigenvector's largest-magnitude component is
/// made positive; squeezings are s_j = s1_target · λ_j / λ₁ with sign.
pub fn decompose(jsa: &JsaMatrix, k: usize, s1_target: f64) -> Result<SupermodeBasis> {
    let m = jsa.size();
    if k == 0 || k > m {
        return Err(Error::Range(format!("truncation {k} outside 1..={m}")));
    }
    let (eigenvalues_raw, eigenvectors_raw) = crate::linalg::eigh_polished(&jsa.values);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        let a = eigenvalues_raw[i].abs();
        let b = eigenvalues_raw[j].abs();
        b.partial_cmp(&a).unwrap().then_with(|| {
            // deterministic tie-break: lexicographic eigenvector order
            let vi = eigenvectors_raw.column(i);
            let vj = eigenvectors_raw.column(j);
            for r in 0..m {
                match vi[r].partial_cmp(&vj[r]).unwrap() {
                    std::cmp::Ordering::Equal => continue,
                    other => return other,
                }
            }
            std::cmp::Ordering::Equal
        })
    });
    let lambda1 = eigenvalues_raw[order[0]];
    if lambda1.abs() < 1e-14 {
        return Err(Error::DegenerateSource);
    }
    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenvectors = DMatrix::zeros(m, k);
    let mut squeezings = Vec::with_capacity(k);
    for (col, &idx) in order.iter().take(k).enumerate() {
        let lam = eigenvalues_raw[idx];
        let mut v: DVector<f64> = eigenvectors_raw.column(idx).into_owned();
        // sign convention: the first largest-magnitude component is positive
        let mut lead = 0usize;
        for r in 1..m {
            if v[r].abs() > v[lead].abs() + 1e-14 {
                lead = r;
            }
        }
        if v[lead] < 0.0 {
            v.neg_mut();
        }
        eigenvalues.push(lam);
        eigenvectors.set_column(col, &v);
        squeezings.push(s1_target * lam / lambda1);
    }
    Ok(SupermodeBasis { eigenvalues, eigenvectors, squeezings })
}

/// Fraction of total squeezing captured by the first `k` supermodes,
/// Σ_{j≤k}|λ_j| / Σ_j|λ_j|, computed on a full-spectrum basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FractionNorm {
    /// Sum of |λ| (default).
    Abs,
    /// Sum of λ² (alternative reading).
    Square,
}

pub fn squeezing_fraction(basis: &SupermodeBasis, k: usize, norm: FractionNorm) -> f64 {
    let take = k.min(basis.eigenvalues.len());
    let f = |l: &f64| match norm {
        FractionNorm::Abs => l.abs(),
        FractionNorm::Square => l * l,
    };
    let total: f64 = basis.eigenvalues.iter().map(f).sum();
    if total == 0.0 {
        return 0.0;
    }
    let head: f64 = basis.eigenvalues.iter().take(take).map(f).sum();
    head / total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk_config() -> CombConfig {
        CombConfig::desk_default()
    }

    #[test]
    fn zero_mismatch_is_constant_on_antidiagonals() {
        let mut cfg = desk_config();
        cfg.mismatch_coefficients = (0.0, 0.0);
        cfg.teeth_count = 32;
        cfg.center_index = 16;
        cfg.truncation = 8;
        cfg.pump_envelope = GaussianEnvelope { center: 15.5, width: 4.0 };
        let jsa = build_jsa(&cfg).unwrap();
        let v = jsa.values();
        for s in 0..(2 * 32 - 1) {
            let mut vals = Vec::new();
            for a in 0..32usize {
                if s >= a && s - a < 32 {
                    vals.push(v[(a, s - a)]);
                }
            }
            for w in &vals {
                assert!((w - vals[0]).abs() < 1e-15, "anti-diagonal {s} not constant");
            }
        }
    }

    #[test]
    fn jsa_is_symmetric_and_has_sinc_side_lobes() {
        let cfg = desk_config();
        let jsa = build_jsa(&cfg).unwrap();
        let v = jsa.values();
        let m = cfg.teeth_count;
        for a in 0..m {
            for b in 0..m {
                assert_eq!(v[(a, b)], v[(b, a)]);
            }
        }
        // symmetric along the anti-diagonal axis through the envelope peak:
        // (a, b) -> (M-1-b, M-1-a) for a centered envelope
        for a in (0..m).step_by(7) {
            for b in (0..m).step_by(7) {
                let w = v[(m - 1 - b, m - 1 - a)];
                assert!(
                    (v[(a, b)] - w).abs() < 1e-12,
                    "anti-diagonal reflection broken at ({a},{b})"
                );
            }
        }
        // nonzero ζ₂ produces negative sinc side lobes off the diagonal
        assert!(v.iter().any(|x| *x < -1e-6), "expected sinc side lobes");
    }

    #[test]
    fn decompose_two_by_two() {
        let c = 0.8;
        let jsa = JsaMatrix {
            values: DMatrix::from_row_slice(2, 2, &[0.0, c, c, 0.0]),
        };
        let basis = decompose(&jsa, 2, 1.0).unwrap();
        let l = basis.eigenvalues();
        assert!((l[0].abs() - c).abs() < 1e-12);
        assert!((l[1].abs() - c).abs() < 1e-12);
        assert!((l[0] + l[1]).abs() < 1e-12); // ±c
        let e = basis.eigenvectors();
        let r = 0.5f64.sqrt();
        // columns are (1,1)/√2 and (1,−1)/√2 in some order, leading entry positive
        for col in 0..2 {
            let v0 = e[(0, col)];
            let v1 = e[(1, col)];
            assert!((v0 - r).abs() < 1e-12);
            assert!((v1.abs() - r).abs() < 1e-12);
        }
        assert!((e.column(0).dot(&e.column(1))).abs() < 1e-12);
    }

    #[test]
    fn decompose_diagonal_matrix() {
        let jsa = JsaMatrix { values: DMatrix::identity(4, 4) * 0.3 };
        let basis = decompose(&jsa, 4, 1.0).unwrap();
        for l in basis.eigenvalues() {
            assert!((l - 0.3).abs() < 1e-14);
        }
        // tie-broken deterministically into (a permutation of) the standard basis
        for col in 0..4 {
            let v = basis.eigenvectors().column(col);
            let mx = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!((mx - 1.0).abs() < 1e-12);
            let sum_sq: f64 = v.iter().map(|x| x * x).sum();
            assert!((sum_sq - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_rank_reconstruction() {
        let cfg = CombConfig {
            teeth_count: 48,
            center_index: 24,
            truncation: 48,
            pump_envelope: GaussianEnvelope { center: 23.5, width: 5.0 },
            mismatch_coefficients: (0.0, 0.004),
            ..desk_config()
        };
        let jsa = build_jsa(&cfg).unwrap();
        let basis = decompose(&jsa, 48, 1.0).unwrap();
        let mut recon = DMatrix::<f64>::zeros(48, 48);
        for j in 0..48 {
            let v = basis.eigenvectors().column(j);
            recon += v * v.transpose() * basis.eigenvalues()[j];
        }
        let err = (&recon - jsa.values())
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(err < 1e-10, "reconstruction residual {err}");
        // orthonormality
        let g = basis.eigenvectors().transpose() * basis.eigenvectors();
        let id = DMatrix::<f64>::identity(48, 48);
        assert!((g - id).iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn eigenvalue_order_and_fraction_monotonicity() {
        let cfg = desk_config();
        let jsa = build_jsa(&cfg).unwrap();
        let basis = decompose(&jsa, cfg.teeth_count, cfg.s1_target).unwrap();
        let l = basis.eigenvalues();
        for w in l.windows(2) {
            assert!(w[0].abs() >= w[1].abs() - 1e-14);
        }
        let mut last = 0.0;
        for k in [1usize, 5, 20, 50, 100, cfg.teeth_count] {
            let f = squeezing_fraction(&basis, k, FractionNorm::Abs);
            assert!(f >= last - 1e-14);
            last = f;
        }
        assert!((squeezing_fraction(&basis, cfg.teeth_count, FractionNorm::Abs) - 1.0).abs() < 1e-14);
        assert_eq!(squeezing_fraction(&basis, 0, FractionNorm::Abs), 0.0);
    }

    #[test]
    fn desk_config_spectrum_targets() {
        let cfg = desk_config();
        let jsa = build_jsa(&cfg).unwrap();
        let basis = decompose(&jsa, cfg.teeth_count, cfg.s1_target).unwrap();
        let l = basis.eigenvalues();
        assert!(
            l[49].abs() / l[0].abs() < 0.05,
            "|λ50/λ1| = {}",
            l[49].abs() / l[0].abs()
        );
        let f50 = squeezing_fraction(&basis, 50, FractionNorm::Abs);
        assert!(f50 >= 0.98, "fraction(50) = {f50}");
        // squeezings scale linearly with eigenvalues
        let s = basis.squeezings();
        assert!((s[0] - cfg.s1_target).abs() < 1e-12);
        for j in 0..50 {
            assert!((s[j] - cfg.s1_target * l[j] / l[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn error_paths() {
        let cfg = desk_config();
        let jsa = build_jsa(&cfg).unwrap();
        assert!(matches!(
            decompose(&jsa, cfg.teeth_count + 1, 1.0),
            Err(Error::Range(_))
        ));
        let zero = JsaMatrix { values: DMatrix::zeros(4, 4) };
        assert!(matches!(decompose(&zero, 2, 1.0), Err(Error::DegenerateSource)));
    }
}
