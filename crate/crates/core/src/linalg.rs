//! Shared numerical utilities: symplectic form, positive-definiteness
//! guards, orthonormal completion, Gauss-Legendre nodes, and normal
//! distribution functions.

use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};
use std::sync::{Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const SYM_TOL: f64 = 1e-12;
pub const MIN_EIG: f64 = 1e-12;

/// Standard symplectic form for n modes in interleaved ordering
/// (q1, p1, ..., qn, pn): block-diagonal [[0, 1], [-1, 0]].
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for i in 0..modes {
        omega[(2 * i, 2 * i + 1)] = 1.0;
        omega[(2 * i + 1, 2 * i)] = -1.0;
    }
    omega
}

/// Max-norm residual of S Ω Sᵀ − Ω.
pub fn symplectic_residual(s: &DMatrix<f64>) -> f64 {
    let modes = s.nrows() / 2;
    let omega = symplectic_form(modes);
    let r = s * &omega * s.transpose() - &omega;
    r.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Max-norm asymmetry |A − Aᵀ|.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Replace A by (A + Aᵀ)/2.
pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// True when the minimum eigenvalue of symmetric `a` exceeds `floor`,
/// checked via Cholesky of (a − floor·I).
pub fn min_eig_above(a: &DMatrix<f64>, floor: f64) -> bool {
    let n = a.nrows();
    let shifted = a - DMatrix::<f64>::identity(n, n) * floor;
    nalgebra::Cholesky::new(shifted).is_some()
}

/// Symmetric square root of an SPD matrix.
pub fn symmetric_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = nalgebra::SymmetricEigen::new(a.clone());
    let sqrt_vals = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()),
    );
    &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose()
}

/// Symplectic eigenvalues of a covariance matrix (Williamson).
///
/// Computed as the positive eigenvalue pairs of the antisymmetric matrix
/// sqrt(γ) Ω sqrt(γ), via the symmetric matrix TᵀT whose eigenvalues are
/// the squares. Vacuum terms have all symplectic eigenvalues equal to 1.
pub fn symplectic_eigenvalues(gamma: &DMatrix<f64>) -> Vec<f64> {
    let modes = gamma.nrows() / 2;
    let s = symmetric_sqrt(gamma);
    let t = &s * symplectic_form(modes) * &s;
    let tt = t.transpose() * &t;
    let eig = nalgebra::SymmetricEigen::new(tt);
    let mut nus: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    nus.sort_by(|a, b| b.partial_cmp(a).unwrap());
    // eigenvalues come in pairs; keep one per mode
    nus.into_iter().step_by(2).take(modes).collect()
}

/// Symmetric eigendecomposition polished by cyclic Jacobi sweeps.
///
/// Seeds from the library QR-based solver, then rotates away residual
/// off-diagonal mass (the QR path leaves ~1e-10 residuals when the
/// spectrum clusters near zero). Returns (eigenvalues, eigenvectors as
/// columns), unsorted.
pub fn eigh_polished(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let seed = nalgebra::SymmetricEigen::new(a.clone());
    let mut v = seed.eigenvectors;
    let mut b = v.transpose() * a * &v;
    symmetrize(&mut b);
    let scale = b.diagonal().iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let tol = 1e-15 * scale;
    for _sweep in 0..30 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = b[(p, q)];
                if apq.abs() <= tol {
                    continue;
                }
                off = off.max(apq.abs());
                let tau = (b[(q, q)] - b[(p, p)]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // rotate rows/cols p,q of b and columns p,q of v
                for k in 0..n {
                    let bkp = b[(k, p)];
                    let bkq = b[(k, q)];
                    b[(k, p)] = c * bkp - s * bkq;
                    b[(k, q)] = s * bkp + c * bkq;
                }
                for k in 0..n {
                    let bpk = b[(p, k)];
                    let bqk = b[(q, k)];
                    b[(p, k)] = c * bpk - s * bqk;
                    b[(q, k)] = s * bpk + c * bqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        if off <= tol {
            break;
        }
    }
    (b.diagonal().into_owned(), v)
}

/// Extend `rows` (r×n, rows assumed orthonormal) to a full n×n orthogonal
/// matrix. The remaining rows are chosen deterministically by pivoted
/// Gram-Schmidt over the canonical basis vectors.
pub fn complete_orthonormal(rows: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let r = rows.nrows();
    let n = rows.ncols();
    if r > n {
        return Err(Error::DimensionMismatch(format!(
            "cannot complete {r} rows in dimension {n}"
        )));
    }
    let mut basis: Vec<DVector<f64>> = (0..r).map(|i| rows.row(i).transpose()).collect();
    while basis.len() < n {
        // pick the canonical vector with the largest residual after
        // projecting out the current basis
        let mut best: Option<(f64, DVector<f64>)> = None;
        for k in 0..n {
            let mut v = DVector::zeros(n);
            v[k] = 1.0;
            for b in &basis {
                let c = b.dot(&v);
                v -= b * c;
            }
            let norm = v.norm();
            if best.as_ref().map_or(true, |(bn, _)| norm > *bn + 1e-14) {
                best = Some((norm, v));
            }
        }
        let (norm, mut v) = best.unwrap();
        if norm < 1e-10 {
            return Err(Error::SingularCovariance(
                "orthonormal completion failed: residual basis collapsed".into(),
            ));
        }
        // re-orthogonalize once for stability
        for b in &basis {
            let c = b.dot(&v);
            v -= b * c;
        }
        v /= v.norm();
        basis.push(v);
    }
    let mut out = DMatrix::zeros(n, n);
    for (i, b) in basis.iter().enumerate() {
        out.row_mut(i).copy_from(&b.transpose());
    }
    Ok(out)
}

/// Orthonormalize the rows of `p` in order (modified Gram-Schmidt with one
/// re-orthogonalization pass). Fails when a row is linearly dependent on
/// its predecessors.
pub fn orthonormalize_rows(p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let r = p.nrows();
    let n = p.ncols();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(r);
    for i in 0..r {
        let mut v = p.row(i).transpose();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&v);
                v -= b * c;
            }
        }
        let norm = v.norm();
        if norm < 1e-10 {
            return Err(Error::SingularCovariance(format!(
                "row {i} is linearly dependent during orthonormalization"
            )));
        }
        v /= norm;
        basis.push(v);
    }
    let mut out = DMatrix::zeros(r, n);
    for (i, b) in basis.iter().enumerate() {
        out.row_mut(i).copy_from(&b.transpose());
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Gauss-Legendre quadrature
// ---------------------------------------------------------------------------

/// Gauss-Legendre nodes and weights on [0, 1], cached per order.
///
/// Nodes are computed by Newton iteration on the Legendre recurrence from
/// Chebyshev initial guesses; accurate to machine precision for the orders
/// used here.
pub fn gauss_legendre_01(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static (Vec<f64>, Vec<f64>)>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| Box::leak(Box::new(compute_gauss_legendre_01(n))))
}

fn compute_gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // initial guess on [-1, 1]
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]; reverse so nodes ascend
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

// ---------------------------------------------------------------------------
// Normal distribution functions
// ---------------------------------------------------------------------------

const FRAC_1_SQRT_2PI: f64 = 0.3989422804014327;

pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Lower-tail standard normal CDF Φ(x).
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Upper-tail standard normal CDF Φ̄(x) = 1 − Φ(x), accurate in the tail.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Inverse of the upper tail: x ≥ 0 with Φ̄(x) = q, for q ∈ (0, 0.5].
///
/// Solved by Newton iteration in the log domain, which is globally
/// convergent for this monotone problem and avoids hard-coded rational
/// approximations.
pub fn inv_norm_sf(q: f64) -> f64 {
    assert!(q > 0.0 && q <= 0.5, "inv_norm_sf domain: q in (0, 0.5]");
    if q == 0.5 {
        return 0.0;
    }
    // rational seed (Abramowitz-Stegun 26.2.22, |error| < 4.5e-4), then
    // log-domain Newton to machine precision
    let t = (-2.0 * q.ln()).sqrt();
    let mut x = t - (2.30753 + 0.27061 * t) / (1.0 + 0.99229 * t + 0.04481 * t * t);
    let ln_q = q.ln();
    for _ in 0..8 {
        let sf = norm_sf(x);
        if sf == 0.0 {
            // deep tail; fall back to asymptotic form
            return (-2.0 * ln_q - (2.0 * PI * (-2.0 * ln_q)).ln()).max(0.0).sqrt();
        }
        let step = (sf.ln() - ln_q) * sf / norm_pdf(x);
        x += step;
        if step.abs() < 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    x.max(0.0)
}

/// Inverse lower-tail CDF Φ⁻¹(p).
pub fn inv_norm_cdf(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    if p <= 0.5 {
        -inv_norm_sf(p)
    } else {
        inv_norm_sf(1.0 - p)
    }
}
