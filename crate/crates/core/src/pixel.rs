//! Coarse-graining of the supermode-basis state into detector pixel modes.
//!
//! Each pixel mode is the LO-weighted sum of the supermode eigenfunctions
//! over that pixel's tooth interval. The raw overlap rows are then
//! orthonormalized in order (homodyne on distinct pixels measures
//! commuting observables) and completed to a full orthogonal change of
//! basis; unkept directions are integrated out and detection loss applied
//! per pixel.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gaussian::{GaussianMixture, ModeLinearMap};
use crate::jsa::{GaussianEnvelope, SupermodeBasis};
use crate::linalg;

/// Even partition of the tooth grid into party pixels plus the LO shape.
#[derive(Debug, Clone)]
pub struct PixelPartition {
    party_count: usize,
    boundaries: Vec<usize>,
    lo_envelope: GaussianEnvelope,
}

impl PixelPartition {
    pub fn new(boundaries: Vec<usize>, lo_envelope: GaussianEnvelope) -> Result<Self> {
        if boundaries.len() < 3 {
            return Err(Error::Config(
                "pixels: need at least 2 pixels (3 boundaries)".into(),
            ));
        }
        if !boundaries.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config(
                "pixels.boundaries: must be strictly increasing".into(),
            ));
        }
        Ok(Self { party_count: boundaries.len() - 1, boundaries, lo_envelope })
    }

    /// Equal-width tooth intervals covering the whole grid.
    pub fn even(party_count: usize, teeth: usize, lo_envelope: GaussianEnvelope) -> Result<Self> {
        if party_count < 2 {
            return Err(Error::Config(format!(
                "pixels.count: need at least 2 parties, got {party_count}"
            )));
        }
        if teeth < party_count {
            return Err(Error::Config("pixels.count exceeds tooth count".into()));
        }
        let boundaries = (0..=party_count)
            .map(|i| i * teeth / party_count)
            .collect();
        Self::new(boundaries, lo_envelope)
    }

    pub fn party_count(&self) -> usize {
        self.party_count
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn lo_envelope(&self) -> GaussianEnvelope {
        self.lo_envelope
    }
}

/// Pixel modes in supermode coordinates plus the orthogonal completion.
#[derive(Debug, Clone)]
pub struct PixelMap {
    /// Raw normalized overlap rows, N×K.
    projection: DMatrix<f64>,
    /// K×K orthogonal matrix whose first N rows are the orthonormalized
    /// projection rows.
    completion: DMatrix<f64>,
}

impl PixelMap {
    pub fn projection(&self) -> &DMatrix<f64> {
        &self.projection
    }

    pub fn completion(&self) -> &DMatrix<f64> {
        &self.completion
    }

    pub fn party_count(&self) -> usize {
        self.projection.nrows()
    }
}

/// Build the pixel map: P_{i,j} = Σ_{m ∈ pixel i} g(m) v_j(m), rows
/// normalized, then orthonormalized in order and completed.
pub fn build_pixel_map(basis: &SupermodeBasis, partition: &PixelPartition) -> Result<PixelMap> {
    let k = basis.truncation();
    let n = partition.party_count();
    let teeth = basis.eigenvectors().nrows();
    if *partition.boundaries().last().unwrap() != teeth || partition.boundaries()[0] != 0 {
        return Err(Error::Config(format!(
            "pixels.boundaries: must cover the tooth grid 0..{teeth}"
        )));
    }
    if n > k {
        return Err(Error::Config(format!(
            "pixels.count {n} exceeds supermode truncation {k}"
        )));
    }
    let env = partition.lo_envelope();
    let mut projection = DMatrix::zeros(n, k);
    for i in 0..n {
        let lo = partition.boundaries()[i];
        let hi = partition.boundaries()[i + 1];
        for j in 0..k {
            let mut acc = 0.0;
            for m in lo..hi {
                acc += env.value(m as f64) * basis.eigenvectors()[(m, j)];
            }
            projection[(i, j)] = acc;
        }
        let norm = projection.row(i).norm();
        if norm < 1e-10 {
            return Err(Error::EmptyPixel(i));
        }
        let scaled = projection.row(i) / norm;
        projection.row_mut(i).copy_from(&scaled);
    }
    let ortho_rows = linalg::orthonormalize_rows(&projection)?;
    let completion = linalg::complete_orthonormal(&ortho_rows)?;
    Ok(PixelMap { projection, completion })
}

/// Map a K-supermode state into the N pixel modes: apply the completion as
/// an orthogonal quadrature map, integrate out modes N+1..K, then apply
/// detection loss on every pixel.
pub fn to_pixels(
    state: &GaussianMixture,
    map: &PixelMap,
    eta_det: f64,
) -> Result<GaussianMixture> {
    let k = map.completion.nrows();
    if state.modes() != k {
        return Err(Error::DimensionMismatch(format!(
            "state has {} modes but the pixel map expects {k}",
            state.modes()
        )));
    }
    if !(eta_det > 0.0 && eta_det <= 1.0) {
        return Err(Error::Range(format!(
            "detector efficiency must lie in (0,1], got {eta_det}"
        )));
    }
    let n = map.party_count();
    // quadrature version of the K×K orthogonal completion: identical
    // action on the q and p sectors
    let mut s = DMatrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        for j in 0..k {
            s[(2 * i, 2 * j)] = map.completion[(i, j)];
            s[(2 * i + 1, 2 * j + 1)] = map.completion[(i, j)];
        }
    }
    let quad_map = ModeLinearMap::symplectic(s)?;
    let all_modes: Vec<usize> = (0..k).collect();
    let rotated = state.apply_map(&quad_map, &all_modes)?;
    let keep: Vec<usize> = (0..n).collect();
    let reduced = rotated.marginalize_modes(&keep)?;
    if eta_det < 1.0 {
        reduced.apply_loss(eta_det, &keep)
    } else {
        Ok(reduced)
    }
}
