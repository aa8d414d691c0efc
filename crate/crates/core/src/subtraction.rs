//! Heralded photon subtraction.
//!
//! Vacuum ancillas are attached, coupled to target modes through weak beam
//! splitters, passed through the tap-efficiency loss channel, and read out
//! by on-off detectors in coincidence; ancillas are then integrated out
//! and the state renormalized. The two-photon-same-mode and
//! one-tap-per-mode constructions share this one herald engine; the 50-50
//! splitter of the two-photon variant is a configuration of it.
//!
//! Ancillas are appended after the signal modes internally. The reference
//! layout that lists ancillas first maps onto ours by: their modes (1, 2)
//! are our (n, n+1) and their mode k+2 is our mode k−1 for an n-mode
//! signal.

use crate::error::{Error, Result};
use crate::gaussian::{GaussianMixture, ModeLinearMap};

/// One weak-tap specification.
#[derive(Debug, Clone, Copy)]
pub struct TapSpec {
    pub target_mode: usize,
    pub transmissivity: f64,
    pub tap_efficiency: f64,
}

impl TapSpec {
    pub fn new(target_mode: usize, transmissivity: f64, tap_efficiency: f64) -> Result<Self> {
        if !(transmissivity > 0.0 && transmissivity <= 1.0) {
            return Err(Error::Range(format!(
                "tap transmissivity must lie in (0,1], got {transmissivity}"
            )));
        }
        if !(tap_efficiency > 0.0 && tap_efficiency <= 1.0) {
            return Err(Error::Range(format!(
                "tap efficiency must lie in (0,1], got {tap_efficiency}"
            )));
        }
        Ok(Self { target_mode, transmissivity, tap_efficiency })
    }

    /// The intended regime keeps T close to 1; callers may warn otherwise.
    pub fn is_weak(&self) -> bool {
        self.transmissivity >= 0.8
    }
}

/// Subtract two photons from one mode: one weak tap, a 50-50 split of the
/// tapped beam onto two on-off detectors, coincidence click.
///
/// Output has 4× the input term count with the sign pattern (+, −, −, +)
/// per input term; returns the normalized state and the heralding
/// probability.
pub fn subtract_two_same_mode(
    state: &GaussianMixture,
    tap: &TapSpec,
) -> Result<(GaussianMixture, f64)> {
    if tap.target_mode >= state.modes() {
        return Err(Error::Range(format!(
            "tap target {} out of range for {} modes",
            tap.target_mode,
            state.modes()
        )));
    }
    let n = state.modes();
    let with_anc = state.tensor(&GaussianMixture::vacuum(2)?)?;
    let (a1, a2) = (n, n + 1);
    let tapped = with_anc.apply_map(
        &ModeLinearMap::beam_splitter(tap.transmissivity)?,
        &[a1, tap.target_mode],
    )?;
    // detection-path efficiency on both heralding arms
    let lossy = tapped.apply_loss(tap.tap_efficiency, &[a1, a2])?;
    let split = lossy.apply_map(&ModeLinearMap::beam_splitter(0.5)?, &[a1, a2])?;
    let clicked = split.multiply_onoff_povm(a1)?.multiply_onoff_povm(a2)?;
    let keep: Vec<usize> = (0..n).collect();
    let reduced = clicked.marginalize_modes(&keep)?;
    reduced.normalize()
}

/// Subtract one photon from each of several distinct modes: one ancilla,
/// weak tap, and on-off detector per mode, all clicks in coincidence.
///
/// Output has 2^{taps} sign-patterned terms per input term. An empty tap
/// list returns the state unchanged with heralding probability 1.
pub fn subtract_one_per_mode(
    state: &GaussianMixture,
    taps: &[TapSpec],
) -> Result<(GaussianMixture, f64)> {
    if taps.is_empty() {
        return Ok((state.clone(), 1.0));
    }
    let n = state.modes();
    let mut seen = vec![false; n];
    for tap in taps {
        if tap.target_mode >= n {
            return Err(Error::Range(format!(
                "tap target {} out of range for {n} modes",
                tap.target_mode
            )));
        }
        if seen[tap.target_mode] {
            return Err(Error::Range(format!(
                "duplicate tap target {}",
                tap.target_mode
            )));
        }
        seen[tap.target_mode] = true;
    }
    let mut work = state.tensor(&GaussianMixture::vacuum(taps.len())?)?;
    for (i, tap) in taps.iter().enumerate() {
        let anc = n + i;
        work = work.apply_map(
            &ModeLinearMap::beam_splitter(tap.transmissivity)?,
            &[anc, tap.target_mode],
        )?;
        work = work.apply_loss(tap.tap_efficiency, &[anc])?;
    }
    for i in 0..taps.len() {
        work = work.multiply_onoff_povm(n + i)?;
    }
    let keep: Vec<usize> = (0..n).collect();
    let reduced = work.marginalize_modes(&keep)?;
    reduced.normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock;
    use crate::gaussian::ModeLinearMap;
    use nalgebra::DVector;

    #[test]
    fn tap_spec_validation() {
        assert!(TapSpec::new(0, 0.99, 1.0).is_ok());
        assert!(TapSpec::new(0, 0.0, 1.0).is_err());
        assert!(TapSpec::new(0, 1.1, 1.0).is_err());
        assert!(TapSpec::new(0, 0.9, 0.0).is_err());
        assert!(!TapSpec::new(0, 0.5, 1.0).unwrap().is_weak());
    }

    #[test]
    fn vacuum_input_cannot_herald() {
        let v = GaussianMixture::vacuum(1).unwrap();
        let tap = TapSpec::new(0, 0.99, 1.0).unwrap();
        assert!(matches!(
            subtract_two_same_mode(&v, &tap),
            Err(Error::UnphysicalHeralding)
        ));
    }

    #[test]
    fn full_transmission_cannot_herald() {
        let sq = GaussianMixture::squeezed_modes(&[1.0]).unwrap();
        let tap = TapSpec::new(0, 1.0, 1.0).unwrap();
        assert!(matches!(
            subtract_two_same_mode(&sq, &tap),
            Err(Error::UnphysicalHeralding)
        ));
    }

    #[test]
    fn four_terms_with_sign_pattern() {
        let sq = GaussianMixture::squeezed_modes(&[1.0]).unwrap();
        let tap = TapSpec::new(0, 0.99, 1.0).unwrap();
        let (out, p) = subtract_two_same_mode(&sq, &tap).unwrap();
        assert_eq!(out.terms().len(), 4);
        let signs: Vec<f64> = out.terms().iter().map(|t| t.weight().signum()).collect();
        assert_eq!(signs, vec![1.0, -1.0, -1.0, 1.0]);
        assert!(p > 0.0 && p < 1.0);
        assert!((out.total_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn herald_probability_matches_fock_oracle() {
        for &(s, t, dim, tol) in &[(0.6f64, 0.95f64, 40usize, 1e-8f64), (1.0, 0.99, 64, 1e-7)] {
            let sq = GaussianMixture::squeezed_modes(&[s]).unwrap();
            let tap = TapSpec::new(0, t, 1.0).unwrap();
            let (_, p) = subtract_two_same_mode(&sq, &tap).unwrap();
            let (p_oracle, _) = fock::two_photon_subtraction_oracle(s, t, dim);
            assert!(
                (p - p_oracle).abs() < tol,
                "s={s} T={t}: gaussian {p} vs fock {p_oracle}"
            );
        }
    }

    #[test]
    fn wigner_matches_fock_oracle() {
        // Wigner values of the heralded state converge slowly in the Fock
        // cutoff (amplitude-level truncation); dim 50 reaches ~1e-8 here.
        let (s, t) = (0.6, 0.95);
        let sq = GaussianMixture::squeezed_modes(&[s]).unwrap();
        let tap = TapSpec::new(0, t, 1.0).unwrap();
        let (out, _) = subtract_two_same_mode(&sq, &tap).unwrap();
        let (_, rho) = fock::two_photon_subtraction_oracle(s, t, 50);
        let qs: Vec<f64> = (0..5).map(|i| -2.0 + i as f64).collect();
        let ps = qs.clone();
        let oracle = fock::wigner_from_rho(&rho, &qs, &ps);
        for (i, &q) in qs.iter().enumerate() {
            for (j, &p) in ps.iter().enumerate() {
                let w = out.evaluate(&DVector::from_vec(vec![q, p]));
                assert!(
                    (w - oracle[i][j]).abs() < 1e-7,
                    "q={q} p={p}: {w} vs {}",
                    oracle[i][j]
                );
            }
        }
    }

    #[test]
    fn empty_tap_list_is_identity() {
        let sq = GaussianMixture::squeezed_modes(&[0.7, -0.7]).unwrap();
        let (out, p) = subtract_one_per_mode(&sq, &[]).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(out.terms().len(), sq.terms().len());
    }

    #[test]
    fn per_mode_taps_on_tmsv() {
        let s = 0.6;
        let t = 0.95;
        let base = GaussianMixture::squeezed_modes(&[s, -s]).unwrap();
        let tmsv = base
            .apply_map(&ModeLinearMap::beam_splitter(0.5).unwrap(), &[0, 1])
            .unwrap();
        let taps = [
            TapSpec::new(0, t, 1.0).unwrap(),
            TapSpec::new(1, t, 1.0).unwrap(),
        ];
        let (out, p) = subtract_one_per_mode(&tmsv, &taps).unwrap();
        assert_eq!(out.terms().len(), 4);
        let signs: Vec<f64> = out.terms().iter().map(|t| t.weight().signum()).collect();
        assert_eq!(signs, vec![1.0, -1.0, -1.0, 1.0]);
        // heralding probability against the number-basis oracle
        let p_oracle = fock::per_mode_subtraction_oracle(s, t, 36, 12);
        assert!(
            (p - p_oracle).abs() < 1e-7,
            "gaussian {p} vs fock {p_oracle}"
        );
    }

    #[test]
    fn heralded_state_is_even_parity() {
        let sq = GaussianMixture::squeezed_modes(&[0.8, 0.2]).unwrap();
        let tap = TapSpec::new(0, 0.97, 1.0).unwrap();
        let (out, _) = subtract_two_same_mode(&sq, &tap).unwrap();
        for k in 0..12 {
            let pt = DVector::from_fn(4, |i, _| ((i * 5 + k * 7) as f64 * 0.37).sin() * 1.5);
            let diff = out.evaluate(&pt) - out.evaluate(&(-pt.clone()));
            assert!(diff.abs() < 1e-12);
        }
    }

    #[test]
    fn herald_probability_vanishes_as_tap_weakens() {
        let sq = GaussianMixture::squeezed_modes(&[1.0]).unwrap();
        let mut last = f64::INFINITY;
        for &t in &[0.90, 0.95, 0.98, 0.995, 0.999] {
            let tap = TapSpec::new(0, t, 1.0).unwrap();
            let (_, p) = subtract_two_same_mode(&sq, &tap).unwrap();
            assert!(p < last, "T={t}: p={p} not monotone");
            last = p;
        }
    }

    #[test]
    fn uncorrelated_vacuum_mode_cannot_be_subtracted_from() {
        // mode 1 is vacuum and uncorrelated; taps on it cannot herald even
        // though mode 0 is squeezed
        let state = GaussianMixture::squeezed_modes(&[1.2, 0.0]).unwrap();
        let tap = TapSpec::new(1, 0.95, 1.0).unwrap();
        assert!(matches!(
            subtract_two_same_mode(&state, &tap),
            Err(Error::UnphysicalHeralding)
        ));
    }
}
