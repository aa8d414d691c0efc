//! Truncated number-basis reference simulation.
//!
//! Independent of the Gaussian-mixture machinery: states are amplitude
//! vectors over a truncated Fock space, beam splitters are applied by
//! scaled Taylor expansion of the exact generator, and Wigner functions
//! are obtained from the position representation. Used to cross-check
//! heralding probabilities and Wigner values of the heralded-subtraction
//! pipeline.

use nalgebra::DMatrix;

/// Multimode real amplitude vector over truncated Fock space.
#[derive(Debug, Clone)]
pub struct FockState {
    dims: Vec<usize>,
    amps: Vec<f64>,
}

impl FockState {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn strides(&self) -> Vec<usize> {
        let n = self.dims.len();
        let mut s = vec![1usize; n];
        for i in (0..n - 1).rev() {
            s[i] = s[i + 1] * self.dims[i + 1];
        }
        s
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Vacuum in every mode.
    pub fn vacuum(dims: &[usize]) -> Self {
        let total: usize = dims.iter().product();
        let mut amps = vec![0.0; total];
        amps[0] = 1.0;
        Self { dims: dims.to_vec(), amps }
    }

    /// Single-mode squeezed vacuum with quadrature variances
    /// (e^{2s}/2, e^{−2s}/2), i.e. the q quadrature is anti-squeezed for
    /// s > 0.
    pub fn squeezed_vacuum(s: f64, dim: usize) -> Self {
        Self { dims: vec![dim], amps: squeezed_amps(s, dim) }
    }

    pub fn tensor(&self, other: &FockState) -> FockState {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        FockState { dims, amps }
    }

    /// Beam splitter of transmissivity T on the ordered mode pair (a, b):
    /// a' = √T a + √(1−T) b, exactly matching the Gaussian-side matrix.
    pub fn apply_beam_splitter(&mut self, mode_a: usize, mode_b: usize, t: f64) {
        assert!(mode_a != mode_b);
        assert!((0.0..=1.0).contains(&t));
        let theta = t.sqrt().clamp(-1.0, 1.0).acos();
        if theta == 0.0 {
            return;
        }
        // scaled Taylor expansion of exp(θ (a†b − a b†))
        let coupling = ((self.dims[mode_a] * self.dims[mode_b]) as f64).sqrt();
        let steps = (theta * coupling / 0.4).ceil().max(1.0) as usize;
        let h = theta / steps as f64;
        for _ in 0..steps {
            let mut acc = self.amps.clone();
            let mut term = self.amps.clone();
            for k in 1..=40 {
                term = self.apply_generator(&term, mode_a, mode_b);
                let scale = h / k as f64;
                let mut sq = 0.0;
                for (t, a) in term.iter_mut().zip(acc.iter_mut()) {
                    *t *= scale;
                    *a += *t;
                    sq += *t * *t;
                }
                if sq.sqrt() < 1e-17 {
                    break;
                }
            }
            self.amps = acc;
        }
    }

    /// Apply K = a†b − a b† to an amplitude vector (a = mode_a).
    fn apply_generator(&self, v: &[f64], mode_a: usize, mode_b: usize) -> Vec<f64> {
        let strides = self.strides();
        let (sa, sb) = (strides[mode_a], strides[mode_b]);
        let (da, db) = (self.dims[mode_a], self.dims[mode_b]);
        let mut out = vec![0.0; v.len()];
        for (idx, &amp) in v.iter().enumerate() {
            if amp == 0.0 {
                continue;
            }
            let na = (idx / sa) % da;
            let nb = (idx / sb) % db;
            // a†b: |na+1, nb-1> gains sqrt((na+1) nb) amp
            if nb >= 1 && na + 1 < da {
                let f = (((na + 1) * nb) as f64).sqrt();
                out[idx + sa - sb] += f * amp;
            }
            // -a b†: |na-1, nb+1> gains -sqrt(na (nb+1)) amp
            if na >= 1 && nb + 1 < db {
                let f = ((na * (nb + 1)) as f64).sqrt();
                out[idx - sa + sb] -= f * amp;
            }
        }
        out
    }

    /// Probability that the listed modes all register at least one photon
    /// (on-off coincidence), plus the conditional reduced density matrix of
    /// mode `keep` (normalized).
    pub fn herald_click_all(&self, click_modes: &[usize], keep: usize) -> (f64, DMatrix<f64>) {
        let strides = self.strides();
        let dk = self.dims[keep];
        let sk = strides[keep];
        let mut p = 0.0;
        let mut rho = DMatrix::<f64>::zeros(dk, dk);
        for (idx, &amp) in self.amps.iter().enumerate() {
            if amp == 0.0 {
                continue;
            }
            if !click_modes.iter().all(|&m| (idx / strides[m]) % self.dims[m] >= 1) {
                continue;
            }
            let nk = (idx / sk) % dk;
            p += amp * amp;
            // pair with same environment indices, different keep index
            let base = idx - nk * sk;
            for mk in 0..dk {
                let other = self.amps[base + mk * sk];
                if other != 0.0 {
                    rho[(nk, mk)] += amp * other;
                }
            }
        }
        if p > 0.0 {
            rho /= p;
        }
        (p, rho)
    }

    /// Coincidence probability alone.
    pub fn herald_probability(&self, click_modes: &[usize]) -> f64 {
        let strides = self.strides();
        self.amps
            .iter()
            .enumerate()
            .filter(|(idx, _)| {
                click_modes
                    .iter()
                    .all(|&m| (idx / strides[m]) % self.dims[m] >= 1)
            })
            .map(|(_, a)| a * a)
            .sum()
    }
}

fn squeezed_amps(s: f64, dim: usize) -> Vec<f64> {
    let t = s.tanh();
    let mut amps = vec![0.0; dim];
    let mut c = 1.0 / s.cosh().sqrt();
    let mut n = 0usize;
    while 2 * n < dim {
        amps[2 * n] = c;
        let k = (2 * n) as f64;
        c *= t * ((k + 1.0) / (k + 2.0)).sqrt();
        n += 1;
    }
    amps
}

/// Normalized Hermite functions ψ_0..ψ_{nmax−1} at x (vacuum variance 1/2).
pub fn hermite_functions(nmax: usize, x: f64) -> Vec<f64> {
    let mut psi = vec![0.0; nmax];
    if nmax == 0 {
        return psi;
    }
    psi[0] = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    if nmax > 1 {
        psi[1] = x * std::f64::consts::SQRT_2 * psi[0];
    }
    for n in 2..nmax {
        let nf = n as f64;
        psi[n] = x * (2.0 / nf).sqrt() * psi[n - 1] - ((nf - 1.0) / nf).sqrt() * psi[n - 2];
    }
    psi
}

/// Single-mode Wigner function from a density matrix in the Fock basis,
/// evaluated on a (q, p) grid via the position-representation integral
/// W(q,p) = (1/π) ∫ dy ⟨q+y|ρ|q−y⟩ e^{−2ipy}.
pub fn wigner_from_rho(rho: &DMatrix<f64>, qs: &[f64], ps: &[f64]) -> Vec<Vec<f64>> {
    let dim = rho.nrows();
    // Hermite functions up to n ≈ 70 carry support out to |x| ≈ 12
    let half_range = 13.0;
    let n_nodes = 1301usize;
    let h = 2.0 * half_range / (n_nodes - 1) as f64;
    let ys: Vec<f64> = (0..n_nodes).map(|i| -half_range + i as f64 * h).collect();

    qs.iter()
        .map(|&q| {
            // f(y) = ψ(q+y)ᵀ ρ ψ(q−y)
            let f: Vec<f64> = ys
                .iter()
                .map(|&y| {
                    let left = hermite_functions(dim, q + y);
                    let right = hermite_functions(dim, q - y);
                    let mut acc = 0.0;
                    for m in 0..dim {
                        if left[m] == 0.0 {
                            continue;
                        }
                        let mut row = 0.0;
                        for n in 0..dim {
                            row += rho[(m, n)] * right[n];
                        }
                        acc += left[m] * row;
                    }
                    acc
                })
                .collect();
            ps.iter()
                .map(|&p| {
                    let mut sum = 0.0;
                    for (i, &y) in ys.iter().enumerate() {
                        let w = if i == 0 || i == n_nodes - 1 { 0.5 } else { 1.0 };
                        sum += w * f[i] * (2.0 * p * y).cos();
                    }
                    sum * h / std::f64::consts::PI
                })
                .collect()
        })
        .collect()
}

/// Two-photon subtraction from a single squeezed mode: weak tap of
/// transmissivity T into one ancilla, 50-50 split onto two on-off
/// detectors, coincidence click. Returns the heralding probability and the
/// conditional signal density matrix.
pub fn two_photon_subtraction_oracle(s: f64, t: f64, dim: usize) -> (f64, DMatrix<f64>) {
    let signal = FockState::squeezed_vacuum(s, dim);
    let ancillas = FockState::vacuum(&[dim, dim]);
    let mut joint = signal.tensor(&ancillas);
    // tap: ancilla 1 picks up sqrt(1-T) of the signal
    joint.apply_beam_splitter(1, 0, t);
    // 50-50 between the two ancillas
    joint.apply_beam_splitter(1, 2, 0.5);
    joint.herald_click_all(&[1, 2], 0)
}

/// One photon subtracted from each arm of a two-mode squeezed vacuum built
/// as BS(0.5) on SMS(s) ⊗ SMS(−s). Returns the heralding probability.
pub fn per_mode_subtraction_oracle(s: f64, t: f64, dim: usize, anc_dim: usize) -> f64 {
    let sig = FockState::squeezed_vacuum(s, dim).tensor(&FockState::squeezed_vacuum(-s, dim));
    let mut joint = sig.tensor(&FockState::vacuum(&[anc_dim, anc_dim]));
    joint.apply_beam_splitter(0, 1, 0.5);
    joint.apply_beam_splitter(2, 0, t);
    joint.apply_beam_splitter(3, 1, t);
    joint.herald_probability(&[2, 3])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squeezed_amps_match_closed_forms() {
        let s = 1.0;
        let dim = 64;
        let st = FockState::squeezed_vacuum(s, dim);
        // truncation tail at this cutoff is ~1e-8
        assert!((st.norm() - 1.0).abs() < 1e-7);
        // mean photon number sinh² s
        let nbar: f64 = st
            .amps
            .iter()
            .enumerate()
            .map(|(n, a)| n as f64 * a * a)
            .sum();
        assert!((nbar - s.sinh().powi(2)).abs() < 1e-6, "nbar={nbar}");
        // <q²> = e^{2s}/2 with q = (a + a†)/√2
        let mut q2 = 0.0;
        for n in 0..dim {
            q2 += st.amps[n] * st.amps[n] * (n as f64 + 0.5);
            if n + 2 < dim {
                q2 += st.amps[n] * st.amps[n + 2] * (((n + 1) * (n + 2)) as f64).sqrt();
            }
        }
        assert!(
            (q2 - 0.5 * (2.0 * s).exp()).abs() < 1e-5,
            "q2={q2} expected {}",
            0.5 * (2.0 * s).exp()
        );
        // vacuum overlap 1/cosh s
        assert!((st.amps[0].powi(2) - 1.0 / s.cosh()).abs() < 1e-14);
    }

    #[test]
    fn beam_splitter_is_unitary_and_identity_at_t1() {
        let st = FockState::squeezed_vacuum(0.8, 24).tensor(&FockState::vacuum(&[24]));
        let mut moved = st.clone();
        moved.apply_beam_splitter(0, 1, 1.0);
        for (a, b) in moved.amps.iter().zip(&st.amps) {
            assert!((a - b).abs() < 1e-14);
        }
        // unitary: norm preserved (the truncated input itself is not
        // exactly normalized)
        let before = moved.norm();
        moved.apply_beam_splitter(0, 1, 0.77);
        assert!((moved.norm() - before).abs() < 1e-12);
    }

    #[test]
    fn single_photon_splits_like_amplitudes() {
        // |1, 0> through BS(T): amplitude sqrt(T) stays, sqrt(1-T) crosses
        let mut st = FockState::vacuum(&[3, 3]);
        st.amps[3] = 1.0; // |1,0>
        st.amps[0] = 0.0;
        st.apply_beam_splitter(0, 1, 0.7);
        let p_stay = st.amps[3].powi(2);
        let p_cross = st.amps[1].powi(2);
        assert!((p_stay - 0.7).abs() < 1e-12);
        assert!((p_cross - 0.3).abs() < 1e-12);
    }

    #[test]
    fn wigner_of_vacuum_and_one_photon() {
        let mut rho = DMatrix::<f64>::zeros(8, 8);
        rho[(0, 0)] = 1.0;
        let grid = wigner_from_rho(&rho, &[0.0, 0.5], &[0.0, -0.5]);
        let w00 = grid[0][0];
        assert!((w00 - 1.0 / std::f64::consts::PI).abs() < 1e-10);
        let w = grid[1][1]; // q=0.5, p=-0.5
        let expect = (1.0 / std::f64::consts::PI) * (-0.5f64).exp();
        assert!((w - expect).abs() < 1e-10);
        let mut rho1 = DMatrix::<f64>::zeros(8, 8);
        rho1[(1, 1)] = 1.0;
        let grid1 = wigner_from_rho(&rho1, &[0.0], &[0.0]);
        assert!((grid1[0][0] + 1.0 / std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        // trapezoid integral of ψ_m ψ_n over [-10, 10]
        let n = 6;
        let pts = 2001;
        let h = 20.0 / (pts - 1) as f64;
        let mut gram = vec![vec![0.0; n]; n];
        for i in 0..pts {
            let x = -10.0 + i as f64 * h;
            let w = if i == 0 || i == pts - 1 { 0.5 } else { 1.0 };
            let psi = hermite_functions(n, x);
            for a in 0..n {
                for b in 0..n {
                    gram[a][b] += w * h * psi[a] * psi[b];
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((gram[a][b] - expect).abs() < 1e-12);
            }
        }
    }
}
