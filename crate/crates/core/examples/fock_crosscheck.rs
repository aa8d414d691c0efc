//! Cross-check the Gaussian-mixture pipeline against the independent
//! truncated number-basis simulation.

use combbell::fock;
use combbell::gaussian::GaussianMixture;
use combbell::subtraction::{subtract_two_same_mode, TapSpec};
use nalgebra::DVector;

fn main() {
    let (s, t) = (0.6, 0.95);
    let state = GaussianMixture::squeezed_modes(&[s]).unwrap();
    let tap = TapSpec::new(0, t, 1.0).unwrap();
    let (heralded, p_gauss) = subtract_two_same_mode(&state, &tap).unwrap();

    println!("two-photon subtraction, s = {s}, T = {t}");
    for dim in [30usize, 40, 50, 60] {
        let (p_fock, rho) = fock::two_photon_subtraction_oracle(s, t, dim);
        let qs = [0.0, 1.0];
        let ps = [0.0, -0.5];
        let grid = fock::wigner_from_rho(&rho, &qs, &ps);
        let mut worst = 0.0f64;
        for (i, &q) in qs.iter().enumerate() {
            for (j, &p) in ps.iter().enumerate() {
                let w = heralded.evaluate(&DVector::from_vec(vec![q, p]));
                worst = worst.max((w - grid[i][j]).abs());
            }
        }
        println!(
            "  cutoff {dim:2}: herald diff {:+.3e}, max Wigner diff {:.3e}",
            p_fock - p_gauss,
            worst
        );
    }
    println!("(the number-basis oracle converges to the Gaussian result as the cutoff grows)");
}
