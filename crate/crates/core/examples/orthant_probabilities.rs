//! Orthant probabilities three ways: arcsin closed form, sequential
//! conditioning, and Monte Carlo.

use combbell::orthant::OrthantIntegrator;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let integ = OrthantIntegrator::new(1e-9);

    println!("2D: closed form vs sequential conditioning");
    for rho in [-0.9f64, -0.3, 0.4, 0.95] {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        let exact = 0.25 + rho.asin() / (2.0 * std::f64::consts::PI);
        let sc = integ.sequential_conditioning(&cov).unwrap();
        println!(
            "  rho={rho:+.2}: exact {exact:.12}  sc {:.12}  (diff {:.1e})",
            sc.value,
            (sc.value - exact).abs()
        );
    }

    println!("\n4D random covariance: sequential conditioning vs Monte Carlo");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
    let cov = &a * a.transpose() + DMatrix::identity(4, 4) * 0.3;
    for bits in 0..4u32 {
        let signs: Vec<i8> = (0..4).map(|i| if bits >> i & 1 == 1 { -1 } else { 1 }).collect();
        let sc = integ.probability(&cov, &signs).unwrap();
        let mc = OrthantIntegrator::new(1e-2)
            .monte_carlo(&fold(&cov, &signs), 4_000_000, 99)
            .unwrap()
            .value;
        println!(
            "  signs {:?}: sc {:.8} ± {:.1e}   mc {:.8}",
            signs, sc.value, sc.error, mc
        );
    }
}

fn fold(cov: &DMatrix<f64>, signs: &[i8]) -> DMatrix<f64> {
    DMatrix::from_fn(cov.nrows(), cov.ncols(), |i, j| {
        cov[(i, j)] * (signs[i] * signs[j]) as f64
    })
}
