//! Herald a two-photon subtraction from a squeezed mode and show the
//! resulting non-Gaussian Wigner function.

use combbell::gaussian::GaussianMixture;
use combbell::subtraction::{subtract_two_same_mode, TapSpec};
use nalgebra::DVector;

fn main() {
    let s = 0.8;
    let tap = TapSpec::new(0, 0.99, 1.0).unwrap();
    let state = GaussianMixture::squeezed_modes(&[s]).unwrap();
    let (heralded, p) = subtract_two_same_mode(&state, &tap).unwrap();

    println!("squeezed s = {s}, tap T = {}", tap.transmissivity);
    println!("heralding probability: {p:.6e}");
    println!("mixture terms and signed weights:");
    for (k, term) in heralded.terms().iter().enumerate() {
        println!("  term {k}: weight {:+.6}", term.weight());
    }

    let origin = heralded.evaluate(&DVector::from_vec(vec![0.0, 0.0]));
    println!("W(0,0) = {origin:.6} (positive: even parity survives two-photon subtraction)");

    println!("\nW along the p axis (negative ring around the origin):");
    for i in 0..25 {
        let p = -1.5 + 0.125 * i as f64;
        let w = heralded.evaluate(&DVector::from_vec(vec![0.0, p]));
        let bar = ((w.abs() * 100.0) as usize).min(58);
        let sign = if w < 0.0 { '-' } else { '+' };
        println!("  p={p:+6.3}  {w:+.4}  {sign}{}", "#".repeat(bar));
    }
}
