//! Diagonalize the coupling matrix and report the supermode spectrum and
//! truncation quality.

use combbell::jsa::{build_jsa, decompose, squeezing_fraction, CombConfig, FractionNorm};

fn main() {
    let cfg = CombConfig::desk_default();
    let jsa = build_jsa(&cfg).unwrap();
    let full = decompose(&jsa, cfg.teeth_count, cfg.s1_target).unwrap();

    println!("first 12 supermodes (s1 target {}):", cfg.s1_target);
    println!("  j   lambda/lambda1   squeezing s_j");
    let l1 = full.eigenvalues()[0];
    for j in 0..12 {
        println!(
            "  {:2}  {:+14.6}  {:+12.6}",
            j + 1,
            full.eigenvalues()[j] / l1,
            full.squeezings()[j]
        );
    }
    for k in [10usize, 25, 50, 100] {
        println!(
            "fraction of squeezing in first {k:3} modes: {:.4}",
            squeezing_fraction(&full, k, FractionNorm::Abs)
        );
    }
    println!(
        "|lambda_50 / lambda_1| = {:.4}",
        (full.eigenvalues()[49] / l1).abs()
    );
}
