//! Coarse-grain the supermode state into detector pixel modes and inspect
//! the resulting party covariances.

use combbell::jsa::{build_jsa, decompose, CombConfig};
use combbell::pixel::{build_pixel_map, to_pixels, PixelPartition};
use combbell::scenario::DEFAULT_LO_WIDTH;
use combbell::gaussian::GaussianMixture;
use combbell::jsa::GaussianEnvelope;

fn main() {
    let cfg = CombConfig::desk_default();
    let jsa = build_jsa(&cfg).unwrap();
    let basis = decompose(&jsa, cfg.truncation, 0.8).unwrap();
    let lo = GaussianEnvelope { center: 127.5, width: DEFAULT_LO_WIDTH };
    let partition = PixelPartition::even(2, cfg.teeth_count, lo).unwrap();
    let map = build_pixel_map(&basis, &partition).unwrap();

    println!("pixel rows in supermode coordinates (first 6 components):");
    for i in 0..2 {
        let row: Vec<String> = (0..6)
            .map(|j| format!("{:+.3}", map.projection()[(i, j)]))
            .collect();
        println!("  pixel {i}: [{}]", row.join(", "));
    }

    let state = GaussianMixture::squeezed_modes(basis.squeezings()).unwrap();
    let pixels = to_pixels(&state, &map, 1.0).unwrap();
    let g = pixels.terms()[0].covariance();
    println!("\ntwo-party covariance (q1,p1,q2,p2):");
    for i in 0..4 {
        let row: Vec<String> = (0..4).map(|j| format!("{:+.4}", g[(i, j)])).collect();
        println!("  [{}]", row.join(", "));
    }
    println!(
        "\nmean photons: supermodes {:.4} -> pixels {:.4}",
        state.mean_photons(),
        pixels.mean_photons()
    );
}
