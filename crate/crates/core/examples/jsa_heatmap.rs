//! Build the joint spectral coupling matrix and print a coarse heat map
//! of its anti-diagonal ridge.

use combbell::jsa::{build_jsa, CombConfig};

fn main() {
    let cfg = CombConfig::desk_default();
    let jsa = build_jsa(&cfg).unwrap();
    let v = jsa.values();
    let m = v.nrows();

    println!("coupling matrix: {m}x{m}, pump width {} teeth", cfg.pump_envelope.width);
    println!("largest entry: {:.4}", v.iter().fold(0.0f64, |a, x| a.max(x.abs())));
    println!("most negative entry (sinc side lobe): {:.6}", v.iter().fold(0.0f64, |a, x| a.min(*x)));

    // 32x32 down-sampled magnitude map
    let chars = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
    let block = m / 32;
    println!("\n|L| down-sampled to 32x32 (blocks of {block}x{block}):");
    for bi in 0..32 {
        let mut line = String::new();
        for bj in 0..32 {
            let mut peak = 0.0f64;
            for i in 0..block {
                for j in 0..block {
                    peak = peak.max(v[(bi * block + i, bj * block + j)].abs());
                }
            }
            let idx = ((peak * 9.0).round() as usize).min(9);
            line.push(chars[idx]);
        }
        println!("  {line}");
    }
}
