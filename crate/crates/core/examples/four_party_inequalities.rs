//! Four detector pixels: evaluate the Mermin-Klyshko and Mermin
//! inequalities at fixed settings (the full grid search lives in the
//! paper-4party preset).

use combbell::bell::{mermin4, mk4, MeasurementSettings};
use combbell::scenario::{build_party_state, Scenario};

fn main() {
    let scenario = Scenario::paper_four_party();
    let stages = build_party_state(&scenario).unwrap();
    println!(
        "four-party pixel state: {} terms, herald {:.3e}",
        stages.party_state.terms().len(),
        stages.herald_prob
    );

    // a representative setting pattern: staggered angle pairs per party
    let settings = MeasurementSettings::new(
        (0..4)
            .map(|p| {
                let base = p as f64 * std::f64::consts::PI / 8.0;
                [base, base + std::f64::consts::PI / 4.0]
            })
            .collect(),
        vec![0.0; 4],
    )
    .unwrap();

    let bk = mk4(&stages.party_state, &settings).unwrap();
    println!("BK4 at the sample settings: {:+.6}", bk.value);
    let m = mermin4(&stages.party_state, &settings).unwrap();
    println!("M4  at the sample settings: {:+.6}", m.value);
    println!("(violation requires |value| > 1; the grid search maximizes it)");
}
