//! Full two-party pipeline: comb source, two-photon subtraction from the
//! leading supermode, two detector pixels, CHSH search.

use combbell::scenario::{run_pipeline, Scenario};

fn main() {
    let scenario = Scenario::paper_two_party();
    println!(
        "comb: {} teeth, pump width {}, s1 = {}, tap T = {}",
        scenario.comb.teeth_count,
        scenario.comb.pump_envelope.width,
        scenario.comb.s1_target,
        scenario.subtraction.transmissivity
    );
    let (report, outcome) = run_pipeline(&scenario).unwrap();
    println!("heralding probability: {:.4e}", report.herald_prob);
    println!("best S2 = {:.6}", outcome.value.abs());
    if outcome.value.abs() > 1.0 {
        println!("-> violates the local-realistic bound");
    } else {
        println!("-> no violation at these parameters");
    }
    println!("scenario hash: {}", report.scenario_hash);
}
