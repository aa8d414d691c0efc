//! A small source-parameter sweep over the reference scenario, rendered
//! as the CSV the `sweep` subcommand writes.

use combbell::scenario::Scenario;
use combbell::search::{render_sweep_csv, sweep, SweepSpec};

fn main() {
    let mut spec = SweepSpec::from_base(Scenario::reference_tmsv());
    spec.s1 = vec![0.45, 0.55, 0.65, 0.75];
    spec.t = vec![0.95, 0.99];

    let rows = sweep(&spec, &Default::default()).unwrap();
    print!("{}", render_sweep_csv(&spec, &rows));

    let best = rows
        .iter()
        .filter_map(|(_, row)| row.as_ref().and_then(|r| r.best.as_ref()))
        .map(|b| b.value.abs())
        .fold(0.0f64, f64::max);
    eprintln!("\nbest |S2| across the sweep: {best:.6}");
}
