//! End-to-end checks of the command-line interface: file formats, exit
//! codes, and the outcome round trip.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_combbell"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("combbell-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn jsa_export_has_header_and_provenance() {
    let dir = tmp_dir("jsa");
    let config = dir.join("scenario.toml");
    // small comb keeps the CSV tiny
    write(
        &config,
        "preset = \"paper-2party\"\n[comb]\nteeth = 32\ncenter = 16\npump_center = 15.5\npump_width = 2.0\nzeta2 = 4e-3\nk = 8\n",
    );
    let out = dir.join("jsa.csv");
    let status = bin()
        .args(["jsa", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let prov = lines.next().unwrap();
    assert!(prov.starts_with("# combbell "), "{prov}");
    assert!(prov.contains("scenario="));
    assert_eq!(lines.next().unwrap(), "m,q,value");
    assert_eq!(text.lines().count(), 2 + 32 * 32);
}

#[test]
fn supermodes_export_shape() {
    let dir = tmp_dir("modes");
    let config = dir.join("scenario.toml");
    write(
        &config,
        "preset = \"paper-2party\"\n[comb]\nteeth = 32\ncenter = 16\npump_center = 15.5\npump_width = 2.0\nzeta2 = 4e-3\nk = 6\n",
    );
    let out = dir.join("modes.csv");
    let status = bin()
        .args(["supermodes", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let header = text.lines().nth(1).unwrap();
    assert!(header.starts_with("j,lambda,s,v0,"));
    assert!(header.ends_with(",v31"));
    assert_eq!(text.lines().count(), 2 + 6);
}

#[test]
fn wigner_export_grid() {
    let dir = tmp_dir("wigner");
    let config = dir.join("scenario.toml");
    // the two-photon-subtracted supermode has a negative ring
    write(&config, "preset = \"paper-2party\"\n");
    let out = dir.join("wigner.csv");
    let status = bin()
        .args(["wigner", "--state"])
        .arg(&config)
        .args(["--mode", "1", "--grid", "-2:2:0.5", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "q,p,W");
    assert_eq!(text.lines().count(), 2 + 9 * 9);
    // the heralded state is non-Gaussian: some W values are negative
    let any_negative = text
        .lines()
        .skip(2)
        .any(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap() < 0.0);
    assert!(any_negative, "expected negative Wigner regions");
}

#[test]
fn bell_outcome_round_trips_through_fixed_angles() {
    let dir = tmp_dir("roundtrip");
    let config = dir.join("scenario.toml");
    write(&config, "preset = \"reference-tmsv\"\n[search]\nsteps = 8\n");
    let out = dir.join("outcome.json");
    let status = bin()
        .args(["run", "--scenario"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["tool"], "combbell");
    assert!(report["scenario_hash"].as_str().unwrap().len() == 16);
    let value = report["value"].as_f64().unwrap();
    let angles: Vec<f64> = report["settings"]["angles"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|pair| pair.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()))
        .collect();
    let angle_arg = angles
        .iter()
        .map(|a| format!("{a}"))
        .collect::<Vec<_>>()
        .join(",");
    // feed the optimal angles back through the fixed-angle evaluator
    let output = bin()
        .args(["bell", "--scenario"])
        .arg(&config)
        .args(["--inequality", "chsh", "--angles", &angle_arg])
        .output()
        .unwrap();
    assert!(output.status.success());
    let fixed: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let revalue = fixed["value"].as_f64().unwrap();
    assert!(
        (value - revalue).abs() < 1e-10,
        "round trip: {value} vs {revalue}"
    );
    // violation is data, not an error: exit code stays 0 either way
}

#[test]
fn sweep_writes_pinned_header_and_resumes() {
    let dir = tmp_dir("sweep");
    let spec = dir.join("sweep.toml");
    write(
        &spec,
        "preset = \"reference-tmsv\"\n[search]\nsteps = 8\nrefine = false\n[ranges]\ns1 = [0.5, 0.65]\n",
    );
    let out = dir.join("results.csv");
    let status = bin()
        .args(["sweep", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(&out)
        .args(["--workers", "2"])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(
        text.lines().nth(1).unwrap(),
        "s1,T,eta_sub,eta_det,lo_width,inequality,best_value,angles,herald_prob,ms"
    );
    assert_eq!(text.lines().count(), 2 + 2);
    // resume reuses rows verbatim
    let status = bin()
        .args(["sweep", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(&out)
        .arg("--resume")
        .status()
        .unwrap();
    assert!(status.success());
    let text2 = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text, text2);
}

#[test]
fn usage_and_numerical_exit_codes() {
    let dir = tmp_dir("exitcodes");
    // bad config -> exit 1
    let bad = dir.join("bad.toml");
    write(&bad, "preset = \"paper-2party\"\n[subtraction]\nt = 1.5\n");
    let status = bin()
        .args(["run", "--scenario"])
        .arg(&bad)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    // missing file -> exit 1
    let status = bin()
        .args(["run", "--scenario"])
        .arg(dir.join("nope.toml"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    // unphysical heralding (T = 1 exactly) -> numerical failure, exit 2
    let unphysical = dir.join("unphysical.toml");
    write(&unphysical, "preset = \"reference-tmsv\"\n[subtraction]\nt = 1.0\n");
    let status = bin()
        .args(["run", "--scenario"])
        .arg(&unphysical)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
