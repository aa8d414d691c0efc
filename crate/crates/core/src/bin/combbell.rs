//! Command-line front end: scenario-driven exports and pipeline runs.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use nalgebra::DVector;

use combbell::bell::{InequalityKind, MeasurementSettings};
use combbell::error::Error;
use combbell::jsa::{build_jsa, decompose, squeezing_fraction, FractionNorm};
use combbell::orthant::OrthantIntegrator;
use combbell::scenario::{
    self, build_party_state, load_scenario, OutcomeReport, Scenario, TOOL_NAME, TOOL_VERSION,
};
use combbell::search::{parse_done_rows, parse_sweep, render_sweep_csv, sweep};

#[derive(Parser)]
#[command(name = "combbell", version, about = "Continuous-variable Bell tests on photon-subtracted frequency combs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Export the joint spectral coupling matrix as CSV (m,q,value).
    Jsa {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export supermode eigenvalues, squeezings, and eigenvectors.
    Supermodes {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Report the squeezing fraction captured by the first k modes.
        #[arg(long)]
        fraction: Option<usize>,
        /// Fraction norm: abs (Σ|λ|) or square (Σλ²).
        #[arg(long, default_value = "abs")]
        fraction_norm: String,
    },
    /// Export the Wigner function of one supermode after subtraction.
    Wigner {
        #[arg(long)]
        state: PathBuf,
        /// 1-based supermode index.
        #[arg(long, default_value_t = 1)]
        mode: usize,
        /// Grid as lo:hi:step, applied to both quadratures.
        #[arg(long, default_value = "-4:4:0.1", allow_hyphen_values = true)]
        grid: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate an inequality at fixed measurement angles (JSON to stdout).
    Bell {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        inequality: String,
        /// Comma-separated angles, two per party (radians).
        #[arg(long, allow_hyphen_values = true)]
        angles: String,
        /// Comma-separated per-party global offsets (first must be 0).
        #[arg(long, allow_hyphen_values = true)]
        offsets: Option<String>,
    },
    /// Sweep source parameters and write a results table.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Reuse completed rows from an existing output file.
        #[arg(long)]
        resume: bool,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the full pipeline with angle search; write the outcome JSON.
    Run {
        #[arg(long, conflicts_with = "preset")]
        scenario: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn provenance(scenario: &Scenario) -> String {
    format!("# {TOOL_NAME} {TOOL_VERSION} scenario={}\n", scenario.hash())
}

fn worker_count(cli_workers: Option<usize>) -> Option<usize> {
    cli_workers.or_else(|| {
        std::env::var("COMBBELL_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn with_pool<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> combbell::Result<T> + Send,
) -> combbell::Result<T> {
    match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
            pool.install(f)
        }
        None => f(),
    }
}

fn dispatch(cli: Cli) -> combbell::Result<()> {
    match cli.command {
        Command::Jsa { config, out } => {
            let sc = load_scenario(&config)?;
            let jsa = build_jsa(&sc.comb)?;
            let mut text = provenance(&sc);
            text.push_str("m,q,value\n");
            let v = jsa.values();
            for m in 0..v.nrows() {
                for q in 0..v.ncols() {
                    text.push_str(&format!("{m},{q},{}\n", v[(m, q)]));
                }
            }
            std::fs::write(&out, text)?;
            eprintln!("wrote {}", out.display());
            Ok(())
        }
        Command::Supermodes { config, out, fraction, fraction_norm } => {
            let sc = load_scenario(&config)?;
            let jsa = build_jsa(&sc.comb)?;
            let basis = decompose(&jsa, sc.comb.truncation, sc.comb.s1_target)?;
            let norm = match fraction_norm.as_str() {
                "abs" => FractionNorm::Abs,
                "square" => FractionNorm::Square,
                other => {
                    return Err(Error::Config(format!(
                        "fraction-norm must be abs|square, got {other}"
                    )))
                }
            };
            if let Some(k) = fraction {
                let full = decompose(&jsa, sc.comb.teeth_count, sc.comb.s1_target)?;
                eprintln!(
                    "squeezing fraction of first {k} modes: {:.6}",
                    squeezing_fraction(&full, k, norm)
                );
            }
            let teeth = sc.comb.teeth_count;
            let mut text = provenance(&sc);
            text.push_str("j,lambda,s");
            for m in 0..teeth {
                text.push_str(&format!(",v{m}"));
            }
            text.push('\n');
            for j in 0..basis.truncation() {
                text.push_str(&format!(
                    "{},{},{}",
                    j + 1,
                    basis.eigenvalues()[j],
                    basis.squeezings()[j]
                ));
                for m in 0..teeth {
                    text.push_str(&format!(",{}", basis.eigenvectors()[(m, j)]));
                }
                text.push('\n');
            }
            std::fs::write(&out, text)?;
            eprintln!("wrote {}", out.display());
            Ok(())
        }
        Command::Wigner { state, mode, grid, out } => {
            let sc = load_scenario(&state)?;
            let stages = build_party_state(&sc)?;
            let n = stages.subtracted.modes();
            if mode == 0 || mode > n {
                return Err(Error::Range(format!("mode {mode} outside 1..={n}")));
            }
            let single = stages.subtracted.marginalize_modes(&[mode - 1])?;
            let (lo, hi, step) = parse_grid(&grid)?;
            let count = ((hi - lo) / step).round() as usize + 1;
            let mut text = provenance(&sc);
            text.push_str("q,p,W\n");
            for i in 0..count {
                let q = lo + i as f64 * step;
                for j in 0..count {
                    let p = lo + j as f64 * step;
                    let w = single.evaluate(&DVector::from_vec(vec![q, p]));
                    text.push_str(&format!("{q},{p},{w}\n"));
                }
            }
            std::fs::write(&out, text)?;
            eprintln!("wrote {}", out.display());
            Ok(())
        }
        Command::Bell { scenario, inequality, angles, offsets } => {
            let sc = load_scenario(&scenario)?;
            let kind: InequalityKind = inequality.parse()?;
            let parties = kind.party_count();
            let angle_list = parse_floats(&angles)?;
            if angle_list.len() != 2 * parties {
                return Err(Error::Config(format!(
                    "{} needs {} angles, got {}",
                    kind.name(),
                    2 * parties,
                    angle_list.len()
                )));
            }
            let offset_list = match offsets {
                Some(text) => {
                    let list = parse_floats(&text)?;
                    if list.len() != parties {
                        return Err(Error::Config(format!(
                            "need {parties} offsets, got {}",
                            list.len()
                        )));
                    }
                    list
                }
                None => vec![0.0; parties],
            };
            let settings = MeasurementSettings::new(
                angle_list.chunks(2).map(|c| [c[0], c[1]]).collect(),
                offset_list,
            )?;
            let mut sc = sc;
            sc.inequality = kind;
            sc.pixels.count = parties;
            sc.validate()?;
            let stages = build_party_state(&sc)?;
            let integrator = OrthantIntegrator::default().with_cache();
            let outcome =
                combbell::bell::evaluate(&stages.party_state, kind, &settings, &integrator)?;
            let report = OutcomeReport::new(&sc, &outcome, stages.herald_prob);
            println!("{}", serde_json::to_string_pretty(&report).expect("serializes"));
            Ok(())
        }
        Command::Sweep { spec, out, resume, workers } => {
            let text = std::fs::read_to_string(&spec)?;
            let sweep_spec = parse_sweep(&text, &spec.display().to_string())?;
            let done = if resume && out.exists() {
                parse_done_rows(&std::fs::read_to_string(&out)?)
            } else {
                Default::default()
            };
            let rows = with_pool(worker_count(workers), || sweep(&sweep_spec, &done))?;
            std::fs::write(&out, render_sweep_csv(&sweep_spec, &rows))?;
            eprintln!("wrote {} ({} rows)", out.display(), rows.len());
            Ok(())
        }
        Command::Run { scenario: scenario_path, preset, out, workers } => {
            let sc = match (scenario_path, preset) {
                (Some(path), None) => load_scenario(&path)?,
                (None, Some(name)) => Scenario::preset(&name)?,
                (None, None) => {
                    return Err(Error::Config("give --scenario or --preset".into()))
                }
                _ => unreachable!("clap conflicts_with"),
            };
            if !combbell::subtraction::TapSpec::new(
                0,
                sc.subtraction.transmissivity,
                sc.subtraction.eta,
            )?
            .is_weak()
            {
                eprintln!(
                    "warning: tap transmissivity {} is outside the weak-tap regime",
                    sc.subtraction.transmissivity
                );
            }
            let (report, _) = with_pool(worker_count(workers), || scenario::run_pipeline(&sc))?;
            let json = serde_json::to_string_pretty(&report).expect("serializes");
            match out {
                Some(path) => {
                    std::fs::write(&path, json)?;
                    eprintln!(
                        "wrote {} (value {:.6}, herald {:.3e})",
                        path.display(),
                        report.value,
                        report.herald_prob
                    );
                }
                None => println!("{json}"),
            }
            Ok(())
        }
    }
}

fn parse_floats(text: &str) -> combbell::Result<Vec<f64>> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("cannot parse number {tok:?}")))
        })
        .collect()
}

fn parse_grid(text: &str) -> combbell::Result<(f64, f64, f64)> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!("grid must be lo:hi:step, got {text:?}")));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| Error::Config(format!("cannot parse grid component {p:?}")))
        })
        .collect::<combbell::Result<Vec<_>>>()?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0 && hi > lo) {
        return Err(Error::Config("grid needs hi > lo and step > 0".into()));
    }
    Ok((lo, hi, step))
}
