//! Angle-grid maximization of Bell values and source-parameter sweeps.
//!
//! The grid stage evaluates every correlator once per angle tuple and then
//! scans setting assignments combinatorially, so its cost is the
//! correlator table, not the assignment count. Local polishing is a
//! derivative-free coordinate search with shrinking step. Sweeps run the
//! whole pipeline per parameter tuple in parallel with a fixed output
//! order.

use rayon::prelude::*;

use crate::bell::{
    self, BellOutcome, CorrelatorEntry, InequalityKind, MeasurementSettings,
};
use crate::error::{Error, Result};
use crate::gaussian::GaussianMixture;
use crate::orthant::OrthantIntegrator;
use crate::scenario::{build_party_state, build_party_state_from_basis, Scenario, SourceKind};

/// Measurement-angle grid over [0, π): sign-flip antisymmetry of the
/// correlators makes the half-circle sufficient.
#[derive(Debug, Clone, Copy)]
pub struct AngleGrid {
    pub steps_per_angle: usize,
    /// Whether local refinement may move the per-party global offsets.
    /// Offsets reparameterize the angle space, so the grid itself never
    /// scans them.
    pub include_offsets: bool,
}

impl AngleGrid {
    pub fn new(steps_per_angle: usize, include_offsets: bool) -> Result<Self> {
        if steps_per_angle < 4 {
            return Err(Error::Range(format!(
                "angle grid needs at least 4 steps, got {steps_per_angle}"
            )));
        }
        Ok(Self { steps_per_angle, include_offsets })
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.steps_per_angle)
            .map(|k| k as f64 * std::f64::consts::PI / self.steps_per_angle as f64)
            .collect()
    }

    pub fn step(&self) -> f64 {
        std::f64::consts::PI / self.steps_per_angle as f64
    }
}

impl Default for AngleGrid {
    fn default() -> Self {
        Self { steps_per_angle: 24, include_offsets: false }
    }
}

/// Anything that can produce N-party correlators at given effective
/// angles. Implemented by pipeline states; test models implement it with
/// closed forms.
pub trait CorrelatorSource: Sync {
    fn party_count(&self) -> usize;
    fn correlator(&self, thetas: &[f64]) -> Result<f64>;
}

/// A Gaussian mixture with a shared (memoizing) orthant integrator.
pub struct StateCorrelators<'a> {
    state: &'a GaussianMixture,
    integrator: OrthantIntegrator,
}

impl<'a> StateCorrelators<'a> {
    pub fn new(state: &'a GaussianMixture) -> Self {
        Self { state, integrator: OrthantIntegrator::default().with_cache() }
    }
}

impl CorrelatorSource for StateCorrelators<'_> {
    fn party_count(&self) -> usize {
        self.state.modes()
    }

    fn correlator(&self, thetas: &[f64]) -> Result<f64> {
        let qmix = bell::q_marginal(self.state, thetas)?;
        bell::correlator(&qmix, &self.integrator)
    }
}

struct Candidate {
    value: f64,
    // grid indices of (a1, a2, b1, b2, ...), party-major
    indices: Vec<usize>,
}

/// Keep the best `m` candidates under the total order
/// (|value| descending, index tuple ascending).
fn push_candidate(top: &mut Vec<Candidate>, cand: Candidate, m: usize) {
    let pos = top.partition_point(|c| better(c, &cand));
    if pos >= m {
        return;
    }
    top.insert(pos, cand);
    top.truncate(m);
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    match a.value.abs().partial_cmp(&b.value.abs()).unwrap() {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => a.indices < b.indices,
    }
}

fn merge_candidates(mut lists: Vec<Vec<Candidate>>, m: usize) -> Vec<Candidate> {
    let mut all: Vec<Candidate> = lists.drain(..).flatten().collect();
    all.sort_by(|a, b| {
        b.value
            .abs()
            .partial_cmp(&a.value.abs())
            .unwrap()
            .then_with(|| a.indices.cmp(&b.indices))
    });
    all.truncate(m);
    all
}

/// Exhaustive grid search returning the top `m` setting tuples by |value|,
/// ties broken by the lexicographically smallest angle tuple.
pub fn grid_search_source(
    source: &dyn CorrelatorSource,
    kind: InequalityKind,
    grid: &AngleGrid,
    m: usize,
) -> Result<Vec<BellOutcome>> {
    if source.party_count() != kind.party_count() {
        return Err(Error::PartyCount {
            expected: kind.party_count(),
            got: source.party_count(),
        });
    }
    let angles = grid.angles();
    let steps = angles.len();
    let candidates = match kind {
        InequalityKind::Chsh => {
            let table: Vec<f64> = (0..steps * steps)
                .into_par_iter()
                .map(|idx| source.correlator(&[angles[idx / steps], angles[idx % steps]]))
                .collect::<Result<Vec<_>>>()?;
            let e = |a: usize, b: usize| table[a * steps + b];
            let per_pair: Vec<Vec<Candidate>> = (0..steps * steps)
                .into_par_iter()
                .map(|pair| {
                    let (a1, a2) = (pair / steps, pair % steps);
                    let mut top = Vec::new();
                    for b1 in 0..steps {
                        for b2 in 0..steps {
                            let v = 0.5 * (e(a1, b1) + e(a1, b2) + e(a2, b1) - e(a2, b2));
                            push_candidate(
                                &mut top,
                                Candidate { value: v, indices: vec![a1, a2, b1, b2] },
                                m,
                            );
                        }
                    }
                    top
                })
                .collect();
            merge_candidates(per_pair, m)
        }
        InequalityKind::Mk4 | InequalityKind::Mermin4 => {
            if steps > 12 {
                return Err(Error::Config(format!(
                    "four-party grids above 12 steps per angle are intractable (got {steps}); \
                     use the coarse grid plus refinement"
                )));
            }
            let s2 = steps * steps;
            let s3 = s2 * steps;
            let table: Vec<f64> = (0..s3 * steps)
                .into_par_iter()
                .map(|idx| {
                    source.correlator(&[
                        angles[idx / s3],
                        angles[idx / s2 % steps],
                        angles[idx / steps % steps],
                        angles[idx % steps],
                    ])
                })
                .collect::<Result<Vec<_>>>()?;
            let terms: &[([usize; 4], f64)] = match kind {
                InequalityKind::Mk4 => &bell::MK4_TERMS,
                _ => &bell::MERMIN4_TERMS,
            };
            let per_pair: Vec<Vec<Candidate>> = (0..s2)
                .into_par_iter()
                .map(|pair| {
                    let a = [pair / steps, pair % steps];
                    let mut top = Vec::new();
                    for b1 in 0..steps {
                        for b2 in 0..steps {
                            let b = [b1, b2];
                            for c1 in 0..steps {
                                for c2 in 0..steps {
                                    let c = [c1, c2];
                                    for d1 in 0..steps {
                                        for d2 in 0..steps {
                                            let d = [d1, d2];
                                            let mut v = 0.0;
                                            for ([ia, ib, ic, id], sign) in terms {
                                                let idx = ((a[*ia] * steps + b[*ib]) * steps
                                                    + c[*ic])
                                                    * steps
                                                    + d[*id];
                                                v += sign * table[idx];
                                            }
                                            v *= 0.25;
                                            push_candidate(
                                                &mut top,
                                                Candidate {
                                                    value: v,
                                                    indices: vec![
                                                        a[0], a[1], b1, b2, c1, c2, d1, d2,
                                                    ],
                                                },
                                                m,
                                            );
                                        }
                                    }
                                }
                            }
                        }
                    }
                    top
                })
                .collect();
            merge_candidates(per_pair, m)
        }
    };
    let parties = kind.party_count();
    candidates
        .into_iter()
        .map(|c| {
            let settings = MeasurementSettings::new(
                (0..parties)
                    .map(|p| [angles[c.indices[2 * p]], angles[c.indices[2 * p + 1]]])
                    .collect(),
                vec![0.0; parties],
            )?;
            outcome_at(source, kind, &settings)
        })
        .collect()
}

/// Evaluate the signed Bell combination of a correlator source at fixed
/// settings, recording the full correlator table.
pub fn outcome_at(
    source: &dyn CorrelatorSource,
    kind: InequalityKind,
    settings: &MeasurementSettings,
) -> Result<BellOutcome> {
    let (terms, prefactor): (Vec<(Vec<usize>, f64)>, f64) = match kind {
        InequalityKind::Chsh => (
            bell::CHSH_TERMS.iter().map(|(c, s)| (c.to_vec(), *s)).collect(),
            0.5,
        ),
        InequalityKind::Mk4 => (
            bell::MK4_TERMS.iter().map(|(c, s)| (c.to_vec(), *s)).collect(),
            0.25,
        ),
        InequalityKind::Mermin4 => (
            bell::MERMIN4_TERMS.iter().map(|(c, s)| (c.to_vec(), *s)).collect(),
            0.25,
        ),
    };
    let entries: Vec<CorrelatorEntry> = terms
        .par_iter()
        .map(|(choice, _)| {
            let thetas: Vec<f64> = choice
                .iter()
                .enumerate()
                .map(|(p, &s)| settings.effective(p, s))
                .collect();
            let value = source.correlator(&thetas)?;
            Ok(CorrelatorEntry {
                settings: choice.iter().map(|s| *s as u8).collect(),
                angles: thetas,
                value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let value = prefactor
        * terms
            .iter()
            .zip(&entries)
            .map(|((_, sign), e)| sign * e.value)
            .sum::<f64>();
    Ok(BellOutcome { kind, value, settings: settings.clone(), correlators: entries })
}

/// Exact grid maximum of |value| for a pipeline state.
pub fn grid_search(
    state: &GaussianMixture,
    kind: InequalityKind,
    grid: &AngleGrid,
) -> Result<BellOutcome> {
    let source = StateCorrelators::new(state);
    Ok(grid_search_source(&source, kind, grid, 1)?.remove(0))
}

/// Top-m grid candidates for subsequent refinement.
pub fn grid_search_candidates(
    state: &GaussianMixture,
    kind: InequalityKind,
    grid: &AngleGrid,
    m: usize,
) -> Result<Vec<BellOutcome>> {
    let source = StateCorrelators::new(state);
    grid_search_source(&source, kind, grid, m)
}

/// Derivative-free local polish: cyclic coordinate search over the
/// measurement angles with shrinking step, starting from `initial_step`
/// (the grid step of the search that produced `start`). Terminates when
/// the step falls below 1e-4 rad or a full pass improves |value| by less
/// than 1e-6. The result never falls below the starting value.
pub fn refine(
    state: &GaussianMixture,
    kind: InequalityKind,
    start: &MeasurementSettings,
    initial_step: f64,
) -> Result<BellOutcome> {
    let source = StateCorrelators::new(state);
    refine_source(&source, kind, start, initial_step)
}

pub fn refine_source(
    source: &dyn CorrelatorSource,
    kind: InequalityKind,
    start: &MeasurementSettings,
    initial_step: f64,
) -> Result<BellOutcome> {
    let parties = kind.party_count();
    let mut settings = start.clone();
    let mut best = outcome_at(source, kind, &settings)?;
    let mut step = initial_step;
    while step >= 1e-4 {
        let mut pass_gain = 0.0;
        for party in 0..parties {
            for slot in 0..2 {
                for dir in [1.0f64, -1.0] {
                    let mut trial = settings.clone();
                    trial.angles[party][slot] += dir * step;
                    let out = outcome_at(source, kind, &trial)?;
                    if out.value.abs() > best.value.abs() + 1e-12 {
                        pass_gain += out.value.abs() - best.value.abs();
                        settings = trial;
                        best = out;
                        break;
                    }
                }
            }
        }
        if pass_gain < 1e-6 {
            step *= 0.5;
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Parameter sweeps
// ---------------------------------------------------------------------------

/// Ranges over source parameters; every combination runs the full
/// pipeline. Empty ranges collapse to the base scenario's value.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: Scenario,
    pub s1: Vec<f64>,
    pub t: Vec<f64>,
    pub eta_sub: Vec<f64>,
    pub eta_det: Vec<f64>,
    pub lo_width: Vec<f64>,
}

impl SweepSpec {
    pub fn from_base(base: Scenario) -> Self {
        let s1 = vec![base.comb.s1_target];
        let t = vec![base.subtraction.transmissivity];
        let eta_sub = vec![base.subtraction.eta];
        let eta_det = vec![base.detector_eta];
        let lo_width = vec![base.lo.width];
        SweepSpec { base, s1, t, eta_sub, eta_det, lo_width }
    }

    /// The documented two-party sweep: s1 ∈ 0.3..1.5 step 0.2 and
    /// T ∈ 0.90..0.99 step 0.03 over the paper-2party scenario.
    pub fn paper_two_party() -> Self {
        let mut spec = Self::from_base(Scenario::paper_two_party());
        spec.s1 = (0..7).map(|k| 0.3 + 0.2 * k as f64).collect();
        spec.t = (0..4).map(|k| 0.90 + 0.03 * k as f64).collect();
        spec
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        for ranges in [&self.s1, &self.t, &self.eta_sub, &self.eta_det, &self.lo_width] {
            if ranges.is_empty() {
                return Err(Error::Config("sweep ranges must be nonempty".into()));
            }
        }
        Ok(())
    }

    fn tuples(&self) -> Vec<(f64, f64, f64, f64, f64)> {
        let mut out = Vec::new();
        for &s1 in &self.s1 {
            for &t in &self.t {
                for &eta_sub in &self.eta_sub {
                    for &eta_det in &self.eta_det {
                        for &lo_width in &self.lo_width {
                            out.push((s1, t, eta_sub, eta_det, lo_width));
                        }
                    }
                }
            }
        }
        out
    }

    fn scenario_for(&self, tuple: (f64, f64, f64, f64, f64)) -> Scenario {
        let mut sc = self.base.clone();
        sc.comb.s1_target = tuple.0;
        sc.subtraction.transmissivity = tuple.1;
        sc.subtraction.eta = tuple.2;
        sc.detector_eta = tuple.3;
        sc.lo.width = tuple.4;
        sc
    }
}

/// One sweep row; failed tuples carry the error token instead of aborting
/// the sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub s1: f64,
    pub t: f64,
    pub eta_sub: f64,
    pub eta_det: f64,
    pub lo_width: f64,
    pub inequality: InequalityKind,
    pub best: Option<BellOutcome>,
    pub herald_prob: Option<f64>,
    pub error: Option<String>,
    pub ms: u128,
}

pub const SWEEP_CSV_HEADER: &str =
    "s1,T,eta_sub,eta_det,lo_width,inequality,best_value,angles,herald_prob,ms";

impl SweepRow {
    /// The six key columns identifying a tuple (used for resume).
    pub fn key(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.s1,
            self.t,
            self.eta_sub,
            self.eta_det,
            self.lo_width,
            self.inequality.name()
        )
    }

    pub fn to_csv(&self) -> String {
        match (&self.best, &self.error) {
            (Some(out), None) => {
                let angles: Vec<String> = out
                    .settings
                    .angles
                    .iter()
                    .flatten()
                    .map(|a| format!("{a}"))
                    .collect();
                format!(
                    "{},{},{},{}",
                    self.key(),
                    out.value,
                    angles.join(";"),
                    format_args!("{},{}", self.herald_prob.unwrap_or(f64::NAN), self.ms)
                )
            }
            (_, Some(err)) => format!("{},{err},,,{}", self.key(), self.ms),
            _ => unreachable!("row has neither outcome nor error"),
        }
    }
}

/// Run every tuple of the sweep; output order follows the tuple order
/// regardless of scheduling. `done` short-circuits tuples whose key is
/// already present (resume).
pub fn sweep(spec: &SweepSpec, done: &std::collections::HashMap<String, String>) -> Result<Vec<(String, Option<SweepRow>)>> {
    spec.validate()?;
    let tuples = spec.tuples();
    // the supermode basis depends on neither s1 nor the swept efficiencies
    let shared_basis = match spec.base.source {
        SourceKind::Comb => {
            let jsa = crate::jsa::build_jsa(&spec.base.comb)?;
            Some(crate::jsa::decompose(
                &jsa,
                spec.base.comb.truncation,
                spec.base.comb.s1_target,
            )?)
        }
        SourceKind::Tmsv => None,
    };
    let rows: Vec<(String, Option<SweepRow>)> = tuples
        .par_iter()
        .map(|&tuple| {
            let sc = spec.scenario_for(tuple);
            let mut probe = SweepRow {
                s1: tuple.0,
                t: tuple.1,
                eta_sub: tuple.2,
                eta_det: tuple.3,
                lo_width: tuple.4,
                inequality: sc.inequality,
                best: None,
                herald_prob: None,
                error: None,
                ms: 0,
            };
            let key = probe.key();
            if let Some(line) = done.get(&key) {
                return (line.clone(), None);
            }
            let started = std::time::Instant::now();
            let result = (|| -> Result<(BellOutcome, f64)> {
                let stages = match (&shared_basis, sc.source) {
                    (Some(basis), SourceKind::Comb) => {
                        build_party_state_from_basis(&sc, basis)?
                    }
                    _ => build_party_state(&sc)?,
                };
                let outcome = crate::scenario::search_angles(&sc, &stages.party_state)?;
                Ok((outcome, stages.herald_prob))
            })();
            probe.ms = started.elapsed().as_millis();
            match result {
                Ok((outcome, herald)) => {
                    probe.best = Some(outcome);
                    probe.herald_prob = Some(herald);
                }
                Err(e) => {
                    probe.error = Some(error_token(&e));
                }
            }
            (probe.to_csv(), Some(probe))
        })
        .collect();
    Ok(rows)
}

fn error_token(e: &Error) -> String {
    match e {
        Error::UnphysicalHeralding => "unphysical-heralding".into(),
        Error::EmptyPixel(_) => "empty-pixel".into(),
        Error::Accuracy { .. } => "accuracy".into(),
        other => format!("{other}")
            .split(':')
            .next()
            .unwrap_or("error")
            .replace(' ', "-"),
    }
}

/// Render the sweep as CSV with a provenance comment line.
pub fn render_sweep_csv(spec: &SweepSpec, rows: &[(String, Option<SweepRow>)]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# {} {} scenario={}\n",
        crate::scenario::TOOL_NAME,
        crate::scenario::TOOL_VERSION,
        spec.base.hash()
    ));
    out.push_str(SWEEP_CSV_HEADER);
    out.push('\n');
    for (line, _) in rows {
        out.push_str(line);
        out.push('\n');
    }
    out
}

/// Sweep file format: a scenario file plus an optional `[ranges]` table
/// with arrays for s1, t, eta_sub, eta_det, and lo_width. Missing ranges
/// collapse to the base scenario's value.
pub fn parse_sweep(text: &str, origin: &str) -> Result<SweepSpec> {
    #[derive(Debug, Default, serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    struct RawRanges {
        s1: Option<Vec<f64>>,
        #[serde(alias = "T")]
        t: Option<Vec<f64>>,
        eta_sub: Option<Vec<f64>>,
        eta_det: Option<Vec<f64>>,
        lo_width: Option<Vec<f64>>,
    }
    let mut value: toml::Value = toml::from_str(text).map_err(|e| Error::Parse {
        path: origin.into(),
        message: e.message().to_string(),
    })?;
    let ranges: RawRanges = match value.as_table_mut().and_then(|t| t.remove("ranges")) {
        Some(v) => v.try_into().map_err(|e: toml::de::Error| Error::Parse {
            path: origin.into(),
            message: format!("ranges: {}", e.message()),
        })?,
        None => RawRanges::default(),
    };
    let scenario_text = toml::to_string(&value).map_err(|e| Error::Parse {
        path: origin.into(),
        message: e.to_string(),
    })?;
    let base = crate::scenario::parse_scenario(&scenario_text, origin)?;
    let mut spec = SweepSpec::from_base(base);
    if let Some(v) = ranges.s1 {
        spec.s1 = v;
    }
    if let Some(v) = ranges.t {
        spec.t = v;
    }
    if let Some(v) = ranges.eta_sub {
        spec.eta_sub = v;
    }
    if let Some(v) = ranges.eta_det {
        spec.eta_det = v;
    }
    if let Some(v) = ranges.lo_width {
        spec.lo_width = v;
    }
    spec.validate()?;
    Ok(spec)
}

/// Parse completed rows of an existing sweep CSV, keyed by the six
/// parameter columns.
pub fn parse_done_rows(text: &str) -> std::collections::HashMap<String, String> {
    let mut done = std::collections::HashMap::new();
    for line in text.lines() {
        if line.starts_with('#') || line == SWEEP_CSV_HEADER || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 10 {
            continue;
        }
        let key = fields[..6].join(",");
        done.insert(key, line.to_string());
    }
    done
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::ModeLinearMap;
    use crate::subtraction::{subtract_one_per_mode, TapSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Two-party toy with the closed-form correlator
    /// E(a, b) = (2/π) asin(cos(a − b)).
    struct ToyModel;

    impl CorrelatorSource for ToyModel {
        fn party_count(&self) -> usize {
            2
        }
        fn correlator(&self, thetas: &[f64]) -> Result<f64> {
            Ok(2.0 / std::f64::consts::PI * (thetas[0] - thetas[1]).cos().asin())
        }
    }

    #[test]
    fn toy_grid_maximum_is_near_the_analytic_optimum() {
        // dense evaluation oracle: the triangular-wave correlator caps the
        // CHSH combination at exactly 1
        let grid = AngleGrid::new(24, false).unwrap();
        let out = grid_search_source(&ToyModel, InequalityKind::Chsh, &grid, 1)
            .unwrap()
            .remove(0);
        assert!(
            (out.value.abs() - 1.0).abs() < 1e-12,
            "grid max {} should reach the analytic optimum 1",
            out.value
        );
        // returned value >= 100 random grid points
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let angles = grid.angles();
        for _ in 0..100 {
            let pick = |rng: &mut ChaCha8Rng| angles[rng.gen_range(0..angles.len())];
            let settings = MeasurementSettings::new(
                vec![
                    [pick(&mut rng), pick(&mut rng)],
                    [pick(&mut rng), pick(&mut rng)],
                ],
                vec![0.0, 0.0],
            )
            .unwrap();
            let v = outcome_at(&ToyModel, InequalityKind::Chsh, &settings).unwrap();
            assert!(out.value.abs() >= v.value.abs() - 1e-12);
        }
    }

    /// A source with one party's effective angles shifted by a constant
    /// (the global-rotation freedom).
    struct OffsetToy(f64);

    impl CorrelatorSource for OffsetToy {
        fn party_count(&self) -> usize {
            2
        }
        fn correlator(&self, thetas: &[f64]) -> Result<f64> {
            ToyModel.correlator(&[thetas[0], thetas[1] + self.0])
        }
    }

    #[test]
    fn global_offset_leaves_the_achievable_maximum_unchanged() {
        // the grid maximum is covariant under a per-party global rotation
        // up to the grid resolution
        let grid = AngleGrid::new(24, false).unwrap();
        let base = grid_search_source(&ToyModel, InequalityKind::Chsh, &grid, 1).unwrap()[0]
            .value
            .abs();
        for &offset in &[0.07, 0.9, 2.2] {
            let shifted =
                grid_search_source(&OffsetToy(offset), InequalityKind::Chsh, &grid, 1).unwrap()[0]
                    .value
                    .abs();
            // the toy correlator's slope per angle is 2/π; four terms
            let slack = 4.0 * (2.0 / std::f64::consts::PI) * grid.step();
            assert!(
                (base - shifted).abs() <= slack,
                "offset {offset}: base {base} vs shifted {shifted}"
            );
        }
    }

    #[test]
    fn doubling_resolution_never_decreases_the_maximum() {
        let coarse = AngleGrid::new(12, false).unwrap();
        let fine = AngleGrid::new(24, false).unwrap();
        let a = grid_search_source(&ToyModel, InequalityKind::Chsh, &coarse, 1).unwrap()[0]
            .value
            .abs();
        let b = grid_search_source(&ToyModel, InequalityKind::Chsh, &fine, 1).unwrap()[0]
            .value
            .abs();
        assert!(b >= a - 1e-12);
    }

    #[test]
    fn refine_monotone_and_convergent_on_toy() {
        let grid = AngleGrid::new(8, false).unwrap();
        let start = grid_search_source(&ToyModel, InequalityKind::Chsh, &grid, 1)
            .unwrap()
            .remove(0);
        let refined =
            refine_source(&ToyModel, InequalityKind::Chsh, &start.settings, grid.step()).unwrap();
        assert!(refined.value.abs() >= start.value.abs() - 1e-12);
        assert!((refined.value.abs() - 1.0).abs() < 1e-6);
        // a stationary start stays put
        let again =
            refine_source(&ToyModel, InequalityKind::Chsh, &refined.settings, 1e-3).unwrap();
        assert!((again.value.abs() - refined.value.abs()).abs() < 1e-9);
    }

    #[test]
    fn four_party_grid_cap() {
        let vac = GaussianMixture::vacuum(4).unwrap();
        let grid = AngleGrid::new(16, false).unwrap();
        assert!(matches!(
            grid_search(&vac, InequalityKind::Mk4, &grid),
            Err(Error::Config(_))
        ));
    }

    fn subtracted_tmsv(s: f64, t: f64) -> GaussianMixture {
        let base = GaussianMixture::squeezed_modes(&[s, -s]).unwrap();
        let tmsv = base
            .apply_map(&ModeLinearMap::beam_splitter(0.5).unwrap(), &[0, 1])
            .unwrap();
        subtract_one_per_mode(
            &tmsv,
            &[TapSpec::new(0, t, 1.0).unwrap(), TapSpec::new(1, t, 1.0).unwrap()],
        )
        .unwrap()
        .0
    }

    #[test]
    fn state_grid_search_finds_a_violation() {
        let state = subtracted_tmsv(0.65, 0.99);
        let grid = AngleGrid::new(24, false).unwrap();
        let out = grid_search(&state, InequalityKind::Chsh, &grid).unwrap();
        assert!(out.value.abs() > 1.0, "expected violation, got {}", out.value);
        let refined = refine(&state, InequalityKind::Chsh, &out.settings, grid.step()).unwrap();
        assert!(refined.value.abs() >= out.value.abs());
    }

    #[test]
    fn sweep_single_tuple_matches_manual_run() {
        let spec = SweepSpec::from_base(Scenario::reference_tmsv());
        let rows = sweep(&spec, &Default::default()).unwrap();
        assert_eq!(rows.len(), 1);
        let row = rows[0].1.as_ref().unwrap();
        let manual = crate::scenario::run_pipeline(&spec.base).unwrap();
        let swept = row.best.as_ref().unwrap().value;
        assert!(
            (swept - manual.1.value).abs() < 1e-12,
            "sweep {} vs manual {}",
            swept,
            manual.1.value
        );
    }

    #[test]
    fn sweep_records_unphysical_rows_without_aborting() {
        let mut spec = SweepSpec::from_base(Scenario::reference_tmsv());
        spec.t = vec![1.0, 0.99];
        let rows = sweep(&spec, &Default::default()).unwrap();
        assert_eq!(rows.len(), 2);
        let bad = rows[0].1.as_ref().unwrap();
        assert_eq!(bad.error.as_deref(), Some("unphysical-heralding"));
        assert!(rows[0].0.contains("unphysical-heralding"));
        let good = rows[1].1.as_ref().unwrap();
        assert!(good.best.is_some());
    }

    #[test]
    fn sweep_resume_reuses_rows() {
        let mut spec = SweepSpec::from_base(Scenario::reference_tmsv());
        spec.s1 = vec![0.3, 0.43];
        let rows = sweep(&spec, &Default::default()).unwrap();
        let csv = render_sweep_csv(&spec, &rows);
        let done = parse_done_rows(&csv);
        assert_eq!(done.len(), 2);
        let resumed = sweep(&spec, &done).unwrap();
        for ((line, recomputed), (orig, _)) in resumed.iter().zip(&rows) {
            assert!(recomputed.is_none(), "resume should reuse completed rows");
            assert_eq!(line, orig);
        }
    }

    #[test]
    fn sweep_best_dominates_sub_sweeps() {
        let mut spec = SweepSpec::from_base(Scenario::reference_tmsv());
        spec.base.search.steps = 8;
        spec.base.search.refine = false;
        spec.s1 = vec![0.45, 0.6, 0.7];
        let best = |spec: &SweepSpec| -> f64 {
            sweep(spec, &Default::default())
                .unwrap()
                .iter()
                .filter_map(|(_, r)| r.as_ref().and_then(|row| row.best.as_ref()))
                .map(|b| b.value.abs())
                .fold(0.0f64, f64::max)
        };
        let full = best(&spec);
        let mut sub = spec.clone();
        sub.s1 = vec![0.6];
        assert!(full >= best(&sub) - 1e-15);
    }

    #[test]
    fn sweep_output_is_deterministic_across_worker_counts() {
        let mut spec = SweepSpec::from_base(Scenario::reference_tmsv());
        spec.s1 = vec![0.35, 0.45, 0.55];
        let strip_ms = |csv: &str| -> String {
            csv.lines()
                .map(|l| {
                    if l.starts_with('#') || l == SWEEP_CSV_HEADER {
                        l.to_string()
                    } else {
                        l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap_or_default()
                    }
                })
                .collect::<Vec<_>>()
                .join("\n")
        };
        let run_with = |threads: usize| -> String {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                let rows = sweep(&spec, &Default::default()).unwrap();
                render_sweep_csv(&spec, &rows)
            })
        };
        let one = strip_ms(&run_with(1));
        let four = strip_ms(&run_with(4));
        assert_eq!(one, four, "sweep rows must not depend on worker count");
    }
}
