//! Scenario configuration and end-to-end pipeline orchestration.
//!
//! A scenario fixes the source (comb-pumped supermodes or a two-mode
//! squeezed reference), the heralded subtraction, the pixel partition,
//! detection, and the inequality plus its angle search. Scenarios load
//! from TOML with presets supplying every default; unknown keys are
//! rejected.

use serde::{Deserialize, Serialize};

use crate::bell::{BellOutcome, InequalityKind, MeasurementSettings};
use crate::error::{Error, Result};
use crate::gaussian::{GaussianMixture, LossConvention, ModeLinearMap};
use crate::jsa::{build_jsa, decompose, CombConfig, GaussianEnvelope, SupermodeBasis};
use crate::pixel::{build_pixel_map, to_pixels, PixelPartition};
use crate::search::{grid_search_candidates, refine, AngleGrid};
use crate::subtraction::{subtract_one_per_mode, subtract_two_same_mode, TapSpec};

pub const TOOL_NAME: &str = "combbell";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    /// Comb-pumped supermode source (the full pipeline).
    Comb,
    /// Two-mode squeezed vacuum taken directly as the two parties.
    Tmsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubtractionKind {
    TwoPhotonSameMode,
    OnePerMode,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubtractionScenario {
    pub kind: SubtractionKind,
    /// Target supermodes, 1-based as in configs (1 = leading supermode).
    pub targets: Vec<usize>,
    pub transmissivity: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PixelScenario {
    pub count: usize,
    pub boundaries: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchOptions {
    pub steps: usize,
    pub refine: bool,
    /// How many top grid candidates receive local refinement.
    pub refine_candidates: usize,
}

impl SearchOptions {
    pub fn default_for(kind: InequalityKind) -> Self {
        match kind {
            InequalityKind::Chsh => SearchOptions { steps: 24, refine: true, refine_candidates: 4 },
            // the 16-angle grid is kept coarse and polished from the top
            // candidates instead
            _ => SearchOptions { steps: 8, refine: true, refine_candidates: 32 },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub preset: Option<String>,
    pub source: SourceKind,
    pub comb: CombConfig,
    pub subtraction: SubtractionScenario,
    pub pixels: PixelScenario,
    pub lo: GaussianEnvelope,
    pub detector_eta: f64,
    pub inequality: InequalityKind,
    pub search: SearchOptions,
    pub loss_convention: LossConvention,
}

impl Scenario {
    /// Two-mode squeezed reference: one photon subtracted from each arm,
    /// ideal efficiencies, angle-optimized CHSH.
    pub fn reference_tmsv() -> Self {
        Scenario {
            preset: Some("reference-tmsv".into()),
            source: SourceKind::Tmsv,
            comb: CombConfig { s1_target: REFERENCE_TMSV_S, truncation: 2, ..CombConfig::desk_default() },
            subtraction: SubtractionScenario {
                kind: SubtractionKind::OnePerMode,
                targets: vec![1, 2],
                transmissivity: 0.99,
                eta: 1.0,
            },
            pixels: PixelScenario { count: 2, boundaries: None },
            lo: default_lo(),
            detector_eta: 1.0,
            inequality: InequalityKind::Chsh,
            search: SearchOptions::default_for(InequalityKind::Chsh),
            loss_convention: LossConvention::Intensity,
        }
    }

    /// Two-party comb pipeline at the best parameters found by the
    /// documented sweep ranges.
    pub fn paper_two_party() -> Self {
        Scenario {
            preset: Some("paper-2party".into()),
            source: SourceKind::Comb,
            comb: CombConfig {
                s1_target: PAPER_2PARTY_S1,
                ..CombConfig::desk_default()
            },
            subtraction: SubtractionScenario {
                kind: SubtractionKind::TwoPhotonSameMode,
                targets: vec![1],
                transmissivity: PAPER_2PARTY_T,
                eta: 1.0,
            },
            pixels: PixelScenario { count: 2, boundaries: None },
            lo: default_lo(),
            detector_eta: 1.0,
            inequality: InequalityKind::Chsh,
            search: SearchOptions::default_for(InequalityKind::Chsh),
            loss_convention: LossConvention::Intensity,
        }
    }

    /// Four-party comb pipeline on the default coarse grid.
    pub fn paper_four_party() -> Self {
        Scenario {
            preset: Some("paper-4party".into()),
            source: SourceKind::Comb,
            comb: CombConfig {
                s1_target: PAPER_4PARTY_S1,
                ..CombConfig::desk_default()
            },
            subtraction: SubtractionScenario {
                kind: SubtractionKind::TwoPhotonSameMode,
                targets: vec![1],
                transmissivity: PAPER_2PARTY_T,
                eta: 1.0,
            },
            pixels: PixelScenario { count: 4, boundaries: None },
            lo: default_lo(),
            detector_eta: 1.0,
            inequality: InequalityKind::Mk4,
            search: SearchOptions::default_for(InequalityKind::Mk4),
            loss_convention: LossConvention::Intensity,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "reference-tmsv" => Ok(Self::reference_tmsv()),
            "paper-2party" => Ok(Self::paper_two_party()),
            "paper-4party" => Ok(Self::paper_four_party()),
            other => Err(Error::Config(format!(
                "unknown preset {other:?}; expected reference-tmsv, paper-2party, or paper-4party"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.comb.validate()?;
        if self.pixels.count != self.inequality.party_count() {
            return Err(Error::Config(format!(
                "pixels.count = {} does not match inequality {} (needs {} parties)",
                self.pixels.count,
                self.inequality.name(),
                self.inequality.party_count()
            )));
        }
        if !(self.subtraction.transmissivity > 0.0 && self.subtraction.transmissivity <= 1.0) {
            return Err(Error::Config(format!(
                "subtraction.t = {} outside (0, 1]",
                self.subtraction.transmissivity
            )));
        }
        if !(self.subtraction.eta > 0.0 && self.subtraction.eta <= 1.0) {
            return Err(Error::Config(format!(
                "subtraction.eta = {} outside (0, 1]",
                self.subtraction.eta
            )));
        }
        if !(self.detector_eta > 0.0 && self.detector_eta <= 1.0) {
            return Err(Error::Config(format!(
                "detector.eta = {} outside (0, 1]",
                self.detector_eta
            )));
        }
        if self.subtraction.targets.is_empty() {
            return Err(Error::Config("subtraction.targets must not be empty".into()));
        }
        let mode_count = match self.source {
            SourceKind::Comb => self.comb.truncation,
            SourceKind::Tmsv => 2,
        };
        for &t in &self.subtraction.targets {
            if t == 0 || t > mode_count {
                return Err(Error::Config(format!(
                    "subtraction.target {t} outside 1..={mode_count}"
                )));
            }
        }
        if self.subtraction.kind == SubtractionKind::TwoPhotonSameMode
            && self.subtraction.targets.len() != 1
        {
            return Err(Error::Config(
                "subtraction.kind two-photon-same-mode takes exactly one target".into(),
            ));
        }
        if let Some(b) = &self.pixels.boundaries {
            if b.len() != self.pixels.count + 1 {
                return Err(Error::Config(format!(
                    "pixels.boundaries needs {} entries for {} pixels",
                    self.pixels.count + 1,
                    self.pixels.count
                )));
            }
        }
        if self.search.steps < 4 {
            return Err(Error::Config(format!(
                "search.steps must be at least 4, got {}",
                self.search.steps
            )));
        }
        if self.source == SourceKind::Tmsv && self.pixels.count != 2 {
            return Err(Error::Config(
                "the tmsv source is two-party; pixels.count must be 2".into(),
            ));
        }
        Ok(())
    }

    /// Stable FNV-1a hash of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("scenario serializes");
        let mut h: u64 = 0xcbf29ce484222325;
        for b in json.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

// Preset calibration constants (found by the documented sweeps).
pub const REFERENCE_TMSV_S: f64 = 0.65;
pub const PAPER_2PARTY_S1: f64 = 0.75;
pub const PAPER_2PARTY_T: f64 = 0.99;
pub const PAPER_4PARTY_S1: f64 = 0.9;
/// Default LO width: matched to the leading supermode's extent on the
/// tooth grid (the pump itself is much narrower in the anticorrelated
/// regime).
pub const DEFAULT_LO_WIDTH: f64 = 26.0;

fn default_lo() -> GaussianEnvelope {
    GaussianEnvelope {
        center: CombConfig::desk_default().pump_envelope.center,
        width: DEFAULT_LO_WIDTH,
    }
}

/// Intermediate pipeline products, kept for exports and diagnostics.
pub struct PipelineStages {
    pub basis: Option<SupermodeBasis>,
    /// State after heralded subtraction, before pixel coarse-graining.
    pub subtracted: GaussianMixture,
    pub herald_prob: f64,
    /// The N-party state fed to the inequality.
    pub party_state: GaussianMixture,
}

/// Build the N-party state for a scenario.
pub fn build_party_state(scenario: &Scenario) -> Result<PipelineStages> {
    scenario.validate()?;
    match scenario.source {
        SourceKind::Tmsv => {
            let s = scenario.comb.s1_target;
            let base = GaussianMixture::squeezed_modes(&[s, -s])?;
            let tmsv = base.apply_map(&ModeLinearMap::beam_splitter(0.5)?, &[0, 1])?;
            let (subtracted, herald_prob) = apply_subtraction(&tmsv, scenario)?;
            let party_state = if scenario.detector_eta < 1.0 {
                subtracted.apply_loss_with(
                    scenario.detector_eta,
                    &[0, 1],
                    scenario.loss_convention,
                )?
            } else {
                subtracted.clone()
            };
            Ok(PipelineStages { basis: None, subtracted, herald_prob, party_state })
        }
        SourceKind::Comb => {
            let jsa = build_jsa(&scenario.comb)?;
            let basis = decompose(&jsa, scenario.comb.truncation, scenario.comb.s1_target)?;
            build_party_state_from_basis(scenario, &basis).map(|mut st| {
                st.basis = Some(basis);
                st
            })
        }
    }
}

/// Comb-source pipeline with a precomputed supermode basis (the basis does
/// not depend on s1, so sweeps reuse it and only rescale squeezings).
pub fn build_party_state_from_basis(
    scenario: &Scenario,
    basis: &SupermodeBasis,
) -> Result<PipelineStages> {
    let lambda: Vec<f64> = basis.eigenvalues().to_vec();
    let squeezings: Vec<f64> = lambda
        .iter()
        .map(|l| scenario.comb.s1_target * l / lambda[0])
        .collect();
    let state = GaussianMixture::squeezed_modes(&squeezings)?;
    let (subtracted, herald_prob) = apply_subtraction(&state, scenario)?;
    let partition = match &scenario.pixels.boundaries {
        Some(b) => PixelPartition::new(b.clone(), scenario.lo)?,
        None => PixelPartition::even(
            scenario.pixels.count,
            scenario.comb.teeth_count,
            scenario.lo,
        )?,
    };
    let map = build_pixel_map(basis, &partition)?;
    let party_state = to_pixels(&subtracted, &map, scenario.detector_eta)?;
    Ok(PipelineStages { basis: None, subtracted, herald_prob, party_state })
}

fn apply_subtraction(
    state: &GaussianMixture,
    scenario: &Scenario,
) -> Result<(GaussianMixture, f64)> {
    let taps: Vec<TapSpec> = scenario
        .subtraction
        .targets
        .iter()
        .map(|&t| {
            TapSpec::new(
                t - 1,
                scenario.subtraction.transmissivity,
                scenario.subtraction.eta,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    match scenario.subtraction.kind {
        SubtractionKind::TwoPhotonSameMode => subtract_two_same_mode(state, &taps[0]),
        SubtractionKind::OnePerMode => subtract_one_per_mode(state, &taps),
    }
}

/// Outcome report written as JSON: value, settings, correlator table, and
/// provenance (scenario hash + tool version).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeReport {
    pub tool: String,
    pub version: String,
    pub scenario_hash: String,
    pub preset: Option<String>,
    pub inequality: InequalityKind,
    pub value: f64,
    pub herald_prob: f64,
    pub settings: MeasurementSettings,
    pub correlators: Vec<crate::bell::CorrelatorEntry>,
}

impl OutcomeReport {
    pub fn new(scenario: &Scenario, outcome: &BellOutcome, herald_prob: f64) -> Self {
        OutcomeReport {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            scenario_hash: scenario.hash(),
            preset: scenario.preset.clone(),
            inequality: outcome.kind,
            value: outcome.value,
            herald_prob,
            settings: outcome.settings.clone(),
            correlators: outcome.correlators.clone(),
        }
    }
}

/// Run the full pipeline: build the party state, grid-search the angles,
/// refine the top candidates, and report the best outcome.
pub fn run_pipeline(scenario: &Scenario) -> Result<(OutcomeReport, BellOutcome)> {
    let stages = build_party_state(scenario)?;
    let outcome = search_angles(scenario, &stages.party_state)?;
    let report = OutcomeReport::new(scenario, &outcome, stages.herald_prob);
    Ok((report, outcome))
}

/// Angle search per the scenario's options.
pub fn search_angles(scenario: &Scenario, state: &GaussianMixture) -> Result<BellOutcome> {
    let kind = scenario.inequality;
    let grid = AngleGrid::new(scenario.search.steps, false)?;
    let candidates = grid_search_candidates(
        state,
        kind,
        &grid,
        scenario.search.refine_candidates.max(1),
    )?;
    let mut best = candidates[0].clone();
    if scenario.search.refine {
        let step = std::f64::consts::PI / scenario.search.steps as f64;
        let refined: Vec<BellOutcome> = candidates
            .iter()
            .map(|c| refine(state, kind, &c.settings, step))
            .collect::<Result<Vec<_>>>()?;
        for r in refined {
            if r.value.abs() > best.value.abs() {
                best = r;
            }
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// TOML loading
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    preset: Option<String>,
    source: Option<String>,
    comb: Option<RawComb>,
    subtraction: Option<RawSubtraction>,
    pixels: Option<RawPixels>,
    lo: Option<RawLo>,
    detector: Option<RawDetector>,
    bell: Option<RawBell>,
    search: Option<RawSearch>,
    loss: Option<RawLoss>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComb {
    teeth: Option<usize>,
    center: Option<usize>,
    pump_center: Option<f64>,
    pump_width: Option<f64>,
    zeta1: Option<f64>,
    zeta2: Option<f64>,
    crystal_scale: Option<f64>,
    s1: Option<f64>,
    k: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSubtraction {
    kind: Option<String>,
    target: Option<usize>,
    targets: Option<Vec<usize>>,
    #[serde(alias = "T")]
    t: Option<f64>,
    eta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPixels {
    count: Option<usize>,
    boundaries: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLo {
    center: Option<f64>,
    width: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetector {
    eta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBell {
    inequality: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSearch {
    steps: Option<usize>,
    refine: Option<bool>,
    refine_candidates: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLoss {
    convention: Option<String>,
}

/// Parse a scenario TOML string; `origin` names the source in errors.
pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| {
        let loc = e
            .span()
            .map(|span| {
                let upto = &text[..span.start.min(text.len())];
                let line = upto.lines().count().max(1);
                let col = upto.lines().last().map_or(0, |l| l.len()) + 1;
                format!(" at line {line}, column {col}")
            })
            .unwrap_or_default();
        Error::Parse { path: origin.into(), message: format!("{}{loc}", e.message()) }
    })?;
    scenario_from_raw(raw)
}

/// Load and validate a scenario file.
pub fn load_scenario(path: &std::path::Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text, &path.display().to_string())
}

fn scenario_from_raw(raw: RawScenario) -> Result<Scenario> {
    let mut sc = match &raw.preset {
        Some(name) => Scenario::preset(name)?,
        None => Scenario {
            preset: None,
            source: SourceKind::Comb,
            comb: CombConfig::desk_default(),
            subtraction: SubtractionScenario {
                kind: SubtractionKind::TwoPhotonSameMode,
                targets: vec![1],
                transmissivity: 0.99,
                eta: 1.0,
            },
            pixels: PixelScenario { count: 2, boundaries: None },
            lo: default_lo(),
            detector_eta: 1.0,
            inequality: InequalityKind::Chsh,
            search: SearchOptions::default_for(InequalityKind::Chsh),
            loss_convention: LossConvention::Intensity,
        },
    };
    if let Some(source) = &raw.source {
        sc.source = match source.as_str() {
            "comb" => SourceKind::Comb,
            "tmsv" => SourceKind::Tmsv,
            other => {
                return Err(Error::Config(format!("source must be comb|tmsv, got {other}")))
            }
        };
    }
    if let Some(c) = &raw.comb {
        if let Some(v) = c.teeth {
            sc.comb.teeth_count = v;
        }
        if let Some(v) = c.center {
            sc.comb.center_index = v;
        }
        if let Some(v) = c.pump_center {
            sc.comb.pump_envelope.center = v;
        }
        if let Some(v) = c.pump_width {
            sc.comb.pump_envelope.width = v;
        }
        if let Some(v) = c.zeta1 {
            sc.comb.mismatch_coefficients.0 = v;
        }
        if let Some(v) = c.zeta2 {
            sc.comb.mismatch_coefficients.1 = v;
        }
        if let Some(v) = c.crystal_scale {
            sc.comb.crystal_length_scale = v;
        }
        if let Some(v) = c.s1 {
            sc.comb.s1_target = v;
        }
        if let Some(v) = c.k {
            sc.comb.truncation = v;
        }
    }
    if let Some(s) = &raw.subtraction {
        if let Some(kind) = &s.kind {
            sc.subtraction.kind = match kind.as_str() {
                "two-photon-same-mode" => SubtractionKind::TwoPhotonSameMode,
                "one-per-mode" => SubtractionKind::OnePerMode,
                other => {
                    return Err(Error::Config(format!(
                        "subtraction.kind must be two-photon-same-mode|one-per-mode, got {other}"
                    )))
                }
            };
        }
        match (&s.target, &s.targets) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give subtraction.target or subtraction.targets, not both".into(),
                ))
            }
            (Some(t), None) => sc.subtraction.targets = vec![*t],
            (None, Some(ts)) => sc.subtraction.targets = ts.clone(),
            (None, None) => {}
        }
        if let Some(v) = s.t {
            sc.subtraction.transmissivity = v;
        }
        if let Some(v) = s.eta {
            sc.subtraction.eta = v;
        }
    }
    if let Some(p) = &raw.pixels {
        if let Some(v) = p.count {
            sc.pixels.count = v;
        }
        if p.boundaries.is_some() {
            sc.pixels.boundaries = p.boundaries.clone();
        }
    }
    if let Some(lo) = &raw.lo {
        if let Some(v) = lo.center {
            sc.lo.center = v;
        }
        if let Some(v) = lo.width {
            sc.lo.width = v;
        }
    }
    if let Some(d) = &raw.detector {
        if let Some(v) = d.eta {
            sc.detector_eta = v;
        }
    }
    if let Some(b) = &raw.bell {
        if let Some(kind) = &b.inequality {
            sc.inequality = kind.parse()?;
            sc.search = SearchOptions::default_for(sc.inequality);
            if raw.preset.is_none() {
                sc.pixels.count = sc.inequality.party_count();
            }
        }
    }
    if let Some(s) = &raw.search {
        if let Some(v) = s.steps {
            sc.search.steps = v;
        }
        if let Some(v) = s.refine {
            sc.search.refine = v;
        }
        if let Some(v) = s.refine_candidates {
            sc.search.refine_candidates = v;
        }
    }
    if let Some(l) = &raw.loss {
        if let Some(conv) = &l.convention {
            sc.loss_convention = match conv.as_str() {
                "intensity" => LossConvention::Intensity,
                "literal" => LossConvention::Literal,
                other => {
                    return Err(Error::Config(format!(
                        "loss.convention must be intensity|literal, got {other}"
                    )))
                }
            };
        }
    }
    sc.validate()?;
    Ok(sc)
}
