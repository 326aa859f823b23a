//! Experiment configuration: strict JSON in, SI units out.
//!
//! Field names carry their unit (`_deg`, `_ms`, `_dbm`, ...); values are
//! converted to SI once, during resolution, and the rest of the program only
//! sees radians, watts and seconds. Parsing is strict: an unknown or
//! unit-less field name is an error, not a warning. Resolving fills every
//! omitted field with the built-in §V-style defaults, and resolving the
//! emitted form of a resolved config is the identity.

use serde::{Deserialize, Serialize};

use mmlink::{
    AdaptationConfig, BeamConstraint, LinkBudget, Objective, OptimizerOptions, SurrogatePenalty,
    ThresholdMode, TrainingConfig,
};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// Optimize both beamwidths independently.
    Free,
    /// Force equal beamwidths.
    Tied,
    /// Pin the transmitter at its sector width, optimize the receiver.
    SectorTx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    /// Smooth misalignment-penalized objective, climbed by gradient ascent.
    Surrogate,
    /// Exact rate at the misalignment bound, grid search only.
    WorstCase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyKind {
    SecondMoment,
    ScaledBound,
    MainLobeLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

// ---------------------------------------------------------------------------
// Raw layer: what the user writes. Everything optional, alternates allowed.
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawConfig {
    seed: Option<u64>,
    budget: Option<RawBudget>,
    training: Option<RawTraining>,
    misalignment: Option<RawMisalignment>,
    beams: Option<RawBeams>,
    expectation: Option<RawExpectation>,
    adaptation: Option<RawAdaptation>,
    gain_curve: Option<RawGainCurve>,
    surface: Option<RawSurface>,
    output: Option<RawOutput>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawBudget {
    p_t_mw: Option<f64>,
    p_t_dbm: Option<f64>,
    carrier_ghz: Option<f64>,
    wavelength_mm: Option<f64>,
    distance_m: Option<f64>,
    path_loss_exponent: Option<f64>,
    noise_dbm_hz: Option<f64>,
    bandwidth_ghz: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawTraining {
    omega_t_deg: Option<f64>,
    omega_r_deg: Option<f64>,
    pilot_time_us: Option<f64>,
    slot_time_ms: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawMisalignment {
    theta_m_deg: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawBeams {
    phi_min_deg: Option<f64>,
    phi_max_deg: Option<f64>,
    step_deg: Option<f64>,
    mode: Option<SearchMode>,
    objective: Option<ObjectiveKind>,
    penalty: Option<PenaltyKind>,
    k1: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawExpectation {
    phi_t_deg: Option<f64>,
    phi_r_deg: Option<f64>,
    samples: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawAdaptation {
    initial_phi_deg: Option<f64>,
    delta_phi_deg: Option<f64>,
    delta_theta_deg: Option<f64>,
    max_slots: Option<usize>,
    draws_per_slot: Option<usize>,
    rearm: Option<bool>,
    seeds: Option<usize>,
    threshold_dbm: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawGainCurve {
    hpbw_deg: Option<Vec<f64>>,
    theta_span_deg: Option<f64>,
    theta_step_deg: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawSurface {
    theta_m_deg: Option<f64>,
    step_deg: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawOutput {
    dir: Option<String>,
    format: Option<OutputFormat>,
}

// ---------------------------------------------------------------------------
// Resolved layer: every field concrete, canonical unit names only.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub seed: u64,
    pub budget: BudgetSection,
    pub training: TrainingSection,
    pub misalignment: MisalignmentSection,
    pub beams: BeamsSection,
    pub expectation: ExpectationSection,
    pub adaptation: AdaptationSection,
    pub gain_curve: GainCurveSection,
    pub surface: SurfaceSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetSection {
    pub p_t_mw: f64,
    pub wavelength_mm: f64,
    pub distance_m: f64,
    pub path_loss_exponent: f64,
    pub noise_dbm_hz: f64,
    pub bandwidth_ghz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingSection {
    pub omega_t_deg: f64,
    pub omega_r_deg: f64,
    pub pilot_time_us: f64,
    pub slot_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MisalignmentSection {
    pub theta_m_deg: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeamsSection {
    /// `None` selects the training-feasibility floor.
    pub phi_min_deg: Option<f64>,
    /// `None` selects the sector width.
    pub phi_max_deg: Option<f64>,
    pub step_deg: f64,
    pub mode: SearchMode,
    pub objective: ObjectiveKind,
    pub penalty: PenaltyKind,
    pub k1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectationSection {
    pub phi_t_deg: f64,
    pub phi_r_deg: f64,
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptationSection {
    pub initial_phi_deg: f64,
    pub delta_phi_deg: f64,
    pub delta_theta_deg: f64,
    pub max_slots: usize,
    pub draws_per_slot: usize,
    pub rearm: bool,
    pub seeds: usize,
    /// `None` selects the main-lobe-average threshold.
    pub threshold_dbm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainCurveSection {
    pub hpbw_deg: Vec<f64>,
    pub theta_span_deg: f64,
    pub theta_step_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceSection {
    pub theta_m_deg: f64,
    pub step_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSection {
    pub dir: String,
    pub format: OutputFormat,
}

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn resolve(self) -> Result<ResolvedConfig, ConfigError> {
        let b = self.budget.unwrap_or_default();
        let p_t_mw = match (b.p_t_mw, b.p_t_dbm) {
            (Some(_), Some(_)) => return err("budget: p_t_mw and p_t_dbm are mutually exclusive"),
            (Some(mw), None) => mw,
            (None, Some(dbm)) => dbm_to_watts(dbm) * 1e3,
            (None, None) => 10.0,
        };
        let wavelength_mm = match (b.wavelength_mm, b.carrier_ghz) {
            (Some(_), Some(_)) => {
                return err("budget: wavelength_mm and carrier_ghz are mutually exclusive")
            }
            (Some(mm), None) => mm,
            (None, Some(ghz)) => {
                if ghz <= 0.0 {
                    return err("budget: carrier_ghz must be positive");
                }
                SPEED_OF_LIGHT / (ghz * 1e9) * 1e3
            }
            (None, None) => SPEED_OF_LIGHT / 60e9 * 1e3,
        };
        let budget = BudgetSection {
            p_t_mw,
            wavelength_mm,
            distance_m: b.distance_m.unwrap_or(5.0),
            path_loss_exponent: b.path_loss_exponent.unwrap_or(2.0),
            noise_dbm_hz: b.noise_dbm_hz.unwrap_or(-174.0),
            bandwidth_ghz: b.bandwidth_ghz.unwrap_or(2.16),
        };

        let t = self.training.unwrap_or_default();
        let training = TrainingSection {
            omega_t_deg: t.omega_t_deg.unwrap_or(90.0),
            omega_r_deg: t.omega_r_deg.unwrap_or(90.0),
            pilot_time_us: t.pilot_time_us.unwrap_or(15.6),
            slot_time_ms: t.slot_time_ms.unwrap_or(10.0),
        };

        let m = self.misalignment.unwrap_or_default();
        let misalignment = MisalignmentSection {
            theta_m_deg: m.theta_m_deg.unwrap_or_else(|| vec![0.0, 3.0, 6.0, 9.0]),
        };
        if misalignment.theta_m_deg.is_empty() {
            return err("misalignment: theta_m_deg must not be empty");
        }

        let bm = self.beams.unwrap_or_default();
        let beams = BeamsSection {
            phi_min_deg: bm.phi_min_deg,
            phi_max_deg: bm.phi_max_deg,
            step_deg: bm.step_deg.unwrap_or(0.1),
            mode: bm.mode.unwrap_or(SearchMode::Free),
            objective: bm.objective.unwrap_or(ObjectiveKind::Surrogate),
            penalty: bm.penalty.unwrap_or(PenaltyKind::SecondMoment),
            k1: bm.k1.unwrap_or(1.0),
        };
        if beams.step_deg <= 0.0 || !beams.step_deg.is_finite() {
            return err("beams: step_deg must be positive");
        }

        let e = self.expectation.unwrap_or_default();
        let expectation = ExpectationSection {
            phi_t_deg: e.phi_t_deg.unwrap_or(90.0),
            phi_r_deg: e.phi_r_deg.unwrap_or(7.0),
            samples: e.samples.unwrap_or(1_000_000),
        };
        if expectation.samples == 0 {
            return err("expectation: samples must be at least 1");
        }

        let a = self.adaptation.unwrap_or_default();
        let adaptation = AdaptationSection {
            initial_phi_deg: a.initial_phi_deg.unwrap_or(2.0),
            delta_phi_deg: a.delta_phi_deg.unwrap_or(1.0),
            delta_theta_deg: a.delta_theta_deg.unwrap_or(2.0),
            max_slots: a.max_slots.unwrap_or(10),
            draws_per_slot: a.draws_per_slot.unwrap_or(1),
            rearm: a.rearm.unwrap_or(false),
            seeds: a.seeds.unwrap_or(100),
            threshold_dbm: a.threshold_dbm,
        };
        if adaptation.seeds == 0 {
            return err("adaptation: seeds must be at least 1");
        }

        let g = self.gain_curve.unwrap_or_default();
        let gain_curve = GainCurveSection {
            hpbw_deg: g.hpbw_deg.unwrap_or_else(|| vec![5.0, 10.0, 20.0, 40.0]),
            theta_span_deg: g.theta_span_deg.unwrap_or(60.0),
            theta_step_deg: g.theta_step_deg.unwrap_or(0.5),
        };
        if gain_curve.hpbw_deg.is_empty() {
            return err("gain_curve: hpbw_deg must not be empty");
        }
        if gain_curve.theta_step_deg <= 0.0 || !gain_curve.theta_step_deg.is_finite() {
            return err("gain_curve: theta_step_deg must be positive");
        }

        let s = self.surface.unwrap_or_default();
        let surface = SurfaceSection {
            theta_m_deg: s.theta_m_deg.unwrap_or(9.0),
            step_deg: s.step_deg.unwrap_or(1.0),
        };
        if surface.step_deg <= 0.0 || !surface.step_deg.is_finite() {
            return err("surface: step_deg must be positive");
        }

        let o = self.output.unwrap_or_default();
        let output = OutputSection {
            dir: o.dir.unwrap_or_else(|| ".".to_string()),
            format: o.format.unwrap_or(OutputFormat::Csv),
        };

        Ok(ResolvedConfig {
            seed: self.seed.unwrap_or(42),
            budget,
            training,
            misalignment,
            beams,
            expectation,
            adaptation,
            gain_curve,
            surface,
            output,
        })
    }
}

impl ResolvedConfig {
    /// One-line canonical JSON; re-resolving it reproduces `self` exactly.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn link_budget(&self) -> mmlink::Result<LinkBudget> {
        LinkBudget::new(
            self.budget.p_t_mw * 1e-3,
            self.budget.wavelength_mm * 1e-3,
            self.budget.distance_m,
            self.budget.path_loss_exponent,
            dbm_to_watts(self.budget.noise_dbm_hz),
            self.budget.bandwidth_ghz * 1e9,
        )
    }

    pub fn training_config(&self) -> mmlink::Result<TrainingConfig> {
        TrainingConfig::new(
            self.training.omega_t_deg.to_radians(),
            self.training.omega_r_deg.to_radians(),
            self.training.pilot_time_us * 1e-6,
            self.training.slot_time_ms * 1e-3,
        )
    }

    pub fn optimizer_options(&self) -> OptimizerOptions {
        let objective = match self.beams.objective {
            ObjectiveKind::WorstCase => Objective::WorstCaseRate,
            ObjectiveKind::Surrogate => Objective::Surrogate(match self.beams.penalty {
                PenaltyKind::SecondMoment => SurrogatePenalty::SecondMoment,
                PenaltyKind::ScaledBound => SurrogatePenalty::ScaledBound,
                PenaltyKind::MainLobeLaw => SurrogatePenalty::MainLobeLaw,
            }),
        };
        let lower = self
            .beams
            .phi_min_deg
            .map(|d| (d.to_radians(), d.to_radians()));
        let upper = self
            .beams
            .phi_max_deg
            .map(|d| (d.to_radians(), d.to_radians()));
        let mut opts = OptimizerOptions {
            objective,
            constraint: match self.beams.mode {
                SearchMode::Tied => BeamConstraint::Tied,
                _ => BeamConstraint::Free,
            },
            lower,
            upper,
            grid_resolution: self.beams.step_deg.to_radians(),
            k1: self.beams.k1,
            ..OptimizerOptions::default()
        };
        if self.beams.mode == SearchMode::SectorTx {
            opts = opts.with_fixed_tx(self.training.omega_t_deg.to_radians());
        }
        opts
    }

    pub fn adaptation_config(&self, seed: u64) -> AdaptationConfig {
        AdaptationConfig {
            delta_phi: self.adaptation.delta_phi_deg.to_radians(),
            delta_theta: self.adaptation.delta_theta_deg.to_radians(),
            threshold_mode: match self.adaptation.threshold_dbm {
                Some(dbm) => ThresholdMode::Custom(dbm_to_watts(dbm)),
                None => ThresholdMode::MainLobeAverage,
            },
            max_slots: self.adaptation.max_slots,
            seed,
            rearm: self.adaptation.rearm,
            draws_per_slot: self.adaptation.draws_per_slot,
        }
    }
}
