//! Reactive beamwidth widening driven by received signal strength.
//!
//! Each slot draws one pointing error, held for the whole slot. If the
//! measured RSSI falls below a pair-dependent threshold (the mean main-lobe
//! RSSI of the current beams), both ends widen by a fixed step and the
//! threshold is recomputed for the new pair. Once a slot passes the
//! threshold the mechanism stops; a re-armable mode that keeps monitoring
//! afterwards is available behind a flag.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::antenna::AntennaPattern;
use crate::error::{Error, Result};
use crate::linkbudget::{rate, BeamPair, LinkBudget, TrainingConfig};
use crate::optimizer::MisalignmentModel;

/// How the widening trigger level is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMode {
    /// Mean received power over the narrower beam's main lobe, recomputed
    /// whenever the pair changes.
    MainLobeAverage,
    /// Fixed level in watts.
    Custom(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptationConfig {
    /// Widening step per adaptation, radians.
    pub delta_phi: f64,
    /// Sampling interval of the threshold average, radians.
    pub delta_theta: f64,
    pub threshold_mode: ThresholdMode,
    pub max_slots: usize,
    pub seed: u64,
    /// Keep monitoring after the first passing slot instead of stopping
    /// for good.
    pub rearm: bool,
    /// Pointing-error draws averaged within each slot.
    pub draws_per_slot: usize,
}

impl Default for AdaptationConfig {
    fn default() -> Self {
        AdaptationConfig {
            delta_phi: 1.0f64.to_radians(),
            delta_theta: 2.0f64.to_radians(),
            threshold_mode: ThresholdMode::MainLobeAverage,
            max_slots: 10,
            seed: 42,
            rearm: false,
            draws_per_slot: 1,
        }
    }
}

impl AdaptationConfig {
    fn validate(&self) -> Result<()> {
        if !self.delta_phi.is_finite() || self.delta_phi <= 0.0 {
            return Err(Error::invalid("delta_phi", "widening step must be positive"));
        }
        if !self.delta_theta.is_finite() || self.delta_theta <= 0.0 {
            return Err(Error::invalid("delta_theta", "sampling interval must be positive"));
        }
        if self.max_slots == 0 {
            return Err(Error::invalid("max_slots", "need at least one slot"));
        }
        if self.draws_per_slot == 0 {
            return Err(Error::invalid("draws_per_slot", "need at least one draw per slot"));
        }
        if let ThresholdMode::Custom(v) = self.threshold_mode {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid("threshold_mode", "custom threshold must be positive watts"));
            }
        }
        Ok(())
    }
}

/// One slot of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotTrace {
    /// 1-based slot number.
    pub slot_index: usize,
    pub phi_t: f64,
    pub phi_r: f64,
    /// First pointing error drawn for the slot, radians.
    pub theta_drawn: f64,
    /// Received power averaged over the slot's draws, watts.
    pub mean_rssi: f64,
    /// Trigger level the RSSI was compared against, watts.
    pub threshold: f64,
    /// bits/slot/Hz with the slot's pair and drawn error.
    pub capacity: f64,
    /// The threshold comparison fired and the beams widened after this slot.
    pub adapted: bool,
}

/// Complete record of one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationRun {
    pub trace: Vec<SlotTrace>,
    /// 1-based index of the first slot whose RSSI met the threshold;
    /// `None` if no slot ever passed.
    pub stabilized_slot: Option<usize>,
    /// A widening step ran into a sector limit.
    pub clamped: bool,
    pub rearm: bool,
}

impl AdaptationRun {
    /// Mean capacity across the trace.
    pub fn mean_capacity(&self) -> f64 {
        if self.trace.is_empty() {
            return 0.0;
        }
        self.trace.iter().map(|s| s.capacity).sum::<f64>() / self.trace.len() as f64
    }
}

/// Trigger level for a pair: the arithmetic mean of the received power
/// sampled across the narrower beam's main lobe from `-1.3*phi` in steps
/// of `delta_theta` (`floor(2.6*phi/delta_theta) + 1` samples).
pub fn rssi_threshold(budget: &LinkBudget, pair: &BeamPair, delta_theta: f64) -> Result<f64> {
    if !delta_theta.is_finite() || delta_theta <= 0.0 {
        return Err(Error::invalid("delta_theta", "sampling interval must be positive"));
    }
    let phi = pair.tx.hpbw().min(pair.rx.hpbw());
    let half_width = AntennaPattern::new(phi)?.main_lobe_half_width();
    let count = (2.0 * half_width / delta_theta + 1e-9).floor() as usize + 1;
    let mut sum = 0.0;
    for i in 0..count {
        let theta = -half_width + i as f64 * delta_theta;
        sum += budget.received_power(pair.tx.gain(theta), pair.rx.gain(theta));
    }
    Ok(sum / count as f64)
}

fn threshold_for(
    budget: &LinkBudget,
    pair: &BeamPair,
    adapt: &AdaptationConfig,
) -> Result<f64> {
    match adapt.threshold_mode {
        ThresholdMode::MainLobeAverage => rssi_threshold(budget, pair, adapt.delta_theta),
        ThresholdMode::Custom(v) => Ok(v),
    }
}

fn run(
    budget: &LinkBudget,
    cfg: &TrainingConfig,
    adapt: &AdaptationConfig,
    mis: &MisalignmentModel,
    initial: &BeamPair,
    widening_enabled: bool,
) -> Result<AdaptationRun> {
    adapt.validate()?;
    let (phi_t0, phi_r0) = initial.widths();
    cfg.data_fraction(phi_t0, phi_r0)?; // bounds check against the sectors
    let theta_m = mis.theta_m();

    let mut rng = ChaCha8Rng::seed_from_u64(adapt.seed);
    let mut pair = *initial;
    let mut threshold = threshold_for(budget, &pair, adapt)?;
    let mut armed = widening_enabled;
    let mut clamped = false;
    let mut stabilized_slot = None;
    let mut trace = Vec::with_capacity(adapt.max_slots);

    for slot_index in 1..=adapt.max_slots {
        let mut rssi_sum = 0.0;
        let mut capacity_sum = 0.0;
        let mut first_theta = 0.0;
        for draw in 0..adapt.draws_per_slot {
            let unit = rng.next_u64() as f64 / 2f64.powi(64);
            let theta = (2.0 * unit - 1.0) * theta_m;
            if draw == 0 {
                first_theta = theta;
            }
            rssi_sum += budget.received_power(pair.tx.gain(theta), pair.rx.gain(theta));
            capacity_sum += rate(budget, cfg, &pair, theta, theta)?.rate;
        }
        let n = adapt.draws_per_slot as f64;
        let mean_rssi = rssi_sum / n;
        let capacity = capacity_sum / n;

        let below = mean_rssi < threshold;
        let adapted = armed && below;
        trace.push(SlotTrace {
            slot_index,
            phi_t: pair.tx.hpbw(),
            phi_r: pair.rx.hpbw(),
            theta_drawn: first_theta,
            mean_rssi,
            threshold,
            capacity,
            adapted,
        });

        if armed && !below && stabilized_slot.is_none() {
            stabilized_slot = Some(slot_index);
        }
        if adapted {
            let next_t = (pair.tx.hpbw() + adapt.delta_phi).min(cfg.omega_t());
            let next_r = (pair.rx.hpbw() + adapt.delta_phi).min(cfg.omega_r());
            if next_t == pair.tx.hpbw() && next_r == pair.rx.hpbw() {
                // both sides pinned at their sector limits; nothing left to widen
                clamped = true;
                armed = false;
            } else {
                if next_t >= cfg.omega_t() || next_r >= cfg.omega_r() {
                    clamped = true;
                }
                pair = BeamPair::from_patterns(
                    AntennaPattern::with_k1(next_t, pair.tx.k1())?,
                    AntennaPattern::with_k1(next_r, pair.rx.k1())?,
                );
                threshold = threshold_for(budget, &pair, adapt)?;
            }
        } else if armed && !below && !adapt.rearm {
            armed = false;
        }
    }

    Ok(AdaptationRun {
        trace,
        stabilized_slot,
        clamped,
        rearm: adapt.rearm,
    })
}

/// Run the widening loop for `max_slots` slots.
pub fn run_adaptation(
    budget: &LinkBudget,
    cfg: &TrainingConfig,
    adapt: &AdaptationConfig,
    mis: &MisalignmentModel,
    initial: &BeamPair,
) -> Result<AdaptationRun> {
    run(budget, cfg, adapt, mis, initial, true)
}

/// Same slots and pointing errors, but the beams never widen: the baseline
/// the adaptive run is judged against.
pub fn run_without_adaptation(
    budget: &LinkBudget,
    cfg: &TrainingConfig,
    adapt: &AdaptationConfig,
    mis: &MisalignmentModel,
    initial: &BeamPair,
) -> Result<AdaptationRun> {
    run(budget, cfg, adapt, mis, initial, false)
}

/// Aggregate adaptive-vs-static comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptationSummary {
    pub seeds: usize,
    pub mean_capacity_adaptive: f64,
    pub mean_capacity_static: f64,
    /// adaptive mean over static mean.
    pub improvement_ratio: f64,
    /// Mean first passing slot; runs that never pass count as `max_slots`.
    pub mean_slots_to_stabilize: f64,
    /// Fraction of seeds whose adaptive mean is at least the static mean.
    pub dominance_fraction: f64,
    pub rearm: bool,
}

/// Run adaptive and static traces for `seed_count` consecutive seeds
/// starting at the config's seed and aggregate the capacity statistics.
pub fn compare_over_seeds(
    budget: &LinkBudget,
    cfg: &TrainingConfig,
    adapt: &AdaptationConfig,
    mis: &MisalignmentModel,
    initial: &BeamPair,
    seed_count: usize,
) -> Result<AdaptationSummary> {
    if seed_count == 0 {
        return Err(Error::invalid("seed_count", "need at least one seed"));
    }
    let mut adaptive_sum = 0.0;
    let mut static_sum = 0.0;
    let mut slots_sum = 0.0;
    let mut dominant = 0usize;
    for i in 0..seed_count {
        let cfg_i = AdaptationConfig {
            seed: adapt.seed.wrapping_add(i as u64),
            ..*adapt
        };
        let with = run_adaptation(budget, cfg, &cfg_i, mis, initial)?;
        let without = run_without_adaptation(budget, cfg, &cfg_i, mis, initial)?;
        let a = with.mean_capacity();
        let s = without.mean_capacity();
        adaptive_sum += a;
        static_sum += s;
        slots_sum += with.stabilized_slot.unwrap_or(adapt.max_slots) as f64;
        if a >= s - 1e-12 {
            dominant += 1;
        }
    }
    let n = seed_count as f64;
    let mean_adaptive = adaptive_sum / n;
    let mean_static = static_sum / n;
    Ok(AdaptationSummary {
        seeds: seed_count,
        mean_capacity_adaptive: mean_adaptive,
        mean_capacity_static: mean_static,
        improvement_ratio: mean_adaptive / mean_static,
        mean_slots_to_stabilize: slots_sum / n,
        dominance_fraction: dominant as f64 / n,
        rearm: adapt.rearm,
    })
}
