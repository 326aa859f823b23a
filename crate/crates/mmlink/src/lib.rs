//! Directional millimeter-wave link modeling under beam misalignment.
//!
//! The crate models a point-to-point link whose ends use steerable
//! directional beams: a Gaussian main-lobe antenna pattern, the time cost
//! of exhaustively training beam pairs within each slot, and the Shannon
//! rate that survives both the training overhead and imperfect pointing.
//! On top of the link model it provides
//!
//! * capacity-maximizing beamwidth selection ([`optimizer`]), via projected
//!   gradient ascent on a smooth surrogate cross-checked against a dense
//!   grid search, or direct grid search on the worst-case rate;
//! * closed-form expected capacity under uniformly distributed pointing
//!   error with a seeded Monte Carlo estimator to validate it
//!   ([`capstats`]);
//! * a slot-by-slot simulation of threshold-triggered beam widening
//!   ([`adaptation`]).
//!
//! Angles are radians, powers watts, times seconds, rates bits/s/Hz
//! everywhere; conversions happen at the edges, not inside the model.
//!
//! ```
//! use mmlink::{rate, BeamPair, LinkBudget, TrainingConfig};
//!
//! let budget = LinkBudget::default();
//! let training = TrainingConfig::default();
//! let pair = BeamPair::symmetric(5.0_f64.to_radians()).unwrap();
//! let aligned = rate(&budget, &training, &pair, 0.0, 0.0).unwrap();
//! let skewed = rate(&budget, &training, &pair, 0.02, 0.02).unwrap();
//! assert!(skewed.rate < aligned.rate);
//! ```

pub mod adaptation;
pub mod antenna;
pub mod capstats;
pub mod error;
pub mod linkbudget;
pub mod optimizer;

pub use adaptation::{
    compare_over_seeds, run_adaptation, run_without_adaptation, rssi_threshold, AdaptationConfig,
    AdaptationRun, AdaptationSummary, SlotTrace, ThresholdMode,
};
pub use antenna::AntennaPattern;
pub use capstats::{
    expected_capacity, expected_capacity_main_lobe, expected_capacity_mixture, g_inverse,
    g_inverse_approx, monte_carlo_expected_capacity, monte_carlo_stats, ExpectedCapacity, Method,
    MonteCarloStats,
};
pub use error::{Error, Result};
pub use linkbudget::{
    c1, min_feasible_beamwidth, min_feasible_rx_beamwidth, min_feasible_tx_beamwidth, rate,
    BeamPair, CapacityResult, LinkBudget, Regime, TrainingConfig,
};
pub use optimizer::{
    optimize_beamwidths, surrogate_gradient, surrogate_objective, worst_case_rate, BeamConstraint,
    MisalignmentModel, Objective, OptimizationOutcome, OptimizerOptions, SurrogatePenalty,
};
