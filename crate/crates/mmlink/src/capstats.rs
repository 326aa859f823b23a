//! Expected capacity under random receiver misalignment.
//!
//! Convention: the transmitter is aligned and the receiver's pointing error
//! is uniform on `[-theta_m, theta_m]`. While the error stays inside the
//! main lobe the rate is a smooth monotone map of `|theta|`, so its mean
//! has a closed form built from the map's inverse; once the error can leave
//! the main lobe the mean becomes a two-component mixture of that closed
//! form and the flat side-lobe rate. A seeded Monte Carlo estimator of the
//! exact rate validates both.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linkbudget::{c1, rate, shannon, BeamPair, LinkBudget, TrainingConfig};
use crate::optimizer::MisalignmentModel;

/// Below this misalignment bound (radians) the distribution is treated as
/// degenerate and the aligned rate is returned directly.
const DEGENERATE_THETA: f64 = 1e-12;

/// Sample count per Monte Carlo stream; each stream gets its own RNG
/// stream index so partitioning across workers cannot change the draws.
const MC_CHUNK: usize = 1 << 16;

/// The closed form drops a `-1` inside a logarithm; that is harmless only
/// while `2^(r/eta)` stays at least this large across the averaging range.
const GUARD_MIN_SNR_TERM: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedFormMainLobe,
    ClosedFormMixture,
    MonteCarlo,
}

/// An expected-capacity figure and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedCapacity {
    /// bits/slot/Hz, already scaled by the data fraction.
    pub value: f64,
    pub method: Method,
    /// Probability that the error stays inside the receive main lobe.
    pub p_mm: f64,
    /// Complement of `p_mm`.
    pub p_ms: f64,
    /// Standard error of the estimate; zero for the closed forms.
    pub std_error: f64,
    /// Whether the closed form's accuracy guard held over the whole range
    /// (always true for Monte Carlo).
    pub guard_ok: bool,
}

/// Precomputed quantities of the main-lobe rate map `g`.
struct MainLobeMap {
    eta: f64,
    c1v: f64,
    /// Beamwidth rescaled so the main-lobe decay is `exp(-(theta/phi_eff)^2)`.
    phi_eff: f64,
    edge: f64,
}

impl MainLobeMap {
    fn build(budget: &LinkBudget, cfg: &TrainingConfig, pair: &BeamPair) -> Result<Self> {
        let (phi_t, phi_r) = pair.widths();
        let eta = cfg.data_fraction(phi_t, phi_r)?;
        Ok(MainLobeMap {
            eta,
            c1v: c1(budget, phi_t, phi_r),
            phi_eff: phi_r / pair.rx.decay_coefficient().sqrt(),
            edge: pair.rx.main_lobe_half_width(),
        })
    }

    fn exponent(&self, theta: f64) -> f64 {
        let x = theta / self.phi_eff;
        x * x
    }

    /// Rate at misalignment `theta` inside the main lobe.
    fn forward(&self, theta: f64) -> f64 {
        shannon(self.eta, self.c1v * (-self.exponent(theta)).exp())
    }

    /// `ln` of the aligned-to-misaligned SNR ratio under the approximate
    /// inverse; clamped at zero where the approximation would go negative
    /// (only possible within rounding error of theta = 0).
    fn w(&self, theta: f64) -> f64 {
        (-((-self.exponent(theta)).exp() + 1.0 / self.c1v).ln()).max(0.0)
    }

    /// Antiderivative of the rate map evaluated at `theta`, such that the
    /// mean over `[0, lim]` is `(anti(0) - anti(lim) + forward(lim)*lim)/lim`.
    fn antiderivative(&self, theta: f64) -> f64 {
        let w = self.w(theta);
        -(2.0 * self.phi_eff * self.eta / (3.0 * std::f64::consts::LN_2)) * w * w.sqrt()
    }

    /// Mean rate over misalignments uniform on `[-lim, lim]`, all inside
    /// the main lobe.
    fn average_to(&self, lim: f64) -> f64 {
        (self.antiderivative(0.0) - self.antiderivative(lim) + self.forward(lim) * lim) / lim
    }

    /// The dropped `-1` is negligible iff `1 + c1*exp(-u)` stays large at
    /// the far end of the averaging range.
    fn guard_ok(&self, lim: f64) -> bool {
        1.0 + self.c1v * (-self.exponent(lim)).exp() >= GUARD_MIN_SNR_TERM
    }

    fn infeasible(&self) -> bool {
        self.eta <= 0.0
    }
}

/// Misalignment angle at which the main-lobe rate map takes the value `r`,
/// using the exact inverse.
pub fn g_inverse(budget: &LinkBudget, cfg: &TrainingConfig, pair: &BeamPair, r: f64) -> Result<f64> {
    let m = MainLobeMap::build(budget, cfg, pair)?;
    if m.infeasible() {
        return Err(Error::Infeasible(
            "no data fraction left; the rate map is identically zero".into(),
        ));
    }
    let r0 = m.forward(0.0);
    let r_edge = m.forward(m.edge);
    if !(r > r_edge && r < r0) {
        return Err(Error::OutOfDomain(format!(
            "rate {r} outside the invertible main-lobe range ({r_edge}, {r0})"
        )));
    }
    let x = (r / m.eta).exp2() - 1.0;
    Ok(m.phi_eff * (m.c1v / x).ln().sqrt())
}

/// Approximate inverse that drops the `-1` next to `2^(r/eta)`; accurate
/// once the SNR term is large (see the guard).
pub fn g_inverse_approx(
    budget: &LinkBudget,
    cfg: &TrainingConfig,
    pair: &BeamPair,
    r: f64,
) -> Result<f64> {
    let m = MainLobeMap::build(budget, cfg, pair)?;
    if m.infeasible() {
        return Err(Error::Infeasible(
            "no data fraction left; the rate map is identically zero".into(),
        ));
    }
    let arg = m.c1v.ln() - (r / m.eta) * std::f64::consts::LN_2;
    if !r.is_finite() || r <= 0.0 || arg <= 0.0 {
        return Err(Error::OutOfDomain(format!(
            "rate {r} outside the approximate inverse's domain"
        )));
    }
    Ok(m.phi_eff * arg.sqrt())
}

fn degenerate(budget: &LinkBudget, cfg: &TrainingConfig, pair: &BeamPair, method: Method) -> Result<ExpectedCapacity> {
    let aligned = rate(budget, cfg, pair, 0.0, 0.0)?;
    let m = MainLobeMap::build(budget, cfg, pair)?;
    Ok(ExpectedCapacity {
        value: aligned.rate,
        method,
        p_mm: 1.0,
        p_ms: 0.0,
        std_error: 0.0,
        guard_ok: m.guard_ok(0.0),
    })
}

/// Closed-form expected capacity when the error cannot leave the receive
/// main lobe (`theta_m <= 1.3 * phi_r`).
pub fn expected_capacity_main_lobe(
    budget: &LinkBudget,
    cfg: &TrainingConfig,
    pair: &BeamPair,
    mis: &MisalignmentModel,
) -> Result<ExpectedCapacity> {
    let m = MainLobeMap::build(budget, cfg, pair)?;
    let theta_m = mis.theta_m();
    if theta_m > m.edge {
        return Err(Error::OutOfDomain(format!(
            "theta_m {theta_m} exceeds the main-lobe half-width {}; use the mixture form",
            m.edge
        )));
    }
    if theta_m <= DEGENERATE_THETA {
        return degenerate(budget, cfg, pair, Method::ClosedFormMainLobe);
    }
    if m.infeasible() {
        return Ok(ExpectedCapacity {
            value: 0.0,
            method: Method::ClosedFormMainLobe,
            p_mm: 1.0,
            p_ms: 0.0,
            std_error: 0.0,
            guard_ok: true,
        });
    }
    Ok(ExpectedCapacity {
        value: m.average_to(theta_m),
        method: Method::ClosedFormMainLobe,
        p_mm: 1.0,
        p_ms: 0.0,
        std_error: 0.0,
        guard_ok: m.guard_ok(theta_m),
    })
}

/// Closed-form expected capacity when the error can leave the receive main
/// lobe (`theta_m >= 1.3 * phi_r`): with probability `p_mm` the link sees
/// the conditional main-lobe mean, otherwise the flat side-lobe rate.
pub fn expected_capacity_mixture(
    budget: &LinkBudget,
    cfg: &TrainingConfig,
    pair: &BeamPair,
    mis: &MisalignmentModel,
) -> Result<ExpectedCapacity> {
    let m = MainLobeMap::build(budget, cfg, pair)?;
    let theta_m = mis.theta_m();
    if theta_m < m.edge {
        return Err(Error::OutOfDomain(format!(
            "theta_m {theta_m} is inside the main lobe (half-width {}); use the main-lobe form",
            m.edge
        )));
    }
    if m.infeasible() {
        return Ok(ExpectedCapacity {
            value: 0.0,
            method: Method::ClosedFormMixture,
            p_mm: (m.edge / theta_m).min(1.0),
            p_ms: 1.0 - (m.edge / theta_m).min(1.0),
            std_error: 0.0,
            guard_ok: true,
        });
    }
    let p_mm = (m.edge / theta_m).min(1.0);
    let side_rate = shannon(
        m.eta,
        budget.snr(pair.tx.gain(0.0), pair.rx.side_lobe_gain()),
    );
    let value = p_mm * m.average_to(m.edge) + (1.0 - p_mm) * side_rate;
    Ok(ExpectedCapacity {
        value,
        method: Method::ClosedFormMixture,
        p_mm,
        p_ms: 1.0 - p_mm,
        std_error: 0.0,
        guard_ok: m.guard_ok(m.edge),
    })
}

/// Closed-form expected capacity, dispatching on whether the misalignment
/// bound fits inside the receive main lobe.
pub fn expected_capacity(
    budget: &LinkBudget,
    cfg: &TrainingConfig,
    pair: &BeamPair,
    mis: &MisalignmentModel,
) -> Result<ExpectedCapacity> {
    let edge = pair.rx.main_lobe_half_width();
    if mis.theta_m() <= edge {
        expected_capacity_main_lobe(budget, cfg, pair, mis)
    } else {
        expected_capacity_mixture(budget, cfg, pair, mis)
    }
}

/// Raw statistics of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloStats {
    pub mean: f64,
    pub std_error: f64,
    pub min_rate: f64,
    pub max_rate: f64,
    pub samples: usize,
    /// Fraction of samples whose error stayed inside the receive main lobe.
    pub main_lobe_fraction: f64,
}

/// Monte Carlo estimate of the expected capacity: draws the receiver error
/// uniform on `[-theta_m, theta_m]`, keeps the transmitter aligned, and
/// averages the exact rate (both pattern branches).
///
/// Samples are generated in fixed-size streams keyed by stream index, so
/// the result is bit-identical no matter how many workers participate.
pub fn monte_carlo_stats(
    budget: &LinkBudget,
    cfg: &TrainingConfig,
    pair: &BeamPair,
    mis: &MisalignmentModel,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloStats> {
    if samples == 0 {
        return Err(Error::invalid("samples", "need at least one sample"));
    }
    let (phi_t, phi_r) = pair.widths();
    let eta = cfg.data_fraction(phi_t, phi_r)?;
    let theta_m = mis.theta_m();
    let g_t0 = pair.tx.gain(0.0);
    let edge = pair.rx.main_lobe_half_width();

    let chunks = samples.div_ceil(MC_CHUNK);
    struct Partial {
        sum: f64,
        sum_sq: f64,
        min: f64,
        max: f64,
        in_lobe: usize,
    }
    let partials: Vec<Partial> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let count = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            let mut p = Partial {
                sum: 0.0,
                sum_sq: 0.0,
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
                in_lobe: 0,
            };
            for _ in 0..count {
                let unit = rng.next_u64() as f64 / 2f64.powi(64);
                let theta = (2.0 * unit - 1.0) * theta_m;
                let r = if eta <= 0.0 {
                    0.0
                } else {
                    shannon(eta, budget.snr(g_t0, pair.rx.gain(theta)))
                };
                p.sum += r;
                p.sum_sq += r * r;
                p.min = p.min.min(r);
                p.max = p.max.max(r);
                if theta.abs() <= edge {
                    p.in_lobe += 1;
                }
            }
            p
        })
        .collect();

    // reduce sequentially in stream order so the float sums are fixed
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut in_lobe = 0usize;
    for p in &partials {
        sum += p.sum;
        sum_sq += p.sum_sq;
        min = min.min(p.min);
        max = max.max(p.max);
        in_lobe += p.in_lobe;
    }
    let n = samples as f64;
    let mean = sum / n;
    let variance = if samples > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(MonteCarloStats {
        mean,
        std_error: (variance / n).sqrt(),
        min_rate: min,
        max_rate: max,
        samples,
        main_lobe_fraction: in_lobe as f64 / n,
    })
}

/// Monte Carlo estimate packaged as an [`ExpectedCapacity`].
pub fn monte_carlo_expected_capacity(
    budget: &LinkBudget,
    cfg: &TrainingConfig,
    pair: &BeamPair,
    mis: &MisalignmentModel,
    samples: usize,
    seed: u64,
) -> Result<ExpectedCapacity> {
    let stats = monte_carlo_stats(budget, cfg, pair, mis, samples, seed)?;
    Ok(ExpectedCapacity {
        value: stats.mean,
        method: Method::MonteCarlo,
        p_mm: stats.main_lobe_fraction,
        p_ms: 1.0 - stats.main_lobe_fraction,
        std_error: stats.std_error,
        guard_ok: true,
    })
}
