//! Link budget of a trained directional link: free-space path gain, the
//! time cost of exhaustive beam training, and the net spectral efficiency
//! that survives both.
//!
//! Training cost has two parts. Scanning the sector with the sector-level
//! beams costs `(2*pi/omega_t + 2*pi/omega_r)` pilots; refining down to the
//! data beams costs `(omega_t/phi_t + omega_r/phi_r)` pilots. Narrow data
//! beams therefore pay more overhead per slot, wide ones less, and the
//! fraction of the slot left for data is what multiplies the Shannon rate.

use std::f64::consts::PI;

use crate::antenna::{AntennaPattern, PEAK_GAIN_COEFFICIENT};
use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Transmit power, carrier wavelength, distance, path-loss exponent and
/// noise floor of one point-to-point link. All values are SI (watts,
/// metres, hertz, watts per hertz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    p_t: f64,
    lambda: f64,
    d: f64,
    alpha: f64,
    n0: f64,
    w: f64,
}

impl LinkBudget {
    pub fn new(p_t: f64, lambda: f64, d: f64, alpha: f64, n0: f64, w: f64) -> Result<Self> {
        fn positive(name: &'static str, v: f64) -> Result<f64> {
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(Error::invalid(name, format!("must be finite and positive, got {v}")))
            }
        }
        Ok(Self {
            p_t: positive("p_t", p_t)?,
            lambda: positive("lambda", lambda)?,
            d: positive("d", d)?,
            alpha: positive("alpha", alpha)?,
            n0: positive("n0", n0)?,
            w: positive("w", w)?,
        })
    }

    pub fn p_t(&self) -> f64 {
        self.p_t
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn n0(&self) -> f64 {
        self.n0
    }
    pub fn w(&self) -> f64 {
        self.w
    }

    /// Isotropic path gain `(lambda / (4*pi*d))^alpha`, linear scale.
    pub fn path_gain(&self) -> f64 {
        (self.lambda / (4.0 * PI * self.d)).powf(self.alpha)
    }

    /// Transmit power over total noise power, `p_t / (n0 * w)`.
    pub fn snr_scale(&self) -> f64 {
        self.p_t / (self.n0 * self.w)
    }

    /// Receive SNR given the two antenna gains, linear scale.
    pub fn snr(&self, g_t: f64, g_r: f64) -> f64 {
        g_t * g_r * self.path_gain() * self.snr_scale()
    }

    /// Received signal power in watts given the two antenna gains (the
    /// quantity an RSSI measurement reports).
    pub fn received_power(&self, g_t: f64, g_r: f64) -> f64 {
        g_t * g_r * self.path_gain() * self.p_t
    }
}

impl Default for LinkBudget {
    /// 10 mW into a 5 m indoor 60 GHz link, 2.16 GHz of bandwidth,
    /// free-space exponent 2 and a -174 dBm/Hz noise floor.
    fn default() -> Self {
        LinkBudget::new(
            0.01,
            SPEED_OF_LIGHT / 60.0e9,
            5.0,
            2.0,
            10f64.powf(-20.4),
            2.16e9,
        )
        .expect("default link budget is valid")
    }
}

/// Timing of the two-level training procedure: sector widths at both ends,
/// pilot duration and slot duration, all SI (radians, seconds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingConfig {
    omega_t: f64,
    omega_r: f64,
    t_p: f64,
    t_s: f64,
}

impl TrainingConfig {
    pub fn new(omega_t: f64, omega_r: f64, t_p: f64, t_s: f64) -> Result<Self> {
        fn sector(name: &'static str, v: f64) -> Result<f64> {
            if v.is_finite() && v > 0.0 && v <= 2.0 * PI {
                Ok(v)
            } else {
                Err(Error::invalid(name, format!("sector width must lie in (0, 2*pi] radians, got {v}")))
            }
        }
        fn duration(name: &'static str, v: f64) -> Result<f64> {
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(Error::invalid(name, format!("must be a positive duration in seconds, got {v}")))
            }
        }
        Ok(Self {
            omega_t: sector("omega_t", omega_t)?,
            omega_r: sector("omega_r", omega_r)?,
            t_p: duration("t_p", t_p)?,
            t_s: duration("t_s", t_s)?,
        })
    }

    pub fn omega_t(&self) -> f64 {
        self.omega_t
    }
    pub fn omega_r(&self) -> f64 {
        self.omega_r
    }
    pub fn t_p(&self) -> f64 {
        self.t_p
    }
    pub fn t_s(&self) -> f64 {
        self.t_s
    }

    fn check_widths(&self, phi_t: f64, phi_r: f64) -> Result<()> {
        for (name, phi, omega) in [("phi_t", phi_t, self.omega_t), ("phi_r", phi_r, self.omega_r)] {
            if !phi.is_finite() || phi <= 0.0 || phi > omega {
                return Err(Error::invalid(
                    name,
                    format!("beamwidth must lie in (0, {omega}] radians, got {phi}"),
                ));
            }
        }
        Ok(())
    }

    /// Total training time per slot in seconds for the given data beamwidths.
    pub fn training_time(&self, phi_t: f64, phi_r: f64) -> Result<f64> {
        self.check_widths(phi_t, phi_r)?;
        let sector_scan = 2.0 * PI / self.omega_t + 2.0 * PI / self.omega_r;
        let beam_refine = self.omega_t / phi_t + self.omega_r / phi_r;
        Ok((sector_scan + beam_refine) * self.t_p)
    }

    /// Fraction of the slot left for data, clamped at zero when training
    /// does not fit in the slot at all.
    pub fn data_fraction(&self, phi_t: f64, phi_r: f64) -> Result<f64> {
        let t_b = self.training_time(phi_t, phi_r)?;
        Ok((1.0 - t_b / self.t_s).max(0.0))
    }
}

impl Default for TrainingConfig {
    /// 90-degree sectors at both ends, 15.6 us pilots, 10 ms slots.
    fn default() -> Self {
        TrainingConfig::new(PI / 2.0, PI / 2.0, 15.6e-6, 10.0e-3).expect("default training config is valid")
    }
}

/// Transmit and receive patterns of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamPair {
    pub tx: AntennaPattern,
    pub rx: AntennaPattern,
}

impl BeamPair {
    pub fn from_patterns(tx: AntennaPattern, rx: AntennaPattern) -> Self {
        Self { tx, rx }
    }

    /// Both patterns with the standard decay shape.
    pub fn from_hpbw(phi_t: f64, phi_r: f64) -> Result<Self> {
        Ok(Self {
            tx: AntennaPattern::new(phi_t)?,
            rx: AntennaPattern::new(phi_r)?,
        })
    }

    pub fn from_hpbw_k1(phi_t: f64, phi_r: f64, k1: f64) -> Result<Self> {
        Ok(Self {
            tx: AntennaPattern::with_k1(phi_t, k1)?,
            rx: AntennaPattern::with_k1(phi_r, k1)?,
        })
    }

    /// Same beamwidth at both ends.
    pub fn symmetric(phi: f64) -> Result<Self> {
        Self::from_hpbw(phi, phi)
    }

    /// `(phi_t, phi_r)` in radians.
    pub fn widths(&self) -> (f64, f64) {
        (self.tx.hpbw(), self.rx.hpbw())
    }
}

/// Which part of the pattern served the link in a rate evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Both ends inside their main lobes.
    MainLobe,
    /// At least one end fell off its main lobe onto the side-lobe floor.
    SideLobe,
    /// Training does not fit in the slot; no data can be sent.
    Infeasible,
}

/// Outcome of one rate evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityResult {
    /// Net spectral efficiency in bit/s/Hz (already scaled by the data
    /// fraction of the slot).
    pub rate: f64,
    /// Fraction of the slot carrying data.
    pub eta: f64,
    pub regime: Regime,
}

pub(crate) fn shannon(eta: f64, snr: f64) -> f64 {
    // ln_1p keeps full precision when the SNR underflows the 1.0 term.
    eta * snr.ln_1p() / std::f64::consts::LN_2
}

/// Net spectral efficiency of the link with the given beam pair and
/// misalignment angles (radians) at each end.
pub fn rate(
    budget: &LinkBudget,
    cfg: &TrainingConfig,
    pair: &BeamPair,
    theta_t: f64,
    theta_r: f64,
) -> Result<CapacityResult> {
    let (phi_t, phi_r) = pair.widths();
    let eta = cfg.data_fraction(phi_t, phi_r)?;
    for (name, theta) in [("theta_t", theta_t), ("theta_r", theta_r)] {
        if !theta.is_finite() {
            return Err(Error::invalid(name, format!("misalignment must be finite, got {theta}")));
        }
    }
    if eta <= 0.0 {
        return Ok(CapacityResult {
            rate: 0.0,
            eta: 0.0,
            regime: Regime::Infeasible,
        });
    }
    let g_t = pair.tx.gain(theta_t);
    let g_r = pair.rx.gain(theta_r);
    let regime = if pair.tx.link_available(theta_t) && pair.rx.link_available(theta_r) {
        Regime::MainLobe
    } else {
        Regime::SideLobe
    };
    Ok(CapacityResult {
        rate: shannon(eta, budget.snr(g_t, g_r)),
        eta,
        regime,
    })
}

/// SNR constant of the aligned link with the sin^2 peak-gain factors of
/// both beams pulled out: the aligned SNR is `c1` times the product of the
/// two main-lobe decay terms.
pub fn c1(budget: &LinkBudget, phi_t: f64, phi_r: f64) -> f64 {
    let peak4 = PEAK_GAIN_COEFFICIENT.powi(4);
    let s_t = (phi_t / 2.0).sin();
    let s_r = (phi_r / 2.0).sin();
    budget.path_gain() * budget.snr_scale() * peak4 / (s_t * s_t * s_r * s_r)
}

/// Smallest beamwidth (radians, same at both ends) for which training still
/// fits in the slot. Beams narrower than this leave no time for data.
pub fn min_feasible_beamwidth(cfg: &TrainingConfig) -> Result<f64> {
    let sector_scan_fraction = (2.0 * PI / cfg.omega_t + 2.0 * PI / cfg.omega_r) * cfg.t_p / cfg.t_s;
    if sector_scan_fraction >= 1.0 {
        return Err(Error::Infeasible(format!(
            "sector-level scan alone consumes the whole slot (fraction {sector_scan_fraction:.3})"
        )));
    }
    Ok((cfg.omega_t + cfg.omega_r) * (cfg.t_p / cfg.t_s) / (1.0 - sector_scan_fraction))
}

/// Smallest receive beamwidth for which training fits when the transmit
/// beamwidth is held fixed.
pub fn min_feasible_rx_beamwidth(cfg: &TrainingConfig, phi_t: f64) -> Result<f64> {
    min_feasible_one_side(cfg, "phi_t", phi_t, cfg.omega_t, cfg.omega_r)
}

/// Smallest transmit beamwidth for which training fits when the receive
/// beamwidth is held fixed.
pub fn min_feasible_tx_beamwidth(cfg: &TrainingConfig, phi_r: f64) -> Result<f64> {
    min_feasible_one_side(cfg, "phi_r", phi_r, cfg.omega_r, cfg.omega_t)
}

fn min_feasible_one_side(
    cfg: &TrainingConfig,
    fixed_name: &'static str,
    fixed_phi: f64,
    fixed_omega: f64,
    free_omega: f64,
) -> Result<f64> {
    if !fixed_phi.is_finite() || fixed_phi <= 0.0 || fixed_phi > fixed_omega {
        return Err(Error::invalid(
            fixed_name,
            format!("beamwidth must lie in (0, {fixed_omega}] radians, got {fixed_phi}"),
        ));
    }
    let fixed_fraction = ((2.0 * PI / cfg.omega_t + 2.0 * PI / cfg.omega_r)
        + fixed_omega / fixed_phi)
        * cfg.t_p
        / cfg.t_s;
    if fixed_fraction >= 1.0 {
        return Err(Error::Infeasible(format!(
            "training with the fixed beam at {fixed_phi} rad already consumes the whole slot"
        )));
    }
    Ok(free_omega * (cfg.t_p / cfg.t_s) / (1.0 - fixed_fraction))
}
