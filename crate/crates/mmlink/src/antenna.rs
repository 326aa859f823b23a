//! Directional antenna model with a Gaussian main lobe and a flat side-lobe
//! floor.
//!
//! The pattern is radially symmetric and controlled by a single half-power
//! beamwidth. Narrowing the beam raises the boresight gain like
//! `1/sin^2(hpbw/2)` but shrinks the angular window in which that gain is
//! actually received, which is the tension every consumer of this module
//! trades off.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};

/// Peak-gain coefficient of the Gaussian main-lobe profile.
pub const PEAK_GAIN_COEFFICIENT: f64 = 1.6162;

/// The main lobe extends to `MAIN_LOBE_EDGE_FACTOR * hpbw` on each side of
/// boresight; beyond it only the side-lobe floor remains.
pub const MAIN_LOBE_EDGE_FACTOR: f64 = 1.3;

/// Radiation pattern of one antenna, parameterised by its half-power
/// beamwidth in radians.
///
/// `k1` shapes how fast the main lobe decays away from boresight; `k1 = 1`
/// places the half-power points exactly at `hpbw / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaPattern {
    hpbw: f64,
    k1: f64,
}

impl AntennaPattern {
    /// Pattern with the standard decay shape (`k1 = 1`).
    pub fn new(hpbw: f64) -> Result<Self> {
        Self::with_k1(hpbw, 1.0)
    }

    /// Pattern with an explicit decay-shape factor.
    pub fn with_k1(hpbw: f64, k1: f64) -> Result<Self> {
        if !hpbw.is_finite() || hpbw <= 0.0 || hpbw > 2.0 * PI {
            return Err(Error::invalid(
                "hpbw",
                format!("half-power beamwidth must lie in (0, 2*pi] radians, got {hpbw}"),
            ));
        }
        if !k1.is_finite() || k1 <= 0.0 {
            return Err(Error::invalid(
                "k1",
                format!("decay-shape factor must be finite and positive, got {k1}"),
            ));
        }
        Ok(Self { hpbw, k1 })
    }

    /// Half-power beamwidth in radians.
    pub fn hpbw(&self) -> f64 {
        self.hpbw
    }

    /// Decay-shape factor of the main lobe.
    pub fn k1(&self) -> f64 {
        self.k1
    }

    /// Peak (boresight) gain, linear scale.
    pub fn boresight_gain(&self) -> f64 {
        let s = (self.hpbw / 2.0).sin();
        (PEAK_GAIN_COEFFICIENT / s) * (PEAK_GAIN_COEFFICIENT / s)
    }

    /// Constant gain outside the main lobe, linear scale.
    ///
    /// Wider beams leak slightly less into the side lobe, hence the weak
    /// negative power of the beamwidth.
    pub fn side_lobe_gain(&self) -> f64 {
        (-2.437f64).exp() * self.hpbw.powf(-0.094)
    }

    /// Gain at misalignment angle `theta` (radians), linear scale.
    ///
    /// Any finite angle is accepted; it is folded into `[0, pi]` first, so
    /// the pattern is even and `2*pi`-periodic.
    pub fn gain(&self, theta: f64) -> f64 {
        let th = fold_angle(theta);
        if th <= self.main_lobe_half_width() {
            let x = th / self.hpbw;
            self.boresight_gain() * (-self.k1 * 4.0 * LN_2 * x * x).exp()
        } else {
            self.side_lobe_gain()
        }
    }

    /// Angular half-width of the main lobe in radians.
    pub fn main_lobe_half_width(&self) -> f64 {
        MAIN_LOBE_EDGE_FACTOR * self.hpbw
    }

    /// Whether every misalignment up to `theta_max` keeps the peer inside
    /// the main lobe.
    pub fn link_available(&self, theta_max: f64) -> bool {
        fold_angle(theta_max) <= self.main_lobe_half_width()
    }

    /// Coefficient `c` in the main-lobe decay law `exp(-c * (theta/hpbw)^2)`.
    pub fn decay_coefficient(&self) -> f64 {
        4.0 * LN_2 * self.k1
    }
}

/// Fold an arbitrary finite angle into `[0, pi]` using evenness and
/// `2*pi`-periodicity.
pub(crate) fn fold_angle(theta: f64) -> f64 {
    let mut th = theta.abs() % (2.0 * PI);
    if th > PI {
        th = 2.0 * PI - th;
    }
    th
}
