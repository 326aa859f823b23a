//! Beamwidth selection under bounded pointing error.
//!
//! The tractable objective replaces the random misalignment by its mean
//! square, giving a smooth function of the two beamwidths that projected
//! gradient ascent can climb. An exhaustive grid oracle cross-checks every
//! answer, and the exact worst-case rate (full pattern, misalignment pinned
//! at its bound) is available as an alternative objective that only the
//! grid handles.

use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linkbudget::{
    c1, min_feasible_beamwidth, min_feasible_rx_beamwidth, min_feasible_tx_beamwidth, rate,
    BeamPair, CapacityResult, LinkBudget, TrainingConfig,
};

/// Margin added above the zero-data-fraction beamwidth when building the
/// feasible box, radians.
pub const FEASIBILITY_MARGIN: f64 = 1e-7;

/// Armijo sufficient-increase constant of the backtracking line search.
const ARMIJO_C: f64 = 1e-4;

/// Uniform pointing-error model on `[-theta_m, theta_m]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MisalignmentModel {
    theta_m: f64,
}

impl MisalignmentModel {
    pub fn uniform(theta_m: f64) -> Result<Self> {
        if !theta_m.is_finite() || theta_m < 0.0 || theta_m > PI {
            return Err(Error::invalid(
                "theta_m",
                format!("misalignment bound must lie in [0, pi] radians, got {theta_m}"),
            ));
        }
        Ok(Self { theta_m })
    }

    pub fn theta_m(&self) -> f64 {
        self.theta_m
    }

    /// Second moment of the pointing error, `theta_m^2 / 3`.
    pub fn mean_square(&self) -> f64 {
        self.theta_m * self.theta_m / 3.0
    }
}

/// How the misalignment bound enters the smooth objective's exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SurrogatePenalty {
    /// `exp(-(theta_m^2/3) / phi^2)` per side: the mean-square error of the
    /// uniform distribution. Default.
    #[default]
    SecondMoment,
    /// `exp(-(theta_m/(3 phi))^2)` per side: a milder variant kept behind a
    /// flag for comparison runs.
    ScaledBound,
    /// Mean-square error fed through the full main-lobe decay law, so the
    /// pattern's decay coefficient multiplies the exponent.
    MainLobeLaw,
}

impl SurrogatePenalty {
    /// Coefficient `c` in the per-side exponent `c * theta_m^2 / phi^2`.
    fn coefficient(self, decay: f64) -> f64 {
        match self {
            SurrogatePenalty::SecondMoment => 1.0 / 3.0,
            SurrogatePenalty::ScaledBound => 1.0 / 9.0,
            SurrogatePenalty::MainLobeLaw => decay / 3.0,
        }
    }
}

fn exponent(mis: &MisalignmentModel, pair: &BeamPair, penalty: SurrogatePenalty) -> f64 {
    let (phi_t, phi_r) = pair.widths();
    let coef_t = penalty.coefficient(pair.tx.decay_coefficient());
    let coef_r = penalty.coefficient(pair.rx.decay_coefficient());
    let ms = mis.theta_m() * mis.theta_m();
    coef_t * ms / (phi_t * phi_t) + coef_r * ms / (phi_r * phi_r)
}

/// Smooth stand-in for the expected capacity: the data fraction times the
/// Shannon rate at the mean-square pointing error. Zero when training does
/// not fit in the slot.
pub fn surrogate_objective(
    budget: &LinkBudget,
    cfg: &TrainingConfig,
    mis: &MisalignmentModel,
    pair: &BeamPair,
    penalty: SurrogatePenalty,
) -> Result<f64> {
    let (phi_t, phi_r) = pair.widths();
    let eta = cfg.data_fraction(phi_t, phi_r)?;
    if eta <= 0.0 {
        return Ok(0.0);
    }
    let a = c1(budget, phi_t, phi_r) * (-exponent(mis, pair, penalty)).exp();
    // ln_1p keeps the deep-misalignment tail smooth instead of quantized.
    Ok(eta * a.ln_1p() / LN_2)
}

/// Partial derivatives `(d/dphi_t, d/dphi_r)` of [`surrogate_objective`].
///
/// Each side balances three effects: a narrower beam cuts training
/// efficiency, raises the aligned gain, and amplifies the misalignment
/// penalty. Matches central finite differences of the objective.
pub fn surrogate_gradient(
    budget: &LinkBudget,
    cfg: &TrainingConfig,
    mis: &MisalignmentModel,
    pair: &BeamPair,
    penalty: SurrogatePenalty,
) -> Result<(f64, f64)> {
    let (phi_t, phi_r) = pair.widths();
    let eta = cfg.data_fraction(phi_t, phi_r)?;
    if eta <= 0.0 {
        return Err(Error::Infeasible(format!(
            "no data fraction left at phi_t={phi_t}, phi_r={phi_r}; the objective is flat zero here"
        )));
    }
    let a = c1(budget, phi_t, phi_r) * (-exponent(mis, pair, penalty)).exp();
    let log_term = a.ln_1p() / LN_2;
    let snr_factor = eta * a / ((1.0 + a) * LN_2);
    let ms = mis.theta_m() * mis.theta_m();
    let overhead_scale = cfg.t_p() / cfg.t_s();

    let side = |omega: f64, phi: f64, coef: f64| -> f64 {
        let gain_balance = 2.0 * coef * ms / (phi * phi * phi) - 1.0 / (phi / 2.0).tan();
        snr_factor * gain_balance + omega * overhead_scale / (phi * phi) * log_term
    };

    let coef_t = penalty.coefficient(pair.tx.decay_coefficient());
    let coef_r = penalty.coefficient(pair.rx.decay_coefficient());
    Ok((
        side(cfg.omega_t(), phi_t, coef_t),
        side(cfg.omega_r(), phi_r, coef_r),
    ))
}

/// Exact rate when both pointing errors sit at the misalignment bound: the
/// pessimistic capacity the full pattern law assigns to the pair.
pub fn worst_case_rate(
    budget: &LinkBudget,
    cfg: &TrainingConfig,
    mis: &MisalignmentModel,
    pair: &BeamPair,
) -> Result<CapacityResult> {
    rate(budget, cfg, pair, mis.theta_m(), mis.theta_m())
}

/// What `optimize_beamwidths` maximises.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// The smooth surrogate; climbed by gradient ascent and cross-checked
    /// by the grid.
    Surrogate(SurrogatePenalty),
    /// The exact pessimistic rate; non-smooth, evaluated by grid search
    /// only.
    WorstCaseRate,
}

impl Default for Objective {
    fn default() -> Self {
        Objective::Surrogate(SurrogatePenalty::SecondMoment)
    }
}

/// Coupling between the two beamwidths during the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BeamConstraint {
    /// Optimise both sides independently.
    #[default]
    Free,
    /// Force `phi_t = phi_r` (symmetric pencil beams).
    Tied,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    pub objective: Objective,
    pub constraint: BeamConstraint,
    /// Per-side lower bounds in radians; `None` means the feasibility bound.
    /// Setting a side's lower bound equal to its upper bound pins that side.
    pub lower: Option<(f64, f64)>,
    /// Per-side upper bounds in radians; `None` means the sector widths.
    pub upper: Option<(f64, f64)>,
    /// Grid oracle resolution in radians.
    pub grid_resolution: f64,
    /// Decay-shape factor for the patterns the optimizer constructs.
    pub k1: f64,
    pub max_iterations: usize,
    /// Relative projected-gradient tolerance.
    pub gradient_tolerance: f64,
    /// Cross-check the ascent result against the grid oracle.
    pub grid_check: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            objective: Objective::default(),
            constraint: BeamConstraint::default(),
            lower: None,
            upper: None,
            grid_resolution: 0.1f64.to_radians(),
            k1: 1.0,
            max_iterations: 10_000,
            gradient_tolerance: 1e-9,
            grid_check: true,
        }
    }
}

impl OptimizerOptions {
    /// Pin the transmit side to `phi_t` (e.g. the sector width) and search
    /// over the receive beamwidth only.
    pub fn with_fixed_tx(mut self, phi_t: f64) -> Self {
        let lo_r = self.lower.map_or(0.0, |l| l.1);
        let hi_r = self.upper.map_or(f64::INFINITY, |u| u.1);
        self.lower = Some((phi_t, lo_r));
        self.upper = Some((phi_t, hi_r));
        self
    }
}

/// Result of a beamwidth optimisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizationOutcome {
    pub pair: BeamPair,
    pub objective_value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The ascent result was discarded in favour of the grid argmax.
    pub used_grid_fallback: bool,
    /// Grid-oracle argmax `(phi_t, phi_r)` and whether the ascent landed
    /// within one grid cell of it; `None` when the cross-check is disabled.
    pub grid_argmax: Option<(f64, f64)>,
    pub grid_agrees: Option<bool>,
}

struct Bounds {
    lo: [f64; 2],
    hi: [f64; 2],
}

fn resolve_bounds(cfg: &TrainingConfig, opts: &OptimizerOptions) -> Result<Bounds> {
    let sector = [cfg.omega_t(), cfg.omega_r()];
    let mut hi = match opts.upper {
        Some((t, r)) => [t.min(sector[0]), r.min(sector[1])],
        None => sector,
    };
    let user_lo = opts.lower.unwrap_or((0.0, 0.0));
    let mut lo = [user_lo.0.max(0.0), user_lo.1.max(0.0)];
    for i in 0..2 {
        if !lo[i].is_finite() || !hi[i].is_finite() || hi[i] <= 0.0 {
            return Err(Error::invalid("bounds", "beamwidth bounds must be finite and positive"));
        }
    }

    // Feasibility floor: symmetric when both sides move, conditional on the
    // pinned value when one side is fixed.
    let pinned_t = lo[0] == hi[0];
    let pinned_r = lo[1] == hi[1];
    if pinned_t && !pinned_r {
        let floor = min_feasible_rx_beamwidth(cfg, lo[0])? + FEASIBILITY_MARGIN;
        lo[1] = lo[1].max(floor);
    } else if pinned_r && !pinned_t {
        let floor = min_feasible_tx_beamwidth(cfg, lo[1])? + FEASIBILITY_MARGIN;
        lo[0] = lo[0].max(floor);
    } else if !pinned_t && !pinned_r {
        let floor = min_feasible_beamwidth(cfg)? + FEASIBILITY_MARGIN;
        lo[0] = lo[0].max(floor);
        lo[1] = lo[1].max(floor);
    } else {
        // both pinned: only check the point is feasible
        if cfg.data_fraction(lo[0], lo[1])? <= 0.0 {
            return Err(Error::Infeasible(format!(
                "pinned beamwidths ({}, {}) leave no data fraction",
                lo[0], lo[1]
            )));
        }
    }

    if opts.constraint == BeamConstraint::Tied {
        let l = lo[0].max(lo[1]);
        let h = hi[0].min(hi[1]);
        lo = [l, l];
        hi = [h, h];
    }
    if lo[0] > hi[0] || lo[1] > hi[1] {
        return Err(Error::Infeasible(format!(
            "empty feasible beamwidth box: lower ({}, {}) exceeds upper ({}, {})",
            lo[0], lo[1], hi[0], hi[1]
        )));
    }
    Ok(Bounds { lo, hi })
}

/// Grid points: multiples of `res` inside `[lo, hi]`, clamped so the
/// endpoints of the box are never overshot. A pinned side contributes its
/// single value.
pub fn grid_points(lo: f64, hi: f64, res: f64) -> Vec<f64> {
    if lo == hi {
        return vec![lo];
    }
    let n_lo = ((lo / res) - 1e-9).ceil().max(1.0) as i64;
    let n_hi = ((hi / res) + 1e-9).floor() as i64;
    let mut pts: Vec<f64> = (n_lo..=n_hi)
        .map(|n| (n as f64 * res).clamp(lo, hi))
        .collect();
    pts.dedup();
    if pts.is_empty() {
        pts.push(0.5 * (lo + hi));
    }
    pts
}

/// Exhaustive argmax over the grid. Ties break toward the smaller index
/// (narrower transmit beam, then narrower receive beam), independent of
/// evaluation order.
fn grid_argmax<F>(bounds: &Bounds, constraint: BeamConstraint, res: f64, f: F) -> (f64, f64, f64)
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let cells: Vec<(f64, f64)> = match constraint {
        BeamConstraint::Tied => grid_points(bounds.lo[0], bounds.hi[0], res)
            .into_iter()
            .map(|p| (p, p))
            .collect(),
        BeamConstraint::Free => {
            let pts_t = grid_points(bounds.lo[0], bounds.hi[0], res);
            let pts_r = grid_points(bounds.lo[1], bounds.hi[1], res);
            pts_t
                .iter()
                .flat_map(|&t| pts_r.iter().map(move |&r| (t, r)))
                .collect()
        }
    };
    let best = cells
        .par_iter()
        .enumerate()
        .map(|(i, &(t, r))| (f(t, r), i))
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |a, b| {
                // max by value; ties go to the lower index
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    let (t, r) = cells[best.1];
    (t, r, best.0)
}

/// Count the local maxima of a sampled curve, treating a plateau that is
/// strictly above both flanks as a single maximum. Used by the unimodality
/// checks.
pub fn local_maxima(values: &[f64]) -> usize {
    let n = values.len();
    let mut count = 0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[j + 1] == values[i] {
            j += 1;
        }
        let rises_left = i == 0 || values[i - 1] < values[i];
        let falls_right = j == n - 1 || values[j + 1] < values[j];
        if rises_left && falls_right {
            count += 1;
        }
        i = j + 1;
    }
    count
}

struct Ascent {
    x: [f64; 2],
    value: f64,
    iterations: usize,
    converged: bool,
}

/// Projected gradient ascent with a backtracking (halving) line search and
/// a warm-started step size. Convergence is declared when the projected
/// gradient step is small relative to `1 + |f|`, or when no step of any
/// length can improve the objective at floating-point resolution and the
/// residual is already modest.
fn ascend<F, G>(
    f: F,
    grad: G,
    x0: [f64; 2],
    bounds: &Bounds,
    tied: bool,
    max_iter: usize,
    tol: f64,
) -> Result<Ascent>
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> Result<(f64, f64)>,
{
    let project = |x: [f64; 2]| {
        [
            x[0].clamp(bounds.lo[0], bounds.hi[0]),
            x[1].clamp(bounds.lo[1], bounds.hi[1]),
        ]
    };
    let mut x = project(x0);
    if tied {
        let m = 0.5 * (x[0] + x[1]);
        x = project([m, m]);
    }
    let mut fx = f(x[0], x[1]);
    let mut step = 1.0f64;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let (mut g_t, mut g_r) = grad(x[0], x[1])?;
        if tied {
            // motion is along the diagonal; the directional derivative is
            // the sum of the two partials
            let s = g_t + g_r;
            g_t = s;
            g_r = s;
        }
        let probe = project([x[0] + g_t, x[1] + g_r]);
        let residual = (probe[0] - x[0]).abs().max((probe[1] - x[1]).abs());
        let scale = 1.0 + fx.abs();
        if residual <= tol * scale {
            converged = true;
            break;
        }

        let mut t = step;
        let mut accepted = false;
        while t >= 1e-22 {
            let xn = project([x[0] + t * g_t, x[1] + t * g_r]);
            let dx = [xn[0] - x[0], xn[1] - x[1]];
            if dx[0] == 0.0 && dx[1] == 0.0 {
                t *= 0.5;
                continue;
            }
            let fxn = f(xn[0], xn[1]);
            let slope = g_t * dx[0] + g_r * dx[1];
            if fxn > fx && fxn >= fx + ARMIJO_C * slope {
                x = xn;
                fx = fxn;
                step = (t * 2.0).min(1e6);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // the objective cannot be improved at float resolution; treat a
            // modest residual as stationarity rather than failure
            converged = residual <= 1e-5 * scale;
            break;
        }
    }
    Ok(Ascent {
        x,
        value: fx,
        iterations,
        converged,
    })
}

/// Maximise the chosen objective over the feasible beamwidth box.
///
/// The smooth surrogate is climbed by projected gradient ascent from
/// `(omega_t/4, omega_r/4)` and, unless disabled, cross-checked against the
/// exhaustive grid oracle; the ascent answer is replaced by the grid argmax
/// if it fails to converge or falls more than 1e-9 short of the grid value.
/// The worst-case objective goes straight to the grid.
pub fn optimize_beamwidths(
    budget: &LinkBudget,
    cfg: &TrainingConfig,
    mis: &MisalignmentModel,
    opts: &OptimizerOptions,
) -> Result<OptimizationOutcome> {
    if !opts.grid_resolution.is_finite() || opts.grid_resolution <= 0.0 {
        return Err(Error::invalid("grid_resolution", "must be finite and positive"));
    }
    let bounds = resolve_bounds(cfg, opts)?;
    let tied = opts.constraint == BeamConstraint::Tied;
    let k1 = opts.k1;

    let value_at = |phi_t: f64, phi_r: f64| -> f64 {
        let pair = match BeamPair::from_hpbw_k1(phi_t, phi_r, k1) {
            Ok(p) => p,
            Err(_) => return 0.0,
        };
        match opts.objective {
            Objective::Surrogate(penalty) => {
                surrogate_objective(budget, cfg, mis, &pair, penalty).unwrap_or(0.0)
            }
            Objective::WorstCaseRate => worst_case_rate(budget, cfg, mis, &pair)
                .map(|c| c.rate)
                .unwrap_or(0.0),
        }
    };

    match opts.objective {
        Objective::WorstCaseRate => {
            let (t, r, v) = grid_argmax(&bounds, opts.constraint, opts.grid_resolution, value_at);
            Ok(OptimizationOutcome {
                pair: BeamPair::from_hpbw_k1(t, r, k1)?,
                objective_value: v,
                iterations: 0,
                converged: true,
                used_grid_fallback: false,
                grid_argmax: Some((t, r)),
                grid_agrees: Some(true),
            })
        }
        Objective::Surrogate(penalty) => {
            let grad_at = |phi_t: f64, phi_r: f64| -> Result<(f64, f64)> {
                let pair = BeamPair::from_hpbw_k1(phi_t, phi_r, k1)?;
                surrogate_gradient(budget, cfg, mis, &pair, penalty)
            };
            let x0 = [cfg.omega_t() / 4.0, cfg.omega_r() / 4.0];
            let ascent = ascend(
                value_at,
                grad_at,
                x0,
                &bounds,
                tied,
                opts.max_iterations,
                opts.gradient_tolerance,
            )?;

            let mut out = OptimizationOutcome {
                pair: BeamPair::from_hpbw_k1(ascent.x[0], ascent.x[1], k1)?,
                objective_value: ascent.value,
                iterations: ascent.iterations,
                converged: ascent.converged,
                used_grid_fallback: false,
                grid_argmax: None,
                grid_agrees: None,
            };

            if opts.grid_check {
                let (gt, gr, gv) =
                    grid_argmax(&bounds, opts.constraint, opts.grid_resolution, value_at);
                let cell = opts.grid_resolution + 1e-9;
                let agrees =
                    (ascent.x[0] - gt).abs() <= cell && (ascent.x[1] - gr).abs() <= cell;
                out.grid_argmax = Some((gt, gr));
                out.grid_agrees = Some(agrees);
                if !ascent.converged || ascent.value < gv - 1e-9 {
                    out.pair = BeamPair::from_hpbw_k1(gt, gr, k1)?;
                    out.objective_value = gv;
                    out.used_grid_fallback = true;
                }
            } else if !ascent.converged {
                return Err(Error::NonConvergence {
                    phi_t: ascent.x[0],
                    phi_r: ascent.x[1],
                    objective: ascent.value,
                    iterations: ascent.iterations,
                });
            }
            Ok(out)
        }
    }
}
