//! Subcommand implementations shared by direct invocation and presets.

use std::path::{Path, PathBuf};

use serde::Serialize;

use mmlink::optimizer::{grid_points, FEASIBILITY_MARGIN};
use mmlink::{
    expected_capacity, min_feasible_beamwidth, min_feasible_rx_beamwidth,
    monte_carlo_expected_capacity, optimize_beamwidths, rate, run_adaptation,
    run_without_adaptation, worst_case_rate, AdaptationRun, AntennaPattern, BeamPair, Method,
    MisalignmentModel,
};

use crate::config::{watts_to_dbm, OutputFormat, ResolvedConfig};
use crate::output::{deg_label, sig12, write_csv, write_json};
use crate::CliError;

fn rad(deg: f64) -> f64 {
    deg.to_radians()
}

fn degs(rad: f64) -> f64 {
    rad.to_degrees()
}

/// Inclusive uniform sweep `[-span, span]` (or `[start, stop]`) in fixed steps.
fn steps(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| start + i as f64 * step).collect()
}

// ---------------------------------------------------------------------------
// gain-curve
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct GainPoint {
    theta_deg: f64,
    gain: f64,
    gain_db: f64,
}

#[derive(Serialize)]
struct GainCurve {
    hpbw_deg: f64,
    points: Vec<GainPoint>,
}

#[derive(Serialize)]
struct GainCurves {
    curves: Vec<GainCurve>,
}

pub fn gain_curve(cfg: &ResolvedConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let span = cfg.gain_curve.theta_span_deg;
    let thetas = steps(-span, span, cfg.gain_curve.theta_step_deg);
    let mut written = Vec::new();
    let mut curves = Vec::new();
    for &w in &cfg.gain_curve.hpbw_deg {
        let pattern = AntennaPattern::with_k1(rad(w), cfg.beams.k1)?;
        let points: Vec<GainPoint> = thetas
            .iter()
            .map(|&t| {
                let g = pattern.gain(rad(t));
                GainPoint {
                    theta_deg: t,
                    gain: g,
                    gain_db: 10.0 * g.log10(),
                }
            })
            .collect();
        match cfg.output.format {
            OutputFormat::Csv => {
                let rows: Vec<Vec<String>> = points
                    .iter()
                    .map(|p| vec![sig12(p.theta_deg), sig12(p.gain), sig12(p.gain_db)])
                    .collect();
                written.push(write_csv(
                    dir,
                    &format!("gain_curve_{}deg.csv", deg_label(w)),
                    cfg,
                    &["theta_deg", "gain", "gain_db"],
                    &rows,
                )?);
            }
            OutputFormat::Json => curves.push(GainCurve { hpbw_deg: w, points }),
        }
    }
    if cfg.output.format == OutputFormat::Json {
        written.push(write_json(dir, "gain_curves.json", cfg, GainCurves { curves })?);
    }
    Ok(written)
}

// ---------------------------------------------------------------------------
// capacity-surface
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SurfaceRecord {
    phi_t_deg: f64,
    phi_r_deg: f64,
    eta: f64,
    capacity_aligned: f64,
    capacity_worst: f64,
}

#[derive(Serialize)]
struct SurfaceRecords {
    records: Vec<SurfaceRecord>,
}

pub fn capacity_surface(cfg: &ResolvedConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let budget = cfg.link_budget()?;
    let training = cfg.training_config()?;
    let mis = MisalignmentModel::uniform(rad(cfg.surface.theta_m_deg))?;
    let step = rad(cfg.surface.step_deg);
    let floor = min_feasible_beamwidth(&training)? + FEASIBILITY_MARGIN;
    let lo = cfg.beams.phi_min_deg.map_or(floor, |d| rad(d).max(floor));
    let hi_t = cfg
        .beams
        .phi_max_deg
        .map_or(training.omega_t(), |d| rad(d).min(training.omega_t()));
    let hi_r = cfg
        .beams
        .phi_max_deg
        .map_or(training.omega_r(), |d| rad(d).min(training.omega_r()));

    let mut records = Vec::new();
    for &phi_t in &grid_points(lo, hi_t, step) {
        for &phi_r in &grid_points(lo, hi_r, step) {
            let pair = BeamPair::from_hpbw_k1(phi_t, phi_r, cfg.beams.k1)?;
            let aligned = rate(&budget, &training, &pair, 0.0, 0.0)?;
            let worst = worst_case_rate(&budget, &training, &mis, &pair)?;
            records.push(SurfaceRecord {
                phi_t_deg: degs(phi_t),
                phi_r_deg: degs(phi_r),
                eta: aligned.eta,
                capacity_aligned: aligned.rate,
                capacity_worst: worst.rate,
            });
        }
    }

    let path = match cfg.output.format {
        OutputFormat::Csv => {
            let rows: Vec<Vec<String>> = records
                .iter()
                .map(|r| {
                    vec![
                        sig12(r.phi_t_deg),
                        sig12(r.phi_r_deg),
                        sig12(r.eta),
                        sig12(r.capacity_aligned),
                        sig12(r.capacity_worst),
                    ]
                })
                .collect();
            write_csv(
                dir,
                "capacity_surface.csv",
                cfg,
                &["phi_t_deg", "phi_r_deg", "eta", "capacity_aligned", "capacity_worst"],
                &rows,
            )?
        }
        OutputFormat::Json => {
            write_json(dir, "capacity_surface.json", cfg, SurfaceRecords { records })?
        }
    };
    Ok(vec![path])
}

// ---------------------------------------------------------------------------
// optimize
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct OptimizeRecord {
    theta_m_deg: f64,
    phi_t_deg: f64,
    phi_r_deg: f64,
    objective: f64,
    iterations: usize,
    grid_check_pass: Option<bool>,
}

#[derive(Serialize)]
struct OptimizeRecords {
    results: Vec<OptimizeRecord>,
}

/// Beamwidth optimization for each misalignment bound. Always emits JSON:
/// the result is a handful of structured records, not a table.
pub fn optimize(cfg: &ResolvedConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let budget = cfg.link_budget()?;
    let training = cfg.training_config()?;
    let opts = cfg.optimizer_options();
    let mut results = Vec::new();
    for &tm in &cfg.misalignment.theta_m_deg {
        let mis = MisalignmentModel::uniform(rad(tm))?;
        let out = optimize_beamwidths(&budget, &training, &mis, &opts)?;
        results.push(OptimizeRecord {
            theta_m_deg: tm,
            phi_t_deg: degs(out.pair.tx.hpbw()),
            phi_r_deg: degs(out.pair.rx.hpbw()),
            objective: out.objective_value,
            iterations: out.iterations,
            grid_check_pass: out.grid_agrees,
        });
    }
    let path = write_json(dir, "optimize.json", cfg, OptimizeRecords { results })?;
    Ok(vec![path])
}

// ---------------------------------------------------------------------------
// expected-capacity
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ExpectationRecord {
    method: &'static str,
    phi_t_deg: f64,
    phi_r_deg: f64,
    theta_m_deg: f64,
    value: f64,
    stderr: f64,
    p_mm: f64,
}

#[derive(Serialize)]
struct ExpectationRecords {
    records: Vec<ExpectationRecord>,
}

fn method_label(m: Method) -> &'static str {
    match m {
        Method::ClosedFormMainLobe => "closed-form-main-lobe",
        Method::ClosedFormMixture => "closed-form-mixture",
        Method::MonteCarlo => "monte-carlo",
    }
}

pub fn expected_capacity_cmd(cfg: &ResolvedConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let budget = cfg.link_budget()?;
    let training = cfg.training_config()?;
    let pair = BeamPair::from_hpbw_k1(
        rad(cfg.expectation.phi_t_deg),
        rad(cfg.expectation.phi_r_deg),
        cfg.beams.k1,
    )?;
    let mut records = Vec::new();
    for &tm in &cfg.misalignment.theta_m_deg {
        let mis = MisalignmentModel::uniform(rad(tm))?;
        let closed = expected_capacity(&budget, &training, &pair, &mis)?;
        let mc = monte_carlo_expected_capacity(
            &budget,
            &training,
            &pair,
            &mis,
            cfg.expectation.samples as usize,
            cfg.seed,
        )?;
        for e in [closed, mc] {
            records.push(ExpectationRecord {
                method: method_label(e.method),
                phi_t_deg: cfg.expectation.phi_t_deg,
                phi_r_deg: cfg.expectation.phi_r_deg,
                theta_m_deg: tm,
                value: e.value,
                stderr: e.std_error,
                p_mm: e.p_mm,
            });
        }
    }
    let path = match cfg.output.format {
        OutputFormat::Csv => {
            let rows: Vec<Vec<String>> = records
                .iter()
                .map(|r| {
                    vec![
                        r.method.to_string(),
                        sig12(r.phi_t_deg),
                        sig12(r.phi_r_deg),
                        sig12(r.theta_m_deg),
                        sig12(r.value),
                        sig12(r.stderr),
                        sig12(r.p_mm),
                    ]
                })
                .collect();
            write_csv(
                dir,
                "expected_capacity.csv",
                cfg,
                &["method", "phi_t_deg", "phi_r_deg", "theta_m_deg", "value", "stderr", "p_mm"],
                &rows,
            )?
        }
        OutputFormat::Json => {
            write_json(dir, "expected_capacity.json", cfg, ExpectationRecords { records })?
        }
    };
    Ok(vec![path])
}

// ---------------------------------------------------------------------------
// adapt-sim
// ---------------------------------------------------------------------------

#[derive(Serialize)]
pub struct TraceRecord {
    slot: usize,
    mode: &'static str,
    phi_t_deg: f64,
    phi_r_deg: f64,
    theta_deg: f64,
    rssi_dbm: f64,
    threshold_dbm: f64,
    capacity: f64,
    adapted: bool,
}

#[derive(Serialize)]
pub struct AdaptPanel {
    initial_phi_deg: f64,
    theta_m_deg: f64,
    seeds: usize,
    rearm: bool,
    improvement_ratio: f64,
    mean_capacity_adaptive: f64,
    mean_capacity_static: f64,
    mean_slots_to_stabilize: f64,
    dominance_fraction: f64,
    traced_seed: u64,
    traced_stabilized_slot: Option<usize>,
    traced_clamped: bool,
}

#[derive(Serialize)]
struct AdaptJson {
    panels: Vec<AdaptPanelWithTrace>,
}

#[derive(Serialize)]
struct AdaptPanelWithTrace {
    #[serde(flatten)]
    panel: AdaptPanel,
    trace: Vec<TraceRecord>,
}

#[derive(Serialize)]
struct AdaptSummaryJson {
    panels: Vec<AdaptPanel>,
}

fn trace_records(run: &AdaptationRun, mode: &'static str) -> Vec<TraceRecord> {
    run.trace
        .iter()
        .map(|s| TraceRecord {
            slot: s.slot_index,
            mode,
            phi_t_deg: degs(s.phi_t),
            phi_r_deg: degs(s.phi_r),
            theta_deg: degs(s.theta_drawn),
            rssi_dbm: watts_to_dbm(s.mean_rssi),
            threshold_dbm: watts_to_dbm(s.threshold),
            capacity: s.capacity,
            adapted: s.adapted,
        })
        .collect()
}

fn trace_rows(records: &[TraceRecord]) -> Vec<Vec<String>> {
    records
        .iter()
        .map(|r| {
            vec![
                r.slot.to_string(),
                r.mode.to_string(),
                sig12(r.phi_t_deg),
                sig12(r.phi_r_deg),
                sig12(r.theta_deg),
                sig12(r.rssi_dbm),
                sig12(r.threshold_dbm),
                sig12(r.capacity),
                r.adapted.to_string(),
            ]
        })
        .collect()
}

const TRACE_HEADER: [&str; 9] = [
    "slot",
    "mode",
    "phi_t_deg",
    "phi_r_deg",
    "theta_deg",
    "rssi_dbm",
    "threshold_dbm",
    "capacity",
    "adapted",
];

/// One adaptation scenario: traced run at the config seed plus the
/// seed-aggregated comparison against the static baseline.
pub fn adapt_panel(
    cfg: &ResolvedConfig,
    initial_phi_deg: f64,
    theta_m_deg: f64,
) -> Result<(AdaptPanel, Vec<TraceRecord>), CliError> {
    let budget = cfg.link_budget()?;
    let training = cfg.training_config()?;
    let adapt = cfg.adaptation_config(cfg.seed);
    let mis = MisalignmentModel::uniform(rad(theta_m_deg))?;
    let initial = BeamPair::from_hpbw_k1(rad(initial_phi_deg), rad(initial_phi_deg), cfg.beams.k1)?;

    let traced = run_adaptation(&budget, &training, &adapt, &mis, &initial)?;
    let baseline = run_without_adaptation(&budget, &training, &adapt, &mis, &initial)?;
    let summary = mmlink::compare_over_seeds(
        &budget,
        &training,
        &adapt,
        &mis,
        &initial,
        cfg.adaptation.seeds,
    )?;

    let mut records = trace_records(&traced, "adaptive");
    records.extend(trace_records(&baseline, "static"));
    let panel = AdaptPanel {
        initial_phi_deg,
        theta_m_deg,
        seeds: summary.seeds,
        rearm: summary.rearm,
        improvement_ratio: summary.improvement_ratio,
        mean_capacity_adaptive: summary.mean_capacity_adaptive,
        mean_capacity_static: summary.mean_capacity_static,
        mean_slots_to_stabilize: summary.mean_slots_to_stabilize,
        dominance_fraction: summary.dominance_fraction,
        traced_seed: cfg.seed,
        traced_stabilized_slot: traced.stabilized_slot,
        traced_clamped: traced.clamped,
    };
    Ok((panel, records))
}

pub fn adapt_sim(cfg: &ResolvedConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    let mut panels = Vec::new();
    let mut json_panels = Vec::new();
    for &tm in &cfg.misalignment.theta_m_deg {
        let (panel, records) = adapt_panel(cfg, cfg.adaptation.initial_phi_deg, tm)?;
        match cfg.output.format {
            OutputFormat::Csv => {
                written.push(write_csv(
                    dir,
                    &format!("adapt_trace_tm{}deg.csv", deg_label(tm)),
                    cfg,
                    &TRACE_HEADER,
                    &trace_rows(&records),
                )?);
                panels.push(panel);
            }
            OutputFormat::Json => {
                json_panels.push(AdaptPanelWithTrace { panel, trace: records })
            }
        }
    }
    match cfg.output.format {
        OutputFormat::Csv => {
            written.push(write_json(dir, "adapt_summary.json", cfg, AdaptSummaryJson { panels })?);
        }
        OutputFormat::Json => {
            written.push(write_json(dir, "adapt_sim.json", cfg, AdaptJson { panels: json_panels })?);
        }
    }
    Ok(written)
}

// ---------------------------------------------------------------------------
// preset-specific sweeps
// ---------------------------------------------------------------------------

/// Receive-beamwidth sweep at the sector transmit width: one curve per
/// misalignment bound, capacity evaluated at the bound, plus an argmax
/// summary table.
pub fn sector_sweep(cfg: &ResolvedConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let budget = cfg.link_budget()?;
    let training = cfg.training_config()?;
    let step = rad(cfg.beams.step_deg);
    let floor = min_feasible_rx_beamwidth(&training, training.omega_t())? + FEASIBILITY_MARGIN;
    let lo = cfg.beams.phi_min_deg.map_or(floor, |d| rad(d).max(floor));
    let hi = cfg
        .beams
        .phi_max_deg
        .map_or(training.omega_r(), |d| rad(d).min(training.omega_r()));
    let points = grid_points(lo, hi, step);

    let mut written = Vec::new();
    let mut argmax_rows = Vec::new();
    for &tm in &cfg.misalignment.theta_m_deg {
        let mis = MisalignmentModel::uniform(rad(tm))?;
        let mut rows = Vec::with_capacity(points.len());
        let mut best = (f64::NEG_INFINITY, 0.0);
        for &phi_r in &points {
            let pair = BeamPair::from_hpbw_k1(training.omega_t(), phi_r, cfg.beams.k1)?;
            let cap = worst_case_rate(&budget, &training, &mis, &pair)?.rate;
            if cap > best.0 {
                best = (cap, phi_r);
            }
            rows.push(vec![sig12(degs(phi_r)), sig12(cap)]);
        }
        written.push(write_csv(
            dir,
            &format!("sector_sweep_tm{}deg.csv", deg_label(tm)),
            cfg,
            &["phi_r_deg", "capacity"],
            &rows,
        )?);
        argmax_rows.push(vec![sig12(tm), sig12(degs(best.1)), sig12(best.0)]);
    }
    written.push(write_csv(
        dir,
        "sector_sweep_argmax.csv",
        cfg,
        &["theta_m_deg", "best_phi_r_deg", "capacity"],
        &argmax_rows,
    )?);
    Ok(written)
}

/// Symmetric pencil-beam sweep: aligned (best-case) and bound (worst-case)
/// capacity per beamwidth and misalignment bound, with their gap.
pub fn pencil_sweep(cfg: &ResolvedConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let budget = cfg.link_budget()?;
    let training = cfg.training_config()?;
    let lo = cfg.beams.phi_min_deg.unwrap_or(1.0);
    let hi = cfg.beams.phi_max_deg.unwrap_or(20.0);
    let phis = steps(lo, hi, cfg.beams.step_deg);

    let mut rows = Vec::new();
    for &phi in &phis {
        let pair = BeamPair::from_hpbw_k1(rad(phi), rad(phi), cfg.beams.k1)?;
        let aligned = rate(&budget, &training, &pair, 0.0, 0.0)?.rate;
        for &tm in &cfg.misalignment.theta_m_deg {
            let mis = MisalignmentModel::uniform(rad(tm))?;
            let worst = worst_case_rate(&budget, &training, &mis, &pair)?.rate;
            rows.push(vec![
                sig12(phi),
                sig12(tm),
                sig12(aligned),
                sig12(worst),
                sig12(aligned - worst),
            ]);
        }
    }
    let path = write_csv(
        dir,
        "pencil_sweep.csv",
        cfg,
        &["phi_deg", "theta_m_deg", "capacity_aligned", "capacity_worst", "gap"],
        &rows,
    )?;
    Ok(vec![path])
}

/// The three demonstration scenarios of the widening mechanism.
pub fn adaptation_demo(cfg: &ResolvedConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let scenarios = [(2.0, 2.0), (2.0, 10.0), (7.0, 15.0)];
    let mut written = Vec::new();
    let mut panels = Vec::new();
    for (phi, tm) in scenarios {
        let (panel, records) = adapt_panel(cfg, phi, tm)?;
        written.push(write_csv(
            dir,
            &format!("adapt_demo_phi{}_tm{}deg.csv", deg_label(phi), deg_label(tm)),
            cfg,
            &TRACE_HEADER,
            &trace_rows(&records),
        )?);
        panels.push(panel);
    }
    written.push(write_json(
        dir,
        "adapt_demo_summary.json",
        cfg,
        AdaptSummaryJson { panels },
    )?);
    Ok(written)
}
