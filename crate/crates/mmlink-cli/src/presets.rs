//! Canned experiments with pinned settings, so the standard plots can be
//! regenerated with one command and stay byte-stable across machines.

use std::path::{Path, PathBuf};

use clap::ValueEnum;

use crate::commands;
use crate::config::{ObjectiveKind, ResolvedConfig, SearchMode};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Gain curves for 5/10/20/40-degree beams over ±60 degrees.
    GainCurves,
    /// Aligned and worst-case capacity over the beamwidth plane.
    CapacitySurface,
    /// Receive-beamwidth sweep at sector transmit, 10 ms slots.
    SectorTxSweep,
    /// Symmetric pencil-pair sweep, 1 s slots, alignment-gap columns.
    PencilPairSweep,
    /// Beam-widening traces and seed-aggregated improvement statistics.
    AdaptationDemo,
}

/// Overlay the preset's pinned settings. Runs before command-line flag
/// overrides, so `--seed`/`--out`/`--format` still win.
pub fn apply(preset: Preset, cfg: &mut ResolvedConfig) {
    cfg.seed = 42;
    match preset {
        Preset::GainCurves => {}
        Preset::CapacitySurface => {
            cfg.surface.theta_m_deg = 9.0;
            cfg.surface.step_deg = 1.0;
        }
        Preset::SectorTxSweep => {
            cfg.training.slot_time_ms = 10.0;
            cfg.misalignment.theta_m_deg = vec![0.0, 3.0, 6.0, 9.0];
            cfg.beams.mode = SearchMode::SectorTx;
            cfg.beams.objective = ObjectiveKind::WorstCase;
            cfg.beams.step_deg = 0.1;
        }
        Preset::PencilPairSweep => {
            cfg.training.slot_time_ms = 1000.0;
            cfg.misalignment.theta_m_deg = vec![0.0, 3.0, 6.0, 9.0];
            cfg.beams.step_deg = 0.5;
        }
        Preset::AdaptationDemo => {
            cfg.adaptation.rearm = true;
            cfg.adaptation.seeds = 100;
        }
    }
}

pub fn run(preset: Preset, cfg: &ResolvedConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    match preset {
        Preset::GainCurves => commands::gain_curve(cfg, dir),
        Preset::CapacitySurface => commands::capacity_surface(cfg, dir),
        Preset::SectorTxSweep => commands::sector_sweep(cfg, dir),
        Preset::PencilPairSweep => commands::pencil_sweep(cfg, dir),
        Preset::AdaptationDemo => commands::adaptation_demo(cfg, dir),
    }
}
