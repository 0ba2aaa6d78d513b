//! Run configuration shared by every command.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use fanoscat_core::cross_section::{AngularSector, Measure};
use fanoscat_core::fitting::FitOptions;
use fanoscat_core::scattering::{PotentialParams, RadialGrid};
use fanoscat_core::vmi::{Counting, Projection};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Evenly spaced grid `[min, max]` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        fanoscat_core::fixtures::linspace(self.min, self.max, self.count)
    }

    fn check(&self, what: &str) -> Result<(), CliError> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(CliError::validation(format!(
                "{what}: bounds must be finite"
            )));
        }
        if self.count == 1 && self.min == self.max {
            return Ok(());
        }
        if self.count < 2 || !(self.max > self.min) {
            return Err(CliError::validation(format!(
                "{what}: need max > min and count >= 2, got [{}, {}] x {}",
                self.min, self.max, self.count
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceConfig {
    pub l_res: usize,
    /// Fixed position; located from the scan table when absent.
    #[serde(default)]
    pub e_res: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
}

fn default_epsilon() -> Grid {
    Grid {
        min: -5.0,
        max: 5.0,
        count: 201,
    }
}

fn default_sectors() -> Vec<AngularSector> {
    AngularSector::backward_quadrants(Measure::PlainDtheta)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default)]
    pub options: FitOptions,
    /// Co-fit `E_res` and `Gamma`.
    #[serde(default)]
    pub free_resonance: bool,
    #[serde(default)]
    pub free_scale: bool,
    #[serde(default)]
    pub delta_bg_initial: Option<f64>,
}

fn default_sim_epsilon() -> Grid {
    Grid {
        min: -5.0,
        max: 5.0,
        count: 11,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub n_events: usize,
    pub projection: Projection,
    pub counting: Counting,
    pub annulus_fraction: f64,
    pub radial_bins: usize,
    /// Gaussian energy spread applied to the theory curves (energy units).
    pub spread_sigma: f64,
    #[serde(default = "default_sim_epsilon")]
    pub epsilon_grid: Grid,
    /// Needed only when phases come from a table file.
    pub reduced_mass: Option<f64>,
    pub image_bins: usize,
    pub write_points: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        let o = fanoscat_core::vmi::SimulationOptions::default();
        Self {
            n_events: o.n_events,
            projection: o.projection,
            counting: o.counting,
            annulus_fraction: o.annulus_fraction,
            radial_bins: o.radial_bins,
            spread_sigma: 0.0,
            epsilon_grid: default_sim_epsilon(),
            reduced_mass: None,
            image_bins: 256,
            write_points: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub potential: Option<PotentialParams>,
    #[serde(default)]
    pub radial_grid: Option<RadialGrid>,
    /// Phase-shift CSV used instead of solving the radial equation.
    #[serde(default)]
    pub phase_table: Option<PathBuf>,
    /// Energies of the `phaseshifts` table, also scanned for the resonance.
    #[serde(default)]
    pub energy_grid: Option<Grid>,
    #[serde(default)]
    pub l_max: Option<usize>,
    pub resonance: ResonanceConfig,
    #[serde(default = "default_epsilon")]
    pub epsilon_grid: Grid,
    #[serde(default = "default_sectors")]
    pub sectors: Vec<AngularSector>,
    /// Partial waves omitted in the masked sector curves.
    #[serde(default)]
    pub mask: BTreeSet<usize>,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        if let Some(t) = &cfg.phase_table {
            if t.is_relative() {
                cfg.phase_table = Some(path.parent().unwrap_or(Path::new(".")).join(t));
            }
        }
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match (&self.potential, &self.phase_table) {
            (Some(p), None) => {
                p.validate().map_err(CliError::from_core_validation)?;
                let g = self.radial_grid.ok_or_else(|| {
                    CliError::validation("radial_grid is required with a potential")
                })?;
                g.validate().map_err(CliError::from_core_validation)?;
            }
            (None, Some(t)) => {
                if !t.is_file() {
                    return Err(CliError::validation(format!(
                        "phase_table {} does not exist",
                        t.display()
                    )));
                }
            }
            (Some(_), Some(_)) => {
                return Err(CliError::validation(
                    "give either potential or phase_table, not both",
                ))
            }
            (None, None) => {
                return Err(CliError::validation(
                    "one of potential or phase_table is required",
                ))
            }
        }
        if let Some(g) = &self.energy_grid {
            g.check("energy_grid")?;
            if !(g.min > 0.0) {
                return Err(CliError::validation(
                    "energy_grid: energies must be positive",
                ));
            }
        }
        self.epsilon_grid.check("epsilon_grid")?;
        self.simulation
            .epsilon_grid
            .check("simulation.epsilon_grid")?;
        match (self.resonance.e_res, self.resonance.gamma) {
            (Some(e), Some(g)) => {
                if !(e > 0.0 && g > 0.0) {
                    return Err(CliError::validation(
                        "resonance: e_res and gamma must be positive",
                    ));
                }
            }
            (None, None) => {
                if self.energy_grid.is_none() && self.phase_table.is_none() {
                    return Err(CliError::validation(
                        "resonance: give e_res and gamma, or an energy_grid to locate it on",
                    ));
                }
            }
            _ => {
                return Err(CliError::validation(
                    "resonance: e_res and gamma go together",
                ))
            }
        }
        if let Some(l) = self.l_max {
            if l < self.resonance.l_res {
                return Err(CliError::validation(format!(
                    "l_max {l} is below l_res {}",
                    self.resonance.l_res
                )));
            }
        }
        if self.sectors.is_empty() {
            return Err(CliError::validation("at least one sector is required"));
        }
        for s in &self.sectors {
            s.validate().map_err(CliError::from_core_validation)?;
        }
        let mut names = BTreeSet::new();
        for s in &self.sectors {
            if s.name.is_empty() || !names.insert(s.name.as_str()) {
                return Err(CliError::validation(format!(
                    "sector names must be non-empty and unique ('{}')",
                    s.name
                )));
            }
            if !s
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(CliError::validation(format!(
                    "sector name '{}' must be alphanumeric",
                    s.name
                )));
            }
        }
        if self.mask.contains(&self.resonance.l_res) {
            return Err(CliError::validation("mask must not contain l_res"));
        }
        let sim = &self.simulation;
        self.simulation_options(0)
            .validate()
            .map_err(CliError::from_core_validation)?;
        if !(sim.spread_sigma >= 0.0 && sim.spread_sigma.is_finite()) {
            return Err(CliError::validation(
                "simulation.spread_sigma must be non-negative",
            ));
        }
        if sim.image_bins == 0 {
            return Err(CliError::validation(
                "simulation.image_bins must be positive",
            ));
        }
        if let Some(m) = sim.reduced_mass {
            if !(m > 0.0) {
                return Err(CliError::validation(
                    "simulation.reduced_mass must be positive",
                ));
            }
        }
        let f = &self.fit.options;
        if f.max_iterations == 0 || !(f.ftol >= 0.0) || !(f.gtol >= 0.0) {
            return Err(CliError::validation(
                "fit.options: max_iterations > 0 and non-negative tolerances",
            ));
        }
        Ok(())
    }

    pub fn simulation_options(&self, seed: u64) -> fanoscat_core::vmi::SimulationOptions {
        let s = &self.simulation;
        fanoscat_core::vmi::SimulationOptions {
            n_events: s.n_events,
            seed,
            projection: s.projection,
            counting: s.counting,
            annulus_fraction: s.annulus_fraction,
            radial_bins: s.radial_bins,
        }
    }

    pub fn reduced_mass(&self) -> Option<f64> {
        self.potential
            .map(|p| p.reduced_mass)
            .or(self.simulation.reduced_mass)
    }
}
