//! Reference systems used by the tests, benchmarks and example configurations.
//!
//! The canonical system is a Lennard-Jones 12-6 well (depth 107, σ = 1, μ = 1)
//! tapered to zero between r = 4 and r = 6. Its l = 6 partial wave carries a
//! narrow shape resonance near E ≈ 1.129 with Γ ≈ 0.031.

use std::collections::BTreeSet;

use crate::cross_section::{
    sector_curve_from_table, AngularSector, PartialAmplitudeSet, SectorCurve,
};
use crate::error::Result;
use crate::fano::{background_polar, split_resonant_background, BackgroundEstimate};
use crate::scattering::{
    build_phase_shift_table, default_l_max, locate_resonance, PhaseShiftTable, PotentialParams,
    RadialGrid, ResonanceDescriptor,
};

pub const CANONICAL_L_RES: usize = 6;
pub const CANONICAL_WELL_DEPTH: f64 = 107.0;
/// Energy window bracketing the canonical resonance.
pub const CANONICAL_SEARCH: (f64, f64) = (1.05, 1.21);
/// Reduced-energy window over which the background is taken as constant.
pub const EPSILON_WINDOW: (f64, f64) = (-5.0, 5.0);

pub fn canonical_potential() -> PotentialParams {
    PotentialParams::lennard_jones(CANONICAL_WELL_DEPTH, 1.0, 1.0).with_cutoff(4.0, 6.0)
}

pub fn canonical_grid() -> RadialGrid {
    RadialGrid {
        r_min: 0.5,
        r_max: 10.0,
        step: 0.001,
    }
}

/// Locates the canonical resonance on a 2e-4-spaced scan of the search window.
pub fn canonical_resonance() -> Result<ResonanceDescriptor> {
    let (lo, hi) = CANONICAL_SEARCH;
    let n = ((hi - lo) / 2e-4).round() as usize;
    let energies = linspace(lo, hi, n + 1);
    let table = build_phase_shift_table(
        &energies,
        CANONICAL_L_RES,
        &canonical_potential(),
        &canonical_grid(),
    )?;
    locate_resonance(&table, CANONICAL_L_RES)
}

/// `n` equally spaced points spanning `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Phase shifts of the canonical system across the reduced-energy window.
#[derive(Debug, Clone)]
pub struct CanonicalFixture {
    pub params: PotentialParams,
    pub grid: RadialGrid,
    pub l_res: usize,
    pub resonance: ResonanceDescriptor,
    pub table: PhaseShiftTable,
}

impl CanonicalFixture {
    /// `n` energies evenly spaced in `ε` over [`EPSILON_WINDOW`].
    pub fn build(n: usize) -> Result<Self> {
        let resonance = canonical_resonance()?;
        let params = canonical_potential();
        let grid = canonical_grid();
        let energies: Vec<f64> = linspace(EPSILON_WINDOW.0, EPSILON_WINDOW.1, n)
            .into_iter()
            .map(|eps| resonance.energy_at(eps))
            .collect();
        let range = params.finite_range().unwrap_or(grid.r_max);
        let l_max = default_l_max(*energies.last().unwrap(), &params, range);
        let table = build_phase_shift_table(&energies, l_max, &params, &grid)?;
        Ok(Self {
            params,
            grid,
            l_res: CANONICAL_L_RES,
            resonance,
            table,
        })
    }

    pub fn sector_curve(
        &self,
        sector: &AngularSector,
        mask: &BTreeSet<usize>,
    ) -> Result<SectorCurve> {
        sector_curve_from_table(&self.table, sector, mask, Some(&self.resonance))
    }

    /// Amplitudes at the resonance energy.
    pub fn resonance_amplitudes(&self) -> Result<PartialAmplitudeSet> {
        Ok(PartialAmplitudeSet::unmasked(
            &self.table.interpolate(self.resonance.e_res)?,
        ))
    }

    /// Background polar form at the sector centre and the resonance energy.
    pub fn midpoint_background(&self, sector: &AngularSector) -> Result<BackgroundEstimate> {
        let amps = self.resonance_amplitudes()?;
        let (_, b) = split_resonant_background(&amps, self.l_res, sector.center)?;
        Ok(background_polar(b))
    }
}

/// Parameters of the synthetic overlapping-resonance table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoResonanceSpec {
    pub e_res: f64,
    pub gamma: f64,
    /// Second resonance, in the partial wave `l_res + 1`.
    pub e_res2: f64,
    pub gamma2: f64,
    pub l_max: usize,
}

impl Default for TwoResonanceSpec {
    fn default() -> Self {
        Self {
            e_res: 1.0,
            gamma: 0.1,
            e_res2: 1.3,
            gamma2: 0.12,
            l_max: 10,
        }
    }
}

/// Resonant phase `atan2(Γ/2, E_res - E)`, rising through π/2 at `E_res`.
pub fn breit_wigner_phase(e: f64, e_res: f64, gamma: f64) -> f64 {
    (0.5 * gamma).atan2(e_res - e)
}

/// Smooth nonresonant phase assigned to partial wave `l` in the synthetic table.
fn background_phase(l: usize, e: f64) -> f64 {
    const BASE: [f64; 11] = [
        1.10, -0.85, 0.40, -0.62, -0.30, 0.18, 0.04, 0.0, -0.08, -0.03, -0.01,
    ];
    BASE[l % BASE.len()] * (1.0 + 0.15 * (e - 1.0))
}

/// An `l = 6` resonance with an `l = 7` resonance above it, on smooth backgrounds.
pub fn two_resonance_table(spec: &TwoResonanceSpec, energies: &[f64]) -> Result<PhaseShiftTable> {
    let rows = (0..=spec.l_max)
        .map(|l| {
            energies
                .iter()
                .map(|&e| match l {
                    CANONICAL_L_RES => {
                        background_phase(l, e) + breit_wigner_phase(e, spec.e_res, spec.gamma)
                    }
                    7 => breit_wigner_phase(e, spec.e_res2, spec.gamma2),
                    _ => background_phase(l, e),
                })
                .collect()
        })
        .collect();
    PhaseShiftTable::from_rows(energies.to_vec(), rows)
}
