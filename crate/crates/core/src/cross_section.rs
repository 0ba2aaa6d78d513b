//! Partial-wave amplitudes, differential and total cross sections, and angular-sector integrals.
//!
//! All cross sections are k²-scaled and dimensionless:
//! `k² dσ/dΩ = |Σ_l f_l P_l(cos θ)|²` with `f_l = (2l+1) sin δ_l e^{iδ_l}`.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::angular_rule;
use rayon::prelude::*;

use crate::fano::reduced_energy;
use crate::scattering::{PhaseShiftTable, ResonanceDescriptor};
use crate::special::legendre_table;

pub use crate::special::legendre;

/// Amplitudes `f_l` at one energy, with an optional set of excluded partial waves.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialAmplitudeSet {
    phases: Vec<f64>,
    amplitudes: Vec<Complex64>,
    mask: BTreeSet<usize>,
}

impl PartialAmplitudeSet {
    pub fn from_phases(phases: &[f64], mask: &BTreeSet<usize>) -> Self {
        let amplitudes = phases
            .iter()
            .enumerate()
            .map(|(l, &d)| {
                if mask.contains(&l) {
                    Complex64::new(0.0, 0.0)
                } else {
                    partial_amplitude(l, d)
                }
            })
            .collect();
        Self {
            phases: phases.to_vec(),
            amplitudes,
            mask: mask.clone(),
        }
    }

    pub fn unmasked(phases: &[f64]) -> Self {
        Self::from_phases(phases, &BTreeSet::new())
    }

    pub fn l_max(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, l: usize) -> Complex64 {
        self.amplitudes[l]
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn mask(&self) -> &BTreeSet<usize> {
        &self.mask
    }

    pub fn is_masked(&self, l: usize) -> bool {
        self.mask.contains(&l)
    }

    /// Same phases with a different mask.
    pub fn with_mask(&self, mask: &BTreeSet<usize>) -> Self {
        Self::from_phases(&self.phases, mask)
    }
}

/// `(2l+1) sin δ e^{iδ}`.
pub fn partial_amplitude(l: usize, delta: f64) -> Complex64 {
    (2 * l + 1) as f64 * delta.sin() * Complex64::from_polar(1.0, delta)
}

/// Amplitudes at energy `e`, interpolating each `δ_l` linearly between table energies.
pub fn amplitudes_from_table(
    table: &PhaseShiftTable,
    e: f64,
    mask: &BTreeSet<usize>,
) -> Result<PartialAmplitudeSet> {
    let phases = table.interpolate(e)?;
    Ok(PartialAmplitudeSet::from_phases(&phases, mask))
}

/// Coherent sum `Σ_l f_l P_l(cos θ)`.
pub fn coherent_sum(amps: &PartialAmplitudeSet, theta: f64) -> Complex64 {
    let p = legendre_table(amps.l_max(), theta.cos().clamp(-1.0, 1.0));
    amps.amplitudes.iter().zip(&p).map(|(f, pl)| f * pl).sum()
}

/// `k² dσ/dΩ` at scattering angle `theta`.
pub fn dcs(amps: &PartialAmplitudeSet, theta: f64) -> f64 {
    coherent_sum(amps, theta).norm_sqr()
}

/// `k² σ = 4π Σ_l (2l+1) sin² δ_l` over unmasked partial waves.
pub fn total_cross_section(amps: &PartialAmplitudeSet) -> f64 {
    4.0 * PI
        * amps
            .phases
            .iter()
            .enumerate()
            .filter(|(l, _)| !amps.is_masked(*l))
            .map(|(l, d)| (2 * l + 1) as f64 * d.sin().powi(2))
            .sum::<f64>()
}

/// Forward-amplitude side of the optical theorem: `4π Im Σ_l f_l P_l(1)`.
pub fn optical_theorem_total(amps: &PartialAmplitudeSet) -> f64 {
    4.0 * PI * amps.amplitudes.iter().map(|f| f.im).sum::<f64>()
}

/// `2π ∫_0^π k² dσ/dΩ sin θ dθ` by quadrature.
pub fn integrated_dcs(amps: &PartialAmplitudeSet) -> f64 {
    2.0 * PI * angular_rule().integrate(0.0, PI, |t| dcs(amps, t) * t.sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// `dθ`, the image-plane sector measure.
    #[default]
    PlainDtheta,
    /// `sin θ dθ`, the solid-angle measure without the azimuthal 2π.
    SinWeighted,
}

impl Measure {
    pub fn weight(self, theta: f64) -> f64 {
        match self {
            Measure::PlainDtheta => 1.0,
            Measure::SinWeighted => theta.sin(),
        }
    }
}

/// Angular range `[center - width/2, center + width/2]` within `[0, π]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngularSector {
    #[serde(default)]
    pub name: String,
    pub center: f64,
    pub width: f64,
    #[serde(default)]
    pub measure: Measure,
}

const BOUNDS_SLACK: f64 = 1e-12;

impl AngularSector {
    pub fn new(name: impl Into<String>, center: f64, width: f64, measure: Measure) -> Result<Self> {
        let s = Self {
            name: name.into(),
            center,
            width,
            measure,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_bounds(
        name: impl Into<String>,
        lo: f64,
        hi: f64,
        measure: Measure,
    ) -> Result<Self> {
        Self::new(name, 0.5 * (lo + hi), hi - lo, measure)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0) {
            return Err(Error::Domain(format!(
                "sector '{}' width must be positive, got {}",
                self.name, self.width
            )));
        }
        let (lo, hi) = (
            self.center - 0.5 * self.width,
            self.center + 0.5 * self.width,
        );
        if !(lo >= -BOUNDS_SLACK && hi <= PI + BOUNDS_SLACK) {
            return Err(Error::Domain(format!(
                "sector '{}' [{lo}, {hi}] leaves [0, pi]",
                self.name
            )));
        }
        Ok(())
    }

    pub fn lower(&self) -> f64 {
        (self.center - 0.5 * self.width).max(0.0)
    }

    pub fn upper(&self) -> f64 {
        (self.center + 0.5 * self.width).min(PI)
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta >= self.lower() && theta <= self.upper()
    }

    /// The four equal sectors tiling the backward hemisphere `[π/2, π]`,
    /// labelled `i` (next to π/2) through `iv` (next to π).
    pub fn backward_quadrants(measure: Measure) -> Vec<AngularSector> {
        ["i", "ii", "iii", "iv"]
            .iter()
            .enumerate()
            .map(|(n, name)| {
                let lo = PI / 2.0 + n as f64 * PI / 8.0;
                AngularSector {
                    name: (*name).to_string(),
                    center: lo + PI / 16.0,
                    width: PI / 8.0,
                    measure,
                }
            })
            .collect()
    }

    /// Quadrature nodes and weights for this sector, measure included.
    pub fn quadrature_points(&self) -> Vec<(f64, f64)> {
        angular_rule()
            .points(self.lower(), self.upper())
            .into_iter()
            .map(|(t, w)| (t, w * self.measure.weight(t)))
            .collect()
    }

    /// Integrates `f(θ)` over the sector with its measure.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.quadrature_points()
            .into_iter()
            .map(|(t, w)| w * f(t))
            .sum()
    }
}

/// `∫_sector k² dσ/dΩ dμ(θ)`.
pub fn sector_integral(amps: &PartialAmplitudeSet, sector: &AngularSector) -> Result<f64> {
    sector.validate()?;
    Ok(sector.integrate(|t| dcs(amps, t)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbscissaKind {
    Energy,
    ReducedEnergy,
}

/// k²-scaled sector cross section against collision energy or reduced energy.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorCurve {
    pub abscissa_kind: AbscissaKind,
    pub abscissa: Vec<f64>,
    pub values: Vec<f64>,
    pub sigma_err: Option<Vec<f64>>,
    pub sector: AngularSector,
}

impl SectorCurve {
    pub fn new(
        abscissa_kind: AbscissaKind,
        abscissa: Vec<f64>,
        values: Vec<f64>,
        sigma_err: Option<Vec<f64>>,
        sector: AngularSector,
    ) -> Result<Self> {
        let c = Self {
            abscissa_kind,
            abscissa,
            values,
            sigma_err,
            sector,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.abscissa.is_empty() {
            return Err(Error::InvalidInput("sector curve is empty".into()));
        }
        if self.abscissa.len() != self.values.len() {
            return Err(Error::InvalidInput(
                "abscissa and values differ in length".into(),
            ));
        }
        if self.abscissa.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "abscissa must be strictly increasing".into(),
            ));
        }
        if self.values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(
                "sector values must be finite and non-negative".into(),
            ));
        }
        if let Some(s) = &self.sigma_err {
            if s.len() != self.values.len() {
                return Err(Error::InvalidInput("sigma_err length mismatch".into()));
            }
            if s.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidInput(
                    "sigma_err entries must be positive".into(),
                ));
            }
        }
        self.sector.validate()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Abscissa of the largest value.
    pub fn argmax(&self) -> f64 {
        let i = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.abscissa[i]
    }
}

/// Sector integral at every table energy, with abscissa `ε` when a resonance is given.
pub fn sector_curve_from_table(
    table: &PhaseShiftTable,
    sector: &AngularSector,
    mask: &BTreeSet<usize>,
    resonance: Option<&ResonanceDescriptor>,
) -> Result<SectorCurve> {
    sector.validate()?;
    let values = (0..table.energies().len())
        .into_par_iter()
        .map(|i| {
            let phases: Vec<f64> = (0..=table.l_max()).map(|l| table.phase(l, i)).collect();
            sector_integral(&PartialAmplitudeSet::from_phases(&phases, mask), sector)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (kind, abscissa) = match resonance {
        Some(r) => (
            AbscissaKind::ReducedEnergy,
            table
                .energies()
                .iter()
                .map(|&e| reduced_energy(e, r))
                .collect::<Result<Vec<f64>>>()?,
        ),
        None => (AbscissaKind::Energy, table.energies().to_vec()),
    };
    SectorCurve::new(kind, abscissa, values, None, sector.clone())
}
