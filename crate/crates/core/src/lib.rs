//! Elastic partial-wave scattering and Fano line shapes in angle-resolved cross sections.
//!
//! Phase shifts come from a Numerov solution of the radial equation
//! ([`scattering`]), feed the differential and sector-integrated cross sections
//! ([`cross_section`]), and are split into a Breit-Wigner resonant term plus a
//! coherent background ([`fano`]). [`fitting`] recovers the background amplitude
//! and phase from sector curves, and [`vmi`] simulates the imaging measurement.
//!
//! Units are reduced with ħ = 1; every cross section is k²-scaled.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cross_section;
pub mod error;
pub mod fano;
pub mod fitting;
pub mod fixtures;
pub mod io;
pub mod lm;
pub mod quadrature;
pub mod scattering;
pub mod special;
pub mod vmi;

pub use cross_section::{AbscissaKind, AngularSector, Measure, PartialAmplitudeSet, SectorCurve};
pub use error::{Error, Result};
pub use fano::{BackgroundEstimate, FanoMapping, FanoParameters, FanoQ, FanoReport};
pub use fitting::{FanoFitResult, FitOptions, FitParameter, FitProblem, ParameterSpec};
pub use scattering::{
    PhaseShiftTable, PotentialForm, PotentialParams, RadialGrid, ResonanceDescriptor,
};
pub use vmi::{Annulus, DetectorImage, SimulationOptions, TransferFunction};
