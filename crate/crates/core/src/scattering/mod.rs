//! Single-channel phase shifts from a model potential and shape-resonance characterisation.

mod potential;
mod radial;
mod resonance;
mod table;

pub use potential::{potential_value, Cutoff, PotentialForm, PotentialParams};
pub use radial::{compute_phase_shift, CollisionState, RadialGrid};
pub use resonance::{centered_derivative, locate_resonance, ResonanceDescriptor};
pub use table::{build_phase_shift_table, default_l_max, unwrap_branch, PhaseShiftTable};
