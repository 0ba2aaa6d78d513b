use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialForm {
    #[serde(rename = "lennard_jones_12_6")]
    LennardJones12_6,
    /// Infinite wall at `length_scale`, zero outside.
    HardSphere,
    Zero,
}

/// Smooth taper applied to the Lennard-Jones form: unity below `inner`,
/// zero beyond `outer`, and a quintic smootherstep (C2) in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cutoff {
    pub inner: f64,
    pub outer: f64,
}

impl Cutoff {
    fn factor(&self, r: f64) -> f64 {
        if r <= self.inner {
            1.0
        } else if r >= self.outer {
            0.0
        } else {
            let t = (r - self.inner) / (self.outer - self.inner);
            1.0 - t * t * t * (t * (6.0 * t - 15.0) + 10.0)
        }
    }
}

/// Model interaction in reduced units (ħ = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialParams {
    pub form: PotentialForm,
    #[serde(default)]
    pub well_depth: f64,
    #[serde(default)]
    pub length_scale: f64,
    pub reduced_mass: f64,
    #[serde(default)]
    pub cutoff: Option<Cutoff>,
}

impl PotentialParams {
    pub fn lennard_jones(well_depth: f64, length_scale: f64, reduced_mass: f64) -> Self {
        Self {
            form: PotentialForm::LennardJones12_6,
            well_depth,
            length_scale,
            reduced_mass,
            cutoff: None,
        }
    }

    pub fn hard_sphere(radius: f64, reduced_mass: f64) -> Self {
        Self {
            form: PotentialForm::HardSphere,
            well_depth: 0.0,
            length_scale: radius,
            reduced_mass,
            cutoff: None,
        }
    }

    pub fn zero(reduced_mass: f64) -> Self {
        Self {
            form: PotentialForm::Zero,
            well_depth: 0.0,
            length_scale: 0.0,
            reduced_mass,
            cutoff: None,
        }
    }

    pub fn with_cutoff(mut self, inner: f64, outer: f64) -> Self {
        self.cutoff = Some(Cutoff { inner, outer });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reduced_mass > 0.0) {
            return Err(Error::Configuration(format!(
                "reduced_mass must be positive, got {}",
                self.reduced_mass
            )));
        }
        match self.form {
            PotentialForm::LennardJones12_6 => {
                if !(self.well_depth > 0.0 && self.length_scale > 0.0) {
                    return Err(Error::Configuration(
                        "lennard_jones_12_6 needs well_depth > 0 and length_scale > 0".into(),
                    ));
                }
            }
            PotentialForm::HardSphere => {
                if !(self.length_scale > 0.0) {
                    return Err(Error::Configuration(
                        "hard_sphere needs a positive length_scale (radius)".into(),
                    ));
                }
            }
            PotentialForm::Zero => {}
        }
        if let Some(c) = self.cutoff {
            if !(c.inner > 0.0 && c.outer > c.inner) {
                return Err(Error::Configuration(format!(
                    "cutoff needs 0 < inner < outer, got {c:?}"
                )));
            }
        }
        Ok(())
    }

    /// Bare interaction `V(r)` without the centrifugal term.
    /// Inside a hard sphere this is `+inf`.
    pub fn interaction(&self, r: f64) -> f64 {
        match self.form {
            PotentialForm::Zero => 0.0,
            PotentialForm::HardSphere => {
                if r < self.length_scale {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            PotentialForm::LennardJones12_6 => {
                let s6 = (self.length_scale / r).powi(6);
                let v = 4.0 * self.well_depth * (s6 * s6 - s6);
                match self.cutoff {
                    Some(c) => v * c.factor(r),
                    None => v,
                }
            }
        }
    }

    /// Radius beyond which the interaction vanishes identically, if it does.
    pub fn finite_range(&self) -> Option<f64> {
        match self.form {
            PotentialForm::Zero => Some(0.0),
            PotentialForm::HardSphere => Some(self.length_scale),
            PotentialForm::LennardJones12_6 => self.cutoff.map(|c| c.outer),
        }
    }

    pub fn centrifugal(&self, r: f64, l: usize) -> f64 {
        let lf = l as f64;
        lf * (lf + 1.0) / (2.0 * self.reduced_mass * r * r)
    }
}

/// Effective radial potential `V(r) + l(l+1) / (2 μ r²)`.
pub fn potential_value(r: f64, l: usize, params: &PotentialParams) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    Ok(params.interaction(r) + params.centrifugal(r, l))
}
