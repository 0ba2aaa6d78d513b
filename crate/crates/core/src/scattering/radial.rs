//! Numerov integration of the radial equation and two-radius phase matching.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::potential::{PotentialForm, PotentialParams};
use crate::error::{Error, Result};
use crate::special::riccati_bessel;

/// Uniform radial mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub step: f64,
}

impl RadialGrid {
    pub fn new(r_min: f64, r_max: f64, step: f64) -> Result<Self> {
        let grid = Self { r_min, r_max, step };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0 && self.r_max > self.r_min) {
            return Err(Error::Configuration(format!(
                "radial grid needs 0 < r_min < r_max, got [{}, {}]",
                self.r_min, self.r_max
            )));
        }
        if !(self.step > 0.0) {
            return Err(Error::Configuration(format!(
                "radial step must be positive, got {}",
                self.step
            )));
        }
        if (self.r_max - self.r_min) / self.step < 1e3 {
            return Err(Error::Configuration(format!(
                "radial grid needs at least 1000 steps, got {:.1}",
                (self.r_max - self.r_min) / self.step
            )));
        }
        Ok(())
    }

    pub fn halved(&self) -> Self {
        Self {
            step: 0.5 * self.step,
            ..*self
        }
    }
}

/// Collision energy and wavenumber, tied by `E = k² / (2 μ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionState {
    pub energy: f64,
    pub wavenumber: f64,
}

impl CollisionState {
    pub fn from_energy(energy: f64, reduced_mass: f64) -> Result<Self> {
        if !(energy > 0.0) || !(reduced_mass > 0.0) {
            return Err(Error::Domain(format!(
                "collision energy and reduced mass must be positive (E = {energy}, mu = {reduced_mass})"
            )));
        }
        Ok(Self {
            energy,
            wavenumber: (2.0 * reduced_mass * energy).sqrt(),
        })
    }

    pub fn from_wavenumber(wavenumber: f64, reduced_mass: f64) -> Result<Self> {
        if !(wavenumber > 0.0) || !(reduced_mass > 0.0) {
            return Err(Error::Domain(format!(
                "wavenumber and reduced mass must be positive (k = {wavenumber}, mu = {reduced_mass})"
            )));
        }
        Ok(Self {
            energy: wavenumber * wavenumber / (2.0 * reduced_mass),
            wavenumber,
        })
    }

    /// Relative velocity `v = k / μ`.
    pub fn velocity(&self, reduced_mass: f64) -> f64 {
        self.wavenumber / reduced_mass
    }
}

// Without a finite range, the tail must be this small relative to E at the inner matching radius.
const TAIL_TOLERANCE: f64 = 1e-6;
const MIN_MATCH_STEPS: usize = 10;

/// Phase shift `δ_l` in `(-π/2, π/2]`, the branch that vanishes with the potential.
///
/// The regular solution is propagated outward with Numerov's method and
/// matched to `ĵ_l cos δ - ŷ_l sin δ` at two radii beyond the interaction range.
pub fn compute_phase_shift(
    state: &CollisionState,
    l: usize,
    params: &PotentialParams,
    grid: &RadialGrid,
) -> Result<f64> {
    params.validate()?;
    grid.validate()?;
    if !(state.energy > 0.0 && state.wavenumber > 0.0) {
        return Err(Error::Domain(format!(
            "collision energy must be positive, got {}",
            state.energy
        )));
    }
    let k = state.wavenumber;
    let h = grid.step;
    if h * k > 0.1 {
        return Err(Error::Resolution { step_k: h * k });
    }
    let mu = params.reduced_mass;
    let e = state.energy;

    let r_start = match params.form {
        PotentialForm::HardSphere => params.length_scale.max(grid.r_min),
        _ => grid.r_min,
    };
    let n_last = ((grid.r_max - r_start) / h + 1e-9).floor() as usize;
    if n_last < 2 * MIN_MATCH_STEPS {
        return Err(Error::Configuration(
            "radial grid ends before the integration start".into(),
        ));
    }
    let r_at = |i: usize| r_start + i as f64 * h;
    let r_outer = r_at(n_last);

    let range = match params.finite_range() {
        Some(r) => r,
        None => {
            // infinite tail: accept only if already negligible at the outer radius
            let tail = params.interaction(r_outer).abs();
            if tail > TAIL_TOLERANCE * e {
                return Err(Error::Configuration(format!(
                    "matching radius {r_outer} lies inside the potential range (|V| = {tail:.3e})"
                )));
            }
            r_outer - PI / (2.0 * k)
        }
    };
    let available = r_outer - range.max(r_start);
    let quarter_wave = PI / (2.0 * k);
    let m = ((quarter_wave / h).floor() as usize)
        .min(((available / h).floor() as usize).saturating_sub(2));
    if m < MIN_MATCH_STEPS {
        return Err(Error::Configuration(format!(
            "matching radii [{:.4}, {r_outer:.4}] fall inside the potential range (ends at {range:.4})",
            r_outer - m as f64 * h
        )));
    }
    if params.finite_range().is_none() {
        let inner = r_outer - m as f64 * h;
        let tail = params.interaction(inner).abs();
        if tail > TAIL_TOLERANCE * e {
            return Err(Error::Configuration(format!(
                "matching radius {inner} lies inside the potential range (|V| = {tail:.3e})"
            )));
        }
    }
    let n_inner = n_last - m;

    let q = |r: f64| 2.0 * mu * (params.interaction(r) - e) + (l * (l + 1)) as f64 / (r * r);
    let t = |r: f64| h * h * q(r) / 12.0;

    // Starting index: skip mesh points where the local Numerov coefficient is too stiff.
    let mut i0 = 0usize;
    let (mut u_prev, mut u_cur) = match params.form {
        PotentialForm::Zero => {
            let a = riccati_bessel(l, k * r_at(0)).0;
            let b = riccati_bessel(l, k * r_at(1)).0;
            (a, b)
        }
        PotentialForm::HardSphere => (0.0, 1e-10),
        PotentialForm::LennardJones12_6 => {
            while i0 + 2 < n_inner && h * h * q(r_at(i0)) > 1.0 {
                i0 += 1;
            }
            (0.0, 1e-30)
        }
    };
    if i0 + 1 >= n_inner {
        return Err(Error::Configuration(
            "no resolvable integration region before the matching radii".into(),
        ));
    }

    let mut t_prev = t(r_at(i0));
    let mut t_cur = t(r_at(i0 + 1));
    let mut u_inner = 0.0;
    for i in (i0 + 1)..n_last {
        if i == n_inner {
            u_inner = u_cur;
        }
        let t_next = t(r_at(i + 1));
        let u_next = (2.0 * (1.0 + 5.0 * t_cur) * u_cur - (1.0 - t_prev) * u_prev) / (1.0 - t_next);
        u_prev = u_cur;
        u_cur = u_next;
        t_prev = t_cur;
        t_cur = t_next;
        if u_cur.abs() > 1e200 {
            u_prev *= 1e-200;
            u_cur *= 1e-200;
            u_inner *= 1e-200;
        }
    }
    let u_outer = u_cur;

    let (j1, y1) = riccati_bessel(l, k * r_at(n_inner));
    let (j2, y2) = riccati_bessel(l, k * r_outer);
    let num = u_inner * j2 - u_outer * j1;
    let den = u_inner * y2 - u_outer * y1;
    if !(num.is_finite() && den.is_finite()) {
        return Err(Error::Configuration(format!(
            "radial solution overflowed for l = {l} at E = {e}"
        )));
    }
    Ok(fold_half_open(num.atan2(den)))
}

/// Maps an angle to `(-π/2, π/2]` modulo π.
pub(crate) fn fold_half_open(mut d: f64) -> f64 {
    while d > FRAC_PI_2 {
        d -= PI;
    }
    while d <= -FRAC_PI_2 {
        d += PI;
    }
    d
}
