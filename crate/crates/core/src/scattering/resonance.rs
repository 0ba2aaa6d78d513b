use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::table::PhaseShiftTable;
use crate::error::{Error, Result};

/// One isolated shape resonance: partial wave, position, and full width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceDescriptor {
    pub l_res: usize,
    pub e_res: f64,
    pub gamma: f64,
}

impl ResonanceDescriptor {
    pub fn new(l_res: usize, e_res: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::Domain(format!(
                "resonance width must be positive, got {gamma}"
            )));
        }
        Ok(Self {
            l_res,
            e_res,
            gamma,
        })
    }

    /// Collision energy at reduced energy `eps`.
    pub fn energy_at(&self, eps: f64) -> f64 {
        self.e_res + 0.5 * self.gamma * eps
    }
}

/// Centered first derivative on a possibly non-uniform grid, interior points only.
/// Entry `i` of the result belongs to grid point `i + 1`.
pub fn centered_derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    (1..x.len().saturating_sub(1))
        .map(|i| {
            let hm = x[i] - x[i - 1];
            let hp = x[i + 1] - x[i];
            (hm * hm * (y[i + 1] - y[i]) + hp * hp * (y[i] - y[i - 1])) / (hm * hp * (hm + hp))
        })
        .collect()
}

/// Locates the resonance in partial wave `l` from the steepest rise of `δ_l(E)`.
///
/// `E_res` is the refined maximum of `dδ/dE` (parabola through the three
/// largest neighbouring samples); `Γ = 2 / (dδ/dE)` at that maximum.
pub fn locate_resonance(table: &PhaseShiftTable, l: usize) -> Result<ResonanceDescriptor> {
    if l > table.l_max() {
        return Err(Error::InvalidInput(format!(
            "partial wave {l} exceeds table l_max = {}",
            table.l_max()
        )));
    }
    let e = table.energies();
    let d = table.row(l);
    let no_res = |reason: String| Error::NoResonance { l, reason };
    if e.len() < 5 {
        return Err(no_res(format!("{} energies are too few", e.len())));
    }
    let span = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - d.iter().cloned().fold(f64::INFINITY, f64::min);
    if span < FRAC_PI_2 {
        return Err(no_res(format!("phase varies by only {span:.4} rad")));
    }

    let deriv = centered_derivative(e, d);
    let (imax, &dmax) = deriv
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least three derivative samples");
    if imax == 0 || imax + 1 == deriv.len() || !(dmax > deriv[imax - 1] && dmax > deriv[imax + 1]) {
        return Err(no_res("derivative has no interior maximum".into()));
    }
    if !(dmax > 0.0) {
        return Err(no_res("phase does not rise".into()));
    }

    let (x0, x1, x2) = (e[imax], e[imax + 1], e[imax + 2]);
    let (y0, y1, y2) = (deriv[imax - 1], deriv[imax], deriv[imax + 1]);
    // Lagrange parabola through the three samples
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    let (e_res, peak) = if curv < 0.0 {
        let slope = d01 - curv * (x0 + x1);
        let xv = (-slope / (2.0 * curv)).clamp(x0, x2);
        let yv = y0 + d01 * (xv - x0) + curv * (xv - x0) * (xv - x1);
        (xv, yv.max(y1))
    } else {
        (x1, y1)
    };
    ResonanceDescriptor::new(l, e_res, 2.0 / peak)
}
