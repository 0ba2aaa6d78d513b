//! Resonant/background split of the partial-wave amplitude and the Fano form
//! of the differential cross section.
//!
//! At fixed angle the amplitude is `R + B` with the Breit-Wigner resonant term
//! `R = (2l_res+1) (-1/(ε+i)) P_{l_res}(cos θ)` and a background
//! `B = A_bg e^{iδ_bg}`. Expanding `|R + B|²` gives
//!
//! ```text
//! |R + B|² = A_r²/(1+ε²) + A_bg² + 2 A_r A_bg (sin δ_bg - ε cos δ_bg)/(1+ε²)
//! ```
//!
//! with `A_r = (2l_res+1) P_{l_res}(cos θ)`. This equals the Fano form
//! `σ_res + dσ_bg + σ₀ (q² + 2qε - 1)/(1+ε²)` exactly for
//! `q = cot(δ_bg/2 - π/4)`, `σ₀ = 2 A_r A_bg/(1+q²)`, `σ_res = A_r²/(1+ε²)`
//! and `dσ_bg = A_bg²` ([`FanoMapping::Exact`]).
//!
//! The commonly quoted assignment `q = cot(δ_bg - π/4)`, `dσ_bg = A_bg`
//! ([`FanoMapping::Literal`]) produces `sin 2δ_bg - ε cos 2δ_bg` in the
//! interference term and a linear background, so it agrees with `|R + B|²`
//! only at isolated phases. It is kept for comparison.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cross_section::{AngularSector, PartialAmplitudeSet};
use crate::error::{Error, Result};
use crate::scattering::ResonanceDescriptor;
use crate::special::{legendre_table, legendre_unchecked};

/// `ε = (E - E_res) / (Γ/2)`.
pub fn reduced_energy(e: f64, res: &ResonanceDescriptor) -> Result<f64> {
    if !(res.gamma > 0.0) {
        return Err(Error::Domain(format!(
            "resonance width must be positive, got {}",
            res.gamma
        )));
    }
    Ok((e - res.e_res) / (0.5 * res.gamma))
}

/// `-1/(ε + i)`, equal to `sin δ e^{iδ}` for `cot δ = -ε`.
pub fn breit_wigner_factor(eps: f64) -> Complex64 {
    -Complex64::new(eps, 1.0).inv()
}

/// Breit-Wigner amplitude of the resonant partial wave at reduced energy `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonantTerm {
    pub l_res: usize,
    pub epsilon: f64,
}

impl ResonantTerm {
    pub fn amplitude(&self, theta: f64) -> Complex64 {
        resonant_weight(self.l_res, theta) * breit_wigner_factor(self.epsilon)
    }
}

/// `A_l(θ) = (2l+1) P_l(cos θ)`.
pub fn resonant_weight(l: usize, theta: f64) -> f64 {
    (2 * l + 1) as f64 * legendre_unchecked(l, theta.cos().clamp(-1.0, 1.0))
}

/// `(R, B)` with `R = f_{l_res} P_{l_res}(cos θ)` and `B` the coherent sum of every other wave.
pub fn split_resonant_background(
    amps: &PartialAmplitudeSet,
    l_res: usize,
    theta: f64,
) -> Result<(Complex64, Complex64)> {
    if l_res > amps.l_max() {
        return Err(Error::InvalidInput(format!(
            "l_res = {l_res} exceeds amplitude set l_max = {}",
            amps.l_max()
        )));
    }
    let p = legendre_table(amps.l_max(), theta.cos().clamp(-1.0, 1.0));
    let mut background = Complex64::new(0.0, 0.0);
    let mut resonant = Complex64::new(0.0, 0.0);
    for (l, (f, pl)) in amps.amplitudes().iter().zip(&p).enumerate() {
        if l == l_res {
            resonant = f * pl;
        } else {
            background += f * pl;
        }
    }
    Ok((resonant, background))
}

/// Polar form of a constant background amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundEstimate {
    #[serde(rename = "A_bg")]
    pub a_bg: f64,
    /// Radians in `(-π, π]`; meaningless when `phase_defined` is false.
    #[serde(rename = "delta_bg_rad")]
    pub delta_bg: f64,
    #[serde(default = "default_true")]
    pub phase_defined: bool,
}

fn default_true() -> bool {
    true
}

impl BackgroundEstimate {
    pub fn new(a_bg: f64, delta_bg: f64) -> Result<Self> {
        if !(a_bg >= 0.0) {
            return Err(Error::Domain(format!(
                "A_bg must be non-negative, got {a_bg}"
            )));
        }
        Ok(Self {
            a_bg,
            delta_bg: canonical_phase(delta_bg),
            phase_defined: true,
        })
    }

    pub fn amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.a_bg, self.delta_bg)
    }
}

/// Maps an angle into `(-π, π]`.
pub fn canonical_phase(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}

/// Modulus and quadrant-correct argument of `b`.
pub fn background_polar(b: Complex64) -> BackgroundEstimate {
    if b.norm() == 0.0 {
        return BackgroundEstimate {
            a_bg: 0.0,
            delta_bg: 0.0,
            phase_defined: false,
        };
    }
    BackgroundEstimate {
        a_bg: b.norm(),
        delta_bg: canonical_phase(b.arg()),
        phase_defined: true,
    }
}

/// The same background polar form from real partial-wave sums:
/// `A_bg² = Σ A_l² sin²δ_l + Σ_{l<l'} 2 A_l A_l' sin δ_l sin δ_l' cos(δ_l - δ_l')` and
/// `δ_bg = atan2(Σ A_l sin²δ_l, Σ A_l sin δ_l cos δ_l)`, sums over unmasked `l ≠ l_res`.
pub fn background_polar_expanded(
    amps: &PartialAmplitudeSet,
    l_res: usize,
    theta: f64,
) -> BackgroundEstimate {
    let p = legendre_table(amps.l_max(), theta.cos().clamp(-1.0, 1.0));
    let terms: Vec<(f64, f64)> = amps
        .phases()
        .iter()
        .enumerate()
        .filter(|(l, _)| *l != l_res && !amps.is_masked(*l))
        .map(|(l, &d)| ((2 * l + 1) as f64 * p[l], d))
        .collect();
    let mut sq = 0.0;
    for (i, &(a, d)) in terms.iter().enumerate() {
        sq += a * a * d.sin().powi(2);
        for &(b, e) in &terms[i + 1..] {
            sq += 2.0 * a * b * d.sin() * e.sin() * (d - e).cos();
        }
    }
    let num: f64 = terms.iter().map(|&(a, d)| a * d.sin().powi(2)).sum();
    let den: f64 = terms.iter().map(|&(a, d)| a * d.sin() * d.cos()).sum();
    let a_bg = sq.max(0.0).sqrt();
    if num == 0.0 && den == 0.0 {
        return BackgroundEstimate {
            a_bg,
            delta_bg: 0.0,
            phase_defined: false,
        };
    }
    BackgroundEstimate {
        a_bg,
        delta_bg: canonical_phase(num.atan2(den)),
        phase_defined: true,
    }
}

/// `|R(ε, θ) + A_bg e^{iδ_bg}|²` at a single angle.
pub fn constant_background_dcs(eps: f64, theta: f64, l_res: usize, bg: &BackgroundEstimate) -> f64 {
    (ResonantTerm {
        l_res,
        epsilon: eps,
    }
    .amplitude(theta)
        + bg.amplitude())
    .norm_sqr()
}

/// Sector integral of the constant-background model by direct quadrature of `|R + B|²`.
pub fn model_sector_value(
    eps: f64,
    sector: &AngularSector,
    l_res: usize,
    bg: &BackgroundEstimate,
) -> Result<f64> {
    sector.validate()?;
    if !(bg.a_bg >= 0.0) {
        return Err(Error::Domain(format!(
            "A_bg must be non-negative, got {}",
            bg.a_bg
        )));
    }
    Ok(sector.integrate(|t| constant_background_dcs(eps, t, l_res, bg)))
}

/// The sector model with its angular moments precomputed.
///
/// `∫|c(ε) A_r(θ) + b|² = |c|² M₂ + 2 Re(c b̄) M₁ + |b|² M₀`, where
/// `M_n = ∫ A_r(θ)^n` over the sector with its measure and `c = -1/(ε+i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorModel {
    pub l_res: usize,
    pub sector: AngularSector,
    moments: [f64; 3],
}

impl SectorModel {
    pub fn new(sector: &AngularSector, l_res: usize) -> Result<Self> {
        sector.validate()?;
        let mut m = [0.0; 3];
        for (t, w) in sector.quadrature_points() {
            let a = resonant_weight(l_res, t);
            m[0] += w;
            m[1] += w * a;
            m[2] += w * a * a;
        }
        Ok(Self {
            l_res,
            sector: sector.clone(),
            moments: m,
        })
    }

    pub fn moments(&self) -> [f64; 3] {
        self.moments
    }

    pub fn value(&self, eps: f64, bg: &BackgroundEstimate) -> f64 {
        self.value_parts(eps, bg.a_bg, bg.delta_bg)
    }

    pub fn value_parts(&self, eps: f64, a_bg: f64, delta_bg: f64) -> f64 {
        let c = breit_wigner_factor(eps);
        let b = Complex64::from_polar(a_bg, delta_bg);
        let [m0, m1, m2] = self.moments;
        c.norm_sqr() * m2 + 2.0 * (c * b.conj()).re * m1 + b.norm_sqr() * m0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FanoMapping {
    /// `q = cot(δ_bg/2 - π/4)`, `dσ_bg = A_bg²`; identical to `|R + B|²`.
    #[default]
    Exact,
    /// `q = cot(δ_bg - π/4)`, `dσ_bg = A_bg`.
    Literal,
}

/// Fano asymmetry parameter; `Infinite` where the cotangent is singular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FanoQ {
    Finite(f64),
    Infinite,
}

impl FanoQ {
    pub fn finite(self) -> Option<f64> {
        match self {
            FanoQ::Finite(q) => Some(q),
            FanoQ::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanoParameters {
    pub q: FanoQ,
    pub sigma0: f64,
    /// `A_{l_res}(θ)²`; the resonant Lorentzian is `sigma_res_scale / (1 + ε²)`.
    pub sigma_res_scale: f64,
    pub d_sigma_bg: f64,
    /// `2 A_{l_res}(θ) A_bg = σ₀ (1 + q²)`, kept so the infinite-q limit stays exact.
    pub interference_strength: f64,
    pub mapping: FanoMapping,
}

const Q_SINGULAR: f64 = 1e-12;

/// Fano parameters at angle `theta` under the exact mapping.
pub fn fano_parameters(theta: f64, l_res: usize, bg: &BackgroundEstimate) -> FanoParameters {
    fano_parameters_with(theta, l_res, bg, FanoMapping::Exact)
}

pub fn fano_parameters_with(
    theta: f64,
    l_res: usize,
    bg: &BackgroundEstimate,
    mapping: FanoMapping,
) -> FanoParameters {
    let a_r = resonant_weight(l_res, theta);
    let strength = 2.0 * a_r * bg.a_bg;
    let phi = match mapping {
        FanoMapping::Exact => 0.5 * bg.delta_bg - FRAC_PI_4,
        FanoMapping::Literal => bg.delta_bg - FRAC_PI_4,
    };
    let (s, c) = phi.sin_cos();
    let (q, sigma0) = if s.abs() < Q_SINGULAR {
        (FanoQ::Infinite, 0.0)
    } else {
        let q = c / s;
        (FanoQ::Finite(q), strength / (1.0 + q * q))
    };
    FanoParameters {
        q,
        sigma0,
        sigma_res_scale: a_r * a_r,
        d_sigma_bg: match mapping {
            FanoMapping::Exact => bg.a_bg * bg.a_bg,
            FanoMapping::Literal => bg.a_bg,
        },
        interference_strength: strength,
        mapping,
    }
}

/// `σ_res + dσ_bg + σ₀ (q² + 2qε - 1)/(1 + ε²)`.
///
/// For infinite `q` the Fano term tends to the Lorentzian `σ₀ q²/(1+ε²)` with
/// `σ₀ q² -> 2 A_{l_res} A_bg`.
pub fn fano_profile(eps: f64, p: &FanoParameters) -> f64 {
    let lorentz = 1.0 / (1.0 + eps * eps);
    let base = p.sigma_res_scale * lorentz + p.d_sigma_bg;
    match p.q {
        FanoQ::Finite(q) => base + p.sigma0 * (q * q + 2.0 * q * eps - 1.0) * lorentz,
        FanoQ::Infinite => base + p.interference_strength * lorentz,
    }
}

/// Serializable summary of one sector's background and Fano parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanoReport {
    pub sector: String,
    pub q: Option<f64>,
    pub q_infinite: bool,
    pub sigma0: f64,
    pub sigma_res_scale: f64,
    pub d_sigma_bg: f64,
    #[serde(rename = "A_bg")]
    pub a_bg: f64,
    pub delta_bg_rad: f64,
    pub phase_defined: bool,
    pub l_res: usize,
    pub theta_n: f64,
    pub dtheta: f64,
    pub mapping: FanoMapping,
}

impl FanoReport {
    pub fn new(
        sector: &AngularSector,
        l_res: usize,
        bg: &BackgroundEstimate,
        params: &FanoParameters,
    ) -> Self {
        Self {
            sector: sector.name.clone(),
            q: params.q.finite(),
            q_infinite: matches!(params.q, FanoQ::Infinite),
            sigma0: params.sigma0,
            sigma_res_scale: params.sigma_res_scale,
            d_sigma_bg: params.d_sigma_bg,
            a_bg: bg.a_bg,
            delta_bg_rad: bg.delta_bg,
            phase_defined: bg.phase_defined,
            l_res,
            theta_n: sector.center,
            dtheta: sector.width,
            mapping: params.mapping,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross_section::{dcs, Measure};
    use std::collections::BTreeSet;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn reduced_energy_values() {
        let r = ResonanceDescriptor {
            l_res: 6,
            e_res: 4.8,
            gamma: 0.4,
        };
        assert_eq!(reduced_energy(4.8, &r).unwrap(), 0.0);
        assert!((reduced_energy(5.0, &r).unwrap() - 1.0).abs() < 1e-12);
        assert!((reduced_energy(4.7, &r).unwrap() + 0.5).abs() < 1e-12);
        let bad = ResonanceDescriptor {
            l_res: 6,
            e_res: 4.8,
            gamma: 0.0,
        };
        assert!(matches!(reduced_energy(4.8, &bad), Err(Error::Domain(_))));
    }

    #[test]
    fn breit_wigner_unitarity_peak() {
        let c = breit_wigner_factor(0.0);
        assert!((c - Complex64::i()).norm() < 1e-15);
        for eps in [-3.0, -0.5, 0.7, 10.0] {
            let c = breit_wigner_factor(eps);
            assert!((c.norm() - 1.0 / (1.0 + eps * eps).sqrt()).abs() < 1e-15);
            // equals sin δ e^{iδ} with cot δ = -ε
            let d = (1.0f64).atan2(-eps);
            assert!((c - d.sin() * Complex64::from_polar(1.0, d)).norm() < 1e-14);
        }
    }

    #[test]
    fn split_edge_cases() {
        let mut phases = vec![0.0; 8];
        phases[6] = 0.9;
        let a = PartialAmplitudeSet::unmasked(&phases);
        let (r, b) = split_resonant_background(&a, 6, 2.5).unwrap();
        assert_eq!(b, Complex64::new(0.0, 0.0));
        assert!(r.norm() > 0.0);

        let phases = [0.3, 0.5, -0.2, 0.0];
        let a = PartialAmplitudeSet::unmasked(&phases);
        let (r, b) = split_resonant_background(&a, 3, 2.5).unwrap();
        assert_eq!(r, Complex64::new(0.0, 0.0));
        assert!((b.norm_sqr() - dcs(&a, 2.5)).abs() < 1e-13);
        assert!(split_resonant_background(&a, 4, 1.0).is_err());
    }

    #[test]
    fn polar_simple_values() {
        let b = background_polar(Complex64::new(1.0, 0.0));
        assert_eq!((b.a_bg, b.delta_bg), (1.0, 0.0));
        let b = background_polar(Complex64::new(0.0, 0.5));
        assert!((b.a_bg - 0.5).abs() < 1e-15 && (b.delta_bg - FRAC_PI_2).abs() < 1e-15);
        let b = background_polar(Complex64::new(-1.0, 0.0));
        assert_eq!(b.delta_bg, PI);
        let z = background_polar(Complex64::new(0.0, 0.0));
        assert!(!z.phase_defined && z.a_bg == 0.0);
    }

    #[test]
    fn canonical_phase_range() {
        assert_eq!(canonical_phase(-PI), PI);
        assert!((canonical_phase(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-15);
        assert!((canonical_phase(2.0 + 4.0 * PI) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn expanded_sums_match_polar_route() {
        let phases = [0.9, -0.4, 1.3, 0.2, 0.05, -0.6, 1.1, 0.01];
        let mask: BTreeSet<usize> = [5].into_iter().collect();
        let a = PartialAmplitudeSet::from_phases(&phases, &mask);
        for theta in [0.3, 1.2, 3.0 * PI / 4.0, 2.9] {
            let (_, b) = split_resonant_background(&a, 6, theta).unwrap();
            let direct = background_polar(b);
            let expanded = background_polar_expanded(&a, 6, theta);
            assert!((direct.a_bg - expanded.a_bg).abs() < 1e-12 * (1.0 + direct.a_bg));
            assert!((direct.delta_bg - expanded.delta_bg).abs() < 1e-12);
        }
    }

    #[test]
    fn moment_model_matches_direct_quadrature() {
        let bg = BackgroundEstimate::new(4.2, 2.1).unwrap();
        for s in AngularSector::backward_quadrants(Measure::PlainDtheta) {
            let m = SectorModel::new(&s, 6).unwrap();
            for eps in [-5.0, -1.3, 0.0, 0.4, 3.3] {
                let a = m.value(eps, &bg);
                let b = model_sector_value(eps, &s, 6, &bg).unwrap();
                assert!((a - b).abs() < 1e-12 * b.abs().max(1.0), "{a} {b}");
            }
        }
    }

    #[test]
    fn q_special_phases() {
        let bg = BackgroundEstimate::new(1.0, 3.0 * FRAC_PI_4).unwrap();
        let p = fano_parameters_with(2.0, 6, &bg, FanoMapping::Literal);
        assert!(p.q.finite().unwrap().abs() < 1e-12);
        let bg = BackgroundEstimate::new(1.0, FRAC_PI_4).unwrap();
        let p = fano_parameters_with(2.0, 6, &bg, FanoMapping::Literal);
        assert_eq!(p.q, FanoQ::Infinite);
        let bg = BackgroundEstimate::new(1.0, FRAC_PI_2).unwrap();
        assert_eq!(fano_parameters(2.0, 6, &bg).q, FanoQ::Infinite);
        let bg = BackgroundEstimate::new(0.0, 1.0).unwrap();
        let p = fano_parameters(2.0, 6, &bg);
        assert_eq!(p.sigma0, 0.0);
        assert!((fano_profile(0.7, &p) - p.sigma_res_scale / 1.49).abs() < 1e-12);
    }

    #[test]
    fn profile_extrema_and_dip() {
        let p = FanoParameters {
            q: FanoQ::Finite(1.7),
            sigma0: 0.6,
            sigma_res_scale: 0.0,
            d_sigma_bg: 0.0,
            interference_strength: 0.6 * (1.0 + 1.7 * 1.7),
            mapping: FanoMapping::Exact,
        };
        assert!((fano_profile(1.0 / 1.7, &p) - 0.6 * 1.7 * 1.7).abs() < 1e-12);
        assert!((fano_profile(-1.7, &p) + 0.6).abs() < 1e-12);
        let p0 = FanoParameters {
            q: FanoQ::Finite(0.0),
            sigma_res_scale: 2.0,
            d_sigma_bg: 0.3,
            ..p
        };
        for eps in [-2.0, 0.0, 1.5] {
            let l = 1.0 / (1.0 + eps * eps);
            assert!((fano_profile(eps, &p0) - (2.0 * l + 0.3 - 0.6 * l)).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_mapping_reproduces_direct_amplitude() {
        for &theta in &[1.7, 2.3, 2.8] {
            for i in 0..16 {
                let bg =
                    BackgroundEstimate::new(3.1, -PI + 2.0 * PI * (i as f64 + 0.5) / 16.0).unwrap();
                let p = fano_parameters(theta, 6, &bg);
                if let FanoQ::Finite(q) = p.q {
                    assert!(
                        (p.sigma0 * (1.0 + q * q) - 2.0 * resonant_weight(6, theta) * 3.1).abs()
                            < 1e-12
                    );
                }
                for j in 0..=20 {
                    let eps = -5.0 + 0.5 * j as f64;
                    let d = constant_background_dcs(eps, theta, 6, &bg);
                    assert!((fano_profile(eps, &p) - d).abs() < 1e-10 * d.max(1.0));
                }
            }
        }
    }
}
