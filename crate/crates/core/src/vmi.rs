//! Monte-Carlo model of the velocity-map-imaging measurement: event sampling,
//! detector projection, annulus/sector counting, beam energy spread and the
//! transfer function back onto the theoretical scale.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cross_section::{dcs, AbscissaKind, AngularSector, PartialAmplitudeSet, SectorCurve};
use crate::error::{Error, Result};

/// Nodes of the tabulated polar-angle distribution.
pub const CDF_NODES: usize = 2048;
/// Events drawn per independently seeded chunk.
pub const CHUNK: usize = 1 << 16;

/// Inverse-CDF sampler for `θ` with density `∝ dcs(θ) sin θ`.
#[derive(Debug, Clone)]
pub struct PolarSampler {
    theta: Vec<f64>,
    cdf: Vec<f64>,
}

impl PolarSampler {
    pub fn new(amps: &PartialAmplitudeSet) -> Result<Self> {
        let theta: Vec<f64> = (0..CDF_NODES)
            .map(|j| PI * j as f64 / (CDF_NODES - 1) as f64)
            .collect();
        let dens: Vec<f64> = theta.iter().map(|&t| dcs(amps, t) * t.sin()).collect();
        let mut cdf = vec![0.0; CDF_NODES];
        for j in 1..CDF_NODES {
            cdf[j] = cdf[j - 1] + 0.5 * (dens[j] + dens[j - 1]) * (theta[j] - theta[j - 1]);
        }
        let total = cdf[CDF_NODES - 1];
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegenerateDistribution);
        }
        for c in &mut cdf {
            *c /= total;
        }
        Ok(Self { theta, cdf })
    }

    /// `θ` at cumulative probability `u ∈ [0, 1)`.
    pub fn invert(&self, u: f64) -> f64 {
        let j = self
            .cdf
            .partition_point(|&c| c <= u)
            .clamp(1, CDF_NODES - 1);
        let (c0, c1) = (self.cdf[j - 1], self.cdf[j]);
        let f = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.theta[j - 1] + f * (self.theta[j] - self.theta[j - 1])
    }
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Unit velocity vectors `(sin θ cos φ, cos θ, sin θ sin φ)`: the collision axis is `+y`
/// and `z` is the detector line of sight.
pub fn sample_events(amps: &PartialAmplitudeSet, n: usize, seed: u64) -> Result<Vec<[f64; 3]>> {
    if n == 0 {
        return Err(Error::InvalidInput("event count must be at least 1".into()));
    }
    let sampler = PolarSampler::new(amps)?;
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<[f64; 3]>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(n - c * CHUNK);
            let mut rng = chunk_rng(seed, c);
            (0..len)
                .map(|_| {
                    let theta = sampler.invert(rng.random::<f64>());
                    let phi = 2.0 * PI * rng.random::<f64>();
                    let (st, ct) = theta.sin_cos();
                    [st * phi.cos(), ct, st * phi.sin()]
                })
                .collect()
        })
        .collect();
    Ok(parts.concat())
}

/// How 3D velocities reach the detector plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// Orthographic: the line-of-sight component is discarded.
    #[default]
    Orthographic,
    /// Ideal imaging of the scattering angle itself, for pipeline checks.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorImage {
    pub points: Vec<(f64, f64)>,
    pub center: (f64, f64),
    pub seed: u64,
}

impl DetectorImage {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Polar angle of each point measured from `+y`, in `[0, π]`.
    pub fn polar_angle(&self, p: (f64, f64)) -> f64 {
        (p.0 - self.center.0).abs().atan2(p.1 - self.center.1)
    }

    pub fn radius(&self, p: (f64, f64)) -> f64 {
        (p.0 - self.center.0).hypot(p.1 - self.center.1)
    }

    /// Counts on an `n × n` mesh centred on the image and just covering every point.
    pub fn binned(&self, n: usize) -> BinnedImage {
        let half = self
            .points
            .iter()
            .map(|&(x, y)| (x - self.center.0).abs().max((y - self.center.1).abs()))
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE)
            * (1.0 + 1e-9);
        let bin = 2.0 * half / n as f64;
        let mut counts = vec![0u64; n * n];
        let idx = |v: f64| (((v + half) / bin) as usize).min(n - 1);
        for &(x, y) in &self.points {
            let (ix, iy) = (idx(x - self.center.0), idx(y - self.center.1));
            counts[iy * n + ix] += 1;
        }
        BinnedImage {
            n,
            origin: (self.center.0 - half, self.center.1 - half),
            bin,
            counts,
        }
    }
}

/// Row-major counts; row 0 is the lowest `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedImage {
    pub n: usize,
    pub origin: (f64, f64),
    pub bin: f64,
    pub counts: Vec<u64>,
}

impl BinnedImage {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub fn project_to_detector(
    events: &[[f64; 3]],
    speed: f64,
    center: (f64, f64),
    projection: Projection,
    seed: u64,
) -> Result<DetectorImage> {
    if !(speed > 0.0) {
        return Err(Error::Domain(format!(
            "speed must be positive, got {speed}"
        )));
    }
    let points = events
        .iter()
        .map(|v| match projection {
            Projection::Orthographic => (center.0 + speed * v[0], center.1 + speed * v[1]),
            Projection::None => {
                let s = v[0].hypot(v[2]);
                let s = if v[0] < 0.0 { -s } else { s };
                (center.0 + speed * s, center.1 + speed * v[1])
            }
        })
        .collect();
    Ok(DetectorImage {
        points,
        center,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub center: (f64, f64),
    pub radius: f64,
    pub width: f64,
}

impl Annulus {
    pub fn new(center: (f64, f64), radius: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && radius > 0.5 * width) {
            return Err(Error::Domain(format!(
                "annulus needs r0 > w/2 > 0, got r0 = {radius}, w = {width}"
            )));
        }
        Ok(Self {
            center,
            radius,
            width,
        })
    }

    /// Centred on the peak of the radial histogram with width `fraction · r0`.
    pub fn from_radial_peak(image: &DetectorImage, bins: usize, fraction: f64) -> Result<Self> {
        if image.is_empty() || bins == 0 {
            return Err(Error::InvalidInput("radial peak of an empty image".into()));
        }
        let radii: Vec<f64> = image.points.iter().map(|&p| image.radius(p)).collect();
        let rmax = radii.iter().cloned().fold(0.0, f64::max) * (1.0 + 1e-9);
        if !(rmax > 0.0) {
            return Err(Error::InvalidInput(
                "all points sit at the image centre".into(),
            ));
        }
        let mut hist = vec![0u64; bins];
        for r in radii {
            hist[((r / rmax * bins as f64) as usize).min(bins - 1)] += 1;
        }
        let peak = hist
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap();
        let r0 = (peak as f64 + 0.5) * rmax / bins as f64;
        Self::new(image.center, r0, fraction * r0)
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        let r = (p.0 - self.center.0).hypot(p.1 - self.center.1);
        (r - self.radius).abs() <= 0.5 * self.width
    }
}

/// Half-open sector membership, closed at `π`.
fn in_sector(s: &AngularSector, theta: f64) -> bool {
    let (lo, hi) = (s.lower(), s.upper());
    theta >= lo && (theta < hi || (hi >= PI && theta <= PI))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorCounts {
    pub counts: Vec<u64>,
    pub in_annulus: u64,
    /// True when no point fell inside any sector.
    pub empty: bool,
}

pub fn sector_counts(
    image: &DetectorImage,
    annulus: &Annulus,
    sectors: &[AngularSector],
) -> Result<SectorCounts> {
    for s in sectors {
        s.validate()?;
    }
    let mut counts = vec![0u64; sectors.len()];
    let mut in_annulus = 0;
    for &p in &image.points {
        if !annulus.contains(p) {
            continue;
        }
        in_annulus += 1;
        let theta = (p.0 - annulus.center.0).abs().atan2(p.1 - annulus.center.1);
        for (c, s) in counts.iter_mut().zip(sectors) {
            if in_sector(s, theta) {
                *c += 1;
            }
        }
    }
    Ok(SectorCounts {
        empty: counts.iter().all(|&c| c == 0),
        counts,
        in_annulus,
    })
}

/// Result of a Gaussian energy-spread convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Convolved {
    pub curve: SectorCurve,
    /// Set when the grid spacing exceeds σ/2 somewhere.
    pub coarse_grid: bool,
}

fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let l = if i > 0 { x[i] - x[i - 1] } else { 0.0 };
            let r = if i + 1 < n { x[i + 1] - x[i] } else { 0.0 };
            0.5 * (l + r)
        })
        .collect()
}

/// Gaussian convolution along the abscissa (σ in abscissa units), truncated at ±5σ
/// and renormalised on the truncated support.
pub fn convolve_energy_spread(curve: &SectorCurve, sigma: f64) -> Result<Convolved> {
    curve.validate()?;
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!(
            "spread sigma must be non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 || curve.len() == 1 {
        return Ok(Convolved {
            curve: curve.clone(),
            coarse_grid: false,
        });
    }
    let x = &curve.abscissa;
    let t = trapezoid_weights(x);
    let coarse_grid = x.windows(2).any(|w| w[1] - w[0] > 0.5 * sigma);
    let mut values = Vec::with_capacity(x.len());
    let mut errs = Vec::with_capacity(x.len());
    for &xi in x {
        let lo = x.partition_point(|&v| v < xi - 5.0 * sigma);
        let hi = x.partition_point(|&v| v <= xi + 5.0 * sigma);
        let w: Vec<f64> = (lo..hi)
            .map(|j| {
                let d = (x[j] - xi) / sigma;
                (-0.5 * d * d).exp() * t[j]
            })
            .collect();
        let norm: f64 = w.iter().sum();
        let (mut v, mut e2) = (0.0, 0.0);
        for (k, j) in (lo..hi).enumerate() {
            let kj = if norm > 0.0 {
                w[k] / norm
            } else {
                f64::from(u8::from(x[j] == xi))
            };
            v += kj * curve.values[j];
            if let Some(s) = &curve.sigma_err {
                e2 += kj * kj * s[j] * s[j];
            }
        }
        values.push(v);
        errs.push(e2.sqrt());
    }
    let sigma_err = curve.sigma_err.as_ref().map(|_| errs);
    Ok(Convolved {
        curve: SectorCurve::new(
            curve.abscissa_kind,
            x.clone(),
            values,
            sigma_err,
            curve.sector.clone(),
        )?,
        coarse_grid,
    })
}

/// Multiplicative correction per sector and energy; `None` marks a hole (no counts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferFunction {
    pub sectors: Vec<String>,
    pub energies: Vec<f64>,
    /// `factors[sector][energy]`.
    pub factors: Vec<Vec<Option<f64>>>,
}

impl TransferFunction {
    /// `(sector, energy)` positions without a factor.
    pub fn holes(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for (s, row) in self.sectors.iter().zip(&self.factors) {
            for (e, f) in self.energies.iter().zip(row) {
                if f.is_none() {
                    out.push((s.clone(), *e));
                }
            }
        }
        out
    }

    /// Multiplies measured curves (ordered as `sectors`) by their factors.
    pub fn apply(&self, measured: &[SectorCurve]) -> Result<Vec<SectorCurve>> {
        if measured.len() != self.sectors.len() {
            return Err(Error::InvalidInput(
                "sector count differs from transfer function".into(),
            ));
        }
        measured
            .iter()
            .zip(&self.factors)
            .map(|(c, row)| {
                check_grid(&c.abscissa, &self.energies)?;
                let f: Vec<f64> = row
                    .iter()
                    .zip(&self.energies)
                    .map(|(f, e)| {
                        f.ok_or_else(|| {
                            Error::InvalidInput(format!(
                                "transfer function hole in sector {} at {e}",
                                c.sector.name
                            ))
                        })
                    })
                    .collect::<Result<_>>()?;
                let values = c.values.iter().zip(&f).map(|(v, f)| v * f).collect();
                let sigma_err = c
                    .sigma_err
                    .as_ref()
                    .map(|s| s.iter().zip(&f).map(|(s, f)| s * f).collect());
                SectorCurve::new(
                    c.abscissa_kind,
                    c.abscissa.clone(),
                    values,
                    sigma_err,
                    c.sector.clone(),
                )
            })
            .collect()
    }
}

fn check_grid(a: &[f64], b: &[f64]) -> Result<()> {
    let same = a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0));
    if same {
        Ok(())
    } else {
        Err(Error::InvalidInput("energy grids differ".into()))
    }
}

/// `theory / measured` per sector and energy, with holes where `measured` is zero.
pub fn build_transfer_function(
    theory: &[SectorCurve],
    measured: &[SectorCurve],
) -> Result<TransferFunction> {
    if theory.is_empty() || theory.len() != measured.len() {
        return Err(Error::InvalidInput(
            "theory and measured sector lists must match".into(),
        ));
    }
    let energies = theory[0].abscissa.clone();
    let mut factors = Vec::with_capacity(theory.len());
    for (t, m) in theory.iter().zip(measured) {
        check_grid(&t.abscissa, &energies)?;
        check_grid(&m.abscissa, &energies)?;
        if t.sector.name != m.sector.name {
            return Err(Error::InvalidInput(format!(
                "sector mismatch: {} vs {}",
                t.sector.name, m.sector.name
            )));
        }
        factors.push(
            t.values
                .iter()
                .zip(&m.values)
                .map(|(t, m)| if *m > 0.0 { Some(t / m) } else { None })
                .collect(),
        );
    }
    Ok(TransferFunction {
        sectors: theory.iter().map(|c| c.sector.name.clone()).collect(),
        energies,
        factors,
    })
}

/// Whether sector counts are drawn or taken as their expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Counting {
    #[default]
    Sampled,
    /// Exact expected counts; requires `Projection::None`.
    Expected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationOptions {
    pub n_events: usize,
    pub seed: u64,
    pub projection: Projection,
    pub counting: Counting,
    /// Annulus width as a fraction of its radius.
    pub annulus_fraction: f64,
    pub radial_bins: usize,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            n_events: 1_000_000,
            seed: 0,
            projection: Projection::Orthographic,
            counting: Counting::Sampled,
            annulus_fraction: 0.2,
            radial_bins: 256,
        }
    }
}

impl SimulationOptions {
    pub fn validate(&self) -> Result<()> {
        if self.n_events == 0 {
            return Err(Error::Configuration("n_events must be at least 1".into()));
        }
        if !(self.annulus_fraction > 0.0 && self.annulus_fraction < 2.0) {
            return Err(Error::Configuration(
                "annulus_fraction must lie in (0, 2)".into(),
            ));
        }
        if self.radial_bins == 0 {
            return Err(Error::Configuration("radial_bins must be positive".into()));
        }
        if self.counting == Counting::Expected && self.projection != Projection::None {
            return Err(Error::Configuration(
                "expected counting requires projection \"none\"".into(),
            ));
        }
        Ok(())
    }

    fn energy_seed(&self, index: usize) -> u64 {
        self.seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}

/// One energy of a simulated measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedPoint {
    pub energy: f64,
    pub velocity: f64,
    /// k²-scaled total cross section used for the luminosity.
    pub k2_sigma_total: f64,
    pub luminosity: f64,
    pub annulus: Option<Annulus>,
    pub counts: Vec<f64>,
    pub seed: u64,
}

/// Per-energy simulation output plus k²-proportional sector rates.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub points: Vec<SimulatedPoint>,
    /// `counts / luminosity · v`, one curve per sector over energy.
    pub rates: Vec<SectorCurve>,
}

fn expected_counts(amps: &PartialAmplitudeSet, n: usize, sectors: &[AngularSector]) -> Vec<f64> {
    let full = AngularSector {
        name: String::new(),
        center: PI / 2.0,
        width: PI,
        measure: crate::cross_section::Measure::SinWeighted,
    };
    let total = full.integrate(|t| dcs(amps, t));
    sectors
        .iter()
        .map(|s| {
            let solid = AngularSector {
                measure: crate::cross_section::Measure::SinWeighted,
                ..s.clone()
            };
            n as f64 * solid.integrate(|t| dcs(amps, t)) / total
        })
        .collect()
}

/// Simulates the sector count rates at each energy.
///
/// The detector radius is the relative velocity `v = k/μ`. Events are normalised to a
/// luminosity `L = n / (σ v)` with `σ = k²σ / k²`, so `counts / L` is a rate
/// coefficient; multiplying by `v` gives values proportional to `k²σ`.
pub fn simulate_rates(
    amplitudes: &[PartialAmplitudeSet],
    energies: &[f64],
    reduced_mass: f64,
    sectors: &[AngularSector],
    opts: &SimulationOptions,
) -> Result<Simulation> {
    opts.validate()?;
    if amplitudes.len() != energies.len() || energies.is_empty() {
        return Err(Error::InvalidInput(
            "one amplitude set per energy is required".into(),
        ));
    }
    for s in sectors {
        s.validate()?;
    }
    let mut points = Vec::with_capacity(energies.len());
    for (i, (amps, &e)) in amplitudes.iter().zip(energies).enumerate() {
        let state = crate::scattering::CollisionState::from_energy(e, reduced_mass)?;
        let v = state.velocity(reduced_mass);
        let k2_sigma = crate::cross_section::total_cross_section(amps);
        if !(k2_sigma > 0.0) {
            return Err(Error::DegenerateDistribution);
        }
        let sigma = k2_sigma / (state.wavenumber * state.wavenumber);
        let luminosity = opts.n_events as f64 / (sigma * v);
        let seed = opts.energy_seed(i);
        let (counts, annulus) = match opts.counting {
            Counting::Expected => (expected_counts(amps, opts.n_events, sectors), None),
            Counting::Sampled => {
                let events = sample_events(amps, opts.n_events, seed)?;
                let image = project_to_detector(&events, v, (0.0, 0.0), opts.projection, seed)?;
                let annulus =
                    Annulus::from_radial_peak(&image, opts.radial_bins, opts.annulus_fraction)?;
                let c = sector_counts(&image, &annulus, sectors)?;
                (c.counts.iter().map(|&c| c as f64).collect(), Some(annulus))
            }
        };
        points.push(SimulatedPoint {
            energy: e,
            velocity: v,
            k2_sigma_total: k2_sigma,
            luminosity,
            annulus,
            counts,
            seed,
        });
    }
    let rates = sectors
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let values: Vec<f64> = points
                .iter()
                .map(|p| p.counts[j] / p.luminosity * p.velocity)
                .collect();
            let sigma_err = match opts.counting {
                Counting::Expected => None,
                Counting::Sampled => Some(
                    points
                        .iter()
                        .map(|p| p.counts[j].max(1.0).sqrt() / p.luminosity * p.velocity)
                        .collect(),
                ),
            };
            SectorCurve::new(
                AbscissaKind::Energy,
                energies.to_vec(),
                values,
                sigma_err,
                s.clone(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Simulation { points, rates })
}
