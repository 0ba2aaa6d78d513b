#![allow(dead_code)]

use fanoscat_core::scattering::PotentialParams;

/// `x j_l(x)` and `x y_l(x)` with their derivatives, by upward recurrence (valid for `x > l`).
pub fn riccati_pair(l: usize, x: f64) -> (f64, f64, f64, f64) {
    let (s, c) = x.sin_cos();
    let mut j = [s, s / x - c];
    let mut y = [-c, -c / x - s];
    if l == 0 {
        return (s, -c, c, s);
    }
    for n in 1..l {
        let f = (2 * n + 1) as f64 / x;
        j = [j[1], f * j[1] - j[0]];
        y = [y[1], f * y[1] - y[0]];
    }
    let lf = l as f64 / x;
    (j[1], y[1], j[0] - lf * j[1], y[0] - lf * y[1])
}

/// Phase shift from classical RK4 on `(u, u')` with log-derivative matching at `r_match`.
pub fn rk4_phase(params: &PotentialParams, e: f64, l: usize, r0: f64, r_match: f64, h: f64) -> f64 {
    let mu = params.reduced_mass;
    let k = (2.0 * mu * e).sqrt();
    let q = |r: f64| 2.0 * mu * (params.interaction(r) - e) + (l * (l + 1)) as f64 / (r * r);
    let n = ((r_match - r0) / h).round() as usize;
    let h = (r_match - r0) / n as f64;
    let (mut u, mut v) = (0.0f64, 1e-20f64);
    for i in 0..n {
        let r = r0 + i as f64 * h;
        let f = |r: f64, u: f64, v: f64| (v, q(r) * u);
        let (a1, b1) = f(r, u, v);
        let (a2, b2) = f(r + 0.5 * h, u + 0.5 * h * a1, v + 0.5 * h * b1);
        let (a3, b3) = f(r + 0.5 * h, u + 0.5 * h * a2, v + 0.5 * h * b2);
        let (a4, b4) = f(r + h, u + h * a3, v + h * b3);
        u += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        v += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        let m = u.abs().max(v.abs());
        if m > 1e100 {
            u /= m;
            v /= m;
        }
    }
    let g = v / u;
    let (j, y, jp, yp) = riccati_pair(l, k * r_match);
    let t = (k * jp - g * j) / (k * yp - g * y);
    let mut d = t.atan();
    if d <= -std::f64::consts::FRAC_PI_2 {
        d += std::f64::consts::PI;
    }
    d
}

/// Difference of two angles modulo π, in `(-π/2, π/2]`.
pub fn mod_pi_diff(a: f64, b: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let mut d = (a - b) % pi;
    if d > pi / 2.0 {
        d -= pi;
    }
    if d <= -pi / 2.0 {
        d += pi;
    }
    d
}

use fanoscat_core::cross_section::{AbscissaKind, AngularSector, Measure, SectorCurve};
use fanoscat_core::fano::{BackgroundEstimate, SectorModel};
use fanoscat_core::fitting::{fit, FanoFitResult, FitParameter, FitProblem};
use fanoscat_core::scattering::ResonanceDescriptor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn quadrant(i: usize) -> AngularSector {
    AngularSector::backward_quadrants(Measure::PlainDtheta)[i].clone()
}

/// Model sector curve on `n` points over ε ∈ [−5, 5], optionally with Gaussian noise of `noise` × peak.
pub fn synthetic_curve(
    sector: &AngularSector,
    a: f64,
    d: f64,
    n: usize,
    noise: Option<(f64, u64)>,
) -> SectorCurve {
    let m = SectorModel::new(sector, 6).unwrap();
    let bg = BackgroundEstimate::new(a, d).unwrap();
    let eps: Vec<f64> = (0..n)
        .map(|i| -5.0 + 10.0 * i as f64 / (n - 1) as f64)
        .collect();
    let mut v: Vec<f64> = eps.iter().map(|&e| m.value(e, &bg)).collect();
    let mut sig = None;
    if let Some((frac, seed)) = noise {
        let sd = frac * v.iter().cloned().fold(0.0, f64::max);
        let g = Normal::new(0.0, sd).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for y in &mut v {
            *y += g.sample(&mut rng);
        }
        sig = Some(vec![sd; n]);
    }
    SectorCurve::new(AbscissaKind::ReducedEnergy, eps, v, sig, sector.clone()).unwrap()
}

pub fn test_resonance() -> ResonanceDescriptor {
    ResonanceDescriptor {
        l_res: 6,
        e_res: 2.0,
        gamma: 0.1,
    }
}

pub struct NoiseStudy {
    pub mean_err_a: f64,
    pub mean_err_d: f64,
    pub mean_abs_a: f64,
    pub mean_abs_d: f64,
    pub cover_a: usize,
    pub cover_d: usize,
}

/// Fits 100 noisy realizations of sector (i) at `A_bg = 0.8`, `δ_bg = 2.0`.
pub fn noise_study() -> NoiseStudy {
    use rayon::prelude::*;
    let (a, d) = (0.8, 2.0);
    let s = quadrant(0);
    let fits: Vec<FanoFitResult> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let data = synthetic_curve(&s, a, d, 40, Some((0.03, 1000 + seed)));
            fit(&FitProblem::new(data, 6, test_resonance())).unwrap()
        })
        .collect();
    let mut out = NoiseStudy {
        mean_err_a: 0.0,
        mean_err_d: 0.0,
        mean_abs_a: 0.0,
        mean_abs_d: 0.0,
        cover_a: 0,
        cover_d: 0,
    };
    for f in &fits {
        let ea = f.estimate(FitParameter::ABg).unwrap() - a;
        let ed = wrap_2pi(f.estimate(FitParameter::DeltaBg).unwrap() - d);
        out.mean_err_a += ea / 100.0;
        out.mean_err_d += ed / 100.0;
        out.mean_abs_a += ea.abs() / 100.0;
        out.mean_abs_d += ed.abs() / 100.0;
        out.cover_a += (ea.abs() <= f.ci(FitParameter::ABg).unwrap()) as usize;
        out.cover_d += (ed.abs() <= f.ci(FitParameter::DeltaBg).unwrap()) as usize;
    }
    out
}

/// Wraps an angle difference into `(-π, π]`.
pub fn wrap_2pi(x: f64) -> f64 {
    use std::f64::consts::PI;
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// z-scores of transfer-corrected rates against theory, where the transfer function comes
/// from one simulation and is applied to an independently seeded second one.
pub fn vmi_cross_seed(
    fx: &fanoscat_core::fixtures::CanonicalFixture,
    stride: usize,
    n_events: usize,
) -> Vec<f64> {
    use fanoscat_core::cross_section::{sector_curve_from_table, PartialAmplitudeSet};
    use fanoscat_core::vmi::{build_transfer_function, simulate_rates, SimulationOptions};
    use std::collections::BTreeSet;
    let idx: Vec<usize> = (0..fx.table.energies().len()).step_by(stride).collect();
    let energies: Vec<f64> = idx.iter().map(|&i| fx.table.energies()[i]).collect();
    let amps: Vec<PartialAmplitudeSet> = idx
        .iter()
        .map(|&i| PartialAmplitudeSet::unmasked(&fx.table.column(i)))
        .collect();
    let sectors = AngularSector::backward_quadrants(Measure::PlainDtheta);
    let theory: Vec<SectorCurve> = sectors
        .iter()
        .map(|s| {
            let c = sector_curve_from_table(&fx.table, s, &BTreeSet::new(), None).unwrap();
            let v = idx.iter().map(|&i| c.values[i]).collect();
            SectorCurve::new(AbscissaKind::Energy, energies.clone(), v, None, s.clone()).unwrap()
        })
        .collect();
    let run = |seed| {
        let opts = SimulationOptions {
            n_events,
            seed,
            ..Default::default()
        };
        simulate_rates(&amps, &energies, fx.params.reduced_mass, &sectors, &opts).unwrap()
    };
    let (first, second) = (run(11), run(12));
    let tf = build_transfer_function(&theory, &first.rates).unwrap();
    let corrected = tf.apply(&second.rates).unwrap();
    let mut z = Vec::new();
    for (j, (c, t)) in corrected.iter().zip(&theory).enumerate() {
        for (i, (x, y)) in c.values.iter().zip(&t.values).enumerate() {
            let (c1, c2) = (first.points[i].counts[j], second.points[i].counts[j]);
            z.push((x - y) / (y * (1.0 / c1 + 1.0 / c2).sqrt()));
        }
    }
    z
}

/// Upper 99.9% point of χ² with `k` degrees of freedom (Wilson–Hilferty).
pub fn chi2_upper_999(k: usize) -> f64 {
    let k = k as f64;
    let a = 2.0 / (9.0 * k);
    k * (1.0 - a + 3.090_232 * a.sqrt()).powi(3)
}
