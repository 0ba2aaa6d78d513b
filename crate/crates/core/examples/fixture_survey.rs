//! Sector-curve peak positions for candidate Lennard-Jones well depths.
//!
//! Usage: cargo run --release -p fanoscat-core --example fixture_survey -- <depth>...

use std::f64::consts::{FRAC_PI_2, PI};

use fanoscat_core::cross_section::{
    amplitudes_from_table, sector_integral, AngularSector, Measure, PartialAmplitudeSet,
};
use fanoscat_core::fano::{
    background_polar, reduced_energy, split_resonant_background, SectorModel,
};
use fanoscat_core::scattering::{
    build_phase_shift_table, default_l_max, locate_resonance, PotentialParams,
};

fn main() {
    let depths: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().unwrap())
        .collect();
    let grid = fanoscat_core::fixtures::canonical_grid();
    let coarse: Vec<f64> = (1..=600).map(|i| 0.01 * i as f64).collect();
    for depth in depths {
        let params = PotentialParams::lennard_jones(depth, 1.0, 1.0).with_cutoff(4.0, 6.0);
        let t = build_phase_shift_table(&coarse, 6, &params, &grid).unwrap();
        let Ok(r0) = locate_resonance(&t, 6) else {
            println!("depth {depth}: no resonance");
            continue;
        };
        let energies: Vec<f64> = (0..=1200)
            .map(|i| r0.e_res + 0.5 * r0.gamma * (-6.0 + 12.0 * i as f64 / 1200.0))
            .filter(|e| *e > 0.0)
            .collect();
        let l_max = default_l_max(*energies.last().unwrap(), &params, 6.0);
        let table = build_phase_shift_table(&energies, l_max, &params, &grid).unwrap();
        let res = locate_resonance(&table, 6).unwrap();
        let sectors = AngularSector::backward_quadrants(Measure::PlainDtheta);
        let mid = table.interpolate(res.e_res).unwrap();
        let mid_amps = PartialAmplitudeSet::unmasked(&mid);
        let b_half = split_resonant_background(&mid_amps, 6, FRAC_PI_2)
            .unwrap()
            .1
            .norm();
        let b_pi = split_resonant_background(&mid_amps, 6, PI)
            .unwrap()
            .1
            .norm();
        println!(
            "depth {depth}: E_res {:.4} Gamma {:.4} l_max {l_max} |B(pi/2)| {b_half:.3} |B(pi)| {b_pi:.3} d6(mid) {:.3}",
            res.e_res, res.gamma, mid[6]
        );
        let mut peaks = Vec::new();
        let mut model_peaks = Vec::new();
        for s in &sectors {
            let mut best = (f64::NEG_INFINITY, 0.0);
            for &e in table.energies() {
                let eps = reduced_energy(e, &res).unwrap();
                if eps.abs() > 5.0 {
                    continue;
                }
                let amps = amplitudes_from_table(&table, e, &Default::default()).unwrap();
                let v = sector_integral(&amps, s).unwrap();
                if v > best.0 {
                    best = (v, eps);
                }
            }
            let bg = background_polar(split_resonant_background(&mid_amps, 6, s.center).unwrap().1);
            let m = SectorModel::new(s, 6).unwrap();
            let mut mb = (f64::NEG_INFINITY, 0.0);
            for j in 0..=10000 {
                let eps = -5.0 + 1e-3 * j as f64;
                let v = m.value(eps, &bg);
                if v > mb.0 {
                    mb = (v, eps);
                }
            }
            peaks.push(best.1);
            model_peaks.push(mb.1);
            println!(
                "  {:>4} theory argmax {:+.3}  model argmax {:+.3}  A_bg {:.3} d_bg {:+.3}",
                s.name, best.1, mb.1, bg.a_bg, bg.delta_bg
            );
        }
        let spread = peaks.iter().cloned().fold(f64::MIN, f64::max)
            - peaks.iter().cloned().fold(f64::MAX, f64::min);
        let order = |v: &[f64]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|a, b| v[*a].total_cmp(&v[*b]));
            idx
        };
        let same_order = order(&peaks) == order(&model_peaks);
        let same_sign = peaks
            .iter()
            .zip(&model_peaks)
            .all(|(a, b)| a.signum() == b.signum());
        let worst = peaks
            .iter()
            .zip(&model_peaks)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!("  spread {spread:.3} worst {worst:.3} order {same_order} sign {same_sign} suppression {}", b_pi < b_half);
    }
}
