use std::collections::BTreeSet;
use std::f64::consts::PI;

use fanoscat_core::cross_section::*;
use fanoscat_core::fano::*;
use fanoscat_core::special::legendre;
use fanoscat_core::vmi::convolve_energy_spread;
use num_complex::Complex64;
use proptest::prelude::*;

fn phases(max_l: usize) -> impl Strategy<Value = Vec<f64>> {
    (1..=max_l).prop_flat_map(|l| prop::collection::vec(-PI / 2.0..PI / 2.0, l + 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn optical_theorem(d in phases(20)) {
        let a = PartialAmplitudeSet::unmasked(&d);
        let s = total_cross_section(&a);
        prop_assume!(s > 1e-8);
        prop_assert!((s - optical_theorem_total(&a)).abs() < 1e-10 * s);
    }

    #[test]
    fn no_interference_in_total(d in phases(20)) {
        let a = PartialAmplitudeSet::unmasked(&d);
        let s = total_cross_section(&a);
        prop_assume!(s > 1e-8);
        prop_assert!((integrated_dcs(&a) - s).abs() < 1e-6 * s);
    }

    #[test]
    fn legendre_orthogonality(l in 0usize..25, m in 0usize..25) {
        let full = AngularSector::from_bounds("all", 0.0, PI, Measure::SinWeighted).unwrap();
        let v = full.integrate(|t| legendre(l, t.cos()).unwrap() * legendre(m, t.cos()).unwrap());
        let want = if l == m { 2.0 / (2 * l + 1) as f64 } else { 0.0 };
        prop_assert!((v - want).abs() < 1e-10, "{l} {m}: {v}");
    }

    #[test]
    fn partial_wave_unitarity(l in 0usize..40, d in -10.0f64..10.0) {
        let f = partial_amplitude(l, d);
        let w = (2 * l + 1) as f64;
        prop_assert!((f.im - f.norm_sqr() / w).abs() < 1e-12 * w);
        let s = Complex64::new(1.0, 0.0) + 2.0 * Complex64::i() * f / w;
        prop_assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mask_removes_exactly_one_term(d in phases(15), pick in 0usize..16, theta in 0.0..PI) {
        let l = pick % d.len();
        let a = PartialAmplitudeSet::unmasked(&d);
        let m = a.with_mask(&BTreeSet::from([l]));
        let expect = coherent_sum(&a, theta) - a.amplitude(l) * legendre(l, theta.cos()).unwrap();
        let got = coherent_sum(&m, theta);
        prop_assert!((got - expect).norm() < 1e-12 * (1.0 + expect.norm()));
        prop_assert!((dcs(&m, theta) - expect.norm_sqr()).abs() < 1e-10 * (1.0 + expect.norm_sqr()));
        prop_assert_eq!(m.amplitude(l), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn split_recomposes(d in phases(15), theta in 0.0..PI, l_res in 0usize..16) {
        let l_res = l_res % d.len();
        let a = PartialAmplitudeSet::unmasked(&d);
        let (r, b) = split_resonant_background(&a, l_res, theta).unwrap();
        prop_assert!(((r + b).norm_sqr() - dcs(&a, theta)).abs() < 1e-10 * (1.0 + dcs(&a, theta)));
    }

    #[test]
    fn exact_mapping_matches_direct_form(a in 0.0f64..5.0, d in -PI..PI, theta in 0.0..PI, eps in -20.0f64..20.0) {
        let bg = BackgroundEstimate::new(a, d).unwrap();
        let p = fano_parameters(theta, 6, &bg);
        let direct = constant_background_dcs(eps, theta, 6, &bg);
        prop_assert!((fano_profile(eps, &p) - direct).abs() < 1e-9 * (1.0 + direct));
    }

    #[test]
    fn resonant_phase_identity(eps in -50.0f64..50.0) {
        // sin²δ = 1/(1+ε²) for the Breit-Wigner phase cot δ = −ε
        let delta = PI / 2.0 + eps.atan();
        let f = breit_wigner_factor(eps);
        prop_assert!((f.norm_sqr() - 1.0 / (1.0 + eps * eps)).abs() < 1e-14);
        prop_assert!((delta.sin().powi(2) - 1.0 / (1.0 + eps * eps)).abs() < 1e-12);
    }

    #[test]
    fn convolution_is_linear(c in 0.1f64..10.0, sigma in 0.05f64..2.0) {
        let s = AngularSector::backward_quadrants(Measure::PlainDtheta)[0].clone();
        let x: Vec<f64> = (0..201).map(|i| -5.0 + 0.05 * i as f64).collect();
        let v: Vec<f64> = x.iter().map(|e| 1.0 / (1.0 + e * e)).collect();
        let a = SectorCurve::new(AbscissaKind::ReducedEnergy, x.clone(), v.clone(), None, s.clone()).unwrap();
        let b = SectorCurve::new(AbscissaKind::ReducedEnergy, x, v.iter().map(|y| c * y).collect(), None, s).unwrap();
        let (ca, cb) = (convolve_energy_spread(&a, sigma).unwrap().curve, convolve_energy_spread(&b, sigma).unwrap().curve);
        for (p, q) in ca.values.iter().zip(&cb.values) {
            prop_assert!((c * p - q).abs() < 1e-12 * q.abs().max(1e-300));
        }
    }
}
