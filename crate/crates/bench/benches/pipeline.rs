use std::collections::BTreeSet;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use fanoscat_core::cross_section::{sector_curve_from_table, AngularSector, Measure};
use fanoscat_core::fano::{background_polar, split_resonant_background};
use fanoscat_core::fitting::{fit, FitProblem};
use fanoscat_core::fixtures::{canonical_grid, canonical_potential, CanonicalFixture};
use fanoscat_core::scattering::{build_phase_shift_table, compute_phase_shift, CollisionState};
use fanoscat_core::vmi::{project_to_detector, sample_events, Projection};

fn solver(c: &mut Criterion) {
    let (p, g) = (canonical_potential(), canonical_grid());
    let state = CollisionState::from_energy(1.129, p.reduced_mass).unwrap();
    c.bench_function("phase_shift_l6", |b| {
        b.iter(|| compute_phase_shift(black_box(&state), 6, &p, &g).unwrap())
    });
    let energies: Vec<f64> = (0..21).map(|i| 1.08 + 0.005 * i as f64).collect();
    c.bench_function("phase_table_21x12", |b| {
        b.iter(|| build_phase_shift_table(black_box(&energies), 11, &p, &g).unwrap())
    });
}

fn curves_and_fits(c: &mut Criterion) {
    let fx = CanonicalFixture::build(201).unwrap();
    let sectors = AngularSector::backward_quadrants(Measure::PlainDtheta);
    let none = BTreeSet::new();
    c.bench_function("sector_curve_201", |b| {
        b.iter(|| {
            sector_curve_from_table(&fx.table, &sectors[1], &none, Some(&fx.resonance)).unwrap()
        })
    });
    let curve = fx.sector_curve(&sectors[1], &none).unwrap();
    let problem = FitProblem::new(curve, fx.resonance.l_res, fx.resonance);
    c.bench_function("fit_sector_ii", |b| {
        b.iter(|| fit(black_box(&problem)).unwrap())
    });
    let amps = fx.resonance_amplitudes().unwrap();
    c.bench_function("background_split", |b| {
        b.iter(|| {
            background_polar(
                split_resonant_background(&amps, 6, black_box(2.0))
                    .unwrap()
                    .1,
            )
        })
    });
}

fn sampling(c: &mut Criterion) {
    let fx = CanonicalFixture::build(11).unwrap();
    let amps = fx.resonance_amplitudes().unwrap();
    let mut g = c.benchmark_group("vmi");
    g.sample_size(20);
    g.bench_function("sample_project_1e5", |b| {
        b.iter(|| {
            let ev = sample_events(&amps, 100_000, black_box(3)).unwrap();
            project_to_detector(&ev, 1.5, (0.0, 0.0), Projection::Orthographic, 3).unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, solver, curves_and_fits, sampling);
criterion_main!(benches);
