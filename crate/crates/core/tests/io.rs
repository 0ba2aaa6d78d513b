use std::f64::consts::PI;

use fanoscat_core::cross_section::PartialAmplitudeSet;
use fanoscat_core::cross_section::{AbscissaKind, AngularSector, Measure, SectorCurve};
use fanoscat_core::io::*;
use fanoscat_core::scattering::PhaseShiftTable;
use fanoscat_core::vmi::{project_to_detector, sample_events, Projection, TransferFunction};
use fanoscat_core::Error;

fn curve(sigma: bool) -> SectorCurve {
    let s = AngularSector::backward_quadrants(Measure::SinWeighted)[1].clone();
    let x = vec![-1.0, 0.1, 0.3333333333333333, 2.0];
    let v = vec![1.0 / 3.0, 2.5e-9, 7.0, PI];
    let e = sigma.then(|| vec![0.1, 0.2, 0.3, 1.0 / 7.0]);
    SectorCurve::new(AbscissaKind::ReducedEnergy, x, v, e, s).unwrap()
}

#[test]
fn phase_table_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("phases.csv");
    let t = PhaseShiftTable::from_rows(
        vec![0.5, 0.75, 1.0],
        vec![vec![0.1, 0.2, 1.0 / 3.0], vec![-0.4, -0.3, 2.9]],
    )
    .unwrap();
    write_phase_table(&p, &t).unwrap();
    let back = read_phase_table(&p).unwrap();
    assert_eq!(back, t);
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(text.starts_with("energy,l0,l1\n"));
}

#[test]
fn sector_curve_round_trip_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    for sigma in [true, false] {
        let p = dir.path().join(format!("c{sigma}.csv"));
        let c = curve(sigma);
        write_sector_curve(&p, &c, Some(serde_json::json!({"config_hash": "abc"}))).unwrap();
        assert_eq!(read_sector_curve(&p, None).unwrap(), c);
        let side: CurveSidecar = read_json(&sidecar_path(&p)).unwrap();
        assert_eq!(side.provenance.unwrap()["config_hash"], "abc");
    }
}

#[test]
fn malformed_inputs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    std::fs::write(&p, "energy,l0\n").unwrap();
    assert!(matches!(read_phase_table(&p), Err(Error::InvalidInput(_))));
    std::fs::write(&p, "energy,l1\n1,2\n").unwrap();
    assert!(read_phase_table(&p).is_err());
    std::fs::write(&p, "energy,l0\n1,abc\n").unwrap();
    assert!(read_phase_table(&p).is_err());
    let c = curve(true);
    let side = CurveSidecar {
        sector: c.sector.clone(),
        abscissa_kind: c.abscissa_kind,
        provenance: None,
    };
    std::fs::write(&p, "abscissa,value,sigma_err\n0,1,0.1\n1,2,\n").unwrap();
    assert!(read_sector_curve(&p, Some(side.clone())).is_err());
    std::fs::write(&p, "abscissa,value,sigma_err\n").unwrap();
    assert!(read_sector_curve(&p, Some(side)).is_err());
    assert!(matches!(
        read_phase_table(&dir.path().join("missing.csv")),
        Err(Error::Io { .. })
    ));
}

#[test]
fn transfer_function_round_trip_keeps_holes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("tf.csv");
    let tf = TransferFunction {
        sectors: vec!["i".into(), "ii".into()],
        energies: vec![1.0, 1.5],
        factors: vec![vec![Some(0.25), None], vec![Some(1.0 / 3.0), Some(2.0)]],
    };
    write_transfer_function(&p, &tf).unwrap();
    assert_eq!(read_transfer_function(&p).unwrap(), tf);
}

#[test]
fn image_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let ev = sample_events(&PartialAmplitudeSet::unmasked(&[PI / 2.0]), 1000, 3).unwrap();
    let img = project_to_detector(&ev, 1.0, (0.0, 0.0), Projection::Orthographic, 3).unwrap();
    let pts = dir.path().join("img.csv");
    write_image_points(&pts, &img).unwrap();
    assert_eq!(std::fs::read_to_string(&pts).unwrap().lines().count(), 1001);
    let pgm = dir.path().join("img.pgm");
    write_pgm(&pgm, &img.binned(16)).unwrap();
    let text = std::fs::read_to_string(&pgm).unwrap();
    assert!(text.starts_with("P2\n16 16\n255\n"));
    assert_eq!(text.lines().count(), 3 + 16);
}

#[test]
fn atomic_write_leaves_no_temporaries() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.json");
    write_json(&p, &vec![1, 2, 3]).unwrap();
    write_json(&p, &vec![4]).unwrap();
    let names: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(names.len(), 1);
    assert_eq!(read_json::<Vec<i32>>(&p).unwrap(), vec![4]);
}
