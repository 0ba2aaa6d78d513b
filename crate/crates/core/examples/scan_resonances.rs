//! Scans Lennard-Jones well depths for an isolated shape resonance in one partial wave.
//!
//! Usage: cargo run --release -p fanoscat-core --example scan_resonances -- <l> <depth_lo> <depth_hi> <depth_step>

use fanoscat_core::scattering::{
    build_phase_shift_table, locate_resonance, PotentialParams, RadialGrid,
};

fn main() {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("numeric argument"))
        .collect();
    let (l, lo, hi, step) = match args.as_slice() {
        [l, lo, hi, step] => (*l as usize, *lo, *hi, *step),
        _ => (6, 20.0, 120.0, 2.0),
    };
    let grid = RadialGrid::new(0.5, 10.0, 0.002).unwrap();
    let energies: Vec<f64> = (1..=600).map(|i| 0.01 * i as f64).collect();
    let mut depth = lo;
    while depth <= hi + 1e-12 {
        let params = PotentialParams::lennard_jones(depth, 1.0, 1.0).with_cutoff(4.0, 6.0);
        let table = build_phase_shift_table(&energies, l, &params, &grid).unwrap();
        match locate_resonance(&table, l) {
            Ok(r) => println!(
                "depth {depth:7.2}  E_res {:.4}  Gamma {:.5}  Gamma/E {:.4}",
                r.e_res,
                r.gamma,
                r.gamma / r.e_res
            ),
            Err(e) => println!("depth {depth:7.2}  -- {e}"),
        }
        depth += step;
    }
}
