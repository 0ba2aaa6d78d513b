use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::potential::PotentialParams;
use super::radial::{compute_phase_shift, CollisionState, RadialGrid};
use crate::error::{Error, Result};

/// Phase shifts `δ_l(E_i)` for `l = 0..=l_max`, branch-continuous along energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseShiftTable {
    energies: Vec<f64>,
    l_max: usize,
    /// `delta[l][i]`
    delta: Vec<Vec<f64>>,
}

impl PhaseShiftTable {
    /// Builds a table from explicit rows, one per partial wave.
    /// Rows are unwrapped along energy.
    pub fn from_rows(energies: Vec<f64>, mut rows: Vec<Vec<f64>>) -> Result<Self> {
        if energies.is_empty() || rows.is_empty() {
            return Err(Error::InvalidInput(
                "phase shift table needs energies and rows".into(),
            ));
        }
        if energies.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "energies must be strictly increasing".into(),
            ));
        }
        if rows.iter().any(|r| r.len() != energies.len()) {
            return Err(Error::InvalidInput(
                "row length does not match energy count".into(),
            ));
        }
        for row in &mut rows {
            unwrap_branch(row);
        }
        Ok(Self {
            l_max: rows.len() - 1,
            energies,
            delta: rows,
        })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn row(&self, l: usize) -> &[f64] {
        &self.delta[l]
    }

    pub fn phase(&self, l: usize, i: usize) -> f64 {
        self.delta[l][i]
    }

    /// Phases of every partial wave at grid energy `i`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.delta.iter().map(|r| r[i]).collect()
    }

    pub fn energy_range(&self) -> (f64, f64) {
        (self.energies[0], *self.energies.last().unwrap())
    }

    /// All phases at energy `e`, linearly interpolated between grid energies.
    pub fn interpolate(&self, e: f64) -> Result<Vec<f64>> {
        let (lo, hi) = self.energy_range();
        if !(e >= lo && e <= hi) {
            return Err(Error::Extrapolation { energy: e, lo, hi });
        }
        let n = self.energies.len();
        if n == 1 {
            return Ok(self.delta.iter().map(|r| r[0]).collect());
        }
        let j = match self.energies.partition_point(|&x| x <= e) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (e0, e1) = (self.energies[j], self.energies[j + 1]);
        let t = (e - e0) / (e1 - e0);
        Ok(self
            .delta
            .iter()
            .map(|r| r[j] + t * (r[j + 1] - r[j]))
            .collect())
    }
}

/// Removes mod-π jumps in place: each entry is shifted by the multiple of π
/// that minimises its distance to the previous entry.
pub fn unwrap_branch(row: &mut [f64]) {
    for i in 1..row.len() {
        let diff = row[i] - row[i - 1];
        let n = (diff / PI).round();
        row[i] -= n * PI;
    }
}

/// Fills a table cell by cell (in parallel) and unwraps each partial wave along energy.
pub fn build_phase_shift_table(
    energies: &[f64],
    l_max: usize,
    params: &PotentialParams,
    grid: &RadialGrid,
) -> Result<PhaseShiftTable> {
    if energies.is_empty() {
        return Err(Error::InvalidInput("energy list is empty".into()));
    }
    if energies.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(
            "energies must be strictly increasing".into(),
        ));
    }
    params.validate()?;
    grid.validate()?;

    let columns: Vec<Vec<f64>> = energies
        .par_iter()
        .map(|&e| {
            let state = CollisionState::from_energy(e, params.reduced_mass).map_err(|err| {
                Error::PhaseShiftCell {
                    energy: e,
                    l: 0,
                    source: Box::new(err),
                }
            })?;
            (0..=l_max)
                .map(|l| {
                    compute_phase_shift(&state, l, params, grid).map_err(|err| {
                        Error::PhaseShiftCell {
                            energy: e,
                            l,
                            source: Box::new(err),
                        }
                    })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let rows = (0..=l_max)
        .map(|l| columns.iter().map(|c| c[l]).collect())
        .collect();
    PhaseShiftTable::from_rows(energies.to_vec(), rows)
}

/// Default truncation `max(15, ⌈2 k r_range⌉)` at the largest energy.
pub fn default_l_max(max_energy: f64, params: &PotentialParams, r_range: f64) -> usize {
    let k = (2.0 * params.reduced_mass * max_energy).sqrt();
    15usize.max((2.0 * k * r_range).ceil() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unwrap_removes_pi_jumps() {
        let mut row = vec![1.2, 1.5, -1.5 + 0.1, -1.2 + 0.1];
        unwrap_branch(&mut row);
        for w in row.windows(2) {
            assert!((w[1] - w[0]).abs() < PI / 2.0);
        }
        assert!((row[2] - (PI - 1.4)).abs() < 1e-12);
    }

    #[test]
    fn interpolation_is_linear_and_bounded() {
        let t = PhaseShiftTable::from_rows(vec![1.0, 2.0, 4.0], vec![vec![0.0, 1.0, 1.5]]).unwrap();
        assert!((t.interpolate(1.5).unwrap()[0] - 0.5).abs() < 1e-15);
        assert!((t.interpolate(3.0).unwrap()[0] - 1.25).abs() < 1e-15);
        assert_eq!(t.interpolate(4.0).unwrap()[0], 1.5);
        assert!(matches!(
            t.interpolate(4.5),
            Err(Error::Extrapolation { .. })
        ));
        assert!(matches!(
            t.interpolate(0.5),
            Err(Error::Extrapolation { .. })
        ));
    }

    #[test]
    fn zero_potential_table_vanishes() {
        let p = PotentialParams::zero(1.0);
        let g = RadialGrid::new(0.5, 10.0, 0.002).unwrap();
        let e: Vec<f64> = (1..=5).map(|i| 0.3 * i as f64).collect();
        let t = build_phase_shift_table(&e, 8, &p, &g).unwrap();
        for l in 0..=8 {
            assert!(t.row(l).iter().all(|d| d.abs() < 1e-8));
        }
    }

    #[test]
    fn single_energy_matches_pointwise() {
        let p = PotentialParams::lennard_jones(8.0, 1.0, 1.0).with_cutoff(3.0, 4.0);
        let g = RadialGrid::new(0.6, 8.0, 0.002).unwrap();
        let t = build_phase_shift_table(&[1.3], 6, &p, &g).unwrap();
        let s = CollisionState::from_energy(1.3, 1.0).unwrap();
        for l in 0..=6 {
            assert_eq!(t.phase(l, 0), compute_phase_shift(&s, l, &p, &g).unwrap());
        }
    }

    #[test]
    fn errors_carry_cell() {
        let p = PotentialParams::zero(1.0);
        let g = RadialGrid::new(0.5, 10.0, 0.002).unwrap();
        let err = build_phase_shift_table(&[1.0, 5000.0], 2, &p, &g).unwrap_err();
        match err {
            Error::PhaseShiftCell { energy, l, .. } => {
                assert_eq!(energy, 5000.0);
                assert_eq!(l, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
