//! The pipeline commands. Inputs are checked before any output directory is created.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use fanoscat_core::cross_section::{
    amplitudes_from_table, sector_curve_from_table, total_cross_section, AbscissaKind,
    AngularSector, PartialAmplitudeSet, SectorCurve,
};
use fanoscat_core::fano::{
    background_polar, fano_parameters, reduced_energy, split_resonant_background, FanoReport,
    SectorModel,
};
use fanoscat_core::fitting::{
    fit as run_fit, model_values, FitParameter, FitProblem, ParameterSpec,
};
use fanoscat_core::io::{
    format_number as num, read_phase_table, read_sector_curve, write_image_points, write_json,
    write_pgm, write_phase_table, write_sector_curve, write_table, write_transfer_function,
};
use fanoscat_core::scattering::{
    build_phase_shift_table, default_l_max, locate_resonance, PhaseShiftTable, PotentialParams,
    RadialGrid, ResonanceDescriptor,
};
use fanoscat_core::vmi::{
    build_transfer_function, convolve_energy_spread, project_to_detector, sample_events,
    simulate_rates, Annulus,
};
use fanoscat_core::Error;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::CliError;

enum Phases {
    Solve {
        params: PotentialParams,
        grid: RadialGrid,
    },
    Table(PhaseShiftTable),
}

pub struct Context {
    cfg: RunConfig,
    hash: String,
    out: PathBuf,
    phases: Phases,
}

impl Context {
    pub fn new(cfg: RunConfig, out: PathBuf) -> Result<Self, CliError> {
        let phases = match (&cfg.potential, &cfg.phase_table) {
            (Some(p), _) => Phases::Solve {
                params: *p,
                grid: cfg.radial_grid.expect("validated"),
            },
            (None, Some(path)) => {
                let t = read_phase_table(path).map_err(CliError::from_core_validation)?;
                if t.l_max() < cfg.resonance.l_res {
                    return Err(CliError::validation(format!(
                        "phase table has l_max {} below l_res {}",
                        t.l_max(),
                        cfg.resonance.l_res
                    )));
                }
                Phases::Table(t)
            }
            (None, None) => unreachable!("validated"),
        };
        if out.exists() && !out.is_dir() {
            return Err(CliError::validation(format!(
                "{} exists and is not a directory",
                out.display()
            )));
        }
        Ok(Self {
            hash: cfg.hash(),
            cfg,
            out,
            phases,
        })
    }

    fn provenance(&self, command: &str) -> Value {
        json!({
            "config_hash": self.hash,
            "command": command,
            "seed": self.cfg.seed,
            "tool": "fanoscat",
            "version": env!("CARGO_PKG_VERSION"),
        })
    }

    fn dir(&self, sub: &str) -> Result<PathBuf, CliError> {
        let d = self.out.join(sub);
        std::fs::create_dir_all(&d)
            .map_err(|e| CliError::runtime(format!("{}: {e}", d.display())))?;
        Ok(d)
    }

    fn l_max_for(&self, max_energy: f64) -> usize {
        match &self.phases {
            Phases::Solve { params, grid } => self.cfg.l_max.unwrap_or_else(|| {
                default_l_max(
                    max_energy,
                    params,
                    params.finite_range().unwrap_or(grid.r_max),
                )
            }),
            Phases::Table(t) => self.cfg.l_max.map_or(t.l_max(), |l| l.min(t.l_max())),
        }
    }

    /// Phase shifts at `energies`, solved or interpolated from the table file.
    fn table_at(&self, energies: &[f64], l_max: usize) -> Result<PhaseShiftTable, CliError> {
        match &self.phases {
            Phases::Solve { params, grid } => {
                Ok(build_phase_shift_table(energies, l_max, params, grid)?)
            }
            Phases::Table(t) => {
                let cols = energies
                    .iter()
                    .map(|&e| t.interpolate(e))
                    .collect::<Result<Vec<_>, Error>>()
                    .map_err(CliError::from_core_validation)?;
                let rows = (0..=l_max)
                    .map(|l| cols.iter().map(|c| c[l]).collect())
                    .collect();
                Ok(PhaseShiftTable::from_rows(energies.to_vec(), rows)?)
            }
        }
    }

    fn resonance(&self) -> Result<ResonanceDescriptor, CliError> {
        let r = &self.cfg.resonance;
        if let (Some(e), Some(g)) = (r.e_res, r.gamma) {
            return Ok(ResonanceDescriptor::new(r.l_res, e, g)?);
        }
        let table = match (&self.phases, &self.cfg.energy_grid) {
            (_, Some(grid)) => self.table_at(&grid.points(), r.l_res)?,
            (Phases::Table(t), None) => t.clone(),
            (Phases::Solve { .. }, None) => unreachable!("validated"),
        };
        Ok(locate_resonance(&table, r.l_res)?)
    }

    fn epsilon_energies(
        &self,
        res: &ResonanceDescriptor,
        eps: &[f64],
    ) -> Result<Vec<f64>, CliError> {
        let e: Vec<f64> = eps.iter().map(|&x| res.energy_at(x)).collect();
        if !(e[0] > 0.0) {
            return Err(CliError::runtime(format!(
                "epsilon window reaches non-positive energy {} for this resonance",
                e[0]
            )));
        }
        Ok(e)
    }

    fn write_curve(&self, path: &Path, curve: &SectorCurve, command: &str) -> Result<(), CliError> {
        Ok(write_sector_curve(
            path,
            curve,
            Some(self.provenance(command)),
        )?)
    }
}

fn resonance_json(r: &ResonanceDescriptor) -> Value {
    json!({ "l_res": r.l_res, "E_res": r.e_res, "Gamma": r.gamma })
}

pub fn phaseshifts(ctx: &Context) -> Result<(), CliError> {
    let table = match (&ctx.phases, &ctx.cfg.energy_grid) {
        (_, Some(g)) => {
            let e = g.points();
            let l_max = ctx.l_max_for(*e.last().unwrap());
            ctx.table_at(&e, l_max)?
        }
        (Phases::Table(t), None) => t.clone(),
        (Phases::Solve { .. }, None) => {
            return Err(CliError::validation("phaseshifts needs an energy_grid"));
        }
    };
    let dir = ctx.dir("phaseshifts")?;
    let path = dir.join("phase_shifts.csv");
    write_phase_table(&path, &table)?;
    write_json(
        &path.with_extension("json"),
        &json!({ "l_max": table.l_max(), "energies": table.energies().len(), "provenance": ctx.provenance("phaseshifts") }),
    )?;
    let l = ctx.cfg.resonance.l_res;
    let report = match locate_resonance(&table, l) {
        Ok(r) => {
            json!({ "found": true, "resonance": resonance_json(&r), "provenance": ctx.provenance("phaseshifts") })
        }
        Err(e @ Error::NoResonance { .. }) => json!({
            "found": false, "l": l, "reason": e.to_string(), "provenance": ctx.provenance("phaseshifts")
        }),
        Err(e) => return Err(e.into()),
    };
    write_json(&dir.join("resonance.json"), &report)?;
    Ok(())
}

pub fn sectors(ctx: &Context) -> Result<(), CliError> {
    let res = ctx.resonance()?;
    let eps = ctx.cfg.epsilon_grid.points();
    let energies = ctx.epsilon_energies(&res, &eps)?;
    let table = ctx.table_at(&energies, ctx.l_max_for(*energies.last().unwrap()))?;
    let dir = ctx.dir("sectors")?;
    let none = BTreeSet::new();
    for s in &ctx.cfg.sectors {
        let c = sector_curve_from_table(&table, s, &none, Some(&res))?;
        ctx.write_curve(&dir.join(format!("{}.csv", s.name)), &c, "sectors")?;
        if !ctx.cfg.mask.is_empty() {
            let m = sector_curve_from_table(&table, s, &ctx.cfg.mask, Some(&res))?;
            ctx.write_curve(&dir.join(format!("{}_masked.csv", s.name)), &m, "sectors")?;
        }
    }
    let rows = eps
        .iter()
        .zip(&energies)
        .enumerate()
        .map(|(i, (x, e))| {
            let a = PartialAmplitudeSet::unmasked(&table.column(i));
            vec![num(*x), num(*e), num(total_cross_section(&a))]
        })
        .collect();
    write_table(
        &dir.join("total.csv"),
        &["epsilon", "energy", "k2_sigma"],
        rows,
    )?;
    write_json(
        &dir.join("resonance.json"),
        &json!({ "resonance": resonance_json(&res), "mask": ctx.cfg.mask, "provenance": ctx.provenance("sectors") }),
    )?;
    Ok(())
}

fn resonance_amplitudes(
    ctx: &Context,
    res: &ResonanceDescriptor,
) -> Result<PartialAmplitudeSet, CliError> {
    let t = ctx.table_at(&[res.e_res], ctx.l_max_for(res.e_res))?;
    Ok(amplitudes_from_table(&t, res.e_res, &BTreeSet::new())?)
}

pub fn fano(ctx: &Context) -> Result<(), CliError> {
    let res = ctx.resonance()?;
    let amps = resonance_amplitudes(ctx, &res)?;
    let eps = ctx.cfg.epsilon_grid.points();
    let dir = ctx.dir("fano")?;
    let mut rows = Vec::new();
    for s in &ctx.cfg.sectors {
        let (_, b) = split_resonant_background(&amps, res.l_res, s.center)?;
        let bg = background_polar(b);
        let p = fano_parameters(s.center, res.l_res, &bg);
        let report = FanoReport::new(s, res.l_res, &bg, &p);
        let mut j = serde_json::to_value(&report).expect("report serializes");
        j["resonance"] = resonance_json(&res);
        j["provenance"] = ctx.provenance("fano");
        write_json(&dir.join(format!("{}.json", s.name)), &j)?;
        let m = SectorModel::new(s, res.l_res)?;
        let v = eps.iter().map(|&e| m.value(e, &bg)).collect();
        let curve = SectorCurve::new(AbscissaKind::ReducedEnergy, eps.clone(), v, None, s.clone())?;
        ctx.write_curve(&dir.join(format!("{}_model.csv", s.name)), &curve, "fano")?;
        rows.push(vec![
            s.name.clone(),
            num(s.center),
            num(s.width),
            num(bg.a_bg),
            num(bg.delta_bg),
            report.q.map(num).unwrap_or_default(),
            num(report.sigma0),
            num(report.d_sigma_bg),
        ]);
    }
    write_table(
        &dir.join("summary.csv"),
        &[
            "sector",
            "theta_n",
            "dtheta",
            "A_bg",
            "delta_bg",
            "q",
            "sigma0",
            "d_sigma_bg",
        ],
        rows,
    )?;
    Ok(())
}

pub fn fit(ctx: &Context, files: &[PathBuf]) -> Result<(), CliError> {
    let mut data = Vec::with_capacity(files.len());
    let mut stems = BTreeSet::new();
    for f in files {
        let c = read_sector_curve(f, None).map_err(CliError::from_core_validation)?;
        let stem = f
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| CliError::validation(format!("{} has no file name", f.display())))?;
        if !stems.insert(stem.clone()) {
            return Err(CliError::validation(format!("two data files named {stem}")));
        }
        data.push((stem, c));
    }
    let res = ctx.resonance()?;
    let amps = resonance_amplitudes(ctx, &res)?;
    let fc = &ctx.cfg.fit;
    let dir = ctx.dir("fit")?;
    let mut rows = Vec::new();
    for (stem, curve) in data {
        let mut p = FitProblem::new(curve.clone(), res.l_res, res).with_options(fc.options);
        if let Some(d) = fc.delta_bg_initial {
            p = p.with_free(ParameterSpec::starting_at(FitParameter::DeltaBg, d));
        }
        if fc.free_resonance {
            p = p
                .with_free(ParameterSpec::free(FitParameter::ERes))
                .with_free(ParameterSpec::free(FitParameter::Gamma));
        }
        if fc.free_scale {
            p = p.with_free(ParameterSpec::free(FitParameter::GlobalScale));
        }
        let r = run_fit(&p)?;
        let (_, b) = split_resonant_background(&amps, res.l_res, curve.sector.center)?;
        let theory = background_polar(b);
        let mut j = serde_json::to_value(&r).expect("fit result serializes");
        j["theory_midpoint"] = json!({ "A_bg": theory.a_bg, "delta_bg": theory.delta_bg });
        j["provenance"] = ctx.provenance("fit");
        write_json(&dir.join(format!("{stem}.json")), &j)?;
        let params: Vec<f64> = r.parameters.iter().map(|n| r.estimates[n]).collect();
        let model = model_values(&p, &params)?;
        let mc = SectorCurve::new(
            curve.abscissa_kind,
            curve.abscissa.clone(),
            model,
            None,
            curve.sector.clone(),
        )?;
        ctx.write_curve(&dir.join(format!("{stem}_model.csv")), &mc, "fit")?;
        let est = |n: FitParameter| r.estimate(n).map(num).unwrap_or_default();
        let ci = |n: FitParameter| r.ci(n).map(num).unwrap_or_default();
        rows.push(vec![
            stem,
            curve.sector.name.clone(),
            num(curve.sector.center),
            est(FitParameter::ABg),
            ci(FitParameter::ABg),
            est(FitParameter::DeltaBg),
            ci(FitParameter::DeltaBg),
            num(theory.a_bg),
            num(theory.delta_bg),
            r.r_squared.map(num).unwrap_or_default(),
            r.converged.to_string(),
        ]);
    }
    write_table(
        &dir.join("summary.csv"),
        &[
            "file",
            "sector",
            "theta_n",
            "A_bg",
            "A_bg_ci95",
            "delta_bg",
            "delta_bg_ci95",
            "A_bg_theory",
            "delta_bg_theory",
            "r_squared",
            "converged",
        ],
        rows,
    )?;
    Ok(())
}

fn with_epsilon(c: &SectorCurve, res: &ResonanceDescriptor) -> Result<SectorCurve, CliError> {
    let eps = c
        .abscissa
        .iter()
        .map(|&e| reduced_energy(e, res))
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(SectorCurve::new(
        AbscissaKind::ReducedEnergy,
        eps,
        c.values.clone(),
        c.sigma_err.clone(),
        c.sector.clone(),
    )?)
}

pub fn simulate(ctx: &Context) -> Result<(), CliError> {
    let mu = ctx.cfg.reduced_mass().ok_or_else(|| {
        CliError::validation("simulate needs simulation.reduced_mass when phases come from a table")
    })?;
    let res = ctx.resonance()?;
    let sim = &ctx.cfg.simulation;
    let eps = sim.epsilon_grid.points();
    let energies = ctx.epsilon_energies(&res, &eps)?;
    let table = ctx.table_at(&energies, ctx.l_max_for(*energies.last().unwrap()))?;
    let amps: Vec<PartialAmplitudeSet> = (0..energies.len())
        .map(|i| PartialAmplitudeSet::unmasked(&table.column(i)))
        .collect();
    let sectors: &[AngularSector] = &ctx.cfg.sectors;
    let none = BTreeSet::new();
    let theory: Vec<SectorCurve> = sectors
        .iter()
        .map(|s| sector_curve_from_table(&table, s, &none, None))
        .collect::<Result<_, Error>>()?;

    let seed = ctx.cfg.seed;
    let calibration = simulate_rates(
        &amps,
        &energies,
        mu,
        sectors,
        &ctx.cfg.simulation_options(seed),
    )?;
    let measurement = simulate_rates(
        &amps,
        &energies,
        mu,
        sectors,
        &ctx.cfg.simulation_options(seed.wrapping_add(1)),
    )?;
    let tf = build_transfer_function(&theory, &calibration.rates)?;
    let corrected = if tf.holes().is_empty() {
        Some(tf.apply(&measurement.rates)?)
    } else {
        None
    };

    let dir = ctx.dir("simulate")?;
    let mut rows = Vec::new();
    for (run, s) in [("calibration", &calibration), ("measurement", &measurement)] {
        for p in &s.points {
            for (sec, c) in sectors.iter().zip(&p.counts) {
                rows.push(vec![
                    run.to_string(),
                    num(p.energy),
                    sec.name.clone(),
                    num(*c),
                    num(p.luminosity),
                    num(p.velocity),
                    p.seed.to_string(),
                ]);
            }
        }
    }
    write_table(
        &dir.join("counts.csv"),
        &[
            "run",
            "energy",
            "sector",
            "counts",
            "luminosity",
            "velocity",
            "seed",
        ],
        rows,
    )?;
    let tf_path = dir.join("transfer_function.csv");
    write_transfer_function(&tf_path, &tf)?;
    let annuli: Vec<Option<Annulus>> = calibration.points.iter().map(|p| p.annulus).collect();
    write_json(
        &tf_path.with_extension("json"),
        &json!({
            "seed": seed,
            "n_events": sim.n_events,
            "annulus_fraction": sim.annulus_fraction,
            "annuli": annuli,
            "speeds": calibration.points.iter().map(|p| p.velocity).collect::<Vec<_>>(),
            "holes": tf.holes(),
            "provenance": ctx.provenance("simulate"),
        }),
    )?;
    let sigma_eps = sim.spread_sigma / (0.5 * res.gamma);
    for (i, s) in sectors.iter().enumerate() {
        let t = with_epsilon(&theory[i], &res)?;
        ctx.write_curve(&dir.join(format!("theory_{}.csv", s.name)), &t, "simulate")?;
        if sim.spread_sigma > 0.0 {
            let conv = convolve_energy_spread(&t, sigma_eps)?;
            if conv.coarse_grid {
                eprintln!(
                    "fanoscat: warning: epsilon grid is coarser than half the spread in sector {}",
                    s.name
                );
            }
            ctx.write_curve(
                &dir.join(format!("theory_{}_convolved.csv", s.name)),
                &conv.curve,
                "simulate",
            )?;
        }
        if let Some(c) = &corrected {
            let c = with_epsilon(&c[i], &res)?;
            ctx.write_curve(
                &dir.join(format!("corrected_{}.csv", s.name)),
                &c,
                "simulate",
            )?;
        }
    }
    if corrected.is_none() {
        eprintln!("fanoscat: warning: transfer function has holes; corrected curves not written");
    }

    let centre = eps
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap();
    let speed = calibration.points[centre].velocity;
    let events = sample_events(&amps[centre], sim.n_events, seed)?;
    let image = project_to_detector(&events, speed, (0.0, 0.0), sim.projection, seed)?;
    write_pgm(&dir.join("image.pgm"), &image.binned(sim.image_bins))?;
    if sim.write_points {
        write_image_points(&dir.join("image_points.csv"), &image)?;
    }
    write_json(
        &dir.join("image.json"),
        &json!({
            "seed": seed,
            "n_events": sim.n_events,
            "energy": energies[centre],
            "epsilon": eps[centre],
            "speed": speed,
            "bins": sim.image_bins,
            "projection": sim.projection,
            "provenance": ctx.provenance("simulate"),
        }),
    )?;
    Ok(())
}
