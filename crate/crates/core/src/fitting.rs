//! Weighted least-squares fits of the constant-background sector model to sector curves.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cross_section::{AbscissaKind, AngularSector, SectorCurve};
use crate::error::{Error, Result};
use crate::fano::{canonical_phase, SectorModel};
use crate::lm::{levenberg_marquardt, normal_inverse, Bounds, LmOptions, LmOutcome};
use crate::scattering::ResonanceDescriptor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FitParameter {
    #[serde(rename = "A_bg")]
    ABg,
    #[serde(rename = "delta_bg")]
    DeltaBg,
    #[serde(rename = "E_res")]
    ERes,
    #[serde(rename = "Gamma")]
    Gamma,
    #[serde(rename = "global_scale")]
    GlobalScale,
}

impl FitParameter {
    pub fn name(self) -> &'static str {
        match self {
            FitParameter::ABg => "A_bg",
            FitParameter::DeltaBg => "delta_bg",
            FitParameter::ERes => "E_res",
            FitParameter::Gamma => "Gamma",
            FitParameter::GlobalScale => "global_scale",
        }
    }
}

/// A free parameter with optional start value and bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSpec {
    pub name: FitParameter,
    #[serde(default)]
    pub initial: Option<f64>,
    #[serde(default)]
    pub lower: Option<f64>,
    #[serde(default)]
    pub upper: Option<f64>,
}

impl ParameterSpec {
    pub fn free(name: FitParameter) -> Self {
        Self {
            name,
            initial: None,
            lower: None,
            upper: None,
        }
    }

    pub fn starting_at(name: FitParameter, initial: f64) -> Self {
        Self {
            initial: Some(initial),
            ..Self::free(name)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub ftol: f64,
    pub gtol: f64,
    /// Take `sigma_err` as absolute; otherwise the covariance is rescaled by the reduced chi-square.
    pub absolute_sigma: bool,
    /// Start points for `delta_bg` when no initial value is given.
    pub multistart: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            ftol: 1e-10,
            gtol: 1e-8,
            absolute_sigma: false,
            multistart: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitProblem {
    pub data: SectorCurve,
    pub l_res: usize,
    /// Fixed resonance, or the start point when `E_res`/`Gamma` are free.
    pub resonance: ResonanceDescriptor,
    pub free: Vec<ParameterSpec>,
    /// Used when `global_scale` is not free.
    pub global_scale: f64,
    pub options: FitOptions,
}

impl FitProblem {
    /// `A_bg` and `delta_bg` free, resonance fixed, unit scale.
    pub fn new(data: SectorCurve, l_res: usize, resonance: ResonanceDescriptor) -> Self {
        Self {
            data,
            l_res,
            resonance,
            free: vec![
                ParameterSpec::free(FitParameter::ABg),
                ParameterSpec::free(FitParameter::DeltaBg),
            ],
            global_scale: 1.0,
            options: FitOptions::default(),
        }
    }

    pub fn with_free(mut self, spec: ParameterSpec) -> Self {
        match self.free.iter_mut().find(|s| s.name == spec.name) {
            Some(s) => *s = spec,
            None => self.free.push(spec),
        }
        self
    }

    pub fn with_options(mut self, options: FitOptions) -> Self {
        self.options = options;
        self
    }

    pub fn parameter_names(&self) -> Vec<&'static str> {
        self.free.iter().map(|s| s.name.name()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.data.validate()?;
        for required in [FitParameter::ABg, FitParameter::DeltaBg] {
            if !self.free.iter().any(|s| s.name == required) {
                return Err(Error::InvalidInput(format!(
                    "{} must be free",
                    required.name()
                )));
            }
        }
        for (i, s) in self.free.iter().enumerate() {
            if self.free[..i].iter().any(|t| t.name == s.name) {
                return Err(Error::InvalidInput(format!(
                    "{} listed twice",
                    s.name.name()
                )));
            }
            let (lo, hi) = (
                s.lower.unwrap_or(f64::NEG_INFINITY),
                s.upper.unwrap_or(f64::INFINITY),
            );
            if !(lo < hi) {
                return Err(Error::InvalidInput(format!(
                    "{} bounds [{lo}, {hi}] are empty",
                    s.name.name()
                )));
            }
            let ok = match s.name {
                FitParameter::ABg => s.lower.is_none_or(|l| l >= 0.0),
                FitParameter::Gamma | FitParameter::GlobalScale => s.lower.is_none_or(|l| l > 0.0),
                FitParameter::DeltaBg => {
                    s.lower.is_none_or(|l| l >= -PI) && s.upper.is_none_or(|u| u <= PI)
                }
                FitParameter::ERes => true,
            };
            if !ok {
                return Err(Error::InvalidInput(format!(
                    "{} bounds out of range",
                    s.name.name()
                )));
            }
            if let Some(x) = s.initial {
                if !x.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "{} initial value not finite",
                        s.name.name()
                    )));
                }
            }
        }
        if self.data.len() < self.free.len() + 3 {
            return Err(Error::InvalidInput(format!(
                "{} data points for {} free parameters; need at least 3 more",
                self.data.len(),
                self.free.len()
            )));
        }
        if !(self.resonance.gamma > 0.0) {
            return Err(Error::Domain("resonance width must be positive".into()));
        }
        if !(self.global_scale > 0.0) {
            return Err(Error::InvalidInput("global_scale must be positive".into()));
        }
        Ok(())
    }

    fn bounds(&self) -> Bounds {
        self.free
            .iter()
            .map(|s| {
                let lo = s.lower.unwrap_or(match s.name {
                    FitParameter::Gamma => 1e-12 * self.resonance.gamma,
                    FitParameter::GlobalScale => 1e-300,
                    _ => f64::NEG_INFINITY,
                });
                (lo, s.upper.unwrap_or(f64::INFINITY))
            })
            .collect()
    }

    /// Collision energies of the data points.
    fn energies(&self) -> Vec<f64> {
        match self.data.abscissa_kind {
            AbscissaKind::Energy => self.data.abscissa.clone(),
            AbscissaKind::ReducedEnergy => self
                .data
                .abscissa
                .iter()
                .map(|&x| self.resonance.energy_at(x))
                .collect(),
        }
    }
}

/// Model values and parameter lookups for one problem.
struct Evaluator<'a> {
    problem: &'a FitProblem,
    model: SectorModel,
    energies: Vec<f64>,
    sigma: Vec<f64>,
    index: BTreeMap<FitParameter, usize>,
}

impl<'a> Evaluator<'a> {
    fn new(problem: &'a FitProblem) -> Result<Self> {
        let sigma = problem
            .data
            .sigma_err
            .clone()
            .unwrap_or_else(|| vec![1.0; problem.data.len()]);
        Ok(Self {
            model: SectorModel::new(&problem.data.sector, problem.l_res)?,
            energies: problem.energies(),
            sigma,
            index: problem
                .free
                .iter()
                .enumerate()
                .map(|(i, s)| (s.name, i))
                .collect(),
            problem,
        })
    }

    fn get(&self, p: &[f64], name: FitParameter) -> f64 {
        match self.index.get(&name) {
            Some(&i) => p[i],
            None => match name {
                FitParameter::ERes => self.problem.resonance.e_res,
                FitParameter::Gamma => self.problem.resonance.gamma,
                FitParameter::GlobalScale => self.problem.global_scale,
                FitParameter::ABg | FitParameter::DeltaBg => unreachable!("always free"),
            },
        }
    }

    fn values(&self, p: &[f64]) -> Result<Vec<f64>> {
        let a = self.get(p, FitParameter::ABg);
        let d = self.get(p, FitParameter::DeltaBg);
        let e_res = self.get(p, FitParameter::ERes);
        let gamma = self.get(p, FitParameter::Gamma);
        let scale = self.get(p, FitParameter::GlobalScale);
        self.energies
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                if !(gamma > 0.0) {
                    return Err(Error::ModelPoint {
                        index: i,
                        source: Box::new(Error::Domain(format!("Gamma = {gamma} is not positive"))),
                    });
                }
                let eps = (e - e_res) / (0.5 * gamma);
                Ok(scale * self.model.value_parts(eps, a, d))
            })
            .collect()
    }

    fn residuals(&self, p: &[f64]) -> Result<Vec<f64>> {
        let m = self.values(p)?;
        Ok(self
            .problem
            .data
            .values
            .iter()
            .zip(&m)
            .zip(&self.sigma)
            .map(|((y, m), s)| (y - m) / s)
            .collect())
    }
}

/// Weighted residuals `(y_i - model_i)/σ_i` at `params` (ordered as `problem.free`).
pub fn residuals(problem: &FitProblem, params: &[f64]) -> Result<Vec<f64>> {
    if params.len() != problem.free.len() {
        return Err(Error::InvalidInput(format!(
            "expected {} parameters, got {}",
            problem.free.len(),
            params.len()
        )));
    }
    for ((x, (lo, hi)), s) in params.iter().zip(problem.bounds()).zip(&problem.free) {
        if !(*x >= lo && *x <= hi) {
            return Err(Error::Domain(format!(
                "{} = {x} outside [{lo}, {hi}]",
                s.name.name()
            )));
        }
    }
    Evaluator::new(problem)?.residuals(params)
}

/// Model curve at `params` on the data abscissae.
pub fn model_values(problem: &FitProblem, params: &[f64]) -> Result<Vec<f64>> {
    Evaluator::new(problem)?.values(params)
}

/// Weighted coefficient of determination with weights `1/σ²`.
pub fn r_squared(data: &SectorCurve, model: &[f64]) -> Result<f64> {
    if model.len() != data.len() {
        return Err(Error::InvalidInput("model and data lengths differ".into()));
    }
    let w: Vec<f64> = match &data.sigma_err {
        Some(s) => s.iter().map(|s| 1.0 / (s * s)).collect(),
        None => vec![1.0; data.len()],
    };
    let wsum: f64 = w.iter().sum();
    let mean = data.values.iter().zip(&w).map(|(y, w)| w * y).sum::<f64>() / wsum;
    let ss_tot: f64 = data
        .values
        .iter()
        .zip(&w)
        .map(|(y, w)| w * (y - mean).powi(2))
        .sum();
    if ss_tot == 0.0 {
        return Err(Error::UndefinedRSquared);
    }
    let ss_res: f64 = data
        .values
        .iter()
        .zip(model)
        .zip(&w)
        .map(|((y, m), w)| w * (y - m).powi(2))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Model configuration echoed into fit output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitModelEcho {
    pub l_res: usize,
    pub sector: AngularSector,
    pub resonance: ResonanceDescriptor,
    pub free: Vec<ParameterSpec>,
    pub global_scale: f64,
    pub options: FitOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanoFitResult {
    pub parameters: Vec<String>,
    pub estimates: BTreeMap<String, f64>,
    pub ci95: BTreeMap<String, f64>,
    /// Row-major, ordered as `parameters`.
    pub covariance: Vec<f64>,
    /// `None` when the data have zero weighted variance.
    pub r_squared: Option<f64>,
    pub residuals: Vec<f64>,
    pub sum_of_squares: f64,
    pub loss_history: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub model: FitModelEcho,
}

impl FanoFitResult {
    pub fn estimate(&self, name: FitParameter) -> Option<f64> {
        self.estimates.get(name.name()).copied()
    }

    pub fn ci(&self, name: FitParameter) -> Option<f64> {
        self.ci95.get(name.name()).copied()
    }

    pub fn covariance_at(&self, i: usize, j: usize) -> f64 {
        self.covariance[i * self.parameters.len() + j]
    }
}

fn initial_guesses(problem: &FitProblem, ev: &Evaluator) -> Vec<Vec<f64>> {
    let [m0, _, m2] = ev.model.moments();
    let y = &problem.data.values;
    let ymax = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ymin = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = match ev.index.get(&FitParameter::GlobalScale) {
        Some(&i) => problem.free[i]
            .initial
            .unwrap_or(if ymax > ymin && m2 > 0.0 {
                (ymax - ymin) / m2
            } else {
                1.0
            }),
        None => problem.global_scale,
    };
    let a0 = (ymin.max(0.0) / (scale * m0)).sqrt().max(1e-3);
    let base: Vec<f64> = problem
        .free
        .iter()
        .map(|s| {
            s.initial.unwrap_or(match s.name {
                FitParameter::ABg => a0,
                FitParameter::DeltaBg => 0.0,
                FitParameter::ERes => problem.resonance.e_res,
                FitParameter::Gamma => problem.resonance.gamma,
                FitParameter::GlobalScale => scale,
            })
        })
        .collect();
    let id = ev.index[&FitParameter::DeltaBg];
    if problem.free[id].initial.is_some() || problem.options.multistart <= 1 {
        return vec![base];
    }
    let n = problem.options.multistart;
    (0..n)
        .map(|k| {
            let mut p = base.clone();
            p[id] = -PI + 2.0 * PI * (k + 1) as f64 / n as f64;
            p
        })
        .collect()
}

/// Flips a negative unconstrained amplitude into the phase and wraps the phase.
fn canonicalize(problem: &FitProblem, ev: &Evaluator, out: &mut LmOutcome) {
    let ia = ev.index[&FitParameter::ABg];
    let id = ev.index[&FitParameter::DeltaBg];
    let unbounded_a = problem.free[ia].lower.is_none() && problem.free[ia].upper.is_none();
    let unbounded_d = problem.free[id].lower.is_none() && problem.free[id].upper.is_none();
    if unbounded_a && unbounded_d && out.params[ia] < 0.0 {
        out.params[ia] = -out.params[ia];
        out.params[id] += PI;
        for i in 0..out.jacobian.nrows() {
            out.jacobian[(i, ia)] = -out.jacobian[(i, ia)];
        }
    }
    if unbounded_d {
        out.params[id] = canonical_phase(out.params[id]);
    }
}

/// Fits the sector model to `problem.data`.
pub fn fit(problem: &FitProblem) -> Result<FanoFitResult> {
    problem.validate()?;
    let ev = Evaluator::new(problem)?;
    let bounds = problem.bounds();
    let opts = LmOptions {
        max_iterations: problem.options.max_iterations,
        ftol: problem.options.ftol,
        gtol: problem.options.gtol,
        ..LmOptions::default()
    };
    let starts = initial_guesses(problem, &ev);
    let runs: Vec<Result<LmOutcome>> = starts
        .par_iter()
        .map(|p0| levenberg_marquardt(|p: &[f64]| ev.residuals(p), p0, &bounds, &opts))
        .collect();
    let mut best: Option<LmOutcome> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.loss < b.loss) {
            best = Some(run);
        }
    }
    let mut out = best.expect("at least one start");
    canonicalize(problem, &ev, &mut out);

    let names = problem.parameter_names();
    let n = problem.data.len();
    let p = names.len();
    let inv = normal_inverse(&out.jacobian, &names)?;
    let s2 = if problem.options.absolute_sigma {
        1.0
    } else {
        out.loss / (n - p) as f64
    };
    let cov = inv * s2;
    let model = ev.values(&out.params)?;
    let r2 = match r_squared(&problem.data, &model) {
        Ok(v) => Some(v),
        Err(Error::UndefinedRSquared) => None,
        Err(e) => return Err(e),
    };
    let mut covariance = Vec::with_capacity(p * p);
    for i in 0..p {
        for j in 0..p {
            covariance.push(0.5 * (cov[(i, j)] + cov[(j, i)]));
        }
    }
    Ok(FanoFitResult {
        parameters: names.iter().map(|s| s.to_string()).collect(),
        estimates: names
            .iter()
            .zip(&out.params)
            .map(|(k, v)| (k.to_string(), *v))
            .collect(),
        ci95: names
            .iter()
            .enumerate()
            .map(|(i, k)| (k.to_string(), 1.96 * cov[(i, i)].max(0.0).sqrt()))
            .collect(),
        covariance,
        r_squared: r2,
        residuals: out.residuals,
        sum_of_squares: out.loss,
        loss_history: out.loss_history,
        converged: out.converged,
        iterations: out.iterations,
        model: FitModelEcho {
            l_res: problem.l_res,
            sector: problem.data.sector.clone(),
            resonance: problem.resonance,
            free: problem.free.clone(),
            global_scale: problem.global_scale,
            options: problem.options,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross_section::Measure;
    use crate::fano::{model_sector_value, BackgroundEstimate};

    fn sector() -> AngularSector {
        AngularSector::backward_quadrants(Measure::PlainDtheta)[2].clone()
    }

    fn synthetic(a: f64, d: f64, sigma: Option<f64>) -> SectorCurve {
        let s = sector();
        let bg = BackgroundEstimate::new(a, d).unwrap();
        let eps: Vec<f64> = (0..40).map(|i| -5.0 + 10.0 * i as f64 / 39.0).collect();
        let v = eps
            .iter()
            .map(|&e| model_sector_value(e, &s, 6, &bg).unwrap())
            .collect();
        let sig = sigma.map(|x| vec![x; eps.len()]);
        SectorCurve::new(AbscissaKind::ReducedEnergy, eps, v, sig, s).unwrap()
    }

    fn res() -> ResonanceDescriptor {
        ResonanceDescriptor::new(6, 2.0, 0.1).unwrap()
    }

    #[test]
    fn exact_data_gives_zero_residuals() {
        let p = FitProblem::new(synthetic(0.8, 2.0, None), 6, res());
        let r = residuals(&p, &[0.8, 2.0]).unwrap();
        assert!(r.iter().all(|x| x.abs() < 1e-12));
        let pu = FitProblem::new(synthetic(0.8, 2.0, Some(1.0)), 6, res());
        assert_eq!(
            residuals(&pu, &[0.5, 1.0]).unwrap(),
            residuals(&p, &[0.5, 1.0]).unwrap()
        );
    }

    #[test]
    fn noiseless_round_trip() {
        let p = FitProblem::new(synthetic(0.8, 2.0, None), 6, res());
        let f = fit(&p).unwrap();
        assert!(f.converged);
        assert!((f.estimate(FitParameter::ABg).unwrap() - 0.8).abs() < 1e-6);
        assert!((f.estimate(FitParameter::DeltaBg).unwrap() - 2.0).abs() < 1e-6);
        assert!(f.loss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn validation_rejects_bad_problems() {
        let mut p = FitProblem::new(synthetic(0.8, 2.0, None), 6, res());
        p.free.retain(|s| s.name != FitParameter::DeltaBg);
        assert!(matches!(fit(&p), Err(Error::InvalidInput(_))));
        let p = FitProblem::new(synthetic(0.8, 2.0, None), 6, res()).with_free(ParameterSpec {
            lower: Some(-1.0),
            ..ParameterSpec::free(FitParameter::ABg)
        });
        assert!(fit(&p).is_err());
        let mut c = synthetic(0.8, 2.0, None);
        c.abscissa.truncate(4);
        c.values.truncate(4);
        assert!(fit(&FitProblem::new(c, 6, res())).is_err());
    }

    #[test]
    fn r_squared_limits() {
        let c = synthetic(0.8, 2.0, None);
        assert_eq!(r_squared(&c, &c.values).unwrap(), 1.0);
        let mean = c.values.iter().sum::<f64>() / c.len() as f64;
        assert!(r_squared(&c, &vec![mean; c.len()]).unwrap().abs() < 1e-12);
        let mut flat = c.clone();
        flat.values = vec![2.0; c.len()];
        assert!(matches!(
            r_squared(&flat, &flat.values),
            Err(Error::UndefinedRSquared)
        ));
    }

    #[test]
    fn result_serializes_with_named_fields() {
        let f = fit(&FitProblem::new(synthetic(0.8, 2.0, None), 6, res())).unwrap();
        let j = serde_json::to_value(&f).unwrap();
        assert!(j["estimates"]["A_bg"].is_number());
        assert!(j["ci95"]["delta_bg"].is_number());
        assert_eq!(j["covariance"].as_array().unwrap().len(), 4);
        assert_eq!(j["model"]["l_res"], 6);
    }
}
