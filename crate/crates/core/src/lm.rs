//! Damped least squares (Levenberg-Marquardt with Marquardt diagonal scaling).

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when an accepted step lowers the loss by less than this fraction.
    pub ftol: f64,
    /// Stop when the gradient infinity norm falls below this.
    pub gtol: f64,
    /// Relative forward-difference step.
    pub fd_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            ftol: 1e-10,
            gtol: 1e-8,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    /// Sum of squared residuals.
    pub loss: f64,
    /// Loss after the start point and after every accepted step.
    pub loss_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Closed interval per parameter; infinite ends are allowed.
pub type Bounds = Vec<(f64, f64)>;

fn project(p: &mut [f64], bounds: &Bounds) {
    for (x, &(lo, hi)) in p.iter_mut().zip(bounds) {
        *x = x.clamp(lo, hi);
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Forward-difference Jacobian with step `rel * max(|p_j|, 1)`, stepping
/// backwards where the forward point would leave the bounds.
pub fn forward_jacobian<F>(
    f: &F,
    p: &[f64],
    r0: &[f64],
    bounds: &Bounds,
    rel: f64,
) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut jac = DMatrix::zeros(r0.len(), p.len());
    let mut q = p.to_vec();
    for j in 0..p.len() {
        let mut h = rel * p[j].abs().max(1.0);
        if p[j] + h > bounds[j].1 {
            h = -h;
        }
        q[j] = p[j] + h;
        let r = f(&q)?;
        q[j] = p[j];
        for i in 0..r0.len() {
            jac[(i, j)] = (r[i] - r0[i]) / h;
        }
    }
    Ok(jac)
}

/// Minimizes `Σ r_i(p)²` from `p0`.
pub fn levenberg_marquardt<F>(
    f: F,
    p0: &[f64],
    bounds: &Bounds,
    opts: &LmOptions,
) -> Result<LmOutcome>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if bounds.len() != p0.len() {
        return Err(Error::InvalidInput(
            "bounds and parameters differ in length".into(),
        ));
    }
    let mut p = p0.to_vec();
    project(&mut p, bounds);
    let mut r = f(&p)?;
    let mut loss = sum_sq(&r);
    let mut history = vec![loss];
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let mut jac = forward_jacobian(&f, &p, &r, bounds, opts.fd_step)?;

    while iterations < opts.max_iterations {
        if loss == 0.0 {
            converged = true;
            break;
        }
        let rv = DVector::from_column_slice(&r);
        let g = jac.transpose() * &rv;
        if g.amax() < opts.gtol {
            converged = true;
            break;
        }
        iterations += 1;
        let a = jac.transpose() * &jac;
        let dmax = a.diagonal().max().max(f64::MIN_POSITIVE);
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = a.clone();
            for j in 0..p.len() {
                damped[(j, j)] += lambda * a[(j, j)].max(1e-12 * dmax);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&g));
            let mut trial: Vec<f64> = p.iter().zip(step.iter()).map(|(x, s)| x + s).collect();
            project(&mut trial, bounds);
            let rt = f(&trial)?;
            let lt = sum_sq(&rt);
            if lt.is_finite() && lt < loss {
                let rel = (loss - lt) / loss;
                p = trial;
                r = rt;
                loss = lt;
                history.push(loss);
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if rel < opts.ftol {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No descent direction left at machine resolution.
            converged = true;
        }
        jac = forward_jacobian(&f, &p, &r, bounds, opts.fd_step)?;
        if converged {
            break;
        }
    }
    Ok(LmOutcome {
        params: p,
        residuals: r,
        jacobian: jac,
        loss,
        loss_history: history,
        iterations,
        converged,
    })
}

/// `(JᵀJ)⁻¹`, or a rank-deficiency error naming the null direction.
pub fn normal_inverse(jac: &DMatrix<f64>, names: &[&str]) -> Result<DMatrix<f64>> {
    let a = jac.transpose() * jac;
    let n = a.nrows();
    let scale: Vec<f64> = (0..n).map(|j| a[(j, j)].sqrt()).collect();
    if let Some(j) = scale.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::RankDeficient {
            combination: names[j].to_string(),
        });
    }
    let scaled = DMatrix::from_fn(n, n, |i, j| a[(i, j)] / (scale[i] * scale[j]));
    let eig = SymmetricEigen::new(scaled.clone());
    let (imin, emin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, e)| (i, *e))
        .unwrap();
    let emax = eig.eigenvalues.amax();
    if !(emin > 1e-12 * emax) {
        let v = eig.eigenvectors.column(imin);
        let terms: Vec<String> = v
            .iter()
            .zip(names)
            .filter(|(c, _)| c.abs() > 1e-3)
            .map(|(c, name)| format!("{c:+.3}*{name}"))
            .collect();
        return Err(Error::RankDeficient {
            combination: terms.join(" "),
        });
    }
    let inv = scaled.try_inverse().ok_or_else(|| Error::RankDeficient {
        combination: names.join(", "),
    })?;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        inv[(i, j)] / (scale[i] * scale[j])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unbounded(n: usize) -> Bounds {
        vec![(f64::NEG_INFINITY, f64::INFINITY); n]
    }

    #[test]
    fn rosenbrock_minimum() {
        let f = |p: &[f64]| Ok(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]]);
        let out =
            levenberg_marquardt(f, &[-1.2, 1.0], &unbounded(2), &LmOptions::default()).unwrap();
        assert!(out.converged);
        assert!((out.params[0] - 1.0).abs() < 1e-6 && (out.params[1] - 1.0).abs() < 1e-6);
        assert!(out.loss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn exponential_decay_fit() {
        let t: Vec<f64> = (0..30).map(|i| 0.1 * i as f64).collect();
        let y: Vec<f64> = t.iter().map(|t| 2.5 * (-1.3 * t).exp() + 0.2).collect();
        let f = |p: &[f64]| {
            Ok(t.iter()
                .zip(&y)
                .map(|(t, y)| y - (p[0] * (-p[1] * t).exp() + p[2]))
                .collect())
        };
        let out =
            levenberg_marquardt(f, &[1.0, 0.5, 0.0], &unbounded(3), &LmOptions::default()).unwrap();
        for (a, b) in out.params.iter().zip([2.5, 1.3, 0.2]) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn bounds_are_respected() {
        let f = |p: &[f64]| Ok(vec![p[0] + 3.0]);
        let out = levenberg_marquardt(f, &[1.0], &vec![(0.0, 5.0)], &LmOptions::default()).unwrap();
        assert_eq!(out.params[0], 0.0);
    }

    #[test]
    fn iteration_cap_reports_unconverged() {
        let f = |p: &[f64]| Ok(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]]);
        let opts = LmOptions {
            max_iterations: 2,
            ..Default::default()
        };
        let out = levenberg_marquardt(f, &[-1.2, 1.0], &unbounded(2), &opts).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 2);
    }

    #[test]
    fn rank_deficiency_names_combination() {
        let jac = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        match normal_inverse(&jac, &["a", "b"]) {
            Err(Error::RankDeficient { combination }) => {
                assert!(
                    combination.contains('a') && combination.contains('b'),
                    "{combination}"
                );
            }
            other => panic!("{other:?}"),
        }
        let jac = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 0.0]);
        assert!(matches!(
            normal_inverse(&jac, &["a", "b"]),
            Err(Error::RankDeficient { combination }) if combination == "b"
        ));
    }

    #[test]
    fn normal_inverse_matches_direct() {
        let jac = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, -2.0, 1.0, 0.3, 4.0]);
        let inv = normal_inverse(&jac, &["a", "b"]).unwrap();
        let direct = (jac.transpose() * &jac).try_inverse().unwrap();
        assert!((inv - direct).amax() < 1e-12);
    }
}
