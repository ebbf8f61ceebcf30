//! Weighted Levenberg-Marquardt with box bounds.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::{FitResult, FitStatus};

/// A scalar model `y = f(x; p)` with an analytic gradient in `p`.
pub trait Model: Sync {
    fn id(&self) -> &'static str;
    fn names(&self) -> &'static [&'static str];
    fn eval(&self, x: f64, p: &[f64]) -> f64;
    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]);

    fn n_params(&self) -> usize {
        self.names().len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative step size.
    pub step: f64,
    /// Scale-invariant gradient norm (cosine between residual and Jacobian
    /// columns).
    pub gradient: f64,
    /// Relative cost change on an accepted step.
    pub cost: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            step: 1e-12,
            gradient: 1e-10,
            cost: 1e-10,
        }
    }
}

/// Everything but the data: starting point, bounds and stopping rules.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub initial: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub tolerances: Tolerances,
    pub max_iterations: usize,
}

impl ModelSpec {
    pub fn unbounded(initial: Vec<f64>) -> Self {
        let n = initial.len();
        Self {
            initial,
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            tolerances: Tolerances::default(),
            max_iterations: 500,
        }
    }

    pub fn with_bounds(mut self, index: usize, lower: f64, upper: f64) -> Self {
        self.lower[index] = lower;
        self.upper[index] = upper;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.initial.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Shape(format!(
                "model has {n} parameters, spec has {}/{}/{}",
                self.initial.len(),
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::domain("bounds must satisfy lower <= upper"));
        }
        let t = &self.tolerances;
        if !(t.step > 0.0 && t.gradient > 0.0 && t.cost > 0.0) {
            return Err(Error::domain("tolerances must be > 0"));
        }
        if self.initial.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("initial parameters must be finite"));
        }
        Ok(())
    }

    fn clamp(&self, p: &mut [f64]) {
        for (i, v) in p.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }
}

pub(crate) fn check_data(x: &[f64], y: &[f64], sigma: &[f64]) -> Result<()> {
    if x.len() != y.len() || x.len() != sigma.len() {
        return Err(Error::Shape(format!(
            "x, y, sigma lengths differ: {}, {}, {}",
            x.len(),
            y.len(),
            sigma.len()
        )));
    }
    if sigma.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::domain("sigma must be finite and > 0"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::domain("data must be finite"));
    }
    Ok(())
}

struct Problem<'a, M: Model + ?Sized> {
    model: &'a M,
    x: &'a [f64],
    y: &'a [f64],
    sigma: &'a [f64],
}

impl<M: Model + ?Sized> Problem<'_, M> {
    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.x.len(),
            self.x
                .iter()
                .zip(self.y)
                .zip(self.sigma)
                .map(|((&x, &y), &s)| (y - self.model.eval(x, p)) / s),
        )
    }

    /// Jacobian of the model (not the residual), weighted by 1/σ.
    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let m = p.len();
        let mut j = DMatrix::zeros(self.x.len(), m);
        let mut g = vec![0.0; m];
        for (i, (&x, &s)) in self.x.iter().zip(self.sigma).enumerate() {
            self.model.gradient(x, p, &mut g);
            for k in 0..m {
                j[(i, k)] = g[k] / s;
            }
        }
        j
    }
}

/// Minimizes `Σ ((y - f(x; p)) / σ)²`.
pub fn levenberg_marquardt<M: Model + ?Sized>(
    model: &M,
    x: &[f64],
    y: &[f64],
    sigma: &[f64],
    spec: &ModelSpec,
) -> Result<FitResult> {
    check_data(x, y, sigma)?;
    let m = model.n_params();
    spec.validate(m)?;
    if x.len() < m {
        return Err(Error::InsufficientData(format!(
            "{} needs at least {m} points, got {}",
            model.id(),
            x.len()
        )));
    }
    let prob = Problem { model, x, y, sigma };
    let scale: f64 = y.iter().zip(sigma).map(|(y, s)| (y / s).powi(2)).sum::<f64>().max(f64::MIN_POSITIVE);

    let mut p = spec.initial.clone();
    spec.clamp(&mut p);
    let mut r = prob.residuals(&p);
    let mut cost = r.norm_squared();
    if !cost.is_finite() {
        return Err(fit_error(model, "non-finite cost at the initial point", 0, cost));
    }
    let mut lambda = 1e-3;
    let mut status = None;
    let mut iterations = 0;

    while iterations < spec.max_iterations {
        if cost <= 1e-28 * scale {
            status = Some(FitStatus::Exact);
            break;
        }
        iterations += 1;
        let j = prob.jacobian(&p);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;

        // Scale-invariant gradient test: max_k |J_kᵀ r| / (|J_k| |r|).
        let rnorm = cost.sqrt();
        let gmax = (0..m)
            .map(|k| {
                let cn = j.column(k).norm();
                if cn > 0.0 {
                    g[k].abs() / (cn * rnorm)
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        if gmax < spec.tolerances.gradient {
            status = Some(FitStatus::GradientTolerance);
            break;
        }

        let diag: Vec<f64> = (0..m).map(|k| jtj[(k, k)].max(1e-300)).collect();
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..m {
                a[(k, k)] += lambda * diag[k];
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&g)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            spec.clamp(&mut trial);
            let rt = prob.residuals(&trial);
            let ct = rt.norm_squared();
            if ct.is_finite() && ct < cost {
                let dp: f64 = trial.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let pn: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                let rel = (cost - ct) / cost;
                p = trial;
                r = rt;
                cost = ct;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if rel < spec.tolerances.cost {
                    status = Some(FitStatus::CostTolerance);
                } else if dp <= spec.tolerances.step * (pn + spec.tolerances.step) {
                    status = Some(FitStatus::StepTolerance);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No downhill step at any damping: at a minimum to working precision.
            status = Some(FitStatus::StepTolerance);
            lambda = 1e-3;
        }
        if status.is_some() {
            break;
        }
    }

    let Some(status) = status else {
        return Err(fit_error(
            model,
            &format!("no convergence after {} iterations", spec.max_iterations),
            iterations,
            cost,
        ));
    };

    let j = prob.jacobian(&p);
    let dof = x.len().saturating_sub(m).max(1);
    let chi2 = cost;
    let covariance = covariance_from_normal(&(j.transpose() * &j), (chi2 / dof as f64).max(1.0));
    Ok(FitResult::from_parts(model.id(), model.names(), p, covariance, chi2, dof, iterations, status))
}

fn fit_error<M: Model + ?Sized>(model: &M, reason: &str, iterations: usize, last_cost: f64) -> Error {
    Error::Fit {
        model: model.id().to_string(),
        reason: reason.to_string(),
        iterations,
        last_cost,
    }
}

/// `factor · (JᵀJ)⁻¹` via a scaled eigendecomposition; directions the data
/// do not constrain get infinite variance.
pub(crate) fn covariance_from_normal(jtj: &DMatrix<f64>, factor: f64) -> Vec<Vec<f64>> {
    let m = jtj.nrows();
    let d: Vec<f64> = (0..m)
        .map(|k| {
            let v = jtj[(k, k)];
            if v > 0.0 {
                1.0 / v.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut scaled = jtj.clone();
    for i in 0..m {
        for k in 0..m {
            scaled[(i, k)] *= d[i] * d[k];
        }
    }
    let eig = SymmetricEigen::new(scaled);
    let max_ev = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut inv = DMatrix::zeros(m, m);
    let mut null = vec![false; m];
    for (idx, &ev) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(idx);
        if ev > 1e-13 * max_ev && ev > 0.0 {
            inv += (v * v.transpose()) / ev;
        } else {
            for k in 0..m {
                if v[k].abs() > 1e-6 {
                    null[k] = true;
                }
            }
        }
    }
    let mut cov = vec![vec![0.0; m]; m];
    for i in 0..m {
        for k in 0..m {
            cov[i][k] = if d[i] == 0.0 || null[i] || d[k] == 0.0 || null[k] {
                if i == k {
                    f64::INFINITY
                } else {
                    0.0
                }
            } else {
                factor * inv[(i, k)] * d[i] * d[k]
            };
        }
    }
    cov
}

/// Five-point central finite-difference gradient, for checking analytic ones.
pub fn numeric_gradient<M: Model + ?Sized>(model: &M, x: f64, p: &[f64]) -> Vec<f64> {
    (0..p.len())
        .map(|k| {
            let h = 1e-4 * p[k].abs().max(1e-8);
            let at = |d: f64| {
                let mut q = p.to_vec();
                q[k] += d;
                model.eval(x, &q)
            };
            (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h)
        })
        .collect()
}
