//! Damped Gauss-Newton (Levenberg-Marquardt) least squares and the
//! confidence-interval helpers shared by the fit engines.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop once the relative decrease of the cost falls below this.
    pub ftol: f64,
    /// Stop once the relative parameter step falls below this.
    pub xtol: f64,
    /// Smallest magnitude used to size finite-difference steps; set it to
    /// the typical parameter scale when parameters start at zero.
    pub step_floor: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iter: 500, ftol: 1e-15, xtol: 1e-13, step_floor: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// Sum of squared (weighted) residuals.
    pub cost: f64,
    pub dof: usize,
    /// Parameter covariance scaled by the reduced chi-square.
    pub covariance: DMatrix<f64>,
    pub iterations: usize,
}

impl LmResult {
    pub fn std_err(&self, k: usize) -> f64 {
        self.covariance[(k, k)].max(0.0).sqrt()
    }

    pub fn reduced_chi2(&self) -> f64 {
        if self.dof == 0 {
            0.0
        } else {
            self.cost / self.dof as f64
        }
    }
}

fn jacobian<F>(f: &F, p: &[f64], r0: &[f64], floor: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let m = r0.len();
    let mut jac = DMatrix::zeros(m, p.len());
    let mut q = p.to_vec();
    for k in 0..p.len() {
        let h = 1e-6 * p[k].abs().max(floor);
        q[k] = p[k] + h;
        let rp = f(&q)?;
        q[k] = p[k] - h;
        let rm = f(&q)?;
        q[k] = p[k];
        for i in 0..m {
            jac[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

fn cost_of(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Minimizes Σ r_i(p)² starting from `p0`. `residuals` returns the weighted
/// residual vector; the Jacobian is taken by central differences.
pub fn levenberg_marquardt<F>(residuals: F, p0: &[f64], opts: LmOptions) -> Result<LmResult>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = p0.len();
    let mut p = p0.to_vec();
    let mut r = residuals(&p)?;
    if r.len() < n {
        return Err(Error::Fit(format!("{} residuals for {} parameters", r.len(), n)));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite residual at the starting point".into()));
    }
    let mut cost = cost_of(&r);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut jac = jacobian(&residuals, &p, &r, opts.step_floor)?;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * DVector::from_column_slice(&r);
        let mut accepted = false;
        let mut small_step = false;
        for _ in 0..60 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = a.clone().cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rt = match residuals(&trial) {
                Ok(v) if v.iter().all(|x| x.is_finite()) => v,
                _ => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let ct = cost_of(&rt);
            if ct <= cost {
                let rel_f = (cost - ct) / cost.max(1e-300);
                let rel_x = step.iter().zip(&p).map(|(s, v)| (s / v.abs().max(1e-300)).abs()).fold(0.0, f64::max);
                p = trial;
                r = rt;
                cost = ct;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                small_step = rel_f < opts.ftol || rel_x < opts.xtol;
                break;
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                break;
            }
        }
        if !accepted || small_step || cost == 0.0 {
            break;
        }
        jac = jacobian(&residuals, &p, &r, opts.step_floor)?;
    }
    let jac = jacobian(&residuals, &p, &r, opts.step_floor)?;
    let dof = r.len().saturating_sub(n);
    let s2 = if dof > 0 { cost / dof as f64 } else { 0.0 };
    let jtj = jac.transpose() * &jac;
    let covariance = jtj
        .clone()
        .try_inverse()
        .or_else(|| jtj.pseudo_inverse(1e-300).ok())
        .ok_or_else(|| Error::Fit("singular normal matrix".into()))?
        * s2;
    Ok(LmResult { params: p, cost, dof, covariance, iterations })
}

/// Two-sided Student-t quantile for a confidence `level` (e.g. 0.99).
pub fn t_quantile(level: f64, dof: usize) -> f64 {
    let dof = dof.max(1) as f64;
    StudentsT::new(0.0, 1.0, dof)
        .map(|t| t.inverse_cdf(0.5 + level / 2.0))
        .unwrap_or(f64::INFINITY)
}
