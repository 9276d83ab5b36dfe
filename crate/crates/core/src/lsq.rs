//! Damped least squares (Levenberg–Marquardt) shared by the waist and fringe
//! fits.

use nalgebra::{DMatrix, DVector};

/// Weighted residuals r_i = (y_i − f_i(p))/σ_i and their Jacobian ∂r/∂p.
pub trait Residuals {
    fn n_params(&self) -> usize;
    fn n_points(&self) -> usize;
    fn evaluate(&self, params: &[f64], residuals: &mut DVector<f64>, jacobian: &mut DMatrix<f64>);
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    pub relative_step_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 200,
            relative_step_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmSolution {
    pub params: Vec<f64>,
    /// (JᵀJ)⁻¹ at the solution, in weighted units.
    pub covariance: Option<DMatrix<f64>>,
    pub chi_squared: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LmSolution {
    pub fn residual_norm(&self) -> f64 {
        self.chi_squared.sqrt()
    }

    /// Covariance scaled by the reduced chi-squared, for fits whose point
    /// errors are not known in absolute terms.
    pub fn scaled_covariance(&self, n_points: usize) -> Option<DMatrix<f64>> {
        let dof = n_points.saturating_sub(self.params.len()).max(1);
        self.covariance.as_ref().map(|c| c * (self.chi_squared / dof as f64))
    }
}

pub fn levenberg_marquardt<R: Residuals>(problem: &R, initial: &[f64], opts: LmOptions) -> LmSolution {
    let n = problem.n_params();
    let m = problem.n_points();
    let mut params = initial.to_vec();
    let mut r = DVector::zeros(m);
    let mut j = DMatrix::zeros(m, n);
    problem.evaluate(&params, &mut r, &mut j);
    let mut chi2 = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    let mut trial_r = DVector::zeros(m);
    let mut trial_j = DMatrix::zeros(m, n);

    while iterations < opts.max_iterations {
        iterations += 1;
        if chi2 == 0.0 {
            converged = true;
            break;
        }
        let jtj = j.transpose() * &j;
        // r = y − f, so the Gauss–Newton step solves JᵀJ·Δ = −Jᵀr with J = ∂r/∂p.
        let grad = j.transpose() * &r;
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&grad))) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            problem.evaluate(&trial, &mut trial_r, &mut trial_j);
            let trial_chi2 = trial_r.norm_squared();
            if trial_chi2.is_finite() && trial_chi2 <= chi2 {
                let step_norm = step.norm();
                let scale = params.iter().map(|p| p * p).sum::<f64>().sqrt();
                params = trial;
                std::mem::swap(&mut r, &mut trial_r);
                std::mem::swap(&mut j, &mut trial_j);
                chi2 = trial_chi2;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if step_norm <= opts.relative_step_tolerance * (scale + opts.relative_step_tolerance) {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No downhill step exists at any damping: a minimum to machine precision.
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    if converged && chi2 > 0.0 {
        // Gauss–Newton polish. Near the minimum chi² is flat to rounding, so
        // steps are accepted while they keep shrinking rather than by chi².
        let mut last_step = f64::INFINITY;
        for _ in 0..6 {
            let jtj = j.transpose() * &j;
            let grad = j.transpose() * &r;
            let Some(step) = jtj.cholesky().map(|c| c.solve(&(-&grad))) else {
                break;
            };
            let step_norm = step.norm();
            if !(step_norm < 0.5 * last_step) {
                break;
            }
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            problem.evaluate(&trial, &mut trial_r, &mut trial_j);
            let trial_chi2 = trial_r.norm_squared();
            if !(trial_chi2.is_finite() && trial_chi2 <= chi2 * (1.0 + 1e-12)) {
                break;
            }
            params = trial;
            std::mem::swap(&mut r, &mut trial_r);
            std::mem::swap(&mut j, &mut trial_j);
            chi2 = trial_chi2;
            last_step = step_norm;
        }
    }

    let covariance = (j.transpose() * &j).try_inverse();
    LmSolution {
        params,
        covariance,
        chi_squared: chi2,
        iterations,
        converged,
    }
}
