//! Fringe fitting, visibility, CHSH correlations and the visibility to
//! fidelity conversions.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, Vector3};
use serde::Serialize;

use crate::detection::Corrected;
use crate::error::{Error, Result};
use crate::lsq::{levenberg_marquardt, LmOptions, Residuals};
use crate::polcalc::{fidelity_bound, werner_overlap};

/// y = a·cos(ωx + c) + d with 1σ errors; parameter order in `covariance` is
/// (a, ω, c, d).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CosineFit {
    pub amplitude: f64,
    pub angular_frequency: f64,
    pub phase: f64,
    pub offset: f64,
    pub sigma_amplitude: f64,
    pub sigma_angular_frequency: f64,
    pub sigma_phase: f64,
    pub sigma_offset: f64,
    pub covariance: [[f64; 4]; 4],
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl CosineFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude * (self.angular_frequency * x + self.phase).cos() + self.offset
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CosineFitOptions {
    /// Angular frequency search range; derived from the sampling when unset.
    pub omega_range: Option<(f64, f64)>,
    pub lm: LmOptions,
}

struct CosineProblem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    sigma: &'a [f64],
    x_mean: f64,
}

impl Residuals for CosineProblem<'_> {
    fn n_params(&self) -> usize {
        4
    }
    fn n_points(&self) -> usize {
        self.x.len()
    }
    fn evaluate(&self, p: &[f64], r: &mut DVector<f64>, j: &mut DMatrix<f64>) {
        let (a, w, c, d) = (p[0], p[1], p[2], p[3]);
        for i in 0..self.x.len() {
            let t = self.x[i] - self.x_mean;
            let u = w * t + c;
            let (s, co) = u.sin_cos();
            let inv = 1.0 / self.sigma[i];
            r[i] = (self.y[i] - (a * co + d)) * inv;
            j[(i, 0)] = -co * inv;
            j[(i, 1)] = a * s * t * inv;
            j[(i, 2)] = a * s * inv;
            j[(i, 3)] = -inv;
        }
    }
}

/// Weighted linear fit of y ≈ A·cos ωt + B·sin ωt + d at fixed ω.
fn linear_at(omega: f64, t: &[f64], y: &[f64], sigma: &[f64]) -> Option<(Vector3<f64>, f64)> {
    let mut ata = Matrix3::zeros();
    let mut aty = Vector3::zeros();
    for i in 0..t.len() {
        let w = 1.0 / (sigma[i] * sigma[i]);
        let (s, c) = (omega * t[i]).sin_cos();
        let row = Vector3::new(c, s, 1.0);
        ata += row * row.transpose() * w;
        aty += row * (y[i] * w);
    }
    let coef = ata.cholesky()?.solve(&aty);
    let chi2 = (0..t.len())
        .map(|i| {
            let (s, c) = (omega * t[i]).sin_cos();
            let e = (y[i] - coef[0] * c - coef[1] * s - coef[2]) / sigma[i];
            e * e
        })
        .sum();
    Some((coef, chi2))
}

fn wrap_phase(c: f64) -> f64 {
    let r = c.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

pub fn fit_cosine(x: &[f64], y: &[f64], y_errors: &[f64]) -> Result<CosineFit> {
    fit_cosine_with(x, y, y_errors, CosineFitOptions::default())
}

/// Weighted cosine fit: a coarse scan over ω with the linear parameters
/// solved exactly at each trial frequency, then Levenberg–Marquardt on all
/// four parameters.
pub fn fit_cosine_with(x: &[f64], y: &[f64], y_errors: &[f64], opts: CosineFitOptions) -> Result<CosineFit> {
    let n = x.len();
    if n < 5 || y.len() != n || y_errors.len() != n {
        return Err(Error::InvalidArgument(format!(
            "cosine fit needs ≥ 5 points with matching lengths (x {n}, y {}, σ {})",
            y.len(),
            y_errors.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite sample".into()));
    }
    if y_errors.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::InvalidArgument("y errors must be positive".into()));
    }
    let x_min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let x_max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = x_max - x_min;
    if span <= 0.0 {
        return Err(Error::InvalidArgument("x values do not span an interval".into()));
    }
    let x_mean = x.iter().sum::<f64>() / n as f64;
    let t: Vec<f64> = x.iter().map(|v| v - x_mean).collect();

    let (w_lo, w_hi) = opts.omega_range.unwrap_or_else(|| {
        let mut sorted = x.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).filter(|g| *g > 0.0).collect();
        gaps.sort_by(f64::total_cmp);
        let typical = gaps[gaps.len() / 2];
        (0.5 * PI / span, PI / typical)
    });
    if !(w_lo > 0.0 && w_hi > w_lo) {
        return Err(Error::InvalidArgument(format!("bad frequency range ({w_lo}, {w_hi})")));
    }
    let step = PI / (4.0 * span);
    let count = (((w_hi - w_lo) / step).ceil() as usize + 1).max(3);
    let grid: Vec<f64> = (0..count)
        .map(|k| w_lo + (w_hi - w_lo) * k as f64 / (count - 1) as f64)
        .collect();
    let scores: Vec<Option<(Vector3<f64>, f64)>> = grid.iter().map(|&w| linear_at(w, &t, y, y_errors)).collect();
    let chi = |k: usize| scores[k].as_ref().map_or(f64::INFINITY, |s| s.1);

    let best = (1..count - 1)
        .filter(|&k| chi(k) < chi(k - 1) && chi(k) <= chi(k + 1))
        .min_by(|&a, &b| chi(a).total_cmp(&chi(b)));
    let Some(k) = best else {
        let finite: Vec<f64> = (0..count).map(chi).filter(|c| c.is_finite()).collect();
        let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return Err(Error::FitFailure {
            message: format!(
                "no period bracketed in ω ∈ [{w_lo:.4e}, {w_hi:.4e}] over {count} trials; χ² range [{lo:.4e}, {hi:.4e}], edges {:.4e} / {:.4e}",
                chi(0),
                chi(count - 1)
            ),
            residual_norm: lo.sqrt(),
        });
    };
    let (coef, _) = scores[k].expect("finite score");
    let a0 = coef[0].hypot(coef[1]);
    let c0 = (-coef[1]).atan2(coef[0]);

    let problem = CosineProblem {
        x,
        y,
        sigma: y_errors,
        x_mean,
    };
    let sol = levenberg_marquardt(&problem, &[a0, grid[k], c0, coef[2]], opts.lm);
    let [mut a, w, mut c_centered, d] = [sol.params[0], sol.params[1], sol.params[2], sol.params[3]];
    if !(a.is_finite() && w.is_finite() && c_centered.is_finite() && d.is_finite()) {
        return Err(Error::FitFailure {
            message: "cosine fit diverged".into(),
            residual_norm: sol.residual_norm(),
        });
    }
    let mut flip = 1.0;
    if a < 0.0 {
        a = -a;
        c_centered += PI;
        flip = -1.0;
    }
    // Undo the centring: c = c' − ω·x̄.
    let phase = wrap_phase(c_centered - w * x_mean);
    let cov = match &sol.covariance {
        Some(cv) => {
            let cv = Matrix4::from_fn(|r, col| cv[(r, col)]);
            let mut jac = Matrix4::identity();
            jac[(0, 0)] = flip;
            jac[(2, 1)] = -x_mean;
            jac * cv * jac.transpose()
        }
        None => Matrix4::from_element(f64::NAN),
    };
    let covariance: [[f64; 4]; 4] = std::array::from_fn(|r| std::array::from_fn(|col| cov[(r, col)]));
    Ok(CosineFit {
        amplitude: a,
        angular_frequency: w,
        phase,
        offset: d,
        sigma_amplitude: covariance[0][0].sqrt(),
        sigma_angular_frequency: covariance[1][1].sqrt(),
        sigma_phase: covariance[2][2].sqrt(),
        sigma_offset: covariance[3][3].sqrt(),
        covariance,
        residual_norm: sol.residual_norm(),
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

/// V = a/d with first-order error propagation including the a–d covariance.
pub fn visibility(fit: &CosineFit) -> Result<(f64, f64)> {
    let (a, d) = (fit.amplitude, fit.offset);
    if !(d > 0.0) {
        return Err(Error::FitFailure {
            message: format!("fringe offset must be positive for a visibility, got {d}"),
            residual_norm: fit.residual_norm,
        });
    }
    let var = fit.covariance[0][0] / (d * d) + a * a * fit.covariance[3][3] / d.powi(4)
        - 2.0 * a * fit.covariance[0][3] / d.powi(3);
    Ok((a / d, var.max(0.0).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub value: f64,
    pub error: f64,
}

fn correlation_from(n: [f64; 4], var: [f64; 4]) -> Result<Correlation> {
    let plus = n[0] + n[3];
    let minus = n[1] + n[2];
    let total = plus + minus;
    if !(total > 0.0) {
        return Err(Error::UndefinedCorrelation);
    }
    let var_plus = var[0] + var[3];
    let var_minus = var[1] + var[2];
    let t4 = total.powi(4);
    Ok(Correlation {
        value: (plus - minus) / total,
        error: (4.0 * (minus * minus * var_plus + plus * plus * var_minus) / t4).sqrt(),
    })
}

/// E = (n11 + n22 − n12 − n21)/Σn with Poisson errors on each count.
pub fn correlation_e(n11: f64, n12: f64, n21: f64, n22: f64) -> Result<Correlation> {
    let n = [n11, n12, n21, n22];
    if n.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "counts must be finite and ≥ 0, got {n:?}"
        )));
    }
    correlation_from(n, n)
}

/// Same as [`correlation_e`] for accidental-subtracted counts, using their
/// propagated errors.
pub fn correlation_e_corrected(n: [Corrected; 4]) -> Result<Correlation> {
    correlation_from(n.map(|c| c.value), n.map(|c| c.error * c.error))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshResult {
    pub s: f64,
    pub s_error: f64,
    pub sigma_violation: f64,
    /// S/(2√2), clamped to [0, 1].
    pub visibility_vs: f64,
    /// Worst-case Werner bound from [`fidelity_bound`].
    pub fidelity_lower_bound: f64,
    /// (1 + 3V)/4, the Werner overlap at the same visibility.
    pub werner_fidelity: f64,
    /// Index (0..4) of the correlation carrying the minus sign.
    pub sign_pattern: usize,
}

/// S from (E_ab, E_ab', E_a'b, E_a'b'). All four placements of the minus
/// sign are tried and the largest |S| kept, preferring the textbook one.
pub fn chsh_s(e: [Correlation; 4]) -> ChshResult {
    let sum: f64 = e.iter().map(|c| c.value).sum();
    let mut pattern = 1;
    let mut s = (sum - 2.0 * e[1].value).abs();
    for k in [0, 2, 3] {
        let candidate = (sum - 2.0 * e[k].value).abs();
        if candidate > s {
            s = candidate;
            pattern = k;
        }
    }
    if pattern != 1 {
        log::debug!("CHSH maximum uses the minus sign on term {pattern}");
    }
    let s_error = e.iter().map(|c| c.error * c.error).sum::<f64>().sqrt();
    let sigma_violation = if s_error > 0.0 {
        (s - 2.0) / s_error
    } else if s > 2.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let visibility_vs = (s / (2.0 * SQRT_2)).clamp(0.0, 1.0);
    ChshResult {
        s,
        s_error,
        sigma_violation,
        visibility_vs,
        fidelity_lower_bound: fidelity_bound(visibility_vs).expect("clamped"),
        werner_fidelity: werner_overlap(visibility_vs).expect("clamped"),
        sign_pattern: pattern,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshSelection {
    pub delta_a: f64,
    pub delta_a_prime: f64,
    pub result: ChshResult,
}

/// Picks Alice's two settings from a scan of her phase against Bob's two
/// settings b and b', maximizing S. Ties go to the smallest phases.
pub fn optimize_alice(delta_a: &[f64], e_b: &[Correlation], e_b_prime: &[Correlation]) -> Result<ChshSelection> {
    let n = delta_a.len();
    if n == 0 || e_b.len() != n || e_b_prime.len() != n {
        return Err(Error::InvalidArgument(
            "Alice scan and correlation curves must match and be non-empty".into(),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| delta_a[i].total_cmp(&delta_a[j]));
    let mut best: Option<ChshSelection> = None;
    for &i in &order {
        for &j in &order {
            let r = chsh_s([e_b[i], e_b_prime[i], e_b[j], e_b_prime[j]]);
            if best.is_none_or(|b| r.s > b.result.s) {
                best = Some(ChshSelection {
                    delta_a: delta_a[i],
                    delta_a_prime: delta_a[j],
                    result: r,
                });
            }
        }
    }
    Ok(best.expect("non-empty scan"))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::detection::{setting_probability, MeasurementSetting};
    use crate::polcalc::{phi_plus, JonesVector, TwoPhotonState, C64};

    fn samples(a: f64, w: f64, c: f64, d: f64, x: &[f64]) -> Vec<f64> {
        x.iter().map(|x| a * (w * x + c).cos() + d).collect()
    }

    #[test]
    fn exact_cosine_is_recovered() {
        let x: Vec<f64> = (0..60).map(|i| i as f64 * 0.37).collect();
        let y = samples(3.2, 0.81, -1.1, 5.0, &x);
        let fit = fit_cosine(&x, &y, &vec![1.0; x.len()]).unwrap();
        assert_abs_diff_eq!(fit.amplitude, 3.2, epsilon = 1e-8);
        assert_abs_diff_eq!(fit.angular_frequency, 0.81, epsilon = 1e-8);
        assert_abs_diff_eq!(fit.phase, -1.1, epsilon = 1e-8);
        assert_abs_diff_eq!(fit.offset, 5.0, epsilon = 1e-8);
        assert!(fit.converged);
    }

    #[test]
    fn negative_amplitude_is_folded() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        let y = samples(-2.0, 1.3, 0.4, 3.0, &x);
        let fit = fit_cosine(&x, &y, &vec![1.0; x.len()]).unwrap();
        assert!(fit.amplitude > 0.0);
        assert_abs_diff_eq!(fit.amplitude, 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(wrap_phase(fit.phase - (0.4 + PI)), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn too_few_points_rejected() {
        let x = [0.0, 1.0, 2.0, 3.0];
        assert!(matches!(fit_cosine(&x, &x, &[1.0; 4]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn unbracketed_period_is_a_fit_failure() {
        // True frequency just above the searched band: the score falls
        // monotonically towards the upper edge.
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let opts = CosineFitOptions {
            omega_range: Some((0.5, 0.6)),
            ..CosineFitOptions::default()
        };
        let y = samples(1.0, 0.65, 0.0, 2.0, &x);
        let err = fit_cosine_with(&x, &y, &vec![1.0; 30], opts).unwrap_err();
        assert!(matches!(err, Error::FitFailure { .. }), "{err}");
    }

    #[test]
    fn visibility_propagation() {
        let mut fit = fit_cosine(
            &(0..20).map(|i| i as f64).collect::<Vec<_>>(),
            &samples(1.0, 0.7, 0.0, 1.0, &(0..20).map(|i| i as f64).collect::<Vec<_>>()),
            &[1.0; 20],
        )
        .unwrap();
        fit.amplitude = 49.5;
        fit.offset = 50.0;
        fit.covariance = [[0.0; 4]; 4];
        fit.covariance[0][0] = 0.25;
        fit.covariance[3][3] = 0.25;
        let (v, dv) = visibility(&fit).unwrap();
        assert_abs_diff_eq!(v, 0.99, epsilon = 1e-15);
        let expected = 0.99 * ((0.5f64 / 49.5).powi(2) + (0.5f64 / 50.0).powi(2)).sqrt();
        assert_abs_diff_eq!(dv, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(dv, 0.014, epsilon = 1e-4);

        fit.amplitude = 50.0;
        assert_eq!(visibility(&fit).unwrap().0, 1.0);
        fit.amplitude = 0.0;
        assert_eq!(visibility(&fit).unwrap().0, 0.0);
        fit.offset = 0.0;
        assert!(visibility(&fit).is_err());
    }

    #[test]
    fn correlation_examples() {
        assert_eq!(correlation_e(100.0, 0.0, 0.0, 100.0).unwrap().value, 1.0);
        assert_eq!(correlation_e(7.0, 7.0, 7.0, 7.0).unwrap().value, 0.0);
        assert_eq!(correlation_e(0.0, 0.0, 0.0, 0.0), Err(Error::UndefinedCorrelation));
        let p: Vec<f64> = MeasurementSetting::channel_set(FRAC_PI_4, 0.0)
            .iter()
            .map(|s| setting_probability(&phi_plus(), s, 1.0).unwrap())
            .collect();
        let e = correlation_e(p[0], p[1], p[2], p[3]).unwrap();
        assert_abs_diff_eq!(e.value, FRAC_PI_4.cos(), epsilon = 1e-12);
    }

    #[test]
    fn correlation_error_matches_numeric_derivative() {
        let n = [900.0, 120.0, 80.0, 1010.0];
        let e = correlation_e(n[0], n[1], n[2], n[3]).unwrap();
        let f = |m: [f64; 4]| (m[0] + m[3] - m[1] - m[2]) / m.iter().sum::<f64>();
        let mut var = 0.0;
        for k in 0..4 {
            let h = 1e-4;
            let mut up = n;
            let mut dn = n;
            up[k] += h;
            dn[k] -= h;
            let g = (f(up) - f(dn)) / (2.0 * h);
            var += g * g * n[k];
        }
        assert_abs_diff_eq!(e.error, var.sqrt(), epsilon = 1e-9);
    }

    fn exact_e(state: &TwoPhotonState, da: f64, db: f64) -> Correlation {
        let p: Vec<f64> = MeasurementSetting::channel_set(da, db)
            .iter()
            .map(|s| setting_probability(state, s, 1.0).unwrap())
            .collect();
        correlation_e(p[0], p[1], p[2], p[3]).unwrap()
    }

    #[test]
    fn tsirelson_value_at_optimal_settings() {
        let s = phi_plus();
        let (b, bp) = (0.0, FRAC_PI_2);
        let (a, ap) = (FRAC_PI_4, -FRAC_PI_4);
        let r = chsh_s([
            exact_e(&s, a, b),
            exact_e(&s, a, bp),
            exact_e(&s, ap, b),
            exact_e(&s, ap, bp),
        ]);
        assert_abs_diff_eq!(r.s, 2.0 * SQRT_2, epsilon = 1e-9);
        assert_abs_diff_eq!(r.visibility_vs, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.fidelity_lower_bound, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn alice_scan_finds_the_optimum() {
        let s = phi_plus();
        let grid: Vec<f64> = (0..32).map(|i| i as f64 * PI / 16.0).collect();
        let eb: Vec<Correlation> = grid.iter().map(|&a| exact_e(&s, a, 0.0)).collect();
        let ebp: Vec<Correlation> = grid.iter().map(|&a| exact_e(&s, a, FRAC_PI_2)).collect();
        let sel = optimize_alice(&grid, &eb, &ebp).unwrap();
        assert_abs_diff_eq!(sel.result.s, 2.0 * SQRT_2, epsilon = 1e-9);
    }

    #[test]
    fn measured_chsh_numbers() {
        // Four correlations of 0.705 ± 0.02 give S = 2.82 ± 0.04, i.e. ≈ 20σ.
        let c = Correlation {
            value: 0.705,
            error: 0.02,
        };
        let neg = Correlation {
            value: -0.705,
            error: 0.02,
        };
        let r = chsh_s([c, neg, c, c]);
        assert_abs_diff_eq!(r.s, 2.82, epsilon = 1e-12);
        assert_abs_diff_eq!(r.s_error, 0.04, epsilon = 1e-12);
        assert_abs_diff_eq!(r.sigma_violation, 20.5, epsilon = 1e-9);
        assert_eq!(r.sign_pattern, 1);
    }

    #[test]
    fn product_state_is_classical() {
        let hh = TwoPhotonState::product(&JonesVector::horizontal(), &JonesVector::horizontal());
        let grid: Vec<f64> = (0..12).map(|i| i as f64 * PI / 6.0).collect();
        for &a in &grid {
            for &ap in &grid {
                for &b in &grid {
                    for &bp in &grid {
                        let r = chsh_s([
                            exact_e(&hh, a, b),
                            exact_e(&hh, a, bp),
                            exact_e(&hh, ap, b),
                            exact_e(&hh, ap, bp),
                        ]);
                        assert!(r.s <= 2.0 + 1e-12);
                    }
                }
            }
        }
    }

    fn arb_state() -> impl Strategy<Value = TwoPhotonState> {
        prop::array::uniform8(-1.0f64..1.0).prop_filter_map("non-zero", |v| {
            let amps: [C64; 4] = std::array::from_fn(|k| C64::new(v[2 * k], v[2 * k + 1]));
            let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            (norm > 1e-3).then(|| TwoPhotonState {
                amps: amps.map(|a| a / norm),
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn tsirelson_bound_holds(state in arb_state(), angles in prop::array::uniform4(-PI..PI)) {
            let [a, ap, b, bp] = angles;
            let r = chsh_s([exact_e(&state, a, b), exact_e(&state, a, bp), exact_e(&state, ap, b), exact_e(&state, ap, bp)]);
            prop_assert!(r.s <= 2.0 * SQRT_2 + 1e-9);
            prop_assert!((0.25..=1.0).contains(&r.fidelity_lower_bound));
        }
    }

    proptest! {
        #[test]
        fn correlation_is_bounded_and_antisymmetric(n in prop::array::uniform4(0.0f64..1e6)) {
            prop_assume!(n.iter().sum::<f64>() > 0.0);
            let e = correlation_e(n[0], n[1], n[2], n[3]).unwrap();
            let swapped = correlation_e(n[1], n[0], n[3], n[2]).unwrap();
            prop_assert!((-1.0..=1.0).contains(&e.value));
            prop_assert!((e.value + swapped.value).abs() < 1e-12);
        }

        #[test]
        fn fit_is_shift_equivariant(
            a in 0.5f64..5.0, w in 0.3f64..2.0, c in -3.0f64..3.0, d in 6.0f64..10.0, shift in -20.0f64..20.0
        ) {
            let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
            let y = samples(a, w, c, d, &x);
            let sigma = vec![1.0; x.len()];
            let base = fit_cosine(&x, &y, &sigma).unwrap();
            let moved: Vec<f64> = x.iter().map(|v| v + shift).collect();
            let fit = fit_cosine(&moved, &y, &sigma).unwrap();
            prop_assert!((fit.amplitude - base.amplitude).abs() < 1e-8);
            prop_assert!((fit.angular_frequency - base.angular_frequency).abs() < 1e-8);
            prop_assert!((fit.offset - base.offset).abs() < 1e-8);
            prop_assert!(wrap_phase(fit.phase - (base.phase - base.angular_frequency * shift)).abs() < 1e-8);
        }
    }
}
