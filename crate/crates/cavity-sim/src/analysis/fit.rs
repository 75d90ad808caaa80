//! Weighted nonlinear least squares via Levenberg-Marquardt, with analytic
//! Jacobians for the three line-shape models the experiment needs.
//!
//! Model definitions (all with an additive offset):
//!
//! - Gaussian:   S(x) = A·exp(−(x−x0)²/w²) + B. The width parameter `w` is
//!   the 1/e half-width of the *signal*. A scattering-rate profile follows
//!   the squared mode field, ∝ exp(−2ρ²/w_mode²), so fitting it yields
//!   w = w_mode/√2 and `w·√2` estimates the mode waist itself.
//! - Lorentzian: S(x) = A·h²/((x−x0)² + h²) + B with h the HWHM.
//! - Linear:     S(x) = m·x + B.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::Error;
use crate::Result;

/// One weighted data point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub x: f64,
    pub y: f64,
    /// Standard deviation of `y`; must be positive.
    pub sigma: f64,
}

impl FitPoint {
    pub fn new(x: f64, y: f64, sigma: f64) -> Self {
        FitPoint { x, y, sigma }
    }
}

/// Line-shape models available to [`fit_least_squares`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    Gaussian,
    Lorentzian,
    Linear,
}

impl FitModel {
    /// Parameter names, in storage order.
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            FitModel::Gaussian => &["amplitude", "center", "width", "offset"],
            FitModel::Lorentzian => &["amplitude", "center", "hwhm", "offset"],
            FitModel::Linear => &["slope", "offset"],
        }
    }

    pub fn n_params(&self) -> usize {
        self.param_names().len()
    }

    /// Model value at `x`.
    pub fn eval(&self, params: &[f64], x: f64) -> f64 {
        match self {
            FitModel::Gaussian => {
                let (a, x0, w, b) = (params[0], params[1], params[2], params[3]);
                let u = (x - x0) / w;
                a * (-u * u).exp() + b
            }
            FitModel::Lorentzian => {
                let (a, x0, h, b) = (params[0], params[1], params[2], params[3]);
                let dx = x - x0;
                a * h * h / (dx * dx + h * h) + b
            }
            FitModel::Linear => params[0] * x + params[1],
        }
    }

    /// Analytic partial derivatives ∂S/∂p at `x`, written into `out`.
    pub fn jacobian_row(&self, params: &[f64], x: f64, out: &mut [f64]) {
        match self {
            FitModel::Gaussian => {
                let (a, x0, w) = (params[0], params[1], params[2]);
                let u = (x - x0) / w;
                let e = (-u * u).exp();
                out[0] = e;
                out[1] = a * e * 2.0 * u / w;
                out[2] = a * e * 2.0 * u * u / w;
                out[3] = 1.0;
            }
            FitModel::Lorentzian => {
                let (a, x0, h) = (params[0], params[1], params[2]);
                let dx = x - x0;
                let denom = dx * dx + h * h;
                out[0] = h * h / denom;
                out[1] = a * h * h * 2.0 * dx / (denom * denom);
                out[2] = 2.0 * a * h * dx * dx / (denom * denom);
                out[3] = 1.0;
            }
            FitModel::Linear => {
                out[0] = x;
                out[1] = 1.0;
            }
        }
    }
}

/// Outcome of a least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: FitModel,
    /// Best-fit parameters, ordered as [`FitModel::param_names`].
    pub params: Vec<f64>,
    /// One-sigma parameter uncertainties.
    pub uncertainties: Vec<f64>,
    /// Parameter covariance matrix (row-major), symmetric positive
    /// semidefinite: inverse of the Gauss-Newton normal matrix at the
    /// optimum, scaled by the reduced chi-square.
    pub covariance: Vec<Vec<f64>>,
    /// Weighted residual 2-norm at the optimum, √χ².
    pub residual_norm: f64,
    /// Whether a convergence criterion fired before the iteration cap.
    pub converged: bool,
    pub iterations: usize,
    /// Infinity norm of the cost gradient at the last accepted point.
    pub gradient_norm: f64,
    /// χ² after every accepted step (starting value first); non-increasing.
    pub cost_history: Vec<f64>,
}

impl FitResult {
    /// Look up a parameter by name.
    pub fn param(&self, name: &str) -> f64 {
        let i = self.index_of(name);
        self.params[i]
    }

    /// Look up a parameter uncertainty by name.
    pub fn uncertainty(&self, name: &str) -> f64 {
        let i = self.index_of(name);
        self.uncertainties[i]
    }

    fn index_of(&self, name: &str) -> usize {
        self.model
            .param_names()
            .iter()
            .position(|&n| n == name)
            .unwrap_or_else(|| panic!("model {:?} has no parameter '{name}'", self.model))
    }

    /// Model prediction at `x` with the fitted parameters.
    pub fn predict(&self, x: f64) -> f64 {
        self.model.eval(&self.params, x)
    }

    /// Flat `key = value` text block, one line per quantity.
    pub fn to_key_value_block(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("model = {:?}\n", self.model).to_lowercase());
        for (i, name) in self.model.param_names().iter().enumerate() {
            out.push_str(&format!("{name} = {}\n", self.params[i]));
            out.push_str(&format!("{name}_sigma = {}\n", self.uncertainties[i]));
        }
        out.push_str(&format!("residual_norm = {}\n", self.residual_norm));
        out.push_str(&format!("converged = {}\n", self.converged));
        out.push_str(&format!("iterations = {}\n", self.iterations));
        out
    }
}

/// Convergence thresholds and iteration cap.
#[derive(Debug, Clone, Copy)]
pub struct FitSettings {
    /// Relative parameter change below which the fit converges.
    pub param_tolerance: f64,
    /// Cost-gradient infinity norm below which the fit converges.
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            param_tolerance: 1e-8,
            gradient_tolerance: 1e-10,
            max_iterations: 200,
        }
    }
}

/// Data-moment initial guess; never consults ground truth.
///
/// Baseline from the edge bins, peak location from the extremum, width from
/// the second moment (Gaussian) or the half-maximum crossing (Lorentzian);
/// the linear model starts from the closed-form unweighted solution.
pub fn moment_guess(model: FitModel, data: &[FitPoint]) -> Vec<f64> {
    match model {
        FitModel::Linear => {
            let n = data.len() as f64;
            let sx: f64 = data.iter().map(|p| p.x).sum();
            let sy: f64 = data.iter().map(|p| p.y).sum();
            let sxx: f64 = data.iter().map(|p| p.x * p.x).sum();
            let sxy: f64 = data.iter().map(|p| p.x * p.y).sum();
            let denom = n * sxx - sx * sx;
            if denom.abs() < 1e-300 {
                return vec![0.0, sy / n.max(1.0)];
            }
            let slope = (n * sxy - sx * sy) / denom;
            vec![slope, (sy - slope * sx) / n]
        }
        FitModel::Gaussian | FitModel::Lorentzian => {
            let edge = data.len().clamp(1, 4) / 2;
            let mut baseline = 0.0;
            let mut n_edge = 0usize;
            for p in data.iter().take(edge).chain(data.iter().rev().take(edge)) {
                baseline += p.y;
                n_edge += 1;
            }
            baseline /= n_edge.max(1) as f64;

            let peak = data
                .iter()
                .fold(data[0], |best, &p| if p.y > best.y { p } else { best });
            let amplitude = (peak.y - baseline).max(f64::MIN_POSITIVE);
            let span = {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for p in data {
                    lo = lo.min(p.x);
                    hi = hi.max(p.x);
                }
                (hi - lo).max(f64::MIN_POSITIVE)
            };

            let width = match model {
                FitModel::Gaussian => {
                    let mut m0 = 0.0;
                    let mut m2 = 0.0;
                    for p in data {
                        let wgt = (p.y - baseline).max(0.0);
                        m0 += wgt;
                        m2 += wgt * (p.x - peak.x) * (p.x - peak.x);
                    }
                    if m0 > 0.0 {
                        (2.0 * m2 / m0).sqrt().max(span * 1e-3)
                    } else {
                        span / 4.0
                    }
                }
                FitModel::Lorentzian => {
                    half_crossing_width(data, peak.x, baseline, amplitude)
                        .unwrap_or(span / 4.0)
                }
                FitModel::Linear => unreachable!(),
            };
            vec![amplitude, peak.x, width, baseline]
        }
    }
}

/// Mean distance from the peak to the half-maximum crossings on either side.
fn half_crossing_width(data: &[FitPoint], x_peak: f64, baseline: f64, amplitude: f64) -> Option<f64> {
    let half = baseline + amplitude / 2.0;
    let mut sorted: Vec<&FitPoint> = data.iter().collect();
    sorted.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
    let right = sorted
        .iter()
        .find(|p| p.x > x_peak && p.y < half)
        .map(|p| p.x - x_peak);
    let left = sorted
        .iter()
        .rev()
        .find(|p| p.x < x_peak && p.y < half)
        .map(|p| x_peak - p.x);
    match (left, right) {
        (Some(l), Some(r)) => Some(0.5 * (l + r)),
        (Some(w), None) | (None, Some(w)) => Some(w),
        (None, None) => None,
    }
}

/// Fit `model` to weighted data with Levenberg-Marquardt, starting from
/// `initial_guess`.
///
/// Converged means the relative parameter change dropped below 1e-8 or the
/// cost-gradient norm below 1e-10 (see [`FitSettings`]). Hitting the
/// iteration cap returns a non-converged result with diagnostics rather than
/// an error; a singular normal matrix is an error.
pub fn fit_least_squares(
    model: FitModel,
    data: &[FitPoint],
    initial_guess: &[f64],
) -> Result<FitResult> {
    fit_least_squares_with(model, data, initial_guess, FitSettings::default())
}

/// [`fit_least_squares`] with explicit settings.
pub fn fit_least_squares_with(
    model: FitModel,
    data: &[FitPoint],
    initial_guess: &[f64],
    settings: FitSettings,
) -> Result<FitResult> {
    let n_params = model.n_params();
    if initial_guess.len() != n_params {
        return Err(Error::Input(format!(
            "{:?} takes {n_params} parameters, guess has {}",
            model,
            initial_guess.len()
        )));
    }
    if data.len() < n_params + 1 {
        return Err(Error::Input(format!(
            "need at least {} points to fit {:?}, got {}",
            n_params + 1,
            model,
            data.len()
        )));
    }
    for (i, p) in data.iter().enumerate() {
        if !(p.sigma > 0.0) || !p.sigma.is_finite() || !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::Input(format!(
                "data point {i} is invalid (x = {}, y = {}, sigma = {})",
                p.x, p.y, p.sigma
            )));
        }
    }

    let mut params = DVector::from_column_slice(initial_guess);
    let mut cost = chi_square(model, params.as_slice(), data);
    let mut cost_history = vec![cost];
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    let (mut jac, mut resid) = jacobian_and_residuals(model, params.as_slice(), data);
    let mut gradient = jac.transpose() * &resid;
    let mut gradient_norm = gradient.abs().max();
    if gradient_norm < settings.gradient_tolerance {
        converged = true;
    }

    while !converged && iterations < settings.max_iterations {
        iterations += 1;
        let normal = jac.transpose() * &jac;
        let max_diag = (0..n_params)
            .map(|j| normal[(j, j)])
            .fold(0.0f64, f64::max)
            .max(f64::MIN_POSITIVE);

        // Damped step; raise lambda until the linear solve succeeds and the
        // step lowers the cost.
        let mut accepted = false;
        while !accepted {
            let mut damped = normal.clone();
            for j in 0..n_params {
                damped[(j, j)] += lambda * normal[(j, j)].max(1e-12 * max_diag);
            }
            let step = Cholesky::new(damped).map(|ch| ch.solve(&gradient));
            match step {
                Some(delta) => {
                    let trial = &params + &delta;
                    let trial_cost = chi_square(model, trial.as_slice(), data);
                    if trial_cost.is_finite() && trial_cost <= cost {
                        // Accepted: measure the relative parameter change
                        // before moving on.
                        let rel_change = (0..n_params)
                            .map(|j| delta[j].abs() / (params[j].abs() + 1e-300))
                            .fold(0.0f64, f64::max);
                        params = trial;
                        cost = trial_cost;
                        cost_history.push(cost);
                        lambda = (lambda / 8.0).max(1e-14);
                        accepted = true;

                        let (j2, r2) = jacobian_and_residuals(model, params.as_slice(), data);
                        jac = j2;
                        resid = r2;
                        gradient = jac.transpose() * &resid;
                        gradient_norm = gradient.abs().max();
                        if rel_change < settings.param_tolerance
                            || gradient_norm < settings.gradient_tolerance
                        {
                            converged = true;
                        }
                    } else {
                        lambda *= 10.0;
                    }
                }
                None => lambda *= 10.0,
            }
            if lambda > 1e12 && !accepted {
                // Cannot decrease the cost in any damped direction; treat a
                // vanishing gradient as convergence, otherwise give up on
                // this iteration and let the cap report non-convergence.
                if gradient_norm < settings.gradient_tolerance * 1e3 {
                    converged = true;
                }
                break;
            }
        }
        if !accepted {
            break;
        }
    }

    // Covariance from the undamped normal matrix at the optimum, scaled by
    // the reduced chi-square.
    let normal = jac.transpose() * &jac;
    let dof = data.len().saturating_sub(n_params);
    let scale = if dof > 0 { cost / dof as f64 } else { 1.0 };
    let inv = invert_spd(&normal).ok_or_else(|| {
        Error::DegenerateFit(format!(
            "normal matrix is singular at the optimum for {model:?}"
        ))
    })?;
    let covariance: Vec<Vec<f64>> = (0..n_params)
        .map(|i| (0..n_params).map(|j| inv[(i, j)] * scale).collect())
        .collect();
    let uncertainties = (0..n_params)
        .map(|j| (inv[(j, j)] * scale).max(0.0).sqrt())
        .collect();

    Ok(FitResult {
        model,
        params: params.as_slice().to_vec(),
        uncertainties,
        covariance,
        residual_norm: cost.sqrt(),
        converged,
        iterations,
        gradient_norm,
        cost_history,
    })
}

fn chi_square(model: FitModel, params: &[f64], data: &[FitPoint]) -> f64 {
    data.iter()
        .map(|p| {
            let r = (p.y - model.eval(params, p.x)) / p.sigma;
            r * r
        })
        .sum()
}

/// Weighted Jacobian of the model and weighted residual vector.
fn jacobian_and_residuals(
    model: FitModel,
    params: &[f64],
    data: &[FitPoint],
) -> (DMatrix<f64>, DVector<f64>) {
    let (m, n) = (data.len(), model.n_params());
    let mut jac = DMatrix::zeros(m, n);
    let mut resid = DVector::zeros(m);
    let mut row = vec![0.0; n];
    for (i, p) in data.iter().enumerate() {
        model.jacobian_row(params, p.x, &mut row);
        for j in 0..n {
            jac[(i, j)] = row[j] / p.sigma;
        }
        resid[i] = (p.y - model.eval(params, p.x)) / p.sigma;
    }
    (jac, resid)
}

fn invert_spd(matrix: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    Cholesky::new(matrix.clone()).map(|ch| ch.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn gaussian_data(params: &[f64], xs: &[f64], sigma: f64) -> Vec<FitPoint> {
        xs.iter()
            .map(|&x| FitPoint::new(x, FitModel::Gaussian.eval(params, x), sigma))
            .collect()
    }

    #[test]
    fn exact_guess_is_a_fixed_point() {
        let truth = [5.0, 1.0, 2.0, 0.5];
        let xs: Vec<f64> = (0..40).map(|i| -5.0 + 0.25 * i as f64).collect();
        let data = gaussian_data(&truth, &xs, 0.1);
        let fit = fit_least_squares(FitModel::Gaussian, &data, &truth).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.iterations, 0);
        assert_abs_diff_eq!(fit.residual_norm, 0.0, epsilon = 1e-10);
        for (got, want) in fit.params.iter().zip(&truth) {
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn exact_line_is_recovered_to_machine_precision() {
        // Oracle: closed-form least squares on exact data is the line itself.
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let data: Vec<FitPoint> = xs
            .iter()
            .map(|&x| FitPoint::new(x, 3.25 * x - 1.5, 1.0))
            .collect();
        let guess = moment_guess(FitModel::Linear, &data);
        let fit = fit_least_squares(FitModel::Linear, &data, &guess).unwrap();
        assert!(fit.converged);
        assert_relative_eq!(fit.param("slope"), 3.25, max_relative = 1e-12);
        assert_relative_eq!(fit.param("offset"), -1.5, max_relative = 1e-12);
    }

    #[test]
    fn noiseless_gaussian_from_moment_guess() {
        let truth = [12.0, -0.7, 3.0, 2.0];
        let xs: Vec<f64> = (0..120).map(|i| -15.0 + 0.25 * i as f64).collect();
        let data = gaussian_data(&truth, &xs, 0.05);
        let guess = moment_guess(FitModel::Gaussian, &data);
        let fit = fit_least_squares(FitModel::Gaussian, &data, &guess).unwrap();
        assert!(fit.converged);
        for (got, want) in fit.params.iter().zip(&truth) {
            assert_relative_eq!(got, want, max_relative = 1e-9);
        }
    }

    #[test]
    fn noiseless_lorentzian_from_moment_guess() {
        let truth = [30.0, 0.0, 7.0, 2.0];
        let xs: Vec<f64> = (0..41).map(|i| -20.0 + i as f64).collect();
        let data: Vec<FitPoint> = xs
            .iter()
            .map(|&x| FitPoint::new(x, FitModel::Lorentzian.eval(&truth, x), 0.1))
            .collect();
        let guess = moment_guess(FitModel::Lorentzian, &data);
        let fit = fit_least_squares(FitModel::Lorentzian, &data, &guess).unwrap();
        assert!(fit.converged);
        assert_relative_eq!(fit.param("hwhm"), 7.0, max_relative = 1e-9);
        assert_abs_diff_eq!(fit.param("center"), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn analytic_jacobians_match_central_differences() {
        let cases = [
            (FitModel::Gaussian, vec![5.0, 1.0, 2.0, 0.5]),
            (FitModel::Lorentzian, vec![30.0, -2.0, 7.0, 1.0]),
            (FitModel::Linear, vec![3.0, -1.0]),
        ];
        for (model, params) in &cases {
            let mut analytic = vec![0.0; model.n_params()];
            for &x in &[-3.3, -0.4, 0.9, 4.7] {
                model.jacobian_row(params, x, &mut analytic);
                for j in 0..model.n_params() {
                    let scale = params[j].abs().max(1.0);
                    let h = 1e-6 * scale;
                    let mut plus = params.clone();
                    let mut minus = params.clone();
                    plus[j] += h;
                    minus[j] -= h;
                    let numeric = (model.eval(&plus, x) - model.eval(&minus, x)) / (2.0 * h);
                    let denom = analytic[j].abs().max(1e-8);
                    assert!(
                        ((analytic[j] - numeric) / denom).abs() < 1e-6,
                        "{model:?} param {j} at x = {x}: analytic {} vs numeric {numeric}",
                        analytic[j]
                    );
                }
            }
        }
    }

    #[test]
    fn cost_history_is_non_increasing() {
        let truth = [8.0, 0.5, 1.5, 1.0];
        let xs: Vec<f64> = (0..60).map(|i| -6.0 + 0.2 * i as f64).collect();
        let data = gaussian_data(&truth, &xs, 0.2);
        let rough = [4.0, -0.5, 3.0, 0.0];
        let fit = fit_least_squares(FitModel::Gaussian, &data, &rough).unwrap();
        assert!(fit.converged);
        for pair in fit.cost_history.windows(2) {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn too_few_points_and_bad_sigmas_are_rejected() {
        let data = vec![FitPoint::new(0.0, 1.0, 1.0); 3];
        assert!(fit_least_squares(FitModel::Gaussian, &data, &[1.0, 0.0, 1.0, 0.0]).is_err());

        let bad = vec![
            FitPoint::new(0.0, 1.0, 0.0),
            FitPoint::new(1.0, 2.0, 1.0),
            FitPoint::new(2.0, 3.0, 1.0),
        ];
        assert!(fit_least_squares(FitModel::Linear, &bad, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn degenerate_geometry_is_reported() {
        // All points at the same x: slope and offset are indistinguishable.
        let data: Vec<FitPoint> = (0..5).map(|i| FitPoint::new(2.0, i as f64, 1.0)).collect();
        let err = fit_least_squares(FitModel::Linear, &data, &[0.0, 0.0]);
        assert!(matches!(err, Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn covariance_is_symmetric_and_uncertainties_nonnegative() {
        let truth = [10.0, 0.0, 2.0, 1.0];
        let xs: Vec<f64> = (0..50).map(|i| -5.0 + 0.2 * i as f64).collect();
        let data = gaussian_data(&truth, &xs, 0.3);
        let fit = fit_least_squares(FitModel::Gaussian, &data, &truth).unwrap();
        for i in 0..4 {
            assert!(fit.uncertainties[i] >= 0.0);
            for j in 0..4 {
                assert_abs_diff_eq!(
                    fit.covariance[i][j],
                    fit.covariance[j][i],
                    epsilon = 1e-12 * fit.covariance[i][i].abs().max(1e-300)
                );
            }
        }
    }
}
