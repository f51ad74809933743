use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

/// Settings shared by single fits and cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda_grid: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Convergence threshold on the Euclidean norm of the full gradient.
    pub tol: f64,
    pub fit_intercept: bool,
    /// Keep the label ratio of every fold close to the overall ratio.
    pub stratified: bool,
    /// Shuffle rows (seeded) before assigning folds.
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda_grid: default_lambda_grid(),
            folds: 10,
            seed: 0,
            max_iters: 10_000,
            tol: 1e-8,
            fit_intercept: true,
            stratified: true,
            shuffle: true,
        }
    }
}

/// Nine log-spaced penalties, 1e-4 through 1e4.
pub fn default_lambda_grid() -> Vec<f64> {
    (-4..=4).map(|e| 10f64.powi(e)).collect()
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_grid.is_empty() {
            return Err(Error::config("lambda_grid is empty"));
        }
        if let Some(l) = self
            .lambda_grid
            .iter()
            .find(|l| !(l.is_finite() && **l > 0.0))
        {
            return Err(Error::config(format!(
                "lambda {l} must be positive and finite"
            )));
        }
        if self.folds < 2 {
            return Err(Error::config("folds must be at least 2"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub lambda_star: f64,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Mean held-out log loss at `lambda_star`, when chosen by cross-validation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv_log_loss: Option<f64>,
}

impl TrainedModel {
    pub fn dim(&self) -> usize {
        self.w.len()
    }
}

/// `log(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean log loss of `(w, b)` on `(x, y)`, no penalty.
pub fn mean_log_loss(x: &Matrix, y: &[f64], w: &[f64], b: f64) -> f64 {
    let total: f64 = x
        .iter_rows()
        .zip(y)
        .map(|(row, &yi)| {
            let z = dot(row, w) + b;
            softplus(z) - yi * z
        })
        .sum();
    total / x.rows() as f64
}

/// Mean log loss plus `(lambda / 2) * ||w||^2` and its gradient with respect
/// to `params = [w..., b]`. The intercept is not penalized.
pub fn regularized_objective(
    x: &Matrix,
    y: &[f64],
    lambda: f64,
    params: &[f64],
    grad: &mut [f64],
) -> f64 {
    let d = x.cols();
    let (w, b) = (&params[..d], params[d]);
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    let mut bias_grad = 0.0;
    for (row, &yi) in x.iter_rows().zip(y) {
        let z = dot(row, w) + b;
        loss += softplus(z) - yi * z;
        let r = sigmoid(z) - yi;
        bias_grad += r;
        if r != 0.0 {
            for (g, &xj) in grad[..d].iter_mut().zip(row) {
                *g += r * xj;
            }
        }
    }
    let inv_m = 1.0 / x.rows() as f64;
    let mut sq = 0.0;
    for (g, &wj) in grad[..d].iter_mut().zip(w) {
        *g = *g * inv_m + lambda * wj;
        sq += wj * wj;
    }
    grad[d] = bias_grad * inv_m;
    loss * inv_m + 0.5 * lambda * sq
}

fn check_inputs(x: &Matrix, y: &[f64], lambda: f64) -> Result<()> {
    if x.is_empty() {
        return Err(Error::config("training matrix is empty"));
    }
    if y.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            found: y.len(),
        });
    }
    if !x.all_finite() {
        return Err(Error::NonFinite("feature matrix"));
    }
    if !y.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("labels"));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::config(format!(
            "lambda {lambda} must be positive and finite"
        )));
    }
    Ok(())
}

/// Fits L2-regularized logistic regression at a single penalty.
///
/// The optimizer is full-batch L-BFGS with Armijo backtracking started from
/// zero, so the result is a deterministic function of the inputs. When the
/// iteration cap is hit the last (and lowest-loss) iterate is returned with
/// `converged = false`.
pub fn train_logistic(
    x: &Matrix,
    y: &[f64],
    lambda: f64,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    check_inputs(x, y, lambda)?;
    let fit = minimize(x, y, lambda, config, None, None);
    Ok(fit.into_model(x.cols(), lambda))
}

/// Same as [`train_logistic`], also returning the objective value after
/// every accepted step (the first entry is the starting loss).
pub fn train_logistic_traced(
    x: &Matrix,
    y: &[f64],
    lambda: f64,
    config: &TrainConfig,
) -> Result<(TrainedModel, Vec<f64>)> {
    check_inputs(x, y, lambda)?;
    let mut trace = Vec::new();
    let fit = minimize(x, y, lambda, config, None, Some(&mut trace));
    Ok((fit.into_model(x.cols(), lambda), trace))
}

/// Warm-started fit used along a regularization path.
pub(crate) fn train_from(
    x: &Matrix,
    y: &[f64],
    lambda: f64,
    config: &TrainConfig,
    start: &[f64],
) -> TrainedModel {
    minimize(x, y, lambda, config, Some(start), None).into_model(x.cols(), lambda)
}

struct Fit {
    params: Vec<f64>,
    iterations: usize,
    grad_norm: f64,
    converged: bool,
}

impl Fit {
    fn into_model(mut self, d: usize, lambda: f64) -> TrainedModel {
        let b = self.params[d];
        self.params.truncate(d);
        TrainedModel {
            w: self.params,
            b,
            lambda_star: lambda,
            converged: self.converged,
            iterations: self.iterations,
            grad_norm: self.grad_norm,
            cv_log_loss: None,
        }
    }
}

const HISTORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;
/// Absolute slack on the Armijo test, covering rounding in the loss itself
/// once the predicted decrease falls below machine precision.
const LOSS_ROUNDING: f64 = 1e-14;
/// Consecutive steps without a representable loss decrease before giving up.
const STALL_LIMIT: usize = 50;

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn minimize(
    x: &Matrix,
    y: &[f64],
    lambda: f64,
    config: &TrainConfig,
    start: Option<&[f64]>,
    mut trace: Option<&mut Vec<f64>>,
) -> Fit {
    let d = x.cols();
    let n = d + 1;
    let mut params = match start {
        Some(s) => s.to_vec(),
        None => vec![0.0; n],
    };
    if !config.fit_intercept {
        params[d] = 0.0;
    }
    let project = |g: &mut [f64]| {
        if !config.fit_intercept {
            g[d] = 0.0;
        }
    };

    let mut grad = vec![0.0; n];
    let mut loss = regularized_objective(x, y, lambda, &params, &mut grad);
    project(&mut grad);
    if let Some(t) = trace.as_deref_mut() {
        t.push(loss);
    }

    let mut s_hist: Vec<Vec<f64>> = Vec::with_capacity(HISTORY);
    let mut y_hist: Vec<Vec<f64>> = Vec::with_capacity(HISTORY);
    let mut rho_hist: Vec<f64> = Vec::with_capacity(HISTORY);

    let mut trial = vec![0.0; n];
    let mut trial_grad = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut alpha = [0.0; HISTORY];

    let mut grad_norm = norm(&grad);
    let mut iterations = 0;
    let mut stalled = 0;
    while grad_norm > config.tol && iterations < config.max_iters {
        iterations += 1;

        // two-loop recursion: dir = -H * grad
        dir.copy_from_slice(&grad);
        for i in (0..s_hist.len()).rev() {
            alpha[i] = rho_hist[i] * dot(&s_hist[i], &dir);
            for (q, yv) in dir.iter_mut().zip(&y_hist[i]) {
                *q -= alpha[i] * yv;
            }
        }
        let gamma = match (s_hist.last(), y_hist.last()) {
            (Some(s), Some(yv)) => dot(s, yv) / dot(yv, yv),
            _ => 1.0 / grad_norm.max(1.0),
        };
        dir.iter_mut().for_each(|q| *q *= gamma);
        for i in 0..s_hist.len() {
            let beta = rho_hist[i] * dot(&y_hist[i], &dir);
            for (q, sv) in dir.iter_mut().zip(&s_hist[i]) {
                *q += (alpha[i] - beta) * sv;
            }
        }
        dir.iter_mut().for_each(|q| *q = -*q);
        project(&mut dir);

        let mut slope = dot(&grad, &dir);
        if !(slope < 0.0) {
            // lost the descent property; restart from steepest descent
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            let scale = 1.0 / grad_norm.max(1.0);
            for (q, g) in dir.iter_mut().zip(&grad) {
                *q = -g * scale;
            }
            slope = dot(&grad, &dir);
        }

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for ((t, p), q) in trial.iter_mut().zip(&params).zip(&dir) {
                *t = p + step * q;
            }
            let trial_loss = regularized_objective(x, y, lambda, &trial, &mut trial_grad);
            if trial_loss.is_finite()
                && trial_loss <= loss + ARMIJO_C1 * step * slope + LOSS_ROUNDING
            {
                project(&mut trial_grad);
                let s: Vec<f64> = trial.iter().zip(&params).map(|(a, b)| a - b).collect();
                let yv: Vec<f64> = trial_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &yv);
                if sy > 1e-12 * norm(&s) * norm(&yv) && sy > 0.0 {
                    if s_hist.len() == HISTORY {
                        s_hist.remove(0);
                        y_hist.remove(0);
                        rho_hist.remove(0);
                    }
                    rho_hist.push(1.0 / sy);
                    s_hist.push(s);
                    y_hist.push(yv);
                }
                std::mem::swap(&mut params, &mut trial);
                std::mem::swap(&mut grad, &mut trial_grad);
                if loss - trial_loss <= f64::EPSILON * loss.abs() {
                    stalled += 1;
                } else {
                    stalled = 0;
                }
                loss = trial_loss;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            if s_hist.is_empty() {
                // no progress possible even along the gradient
                break;
            }
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            continue;
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(loss);
        }
        grad_norm = norm(&grad);
        if stalled >= STALL_LIMIT {
            break;
        }
    }

    Fit {
        params,
        iterations,
        converged: grad_norm <= config.tol,
        grad_norm,
    }
}

/// Sigmoid probabilities `sigmoid(w . x + b)` per row.
pub fn predict_scores(model: &TrainedModel, x: &Matrix) -> Result<Vec<f64>> {
    if x.cols() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: x.cols(),
        });
    }
    Ok(x.iter_rows()
        .map(|row| sigmoid(dot(row, &model.w) + model.b))
        .collect())
}
