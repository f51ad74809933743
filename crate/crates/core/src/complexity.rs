//! Rademacher complexity of norm-bounded linear hypotheses and the sample
//! complexity formulas built on it.
//!
//! For `H = { x -> w . x : ||w||_2 <= phi }` the supremum inside the
//! empirical Rademacher complexity has a closed form,
//!
//! ```text
//! sup_{||w|| <= phi} (1/m) sum_i s_i (w . x_i) = (phi / m) || sum_i s_i x_i ||_2
//! ```
//!
//! so each Monte-Carlo draw costs one signed row sum. The analytic bound is
//! `R * phi / sqrt(m)` with `R = max_i ||x_i||_2`.
//!
//! Sample complexities are big-O expressions; they are evaluated with an
//! explicit leading constant (1 by default) and are meaningful as scores
//! for ranking subgroups, not as absolute sample counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linmodel::NormStats;
use crate::matrix::{norm2, Matrix};

pub const DEFAULT_DRAWS: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RademacherResult {
    /// Monte-Carlo mean of the per-draw supremum.
    pub estimate: f64,
    pub std_error: f64,
    pub n_draws: usize,
    /// `R * phi / sqrt(m)`.
    pub analytic_bound: f64,
    /// `estimate * sqrt(m)`, the `r` in `R_m(H) = r / sqrt(m)`.
    pub r_coefficient: f64,
}

/// Generator for sign vector `draw`. Each draw owns a ChaCha stream, so
/// draws can be evaluated in any order.
fn draw_rng(seed: u64, draw: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw as u64);
    rng
}

/// `(1/m) || sum_i s_i x_i ||_2` for one sign vector.
fn unit_supremum(x: &Matrix, rng: &mut ChaCha8Rng, acc: &mut [f64]) -> f64 {
    acc.iter_mut().for_each(|a| *a = 0.0);
    for row in x.iter_rows() {
        if rng.random::<bool>() {
            acc.iter_mut().zip(row).for_each(|(a, v)| *a += v);
        } else {
            acc.iter_mut().zip(row).for_each(|(a, v)| *a -= v);
        }
    }
    norm2(acc) / x.rows() as f64
}

/// Monte-Carlo estimate of the empirical Rademacher complexity of the
/// linear class with `||w||_2 <= phi` on the rows of `x`.
///
/// Per-draw values are computed for `phi = 1` and scaled afterwards, so the
/// estimate is exactly linear in `phi` for a fixed seed.
pub fn estimate_rademacher(
    x: &Matrix,
    phi: f64,
    n_draws: usize,
    seed: u64,
) -> Result<RademacherResult> {
    if x.is_empty() {
        return Err(Error::config("Rademacher estimate needs at least one row"));
    }
    if !(phi >= 0.0 && phi.is_finite()) {
        return Err(Error::config(format!(
            "phi {phi} must be non-negative and finite"
        )));
    }
    if n_draws == 0 {
        return Err(Error::config("n_draws must be at least 1"));
    }
    let m = x.rows();
    let values: Vec<f64> = (0..n_draws)
        .into_par_iter()
        .map_init(
            || vec![0.0; x.cols()],
            |acc, draw| unit_supremum(x, &mut draw_rng(seed, draw), acc),
        )
        .collect();
    let n = n_draws as f64;
    // shifted by the first draw: constant draws give an exact mean and zero spread
    let shift = values[0];
    let offset = values.iter().map(|v| v - shift).sum::<f64>() / n;
    let mean = shift + offset;
    let std_error = if n_draws > 1 {
        let sq = values.iter().map(|v| (v - shift).powi(2)).sum::<f64>();
        let var = ((sq - n * offset * offset) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let r = crate::linmodel::max_row_norm(x);
    let estimate = phi * mean;
    Ok(RademacherResult {
        estimate,
        std_error: phi * std_error,
        n_draws,
        analytic_bound: r * phi / (m as f64).sqrt(),
        r_coefficient: estimate * (m as f64).sqrt(),
    })
}

/// `R * phi / sqrt(m)`.
pub fn analytic_rademacher_bound(stats: &NormStats) -> f64 {
    stats.r * stats.phi / (stats.m as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityBudget {
    pub delta: f64,
    pub eps_alpha: f64,
    pub eps_gamma: f64,
    /// Leading constant of the big-O expressions.
    pub constant: f64,
}

impl Default for ComplexityBudget {
    fn default() -> Self {
        ComplexityBudget {
            delta: 0.05,
            eps_alpha: 0.1,
            eps_gamma: 0.1,
            constant: 1.0,
        }
    }
}

fn open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!(
            "{name} = {v} must lie strictly inside (0, 1)"
        )))
    }
}

impl ComplexityBudget {
    pub fn validate(&self) -> Result<()> {
        open_unit("delta", self.delta)?;
        open_unit("eps_alpha", self.eps_alpha)?;
        open_unit("eps_gamma", self.eps_gamma)?;
        if !(self.constant > 0.0 && self.constant.is_finite()) {
            return Err(Error::config(format!(
                "constant {} must be positive",
                self.constant
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PacfVariant {
    /// Guarantee for every hypothesis in the class:
    /// `C R^2 phi^2 ln(1/delta) / (eps_alpha^2 eps_gamma^2)`.
    Uniform,
    /// Guarantee for the empirical-error minimizer:
    /// `C R^2 phi^2 ln(1/delta) / min(eps_alpha, eps_gamma)^2`.
    Erm,
}

/// Sample complexity score for probably approximately metric-fair learning
/// with a linear class whose Rademacher complexity is `R phi / sqrt(m)`.
pub fn pacf_sample_complexity(
    stats: &NormStats,
    budget: &ComplexityBudget,
    variant: PacfVariant,
) -> Result<f64> {
    pacf_from_r(stats.r * stats.phi, budget, variant)
}

/// Same as [`pacf_sample_complexity`] for an arbitrary Rademacher
/// coefficient `r` (where `R_m(H) = r / sqrt(m)`).
pub fn pacf_from_r(r: f64, budget: &ComplexityBudget, variant: PacfVariant) -> Result<f64> {
    budget.validate()?;
    let numerator = budget.constant * r * r * (1.0 / budget.delta).ln();
    let denominator = match variant {
        PacfVariant::Uniform => budget.eps_alpha.powi(2) * budget.eps_gamma.powi(2),
        PacfVariant::Erm => budget.eps_alpha.min(budget.eps_gamma).powi(2),
    };
    Ok(numerator / denominator)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollaborativeBounds {
    pub d: usize,
    pub k: usize,
    pub epsilon: f64,
    pub delta: f64,
    /// `(ln^2 k / eps) ((d + k) ln(1/eps) + k ln(1/delta))`.
    pub centralized: f64,
    /// `centralized / ln k`; absent for `k = 1`.
    pub personalized: Option<f64>,
    /// `d k (1 - delta) / (4 eps)`.
    pub uniform_lower: f64,
    /// False when `epsilon` or `delta` is outside (0, 0.1], where the
    /// uniform-convergence lower bound is stated.
    pub in_validity_domain: bool,
}

/// Collaborative PAC bounds for `k` subgroups and a class of VC dimension `d`.
pub fn collaborative_bounds(
    d: usize,
    k: usize,
    epsilon: f64,
    delta: f64,
) -> Result<CollaborativeBounds> {
    if d == 0 || k == 0 {
        return Err(Error::config("d and k must be at least 1"));
    }
    open_unit("epsilon", epsilon)?;
    open_unit("delta", delta)?;
    let in_validity_domain = epsilon <= 0.1 && delta <= 0.1;
    if !in_validity_domain {
        log::warn!("epsilon = {epsilon}, delta = {delta}: the uniform lower bound is stated for values in (0, 0.1]");
    }
    let (df, kf) = (d as f64, k as f64);
    let ln_k = kf.ln();
    let centralized =
        ln_k * ln_k / epsilon * ((df + kf) * (1.0 / epsilon).ln() + kf * (1.0 / delta).ln());
    let personalized = (k >= 2).then(|| centralized / ln_k);
    Ok(CollaborativeBounds {
        d,
        k,
        epsilon,
        delta,
        centralized,
        personalized,
        uniform_lower: df * kf * (1.0 - delta) / (4.0 * epsilon),
        in_validity_domain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_is_exact() {
        let x = Matrix::from_rows(&[[0.0, 2.0]]);
        let r = estimate_rademacher(&x, 3.0, 50, 1).unwrap();
        assert_eq!(r.estimate, 6.0);
        assert_eq!(r.std_error, 0.0);
        assert_eq!(r.analytic_bound, 6.0);
    }

    #[test]
    fn zero_inputs() {
        let r = estimate_rademacher(&Matrix::zeros(5, 3), 2.5, 20, 1).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert_eq!(r.std_error, 0.0);
    }

    #[test]
    fn rejects_empty_and_bad_args() {
        assert!(estimate_rademacher(&Matrix::zeros(0, 3), 1.0, 10, 0).is_err());
        assert!(estimate_rademacher(&Matrix::zeros(1, 3), -1.0, 10, 0).is_err());
        assert!(estimate_rademacher(&Matrix::zeros(1, 3), 1.0, 0, 0).is_err());
    }

    #[test]
    fn analytic_bound_values() {
        let s = NormStats {
            r: 0.0,
            phi: 4.0,
            m: 9,
        };
        assert_eq!(analytic_rademacher_bound(&s), 0.0);
        let s = NormStats {
            r: 2.0,
            phi: 3.0,
            m: 36,
        };
        assert_eq!(analytic_rademacher_bound(&s), 1.0);
    }

    #[test]
    fn pacf_unit_plug_in() {
        let s = NormStats {
            r: 1.0,
            phi: 1.0,
            m: 1,
        };
        let budget = ComplexityBudget {
            delta: (-1f64).exp(),
            eps_alpha: 1.0 - 1e-9,
            eps_gamma: 1.0 - 1e-9,
            constant: 1.0,
        };
        let v = pacf_sample_complexity(&s, &budget, PacfVariant::Uniform).unwrap();
        assert!((v - 1.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn pacf_reference_values() {
        let s = NormStats {
            r: 2.0,
            phi: 3.0,
            m: 1,
        };
        let budget = ComplexityBudget {
            delta: 0.05,
            eps_alpha: 0.1,
            eps_gamma: 0.1,
            constant: 1.0,
        };
        // 36 * ln(20) = 107.846...
        let ln20 = 20f64.ln();
        assert!((ln20 - 2.995_732_273_553_991).abs() < 1e-15);
        let uni = pacf_sample_complexity(&s, &budget, PacfVariant::Uniform).unwrap();
        let erm = pacf_sample_complexity(&s, &budget, PacfVariant::Erm).unwrap();
        assert!((uni - 1_078_463.618_479_436_8).abs() < 1e-6, "{uni}");
        assert!((erm - 10_784.636_184_794_368).abs() < 1e-8, "{erm}");
    }

    #[test]
    fn budget_validation() {
        let mut b = ComplexityBudget {
            delta: 1.5,
            ..ComplexityBudget::default()
        };
        assert!(b.validate().is_err());
        b.delta = 0.0;
        assert!(b.validate().is_err());
        b = ComplexityBudget::default();
        b.constant = 0.0;
        assert!(b.validate().is_err());
        assert!(ComplexityBudget::default().validate().is_ok());
    }

    #[test]
    fn collaborative_reference_values() {
        let adult = collaborative_bounds(108, 4, 0.1, 0.05).unwrap();
        assert!((adult.uniform_lower - 1026.0).abs() < 1e-9);
        let german = collaborative_bounds(61, 4, 0.1, 0.05).unwrap();
        assert!((german.uniform_lower - 579.5).abs() < 1e-9);
        assert!(adult.in_validity_domain);
        let p = adult.personalized.unwrap();
        assert!((p * 4f64.ln() - adult.centralized).abs() < 1e-9);
    }

    #[test]
    fn collaborative_single_group() {
        let b = collaborative_bounds(10, 1, 0.1, 0.05).unwrap();
        assert_eq!(b.centralized, 0.0);
        assert_eq!(b.personalized, None);
        assert!(
            !collaborative_bounds(10, 3, 0.5, 0.05)
                .unwrap()
                .in_validity_domain
        );
        assert!(collaborative_bounds(0, 3, 0.1, 0.05).is_err());
    }
}
