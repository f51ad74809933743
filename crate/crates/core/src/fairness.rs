//! Empirical approximate metric-fairness.
//!
//! A model `h` is `(alpha, gamma)`-metric-fair on a sample when the fraction
//! of pairs with `|h(x) - h(x')| > d(x, x') + gamma` is at most `alpha`. The
//! metric `d` ignores every coordinate derived from a sensitive attribute.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::EncodedDataset;
use crate::matrix::Matrix;

/// Scaled Euclidean distance over the non-sensitive coordinates:
/// `||(x - x')|_mask||_2 / sqrt(|mask|)`. For inputs in [0, 1] the distance
/// lies in [0, 1], the same range as the score gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMetric {
    pub mask: Vec<bool>,
    pub scale: f64,
}

impl SimilarityMetric {
    pub fn from_mask(mask: Vec<bool>) -> Result<Self> {
        let active = mask.iter().filter(|&&b| b).count();
        if active == 0 {
            return Err(Error::config(
                "similarity metric needs at least one non-sensitive coordinate",
            ));
        }
        Ok(SimilarityMetric {
            mask,
            scale: (active as f64).sqrt(),
        })
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let sq: f64 = a
            .iter()
            .zip(b)
            .zip(&self.mask)
            .filter(|(_, &keep)| keep)
            .map(|((x, y), _)| (x - y) * (x - y))
            .sum();
        sq.sqrt() / self.scale
    }

    /// Rows restricted to the active coordinates, for repeated distance
    /// evaluation.
    fn project(&self, x: &Matrix) -> Matrix {
        let cols: Vec<usize> = (0..self.mask.len()).filter(|&j| self.mask[j]).collect();
        let mut data = Vec::with_capacity(x.rows() * cols.len());
        for row in x.iter_rows() {
            data.extend(cols.iter().map(|&j| row[j]));
        }
        Matrix::from_vec(x.rows(), cols.len(), data)
    }
}

/// Pairs from one row and their excesses.
type PairBlock = (Vec<(usize, usize)>, Vec<f64>);

pub fn build_metric(ds: &EncodedDataset) -> Result<SimilarityMetric> {
    SimilarityMetric::from_mask(ds.non_sensitive_mask.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessConfig {
    /// Largest sample evaluated over all pairs; bigger samples use a seeded
    /// uniform subsample of pairs.
    pub exhaustive_cap: usize,
    pub sampled_pairs: usize,
    pub seed: u64,
    /// Number of worst violating pairs kept in the estimate.
    pub report_worst: usize,
}

impl Default for FairnessConfig {
    fn default() -> Self {
        FairnessConfig {
            exhaustive_cap: 2_000,
            sampled_pairs: 200_000,
            seed: 0,
            report_worst: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViolatingPair {
    pub i: usize,
    pub j: usize,
    /// `|h(x_i) - h(x_j)| - d(x_i, x_j)`.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessEstimate {
    pub alpha_hat: f64,
    pub gamma: f64,
    pub pairs_evaluated: usize,
    pub exhaustive: bool,
    pub violating_pairs: Vec<ViolatingPair>,
}

/// Excess `|dh| - d` of every evaluated pair.
struct PairExcess {
    pairs: Vec<(usize, usize)>,
    excess: Vec<f64>,
    exhaustive: bool,
}

fn check(scores: &[f64], x: &Matrix, metric: &SimilarityMetric) -> Result<()> {
    if scores.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            found: scores.len(),
        });
    }
    if metric.mask.len() != x.cols() {
        return Err(Error::DimensionMismatch {
            expected: metric.mask.len(),
            found: x.cols(),
        });
    }
    if x.rows() < 2 {
        return Err(Error::config("metric fairness needs at least two rows"));
    }
    if !scores.iter().all(|s| s.is_finite()) {
        return Err(Error::NonFinite("scores"));
    }
    Ok(())
}

fn pair_excess(
    scores: &[f64],
    x: &Matrix,
    metric: &SimilarityMetric,
    cfg: &FairnessConfig,
) -> PairExcess {
    let proj = metric.project(x);
    let dist = |i: usize, j: usize| {
        let sq: f64 = proj
            .row(i)
            .iter()
            .zip(proj.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        sq.sqrt() / metric.scale
    };
    let m = x.rows();
    if m <= cfg.exhaustive_cap {
        let blocks: Vec<PairBlock> = (0..m)
            .into_par_iter()
            .map(|i| {
                let pairs: Vec<(usize, usize)> = (i + 1..m).map(|j| (i, j)).collect();
                let excess = pairs
                    .iter()
                    .map(|&(i, j)| (scores[i] - scores[j]).abs() - dist(i, j))
                    .collect();
                (pairs, excess)
            })
            .collect();
        let (pairs, excess): (Vec<_>, Vec<_>) = blocks.into_iter().unzip();
        PairExcess {
            pairs: pairs.concat(),
            excess: excess.concat(),
            exhaustive: true,
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let pairs: Vec<(usize, usize)> = (0..cfg.sampled_pairs)
            .map(|_| loop {
                let i = rng.random_range(0..m);
                let j = rng.random_range(0..m);
                if i != j {
                    break (i.min(j), i.max(j));
                }
            })
            .collect();
        let excess = pairs
            .par_iter()
            .map(|&(i, j)| (scores[i] - scores[j]).abs() - dist(i, j))
            .collect();
        PairExcess {
            pairs,
            excess,
            exhaustive: false,
        }
    }
}

/// Fraction of distinct unordered pairs violating the metric condition at
/// slack `gamma`.
pub fn empirical_metric_fairness(
    scores: &[f64],
    x: &Matrix,
    metric: &SimilarityMetric,
    gamma: f64,
    cfg: &FairnessConfig,
) -> Result<FairnessEstimate> {
    if !(gamma >= 0.0) {
        return Err(Error::config(format!("gamma {gamma} must be non-negative")));
    }
    check(scores, x, metric)?;
    let pe = pair_excess(scores, x, metric, cfg);
    Ok(estimate_from(&pe, gamma, cfg.report_worst))
}

fn estimate_from(pe: &PairExcess, gamma: f64, report_worst: usize) -> FairnessEstimate {
    let mut violating: Vec<ViolatingPair> = pe
        .pairs
        .iter()
        .zip(&pe.excess)
        .filter(|(_, &e)| e > gamma)
        .map(|(&(i, j), &excess)| ViolatingPair { i, j, excess })
        .collect();
    let count = violating.len();
    violating.sort_by(|a, b| {
        b.excess
            .total_cmp(&a.excess)
            .then((a.i, a.j).cmp(&(b.i, b.j)))
    });
    violating.truncate(report_worst);
    FairnessEstimate {
        alpha_hat: count as f64 / pe.excess.len() as f64,
        gamma,
        pairs_evaluated: pe.excess.len(),
        exhaustive: pe.exhaustive,
        violating_pairs: violating,
    }
}

/// `alpha_hat` at each slack in `gammas`, sharing one pair evaluation.
pub fn alpha_curve(
    scores: &[f64],
    x: &Matrix,
    metric: &SimilarityMetric,
    gammas: &[f64],
    cfg: &FairnessConfig,
) -> Result<Vec<FairnessEstimate>> {
    if let Some(g) = gammas.iter().find(|g| !(**g >= 0.0)) {
        return Err(Error::config(format!("gamma {g} must be non-negative")));
    }
    check(scores, x, metric)?;
    let pe = pair_excess(scores, x, metric, cfg);
    Ok(gammas
        .iter()
        .map(|&g| estimate_from(&pe, g, cfg.report_worst))
        .collect())
}

/// Smallest `gamma >= 0` whose empirical violation rate is at most
/// `alpha_target`, read off the sorted pairwise excesses.
pub fn min_gamma_for_alpha(
    scores: &[f64],
    x: &Matrix,
    metric: &SimilarityMetric,
    alpha_target: f64,
    cfg: &FairnessConfig,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha_target) {
        return Err(Error::config(format!(
            "alpha target {alpha_target} must lie in [0, 1]"
        )));
    }
    check(scores, x, metric)?;
    let mut excess = pair_excess(scores, x, metric, cfg).excess;
    let n = excess.len();
    // largest count c of violating pairs with c / n <= alpha_target
    let mut allowed = (alpha_target * n as f64).floor() as usize;
    while allowed < n && (allowed + 1) as f64 / n as f64 <= alpha_target {
        allowed += 1;
    }
    while allowed > 0 && allowed as f64 / n as f64 > alpha_target {
        allowed -= 1;
    }
    if allowed >= n {
        return Ok(0.0);
    }
    excess.sort_by(|a, b| b.total_cmp(a));
    Ok(excess[allowed].max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metric(d: usize) -> SimilarityMetric {
        SimilarityMetric::from_mask(vec![true; d]).unwrap()
    }

    #[test]
    fn identity_and_sensitive_blindness() {
        let m = SimilarityMetric::from_mask(vec![true, false, true]).unwrap();
        assert_eq!(m.distance(&[0.3, 0.1, 0.9], &[0.3, 0.1, 0.9]), 0.0);
        assert_eq!(m.distance(&[0.3, 0.0, 0.9], &[0.3, 1.0, 0.9]), 0.0);
    }

    #[test]
    fn unit_cube_diagonal() {
        assert_eq!(metric(3).distance(&[0.0; 3], &[1.0; 3]), 1.0);
    }

    #[test]
    fn all_sensitive_rejected() {
        assert!(SimilarityMetric::from_mask(vec![false, false]).is_err());
    }

    #[test]
    fn constant_predictor_is_fair() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]]);
        let est =
            empirical_metric_fairness(&[0.7; 3], &x, &metric(2), 0.0, &FairnessConfig::default())
                .unwrap();
        assert_eq!(est.alpha_hat, 0.0);
        assert_eq!(est.pairs_evaluated, 3);
        assert!(est.exhaustive);
    }

    #[test]
    fn slack_of_one_is_always_fair() {
        let x = Matrix::from_rows(&[[0.0], [0.0], [0.0]]);
        let est = empirical_metric_fairness(
            &[0.0, 1.0, 0.5],
            &x,
            &metric(1),
            1.0,
            &FairnessConfig::default(),
        )
        .unwrap();
        assert_eq!(est.alpha_hat, 0.0);
    }

    #[test]
    fn four_points_by_hand() {
        // identical inputs, so d = 0 for all six pairs
        let x = Matrix::from_rows(&[[0.5], [0.5], [0.5], [0.5]]);
        let scores = [0.1, 0.2, 0.5, 0.9];
        // gaps: .1 .4 .8 .3 .7 .4 -> above 0.35: .4 .8 .7 .4
        let est =
            empirical_metric_fairness(&scores, &x, &metric(1), 0.35, &FairnessConfig::default())
                .unwrap();
        assert_eq!(est.alpha_hat, 4.0 / 6.0);
        assert_eq!(est.violating_pairs[0].i, 0);
        assert_eq!(est.violating_pairs[0].j, 3);
    }

    #[test]
    fn min_gamma_edges() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [0.2]]);
        let scores = [0.9, 0.1, 0.3];
        let cfg = FairnessConfig::default();
        assert_eq!(
            min_gamma_for_alpha(&scores, &x, &metric(1), 1.0, &cfg).unwrap(),
            0.0
        );
        // excesses: |0.8|-1, |0.6|-0.2, |0.2|-0.8 -> max 0.4
        let g = min_gamma_for_alpha(&scores, &x, &metric(1), 0.0, &cfg).unwrap();
        assert!((g - 0.4).abs() < 1e-15);
        assert!(min_gamma_for_alpha(&scores, &x, &metric(1), 1.5, &cfg).is_err());
    }

    #[test]
    fn negative_gamma_rejected() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]);
        assert!(empirical_metric_fairness(
            &[0.0, 1.0],
            &x,
            &metric(1),
            -0.1,
            &FairnessConfig::default()
        )
        .is_err());
    }

    #[test]
    fn sampled_mode_is_seeded() {
        let rows: Vec<[f64; 1]> = (0..50).map(|i| [i as f64 / 50.0]).collect();
        let x = Matrix::from_rows(&rows);
        let scores: Vec<f64> = (0..50).map(|i| ((i * 7) % 50) as f64 / 50.0).collect();
        let cfg = FairnessConfig {
            exhaustive_cap: 10,
            sampled_pairs: 500,
            seed: 4,
            report_worst: 3,
        };
        let a = empirical_metric_fairness(&scores, &x, &metric(1), 0.1, &cfg).unwrap();
        let b = empirical_metric_fairness(&scores, &x, &metric(1), 0.1, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(!a.exhaustive);
        assert_eq!(a.pairs_evaluated, 500);
    }
}
