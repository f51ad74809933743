use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::logistic::{mean_log_loss, train_from, TrainConfig};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaLoss {
    pub lambda: f64,
    /// Mean held-out log loss over the non-empty folds.
    pub mean_loss: f64,
    pub fold_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub lambda_star: f64,
    /// One entry per grid value, in grid order.
    pub losses: Vec<LambdaLoss>,
    pub folds: usize,
}

impl CvResult {
    pub fn loss_at(&self, lambda: f64) -> Option<f64> {
        self.losses
            .iter()
            .find(|l| l.lambda == lambda)
            .map(|l| l.mean_loss)
    }
}

/// Fold index of every row.
///
/// Rows are grouped by label when `stratified`, optionally shuffled with a
/// generator seeded from `seed`, and each group is cut into `folds`
/// contiguous, near-equal blocks. Folds can be empty only when a label has
/// fewer rows than `folds`.
pub fn fold_assignment(
    y: &[f64],
    folds: usize,
    seed: u64,
    stratified: bool,
    shuffle: bool,
) -> Vec<usize> {
    let mut groups: Vec<Vec<usize>> = if stratified {
        let neg = (0..y.len()).filter(|&i| y[i] <= 0.5).collect();
        let pos = (0..y.len()).filter(|&i| y[i] > 0.5).collect();
        vec![neg, pos]
    } else {
        vec![(0..y.len()).collect()]
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; y.len()];
    for group in groups.iter_mut() {
        if shuffle {
            group.shuffle(&mut rng);
        }
        let n = group.len();
        for (j, &row) in group.iter().enumerate() {
            assignment[row] = j * folds / n;
        }
    }
    assignment
}

/// Largest usable fold count: `requested`, capped by the rarer label's count
/// when stratifying, never below 2.
pub fn feasible_folds(y: &[f64], requested: usize, stratified: bool) -> usize {
    let limit = if stratified {
        let pos = y.iter().filter(|&&v| v > 0.5).count();
        pos.min(y.len() - pos)
    } else {
        y.len()
    };
    requested.min(limit).max(2)
}

/// Chooses the penalty minimizing mean held-out log loss.
///
/// Within each fold the grid is swept from the largest penalty down, each fit
/// warm-started from the previous one. Ties in mean loss go to the larger
/// penalty.
pub fn cross_validate(x: &Matrix, y: &[f64], config: &TrainConfig) -> Result<CvResult> {
    config.validate()?;
    let m = x.rows();
    if y.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: y.len(),
        });
    }
    if m < config.folds {
        return Err(Error::TooFewRows {
            rows: m,
            folds: config.folds,
        });
    }
    if !x.all_finite() {
        return Err(Error::NonFinite("feature matrix"));
    }
    if config.stratified {
        let pos = y.iter().filter(|&&v| v > 0.5).count();
        if pos == 0 || pos == m {
            return Err(Error::config(
                "stratified cross-validation needs both labels present",
            ));
        }
    }

    let assignment = fold_assignment(
        y,
        config.folds,
        config.seed,
        config.stratified,
        config.shuffle,
    );

    let mut order: Vec<usize> = (0..config.lambda_grid.len()).collect();
    // descending penalty, stable on equal values
    order.sort_by(|&a, &b| config.lambda_grid[b].total_cmp(&config.lambda_grid[a]));

    // per fold: held-out loss for each grid index, None for an empty fold
    let per_fold: Vec<Option<Vec<f64>>> = (0..config.folds)
        .into_par_iter()
        .map(|fold| {
            let train: Vec<usize> = (0..m).filter(|&i| assignment[i] != fold).collect();
            let test: Vec<usize> = (0..m).filter(|&i| assignment[i] == fold).collect();
            if test.is_empty() {
                return None;
            }
            let x_train = x.select_rows(&train);
            let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let x_test = x.select_rows(&test);
            let y_test: Vec<f64> = test.iter().map(|&i| y[i]).collect();
            let mut losses = vec![0.0; config.lambda_grid.len()];
            let mut start = vec![0.0; x.cols() + 1];
            for &g in &order {
                let model = train_from(&x_train, &y_train, config.lambda_grid[g], config, &start);
                losses[g] = mean_log_loss(&x_test, &y_test, &model.w, model.b);
                start[..x.cols()].copy_from_slice(&model.w);
                start[x.cols()] = model.b;
            }
            Some(losses)
        })
        .collect();

    let used: Vec<&Vec<f64>> = per_fold.iter().flatten().collect();
    let losses: Vec<LambdaLoss> = config
        .lambda_grid
        .iter()
        .enumerate()
        .map(|(g, &lambda)| {
            let fold_losses: Vec<f64> = used.iter().map(|f| f[g]).collect();
            let mean_loss = fold_losses.iter().sum::<f64>() / fold_losses.len() as f64;
            LambdaLoss {
                lambda,
                mean_loss,
                fold_losses,
            }
        })
        .collect();

    let mut best = order[0];
    for &g in &order[1..] {
        if losses[g].mean_loss < losses[best].mean_loss {
            best = g;
        }
    }
    Ok(CvResult {
        lambda_star: config.lambda_grid[best],
        losses,
        folds: config.folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_is_stratified_and_balanced() {
        let y: Vec<f64> = (0..40)
            .map(|i| if i % 4 == 0 { 1.0 } else { 0.0 })
            .collect();
        let a = fold_assignment(&y, 5, 9, true, true);
        for f in 0..5 {
            let pos = (0..40).filter(|&i| a[i] == f && y[i] == 1.0).count();
            let neg = (0..40).filter(|&i| a[i] == f && y[i] == 0.0).count();
            assert_eq!((pos, neg), (2, 6));
        }
        assert_eq!(a, fold_assignment(&y, 5, 9, true, true));
        assert_ne!(a, fold_assignment(&y, 5, 10, true, true));
    }

    #[test]
    fn feasible_fold_counts() {
        let y = [1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0];
        assert_eq!(feasible_folds(&y, 10, true), 3);
        assert_eq!(feasible_folds(&y, 10, false), 7);
        assert_eq!(feasible_folds(&[1.0, 0.0], 10, true), 2);
    }

    #[test]
    fn too_few_rows() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]);
        let y = [0.0, 1.0, 1.0];
        assert!(matches!(
            cross_validate(&x, &y, &TrainConfig::default()),
            Err(Error::TooFewRows { rows: 3, folds: 10 })
        ));
    }

    #[test]
    fn singleton_grid() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [0.2], [0.9], [0.4], [0.6]]);
        let y = [0.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        let cfg = TrainConfig {
            lambda_grid: vec![0.3],
            folds: 3,
            ..TrainConfig::default()
        };
        let cv = cross_validate(&x, &y, &cfg).unwrap();
        assert_eq!(cv.lambda_star, 0.3);
        assert_eq!(cv.losses.len(), 1);
    }

    #[test]
    fn single_label_rejected_when_stratified() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [0.5]]);
        let y = [1.0; 3];
        let cfg = TrainConfig {
            folds: 2,
            ..TrainConfig::default()
        };
        assert!(cross_validate(&x, &y, &cfg).is_err());
    }
}
