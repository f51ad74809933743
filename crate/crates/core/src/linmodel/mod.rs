//! Per-subgroup L2-regularized logistic regression, penalty selection by
//! k-fold cross-validation, and the norm statistics R and phi.

mod cv;
mod logistic;
mod norms;

pub use cv::{cross_validate, feasible_folds, fold_assignment, CvResult, LambdaLoss};
pub use logistic::{
    default_lambda_grid, mean_log_loss, predict_scores, regularized_objective, sigmoid,
    train_logistic, train_logistic_traced, TrainConfig, TrainedModel,
};
pub use norms::{max_row_norm, norm_stats, NormStats};
