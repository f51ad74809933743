use serde::{Deserialize, Serialize};

use super::logistic::TrainedModel;
use crate::error::{Error, Result};
use crate::matrix::{norm2, Matrix};

/// Norm statistics of a fitted linear hypothesis on its sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    /// Largest Euclidean row norm of the inputs.
    pub r: f64,
    /// Euclidean norm of the weight vector, intercept excluded.
    pub phi: f64,
    /// Number of rows.
    pub m: usize,
}

pub fn max_row_norm(x: &Matrix) -> f64 {
    x.iter_rows().map(norm2).fold(0.0, f64::max)
}

pub fn norm_stats(x: &Matrix, model: &TrainedModel) -> Result<NormStats> {
    if x.cols() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: x.cols(),
        });
    }
    if x.is_empty() {
        return Err(Error::config("norm statistics need at least one row"));
    }
    Ok(NormStats {
        r: max_row_norm(x),
        phi: norm2(&model.w),
        m: x.rows(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(w: Vec<f64>) -> TrainedModel {
        TrainedModel {
            w,
            b: 7.0,
            lambda_star: 1.0,
            converged: true,
            iterations: 0,
            grad_norm: 0.0,
            cv_log_loss: None,
        }
    }

    #[test]
    fn zero_row() {
        let s = norm_stats(&Matrix::from_rows(&[[0.0, 0.0]]), &model(vec![1.0, 1.0])).unwrap();
        assert_eq!(s.r, 0.0);
        assert_eq!(s.m, 1);
    }

    #[test]
    fn three_four_five() {
        let s = norm_stats(&Matrix::from_rows(&[[1.0, 1.0]]), &model(vec![3.0, 4.0])).unwrap();
        assert_eq!(s.r, 2f64.sqrt());
        assert_eq!(s.phi, 5.0);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            norm_stats(&Matrix::from_rows(&[[1.0]]), &model(vec![3.0, 4.0])),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        ));
    }
}
