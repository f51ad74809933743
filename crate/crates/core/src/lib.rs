//! Subgroup sample-complexity auditing for probably approximately
//! metric-fair learning with norm-bounded linear hypotheses.
//!
//! The pipeline encodes a tabular dataset, splits it into intersectional
//! sensitive-attribute subgroups, fits an L2-regularized logistic regression
//! per subgroup, and turns the resulting norm statistics into Rademacher and
//! sample-complexity scores. The audit compares the ordering of those scores
//! with the ordering of the actual subgroup sizes and recommends where more
//! data is needed.

// `!(x > 0.0)` style checks deliberately reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifact;
pub mod audit;
pub mod complexity;
pub mod error;
pub mod fairness;
pub mod ingest;
pub mod linmodel;
pub mod matrix;

pub use error::{Error, Result};
pub use matrix::Matrix;
