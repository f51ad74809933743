use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rank::{
    complexity_ranks, find_inversions, recommend_collection, recommend_collection_strict,
    size_ranks,
};
use super::report::{AuditReport, Inversion, ModelSummary, Recommendation, SubgroupAuditEntry};
use crate::complexity::{
    analytic_rademacher_bound, collaborative_bounds, estimate_rademacher, pacf_from_r,
    ComplexityBudget, PacfVariant, DEFAULT_DRAWS,
};
use crate::error::{Error, Result};
use crate::fairness::{
    alpha_curve, build_metric, min_gamma_for_alpha, FairnessConfig, SimilarityMetric,
};
use crate::ingest::{encode, extract_subgroups, EncodedDataset, RawTable, Schema, Subgroup};
use crate::linmodel::{
    cross_validate, feasible_folds, fold_assignment, norm_stats, predict_scores, train_logistic,
    TrainConfig,
};
use crate::matrix::{norm2, Matrix};

/// Which Rademacher coefficient feeds the sample complexity score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RSource {
    /// `R * phi` from the norm statistics.
    #[default]
    Analytic,
    /// `estimate * sqrt(m)` from the Monte-Carlo estimate.
    MonteCarlo,
}

/// How phi is read off the fitted models.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiMode {
    /// Norm of the model refit on the whole subgroup at the chosen penalty.
    #[default]
    FinalModel,
    /// Largest norm among the cross-validation fold models at the chosen penalty.
    FoldMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub seed: u64,
    pub train: TrainConfig,
    pub budget: ComplexityBudget,
    /// Score used for ranking. Both variants give the same ranks; the other
    /// one is reported alongside.
    pub variant: PacfVariant,
    pub r_source: RSource,
    pub phi_mode: PhiMode,
    pub n_draws: usize,
    /// Accuracy parameter of the collaborative PAC bounds (delta is shared
    /// with the budget).
    pub pac_epsilon: f64,
    pub fairness: FairnessConfig,
    /// Slack at which the headline fairness estimate is reported.
    pub gamma: f64,
    pub gamma_grid: Vec<f64>,
    /// Violation rate for which the minimal slack is reported.
    pub alpha_target: f64,
    /// Recommend strictly increasing sizes instead of relying on the
    /// positional tie-break between equal sizes.
    #[serde(default)]
    pub strict_sizes: bool,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            seed: 0,
            train: TrainConfig::default(),
            budget: ComplexityBudget::default(),
            variant: PacfVariant::Uniform,
            r_source: RSource::Analytic,
            phi_mode: PhiMode::FinalModel,
            n_draws: DEFAULT_DRAWS,
            pac_epsilon: 0.1,
            fairness: FairnessConfig::default(),
            gamma: 0.1,
            gamma_grid: vec![0.0, 0.05, 0.1, 0.2, 0.3, 0.5],
            alpha_target: 0.05,
            strict_sizes: false,
        }
    }
}

impl AuditConfig {
    pub fn with_seed(seed: u64) -> Self {
        AuditConfig {
            seed,
            ..AuditConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.budget.validate()?;
        if self.n_draws == 0 {
            return Err(Error::config("n_draws must be at least 1"));
        }
        if !(self.pac_epsilon > 0.0 && self.pac_epsilon < 1.0) {
            return Err(Error::config("pac_epsilon must lie strictly inside (0, 1)"));
        }
        if !(self.gamma >= 0.0) || self.gamma_grid.iter().any(|g| !(*g >= 0.0)) {
            return Err(Error::config("fairness slack values must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.alpha_target) {
            return Err(Error::config("alpha_target must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Independent stream seeds for each subgroup and purpose.
fn derive_seed(master: u64, subgroup: usize, purpose: u64) -> u64 {
    // splitmix64 finalizer over the combined input
    let mut z = master
        .wrapping_add((subgroup as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(purpose.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const SEED_FOLDS: u64 = 1;
const SEED_DRAWS: u64 = 2;
const SEED_PAIRS: u64 = 3;

pub const EMPTY_NOTE: &str =
    "no rows: the intersection is absent from the data, so no model of any complexity \
     can be shown fair for it; collect data or fall back to an individual-fairness treatment";
pub const SINGLE_LABEL_NOTE: &str =
    "all rows share one label: a classifier cannot be fitted and no \
     complexity can be estimated";

struct Analysis {
    entry: SubgroupAuditEntry,
    score: f64,
}

fn analyze(
    position: usize,
    group: &Subgroup,
    ds: &EncodedDataset,
    schema: &Schema,
    metric: &SimilarityMetric,
    config: &AuditConfig,
) -> Result<Analysis> {
    let (x, y) = ds.subset(&group.indices);
    let positives = y.iter().filter(|&&v| v > 0.5).count();
    let mut entry = SubgroupAuditEntry::new(position + 1, group, schema, positives);
    if group.size() == 0 {
        entry.infeasible_reason = Some(EMPTY_NOTE.to_string());
        return Ok(Analysis {
            entry,
            score: f64::NAN,
        });
    }
    if positives == 0 || positives == group.size() {
        entry.infeasible_reason = Some(SINGLE_LABEL_NOTE.to_string());
        return Ok(Analysis {
            entry,
            score: f64::NAN,
        });
    }

    let folds = feasible_folds(&y, config.train.folds, config.train.stratified);
    if folds < config.train.folds {
        entry.warnings.push(format!(
            "reduced cross-validation from {} to {folds} folds (rarer label has {} rows)",
            config.train.folds,
            positives.min(group.size() - positives)
        ));
    }
    let train_cfg = TrainConfig {
        folds,
        seed: derive_seed(config.seed, position, SEED_FOLDS),
        ..config.train.clone()
    };
    let cv = cross_validate(&x, &y, &train_cfg)?;
    let mut model = train_logistic(&x, &y, cv.lambda_star, &train_cfg)?;
    model.cv_log_loss = cv.loss_at(cv.lambda_star);
    if !model.converged {
        entry.warnings.push(format!(
            "optimizer stopped after {} iterations with gradient norm {:.3e}",
            model.iterations, model.grad_norm
        ));
    }

    let mut stats = norm_stats(&x, &model)?;
    if config.phi_mode == PhiMode::FoldMax {
        stats.phi = fold_max_phi(&x, &y, cv.lambda_star, &train_cfg)?;
    }
    let rademacher = estimate_rademacher(
        &x,
        stats.phi,
        config.n_draws,
        derive_seed(config.seed, position, SEED_DRAWS),
    )?;
    let r = match config.r_source {
        RSource::Analytic => stats.r * stats.phi,
        RSource::MonteCarlo => rademacher.r_coefficient,
    };
    let uniform = pacf_from_r(r, &config.budget, PacfVariant::Uniform)?;
    let erm = pacf_from_r(r, &config.budget, PacfVariant::Erm)?;

    let scores = predict_scores(&model, &x)?;
    let fair_cfg = FairnessConfig {
        seed: derive_seed(config.seed, position, SEED_PAIRS),
        ..config.fairness.clone()
    };
    let (fairness, curve, gamma_at_alpha) = if group.size() >= 2 {
        let mut gammas = vec![config.gamma];
        gammas.extend_from_slice(&config.gamma_grid);
        let mut curve = alpha_curve(&scores, &x, metric, &gammas, &fair_cfg)?;
        let headline = curve.remove(0);
        let curve = curve.into_iter().map(|e| (e.gamma, e.alpha_hat)).collect();
        let g = min_gamma_for_alpha(&scores, &x, metric, config.alpha_target, &fair_cfg)?;
        (Some(headline), curve, Some(g))
    } else {
        (None, Vec::new(), None)
    };

    entry.folds = Some(folds);
    entry.model = Some(ModelSummary {
        lambda_star: model.lambda_star,
        converged: model.converged,
        iterations: model.iterations,
        cv_log_loss: model.cv_log_loss,
        intercept: model.b,
    });
    entry.rademacher_bound = Some(analytic_rademacher_bound(&stats));
    entry.norm_stats = Some(stats);
    entry.rademacher = Some(rademacher);
    entry.complexity_uniform = Some(uniform);
    entry.complexity_erm = Some(erm);
    entry.fairness = fairness;
    entry.alpha_curve = curve;
    entry.gamma_at_alpha_target = gamma_at_alpha;
    let score = match config.variant {
        PacfVariant::Uniform => uniform,
        PacfVariant::Erm => erm,
    };
    entry.complexity_score = Some(score);
    Ok(Analysis { entry, score })
}

fn fold_max_phi(x: &Matrix, y: &[f64], lambda: f64, cfg: &TrainConfig) -> Result<f64> {
    let assignment = fold_assignment(y, cfg.folds, cfg.seed, cfg.stratified, cfg.shuffle);
    let mut best: f64 = 0.0;
    for fold in 0..cfg.folds {
        let train: Vec<usize> = (0..x.rows()).filter(|&i| assignment[i] != fold).collect();
        if train.len() == x.rows() {
            continue;
        }
        let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let model = train_logistic(&x.select_rows(&train), &y_train, lambda, cfg)?;
        best = best.max(norm2(&model.w));
    }
    Ok(best)
}

/// Runs the full audit: encode, split into subgroups, fit and score each
/// feasible subgroup, then compare complexity ranks with size ranks.
///
/// The result depends only on the inputs and `config.seed`.
pub fn run_audit(table: &RawTable, schema: &Schema, config: &AuditConfig) -> Result<AuditReport> {
    config.validate()?;
    schema.validate_for_audit()?;
    let ds = encode(table, schema)?;
    let groups = extract_subgroups(&ds, table, schema)?;
    let metric = build_metric(&ds)?;

    let analyses: Vec<Analysis> = groups
        .par_iter()
        .enumerate()
        .map(|(pos, g)| analyze(pos, g, &ds, schema, &metric, config))
        .collect::<Result<_>>()?;

    let feasible: Vec<usize> = (0..analyses.len())
        .filter(|&i| analyses[i].entry.infeasible_reason.is_none())
        .collect();
    if feasible.len() < 2 {
        let listing: Vec<String> = analyses
            .iter()
            .map(|a| format!("{} (n={})", a.entry.key, a.entry.size))
            .collect();
        return Err(Error::AuditAborted(format!(
            "{} feasible subgroup(s) found, at least 2 are needed to compare rankings; subgroups: {}",
            feasible.len(),
            listing.join("; ")
        )));
    }

    let scores: Vec<f64> = feasible.iter().map(|&i| analyses[i].score).collect();
    let sizes: Vec<usize> = feasible.iter().map(|&i| analyses[i].entry.size).collect();
    let c_ranks = complexity_ranks(&scores);
    let s_ranks = size_ranks(&sizes);
    let alignment = find_inversions(&c_ranks, &s_ranks);
    let additions = if config.strict_sizes {
        recommend_collection_strict(&c_ranks, &sizes)
    } else {
        recommend_collection(&c_ranks, &sizes)
    };

    let mut entries: Vec<SubgroupAuditEntry> = analyses.into_iter().map(|a| a.entry).collect();
    for (slot, &i) in feasible.iter().enumerate() {
        entries[i].complexity_rank = Some(c_ranks[slot]);
        entries[i].size_rank = Some(s_ranks[slot]);
    }
    let inversions = alignment
        .inversions
        .iter()
        .map(|&(a, b)| Inversion::new(&entries[feasible[a]], &entries[feasible[b]]))
        .collect();
    let recommendations = additions
        .iter()
        .map(|&(slot, add)| Recommendation::new(&entries[feasible[slot]], add))
        .collect();

    let collaborative = collaborative_bounds(
        ds.d(),
        feasible.len(),
        config.pac_epsilon,
        config.budget.delta,
    )?;

    Ok(AuditReport::assemble(
        table,
        schema,
        &ds,
        entries,
        inversions,
        alignment.kendall_tau,
        recommendations,
        collaborative,
        config.clone(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(7, 0, SEED_FOLDS);
        assert_ne!(a, derive_seed(7, 1, SEED_FOLDS));
        assert_ne!(a, derive_seed(7, 0, SEED_DRAWS));
        assert_ne!(a, derive_seed(8, 0, SEED_FOLDS));
        assert_eq!(a, derive_seed(7, 0, SEED_FOLDS));
    }

    #[test]
    fn config_validation() {
        assert!(AuditConfig::default().validate().is_ok());
        let mut c = AuditConfig::default();
        c.budget.delta = 1.5;
        assert!(c.validate().is_err());
        let mut c = AuditConfig::default();
        c.gamma_grid.push(-0.1);
        assert!(c.validate().is_err());
    }
}
