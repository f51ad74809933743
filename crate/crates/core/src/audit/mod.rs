//! End-to-end subgroup audit: per-subgroup training and scoring, rank
//! comparison against subgroup sizes, and collection recommendations.

mod pipeline;
mod rank;
mod report;

pub use pipeline::{run_audit, AuditConfig, PhiMode, RSource, EMPTY_NOTE, SINGLE_LABEL_NOTE};
pub use rank::{
    apply_additions, ascending_ranks, complexity_ranks, find_inversions, recommend_collection,
    recommend_collection_strict, size_ranks, RankAlignment,
};
pub use report::{
    AuditReport, Inversion, ModelSummary, Recommendation, SubgroupAuditEntry, NOTE_RECOMMEND,
    NOTE_SCORES, NOTE_TAU, NOTE_UNIFORM_LOWER,
};
