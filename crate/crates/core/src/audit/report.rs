use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::pipeline::AuditConfig;
use crate::complexity::{CollaborativeBounds, RademacherResult};
use crate::fairness::FairnessEstimate;
use crate::ingest::{EncodedDataset, RawTable, Schema, Subgroup, SubgroupKey};
use crate::linmodel::NormStats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub lambda_star: f64,
    pub converged: bool,
    pub iterations: usize,
    pub cv_log_loss: Option<f64>,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupAuditEntry {
    /// 1-based position in key order.
    pub index: usize,
    pub key: SubgroupKey,
    pub label: String,
    pub size: usize,
    pub positives: usize,
    pub feasible: bool,
    pub infeasible_reason: Option<String>,
    pub folds: Option<usize>,
    pub model: Option<ModelSummary>,
    pub norm_stats: Option<NormStats>,
    /// `R * phi / sqrt(m)`.
    pub rademacher_bound: Option<f64>,
    pub rademacher: Option<RademacherResult>,
    /// Score used for ranking.
    pub complexity_score: Option<f64>,
    pub complexity_uniform: Option<f64>,
    pub complexity_erm: Option<f64>,
    /// 1 = lowest complexity among feasible subgroups.
    pub complexity_rank: Option<usize>,
    /// 1 = smallest feasible subgroup.
    pub size_rank: Option<usize>,
    pub fairness: Option<FairnessEstimate>,
    /// `(gamma, alpha_hat)` over the configured slack grid.
    pub alpha_curve: Vec<(f64, f64)>,
    pub gamma_at_alpha_target: Option<f64>,
    pub warnings: Vec<String>,
}

impl SubgroupAuditEntry {
    pub(crate) fn new(index: usize, group: &Subgroup, schema: &Schema, positives: usize) -> Self {
        SubgroupAuditEntry {
            index,
            key: group.key.clone(),
            label: group.key.label(schema),
            size: group.size(),
            positives,
            feasible: true,
            infeasible_reason: None,
            folds: None,
            model: None,
            norm_stats: None,
            rademacher_bound: None,
            rademacher: None,
            complexity_score: None,
            complexity_uniform: None,
            complexity_erm: None,
            complexity_rank: None,
            size_rank: None,
            fairness: None,
            alpha_curve: Vec::new(),
            gamma_at_alpha_target: None,
            warnings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    /// Subgroup indices, `a < b`.
    pub a: usize,
    pub b: usize,
    pub a_label: String,
    pub b_label: String,
}

impl Inversion {
    pub(crate) fn new(a: &SubgroupAuditEntry, b: &SubgroupAuditEntry) -> Self {
        Inversion {
            a: a.index,
            b: b.index,
            a_label: a.label.clone(),
            b_label: b.label.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub index: usize,
    pub key: SubgroupKey,
    pub label: String,
    pub current_size: usize,
    pub additional_samples: usize,
    pub target_size: usize,
}

impl Recommendation {
    pub(crate) fn new(entry: &SubgroupAuditEntry, additional: usize) -> Self {
        Recommendation {
            index: entry.index,
            key: entry.key.clone(),
            label: entry.label.clone(),
            current_size: entry.size,
            additional_samples: additional,
            target_size: entry.size + additional,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub dataset: String,
    pub schema: String,
    pub sensitive: Vec<String>,
    pub rows: usize,
    pub d: usize,
    pub subgroup_count: usize,
    /// Number of feasible subgroups.
    pub k: usize,
    pub entries: Vec<SubgroupAuditEntry>,
    pub inversions: Vec<Inversion>,
    /// Single-number summary of rank agreement (1 = aligned).
    pub kendall_tau: f64,
    pub recommendations: Vec<Recommendation>,
    pub collaborative: CollaborativeBounds,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
    pub seed: u64,
    pub config: AuditConfig,
}

pub const NOTE_SCORES: &str =
    "Sample complexity scores are big-O expressions evaluated with the configured \
     leading constant; only their ordering across subgroups is meaningful.";
pub const NOTE_TAU: &str =
    "kendall_tau is an extension of the rank comparison: (concordant - discordant) \
     pairs over k(k-1)/2, equal to 1 exactly when there are no inversions.";
pub const NOTE_UNIFORM_LOWER: &str = "The uniform-convergence lower bound is evaluated as d*k*(1-delta)/(4*eps). \
     Some published statements of this bound for k = 4 read 4d(1-delta)/eps (e.g. 432(1-delta)/eps for d = 108, \
     244(1-delta)/eps for d = 61), which is 4x the value reported here.";
pub const NOTE_RECOMMEND: &str =
    "Recommendations are the minimal additions that remove every inversion between \
     complexity ranks and size ranks; they restore ordering, not absolute adequacy.";

impl AuditReport {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        table: &RawTable,
        schema: &Schema,
        ds: &EncodedDataset,
        mut entries: Vec<SubgroupAuditEntry>,
        inversions: Vec<Inversion>,
        kendall_tau: f64,
        recommendations: Vec<Recommendation>,
        collaborative: CollaborativeBounds,
        config: AuditConfig,
    ) -> Self {
        for e in &mut entries {
            e.feasible = e.infeasible_reason.is_none();
        }
        let k = entries.iter().filter(|e| e.feasible).count();
        let mut notes = vec![
            NOTE_SCORES.to_string(),
            NOTE_TAU.to_string(),
            NOTE_UNIFORM_LOWER.to_string(),
            NOTE_RECOMMEND.to_string(),
        ];
        for e in entries.iter().filter(|e| !e.feasible) {
            notes.push(format!(
                "Subgroup {} ({}) is infeasible and excluded from ranking: {}",
                e.index,
                e.label,
                e.infeasible_reason.as_deref().unwrap_or_default()
            ));
        }
        AuditReport {
            dataset: table.source.clone(),
            schema: schema.name.clone(),
            sensitive: schema.sensitive.clone(),
            rows: ds.m(),
            d: ds.d(),
            subgroup_count: entries.len(),
            k,
            entries,
            inversions,
            kendall_tau,
            recommendations,
            collaborative,
            notes,
            warnings: ds.warnings.clone(),
            seed: config.seed,
            config,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> crate::Result<Self> {
        serde_json::from_str(text).map_err(|e| crate::Error::Parse(e.to_string()))
    }

    pub fn entry(&self, index: usize) -> Option<&SubgroupAuditEntry> {
        self.entries.iter().find(|e| e.index == index)
    }

    /// Markdown rendering: a Rademacher table, a rank comparison table, then
    /// inversions, recommendations, bounds and notes.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let per = self.sensitive.join("/");
        let _ = writeln!(out, "# Subgroup sample complexity audit: {}\n", self.schema);
        let _ = writeln!(
            out,
            "Dataset `{}`: {} rows, d = {}, {} subgroups ({} feasible), seed {}.\n",
            self.dataset, self.rows, self.d, self.subgroup_count, self.k, self.seed
        );

        let _ = writeln!(out, "## Rademacher complexity of linear hypotheses\n");
        let _ = writeln!(
            out,
            "| Subgroup (per {per}) | R_m(H) = R·φ/√m | Monte-Carlo estimate | R | φ | m |"
        );
        let _ = writeln!(out, "|---|---:|---:|---:|---:|---:|");
        for e in &self.entries {
            match (&e.norm_stats, &e.rademacher, e.rademacher_bound) {
                (Some(s), Some(r), Some(b)) => {
                    let _ = writeln!(
                        out,
                        "| {} ({}) | {:.3} | {:.3} ± {:.3} | {:.3} | {:.3} | {} |",
                        e.index, e.label, b, r.estimate, r.std_error, s.r, s.phi, s.m
                    );
                }
                _ => {
                    let _ = writeln!(
                        out,
                        "| {} ({}) | n/a | n/a | | | {} |",
                        e.index, e.label, e.size
                    );
                }
            }
        }

        let _ = writeln!(out, "\n## Sample complexity rank vs actual size\n");
        let _ = writeln!(
            out,
            "| Subgroup | Sample Complexity Rank | Actual Sample Size (Rank) | Complexity score | α̂ at γ = {} |",
            self.config.gamma
        );
        let _ = writeln!(out, "|---|---:|---:|---:|---:|");
        for e in &self.entries {
            let rank = e.complexity_rank.map_or("-".to_string(), |r| r.to_string());
            let size = match e.size_rank {
                Some(r) => format!("{} ({r})", group_thousands(e.size)),
                None => format!("{} (infeasible)", group_thousands(e.size)),
            };
            let score = e
                .complexity_score
                .map_or("-".to_string(), |s| format!("{s:.4e}"));
            let alpha = e
                .fairness
                .as_ref()
                .map_or("-".to_string(), |f| format!("{:.4}", f.alpha_hat));
            let _ = writeln!(
                out,
                "| {} ({}) | {rank} | {size} | {score} | {alpha} |",
                e.index, e.label
            );
        }

        let _ = writeln!(out, "\n## Inversions\n");
        if self.inversions.is_empty() {
            let _ = writeln!(out, "None: size ranks agree with complexity ranks.");
        } else {
            for inv in &self.inversions {
                let _ = writeln!(
                    out,
                    "- ({}, {}): {} vs {}",
                    inv.a, inv.b, inv.a_label, inv.b_label
                );
            }
        }
        let _ = writeln!(out, "\nKendall τ (extension) = {:.4}", self.kendall_tau);

        let _ = writeln!(out, "\n## Recommended collection\n");
        if self.recommendations.is_empty() {
            let _ = writeln!(out, "No additional samples needed to align the orderings.");
        } else {
            for r in &self.recommendations {
                let _ = writeln!(
                    out,
                    "- Subgroup {} ({}): add at least {} samples ({} → {})",
                    r.index,
                    r.label,
                    group_thousands(r.additional_samples),
                    group_thousands(r.current_size),
                    group_thousands(r.target_size)
                );
            }
        }

        let c = &self.collaborative;
        let _ = writeln!(
            out,
            "\n## Collaborative PAC bounds (d = {}, k = {}, ε = {}, δ = {})\n",
            c.d, c.k, c.epsilon, c.delta
        );
        let _ = writeln!(out, "- centralized: {:.1}", c.centralized);
        match c.personalized {
            Some(p) => {
                let _ = writeln!(out, "- personalized: {p:.1}");
            }
            None => {
                let _ = writeln!(out, "- personalized: undefined for k = 1");
            }
        }
        let _ = writeln!(
            out,
            "- uniform-convergence lower bound d·k·(1−δ)/(4ε): {:.1}",
            c.uniform_lower
        );

        let _ = writeln!(out, "\n## Notes\n");
        for (i, n) in self.notes.iter().enumerate() {
            let _ = writeln!(out, "{}. {n}", i + 1);
        }
        let warnings: Vec<String> = self
            .warnings
            .iter()
            .cloned()
            .chain(self.entries.iter().flat_map(|e| {
                e.warnings
                    .iter()
                    .map(move |w| format!("subgroup {}: {w}", e.index))
            }))
            .collect();
        if !warnings.is_empty() {
            let _ = writeln!(out, "\n## Warnings\n");
            for w in warnings {
                let _ = writeln!(out, "- {w}");
            }
        }
        out
    }
}

fn group_thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}
