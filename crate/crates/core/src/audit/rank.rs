//! Rank alignment between subgroup sample complexities and subgroup sizes.
//!
//! Subgroups are identified by their position in key order; that position
//! also breaks every tie, so all rankings here are total and deterministic.

use std::cmp::Ordering;

/// 1-based ranks of `values` in ascending order, ties broken by position.
pub fn ascending_ranks<T, F>(values: &[T], mut cmp: F) -> Vec<usize>
where
    F: FnMut(&T, &T) -> Ordering,
{
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| cmp(&values[a], &values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0; values.len()];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = r + 1;
    }
    ranks
}

/// Rank 1 is the lowest complexity score.
pub fn complexity_ranks(scores: &[f64]) -> Vec<usize> {
    ascending_ranks(scores, |a, b| a.total_cmp(b))
}

/// Rank 1 is the smallest subgroup.
pub fn size_ranks(sizes: &[usize]) -> Vec<usize> {
    ascending_ranks(sizes, |a, b| a.cmp(b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankAlignment {
    /// Position pairs `(i, j)`, `i < j`, ordered oppositely by the two rankings.
    pub inversions: Vec<(usize, usize)>,
    /// `(concordant - discordant) / (k (k - 1) / 2)`.
    pub kendall_tau: f64,
}

/// Pairwise comparison of two rankings of the same `k` subgroups.
///
/// Panics if the rank vectors differ in length or hold fewer than two entries.
pub fn find_inversions(complexity_rank: &[usize], size_rank: &[usize]) -> RankAlignment {
    assert_eq!(
        complexity_rank.len(),
        size_rank.len(),
        "rank vectors differ in length"
    );
    let k = complexity_rank.len();
    assert!(k >= 2, "need at least two ranked subgroups");
    let mut inversions = Vec::new();
    let (mut concordant, mut discordant) = (0i64, 0i64);
    for i in 0..k {
        for j in i + 1..k {
            let c = complexity_rank[i] as i64 - complexity_rank[j] as i64;
            let s = size_rank[i] as i64 - size_rank[j] as i64;
            match (c * s).signum() {
                1 => concordant += 1,
                -1 => {
                    discordant += 1;
                    inversions.push((i, j));
                }
                _ => {}
            }
        }
    }
    let pairs = (k * (k - 1) / 2) as f64;
    RankAlignment {
        inversions,
        kendall_tau: (concordant - discordant) as f64 / pairs,
    }
}

/// Minimal additions that make the size ordering agree with the complexity
/// ordering, as `(position, samples to add)` for every position that needs
/// samples.
///
/// Subgroups are visited in increasing complexity rank. Each must end up
/// ordered after the previous one under the size ranking (size, then
/// position), so its target is the previous target, plus one when its
/// position would otherwise lose the tie. Sizes only grow.
pub fn recommend_collection(complexity_rank: &[usize], sizes: &[usize]) -> Vec<(usize, usize)> {
    repair(complexity_rank, sizes, false)
}

/// Like [`recommend_collection`], but every subgroup must end up strictly
/// larger than the one before it in complexity order, so the result does
/// not lean on the positional tie-break.
pub fn recommend_collection_strict(
    complexity_rank: &[usize],
    sizes: &[usize],
) -> Vec<(usize, usize)> {
    repair(complexity_rank, sizes, true)
}

fn repair(complexity_rank: &[usize], sizes: &[usize], strict: bool) -> Vec<(usize, usize)> {
    assert_eq!(
        complexity_rank.len(),
        sizes.len(),
        "rank and size vectors differ in length"
    );
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by_key(|&i| complexity_rank[i]);
    let mut targets = sizes.to_vec();
    for w in 1..order.len() {
        let (prev, cur) = (order[w - 1], order[w]);
        let floor = targets[prev] + usize::from(strict || cur < prev);
        targets[cur] = targets[cur].max(floor);
    }
    (0..sizes.len())
        .filter(|&i| targets[i] > sizes[i])
        .map(|i| (i, targets[i] - sizes[i]))
        .collect()
}

/// Applies [`recommend_collection`] output to `sizes`.
pub fn apply_additions(sizes: &[usize], additions: &[(usize, usize)]) -> Vec<usize> {
    let mut out = sizes.to_vec();
    for &(i, add) in additions {
        out[i] += add;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_follow_position() {
        assert_eq!(complexity_ranks(&[1.0, 1.0, 1.0]), vec![1, 2, 3]);
        assert_eq!(size_ranks(&[5, 3, 5]), vec![2, 1, 3]);
    }

    #[test]
    fn identical_orderings() {
        let a = find_inversions(&[1, 2, 3, 4], &[1, 2, 3, 4]);
        assert!(a.inversions.is_empty());
        assert_eq!(a.kendall_tau, 1.0);
        let r = find_inversions(&[1, 2, 3], &[3, 2, 1]);
        assert_eq!(r.kendall_tau, -1.0);
        assert_eq!(r.inversions.len(), 3);
    }

    #[test]
    fn two_group_minimal_reorder() {
        assert_eq!(recommend_collection_strict(&[1, 2], &[10, 5]), vec![(1, 6)]);
        // a tie at 10 already ranks the later position higher
        assert_eq!(recommend_collection(&[1, 2], &[10, 5]), vec![(1, 5)]);
        assert_eq!(recommend_collection(&[1, 2], &[5, 5]), vec![]);
        assert_eq!(recommend_collection_strict(&[1, 2], &[5, 5]), vec![(1, 1)]);
        assert_eq!(recommend_collection(&[2, 1], &[5, 5]), vec![(0, 1)]);
    }

    #[test]
    fn aligned_needs_nothing() {
        assert!(recommend_collection(&[1, 2, 3], &[1, 2, 3]).is_empty());
    }
}
