//! Frequent follow patterns and pairwise follow correlations.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::par;
use crate::roster::{mask_columns, FollowMatrix};

/// A candidate set with its population support.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemsetResult {
    pub rank: usize,
    /// Candidate ids, sorted lexicographically.
    pub itemset: Vec<String>,
    pub mask: u128,
    pub count: u64,
    pub support: f64,
}

impl ItemsetResult {
    pub fn label(&self) -> String {
        self.itemset.join("+")
    }
}

fn ids_of(matrix: &FollowMatrix, mask: u128) -> Vec<String> {
    let mut ids: Vec<String> = mask_columns(mask)
        .map(|c| matrix.roster().get(c).candidate_id.clone())
        .collect();
    ids.sort();
    ids
}

/// Sort by count descending, ties by id list, then number the ranks.
fn rank(matrix: &FollowMatrix, counted: Vec<(u128, u64)>) -> Vec<ItemsetResult> {
    let n = matrix.n_users() as f64;
    let mut out: Vec<ItemsetResult> = counted
        .into_iter()
        .map(|(mask, count)| ItemsetResult {
            rank: 0,
            itemset: ids_of(matrix, mask),
            mask,
            count,
            support: count as f64 / n,
        })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.itemset.cmp(&b.itemset)));
    for (i, r) in out.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    out
}

/// Whether `count` out of `n` users meets `min_support`.
pub fn meets_support(count: u64, n: usize, min_support: f64) -> bool {
    count as f64 / n as f64 >= min_support
}

fn count_containing(rows: &[u128], candidates: &[u128]) -> Vec<u64> {
    par::block_reduce(
        rows.len(),
        |range| {
            let mut counts = vec![0u64; candidates.len()];
            for &row in &rows[range] {
                for (n, &c) in counts.iter_mut().zip(candidates) {
                    if row & c == c {
                        *n += 1;
                    }
                }
            }
            counts
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        },
    )
    .unwrap_or_else(|| vec![0; candidates.len()])
}

/// Levelwise (Apriori) mining of itemsets with containment support.
///
/// Support of a set is the fraction of users whose follow set contains it.
/// A size-`k` candidate is counted only if all its `k-1` subsets are frequent.
pub fn frequent_itemsets(matrix: &FollowMatrix, min_support: f64, max_size: usize) -> Result<Vec<ItemsetResult>> {
    if !(min_support > 0.0 && min_support <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "min_support must lie in (0, 1], got {min_support}"
        )));
    }
    if max_size == 0 {
        return Err(Error::InvalidArgument("max_size must be at least 1".into()));
    }
    let n = matrix.n_users();
    if n == 0 {
        return Ok(Vec::new());
    }
    let rows = matrix.row_masks();

    let mut found: Vec<(u128, u64)> = Vec::new();
    let mut level: Vec<u128> = (0..matrix.n_candidates()).map(|c| 1u128 << c).collect();
    let mut size = 1;
    while !level.is_empty() && size <= max_size {
        let counts = count_containing(rows, &level);
        let frequent: Vec<u128> = level
            .iter()
            .zip(&counts)
            .filter(|&(_, &c)| meets_support(c, n, min_support))
            .map(|(&m, &c)| {
                found.push((m, c));
                m
            })
            .collect();
        size += 1;
        if size > max_size {
            break;
        }
        level = join_level(&frequent);
    }
    Ok(rank(matrix, found))
}

/// Candidate generation: join frequent sets sharing all but their highest
/// column, then drop any candidate with an infrequent subset.
fn join_level(frequent: &[u128]) -> Vec<u128> {
    let known: HashSet<u128> = frequent.iter().copied().collect();
    let mut sorted = frequent.to_vec();
    sorted.sort_unstable_by_key(|&m| (m & !highest_bit(m), highest_bit(m)));
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let prefix = sorted[i] & !highest_bit(sorted[i]);
        let mut j = i;
        while j < sorted.len() && sorted[j] & !highest_bit(sorted[j]) == prefix {
            j += 1;
        }
        for a in i..j {
            for b in a + 1..j {
                let cand = sorted[a] | sorted[b];
                let all_subsets_frequent = mask_columns(cand).all(|c| known.contains(&(cand & !(1u128 << c))));
                if all_subsets_frequent {
                    out.push(cand);
                }
            }
        }
        i = j;
    }
    out
}

fn highest_bit(m: u128) -> u128 {
    if m == 0 {
        0
    } else {
        1u128 << (127 - m.leading_zeros())
    }
}

/// Frequency table of exact follow sets, top `top_n` by fraction.
pub fn exclusive_pattern_shares(matrix: &FollowMatrix, top_n: usize) -> Result<Vec<ItemsetResult>> {
    if top_n == 0 {
        return Err(Error::InvalidArgument("top_n must be at least 1".into()));
    }
    let mut tally: HashMap<u128, u64> = HashMap::new();
    for &row in matrix.row_masks() {
        *tally.entry(row).or_default() += 1;
    }
    let mut ranked = rank(matrix, tally.into_iter().collect());
    ranked.truncate(top_n);
    Ok(ranked)
}

/// Symmetric matrix of Pearson correlations between follow indicators.
/// `None` marks pairs involving a constant column.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiMatrix {
    pub candidate_ids: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl PhiMatrix {
    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        self.values[a][b]
    }
}

/// Co-follow counts: `co[a][b]` = users following both `a` and `b`
/// (the diagonal holds follower counts).
fn co_follow_counts(matrix: &FollowMatrix) -> Vec<Vec<u64>> {
    let k = matrix.n_candidates();
    let rows = matrix.row_masks();
    par::block_reduce(
        rows.len(),
        |range| {
            let mut co = vec![vec![0u64; k]; k];
            for &row in &rows[range] {
                let cols: Vec<usize> = mask_columns(row).collect();
                for (i, &a) in cols.iter().enumerate() {
                    for &b in &cols[i..] {
                        co[a][b] += 1;
                    }
                }
            }
            co
        },
        |mut a, b| {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (x, y) in ra.iter_mut().zip(rb) {
                    *x += y;
                }
            }
            a
        },
    )
    .unwrap_or_else(|| vec![vec![0; k]; k])
}

pub fn pairwise_phi(matrix: &FollowMatrix) -> Result<PhiMatrix> {
    let n = matrix.n_users();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "correlations need at least 2 users, got {n}"
        )));
    }
    let k = matrix.n_candidates();
    let co = co_follow_counts(matrix);
    let n = n as i128;
    let mut values = vec![vec![None; k]; k];
    for a in 0..k {
        for b in a..k {
            let (na, nb, nab) = (co[a][a] as i128, co[b][b] as i128, co[a][b] as i128);
            let va = na * (n - na);
            let vb = nb * (n - nb);
            if va == 0 || vb == 0 {
                continue;
            }
            let r = if a == b {
                1.0
            } else {
                let num = (n * nab - na * nb) as f64;
                (num / ((va as f64).sqrt() * (vb as f64).sqrt())).clamp(-1.0, 1.0)
            };
            values[a][b] = Some(r);
            values[b][a] = Some(r);
        }
    }
    Ok(PhiMatrix {
        candidate_ids: matrix.roster().candidates().iter().map(|c| c.candidate_id.clone()).collect(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roster::{ingest_edges, Candidate, CandidateRoster, Party};

    fn roster(ids: &[&str]) -> CandidateRoster {
        CandidateRoster::new(
            ids.iter()
                .map(|id| Candidate {
                    candidate_id: id.to_string(),
                    display_name: id.to_string(),
                    party: Party::Republican,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn singleton_supports() {
        let r = roster(&["T", "C"]);
        let m = ingest_edges([("1", "T"), ("2", "T"), ("3", "C")], &r).unwrap();
        let res = frequent_itemsets(&m, 0.3, 2).unwrap();
        let got: Vec<_> = res.iter().map(|r| (r.label(), r.count)).collect();
        assert_eq!(got, vec![("T".to_string(), 2), ("C".to_string(), 1)]);
        assert_eq!(res[0].support, 2.0 / 3.0);
    }

    #[test]
    fn containment_support() {
        let r = roster(&["T", "C"]);
        let m = ingest_edges([("1", "T"), ("1", "C"), ("2", "T"), ("2", "C")], &r).unwrap();
        let res = frequent_itemsets(&m, 0.5, 3).unwrap();
        let got: Vec<_> = res.iter().map(|r| (r.label(), r.support)).collect();
        assert_eq!(
            got,
            vec![("C".into(), 1.0), ("C+T".into(), 1.0), ("T".into(), 1.0)]
        );
    }

    #[test]
    fn bad_arguments() {
        let r = roster(&["T"]);
        let m = ingest_edges([("1", "T")], &r).unwrap();
        assert!(frequent_itemsets(&m, 0.0, 1).is_err());
        assert!(frequent_itemsets(&m, 1.5, 1).is_err());
        assert!(frequent_itemsets(&m, 0.5, 0).is_err());
        assert!(exclusive_pattern_shares(&m, 0).is_err());
        let empty = ingest_edges(Vec::<(&str, &str)>::new(), &r).unwrap();
        assert!(frequent_itemsets(&empty, 0.5, 2).unwrap().is_empty());
    }

    #[test]
    fn exclusive_identical_rows() {
        let r = roster(&["T", "C"]);
        let m = ingest_edges([("1", "T"), ("2", "T"), ("3", "T")], &r).unwrap();
        let res = exclusive_pattern_shares(&m, 5).unwrap();
        assert_eq!(res.len(), 1);
        assert_eq!(res[0].support, 1.0);
    }

    #[test]
    fn phi_identical_and_complementary() {
        let r = roster(&["A", "B", "C"]);
        // A and B identical, C complementary to A over 4 users
        let m = ingest_edges(
            [("1", "A"), ("1", "B"), ("2", "A"), ("2", "B"), ("3", "C"), ("4", "C")],
            &r,
        )
        .unwrap();
        let phi = pairwise_phi(&m).unwrap();
        assert_eq!(phi.get(0, 1), Some(1.0));
        assert_eq!(phi.get(0, 2), Some(-1.0));
        assert_eq!(phi.get(2, 2), Some(1.0));
    }

    #[test]
    fn phi_constant_column_is_undefined() {
        let r = roster(&["A", "B", "Z"]);
        let m = ingest_edges([("1", "A"), ("2", "B"), ("2", "A")], &r).unwrap();
        let phi = pairwise_phi(&m).unwrap();
        // A is followed by everyone, Z by no one
        assert_eq!(phi.get(0, 1), None);
        assert_eq!(phi.get(2, 2), None);
        assert!(pairwise_phi(&ingest_edges([("1", "A")], &r).unwrap()).is_err());
    }

    #[test]
    fn join_prunes_infrequent_subsets() {
        // {0,1},{0,2} frequent but {1,2} not: {0,1,2} must be pruned
        let level = join_level(&[0b011, 0b101]);
        assert!(level.is_empty());
        let level = join_level(&[0b011, 0b101, 0b110]);
        assert_eq!(level, vec![0b111]);
    }
}
