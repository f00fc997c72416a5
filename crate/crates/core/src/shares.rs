//! Reciprocal follower weights and candidate shares.
//!
//! A user following `k` candidates carries weight `1/k`, split across every
//! candidate they follow. Shares are accumulated exactly: each candidate's
//! followers are tallied by follow-set size, and the tally is folded into a
//! rational over the common denominator `lcm(1..=roster size)`.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::par;
use crate::roster::{mask_columns, FollowMatrix};

/// Weight of a follower given their follow set: `1 / |row|`.
pub fn follower_weight(row: &[usize]) -> Result<Ratio<u64>> {
    if row.is_empty() {
        return Err(Error::EmptyRow);
    }
    let mut distinct = row.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    Ok(Ratio::new(1, distinct.len() as u64))
}

/// `tally[c][s-1]` = followers of candidate `c` who follow exactly `s` candidates.
fn size_tally(matrix: &FollowMatrix) -> Vec<Vec<u64>> {
    let k = matrix.n_candidates();
    let rows = matrix.row_masks();
    par::block_reduce(
        rows.len(),
        |range| {
            let mut t = vec![vec![0u64; k]; k];
            for &mask in &rows[range] {
                let s = mask.count_ones() as usize - 1;
                for c in mask_columns(mask) {
                    t[c][s] += 1;
                }
            }
            t
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
    .unwrap_or_else(|| vec![vec![0u64; k]; k])
}

fn lcm_upto(k: usize) -> BigInt {
    let mut l = BigInt::one();
    for i in 2..=k {
        let i = BigInt::from(i);
        let g = num_integer_gcd(&l, &i);
        l = l * &i / g;
    }
    l
}

fn num_integer_gcd(a: &BigInt, b: &BigInt) -> BigInt {
    let (mut a, mut b) = (a.clone(), b.clone());
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

/// Weighted follower total of every candidate, `Σ_i δ_ij / |row_i|`, and
/// their sum. The sum equals `n_users` exactly (every user spreads one unit
/// of weight); that identity is checked before returning.
pub fn weighted_totals(matrix: &FollowMatrix) -> Result<(Vec<BigRational>, BigRational)> {
    if matrix.n_users() == 0 {
        return Err(Error::NoFollowers);
    }
    let k = matrix.n_candidates();
    let l = lcm_upto(k);
    let tally = size_tally(matrix);
    let scaled: Vec<BigInt> = tally
        .iter()
        .map(|by_size| {
            by_size
                .iter()
                .enumerate()
                .map(|(s, &n)| BigInt::from(n) * (&l / BigInt::from(s + 1)))
                .sum()
        })
        .collect();
    let total: BigInt = scaled.iter().sum();
    assert_eq!(total, BigInt::from(matrix.n_users()) * &l, "weight denominator identity violated");
    let totals = scaled.into_iter().map(|n| BigRational::new(n, l.clone())).collect();
    Ok((totals, BigRational::new(total, l)))
}

/// Exact weighted share of every candidate.
pub fn weighted_shares(matrix: &FollowMatrix) -> Result<Vec<BigRational>> {
    let (totals, denom) = weighted_totals(matrix)?;
    Ok(totals.into_iter().map(|t| t / &denom).collect())
}

/// Exact unweighted share: follower count over the sum of follower counts.
pub fn raw_shares(matrix: &FollowMatrix) -> Result<Vec<BigRational>> {
    if matrix.n_users() == 0 {
        return Err(Error::NoFollowers);
    }
    let counts = crate::roster::follower_counts(matrix);
    let total: u64 = counts.iter().sum();
    Ok(counts
        .into_iter()
        .map(|c| BigRational::new(BigInt::from(c), BigInt::from(total)))
        .collect())
}

/// Both share vectors plus the aggregate over a named candidate subset.
#[derive(Debug, Clone, PartialEq)]
pub struct ShareReport {
    pub candidate_ids: Vec<String>,
    pub raw_share: Vec<BigRational>,
    pub weighted_share: Vec<BigRational>,
    pub top_k_ids: Vec<String>,
    pub top_k_raw: BigRational,
    pub top_k_weighted: BigRational,
}

impl ShareReport {
    pub fn raw_f64(&self) -> Vec<f64> {
        self.raw_share.iter().map(to_f64).collect()
    }

    pub fn weighted_f64(&self) -> Vec<f64> {
        self.weighted_share.iter().map(to_f64).collect()
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn share_report(matrix: &FollowMatrix, top_k: &[String]) -> Result<ShareReport> {
    let raw = raw_shares(matrix)?;
    let weighted = weighted_shares(matrix)?;
    let mut top_raw = BigRational::zero();
    let mut top_weighted = BigRational::zero();
    for id in top_k {
        let c = matrix
            .roster()
            .column_of(id)
            .ok_or_else(|| Error::UnknownCandidate(id.clone()))?;
        top_raw += &raw[c];
        top_weighted += &weighted[c];
    }
    Ok(ShareReport {
        candidate_ids: matrix.roster().candidates().iter().map(|c| c.candidate_id.clone()).collect(),
        raw_share: raw,
        weighted_share: weighted,
        top_k_ids: top_k.to_vec(),
        top_k_raw: top_raw,
        top_k_weighted: top_weighted,
    })
}
