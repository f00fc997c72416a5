#![allow(dead_code)]

use std::path::Path;

use followgraph::roster::{Candidate, CandidateRoster, FollowMatrix, Party};
use followgraph::synth::Scenario;

pub fn scenario(name: &str) -> Scenario {
    Scenario::load(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)).unwrap()
}

/// `k` candidates `c00, c01, ...`, alternating Democrat / Republican.
pub fn roster_of(k: usize) -> CandidateRoster {
    CandidateRoster::new(
        (0..k)
            .map(|c| Candidate {
                candidate_id: format!("c{c:02}"),
                display_name: format!("Candidate {c}"),
                party: if c % 2 == 0 { Party::Democrat } else { Party::Republican },
            })
            .collect(),
    )
    .unwrap()
}

pub fn matrix_from_masks(k: usize, rows: Vec<u128>) -> FollowMatrix {
    let ids = (0..rows.len()).map(|i| format!("u{i}")).collect();
    FollowMatrix::from_rows(roster_of(k), ids, rows).unwrap()
}

pub fn columns(mask: u128) -> Vec<usize> {
    (0..128).filter(|c| mask >> c & 1 == 1).collect()
}

pub mod strategies {
    use proptest::prelude::*;

    /// Non-empty row masks over `k` columns.
    pub fn rows(k: usize, max_users: usize) -> impl Strategy<Value = Vec<u128>> {
        let full = (1u128 << k) - 1;
        prop::collection::vec(1u128..=full, 1..=max_users)
    }

    pub fn matrix(max_k: usize, max_users: usize) -> impl Strategy<Value = (usize, Vec<u128>)> {
        (1..=max_k).prop_flat_map(move |k| (Just(k), rows(k, max_users)))
    }
}
