mod common;

use common::{columns, matrix_from_masks, roster_of, strategies};
use followgraph::roster::{
    engagement_distribution, follow_count_histogram, follower_counts, ingest_edges, load_roster, parse_edges,
    partisan_class, partisan_classes, FollowMatrix, PartisanClass,
};
use followgraph::synth;
use proptest::prelude::*;

#[test]
fn edge_file_round_trip_on_generated_population() {
    let mut s = common::scenario("election.json");
    s.population_size = 10;
    s.planted_patterns.clear();
    let pop = synth::simulate_population(&s).unwrap();
    let mut buf = Vec::new();
    pop.matrix.write_edges(&mut buf).unwrap();
    let back = parse_edges(buf.as_slice(), "edges.csv", pop.matrix.roster()).unwrap();
    assert_eq!(back, pop.matrix);

    let dir = tempfile::tempdir().unwrap();
    synth::write_population(&pop, dir.path()).unwrap();
    let roster = load_roster(dir.path().join("roster.csv")).unwrap();
    assert_eq!(&roster, pop.matrix.roster());
}

#[test]
fn planted_single_party_share_is_exact() {
    let pop = synth::simulate_population(&common::scenario("election.json")).unwrap();
    let classes = partisan_classes(&pop.matrix);
    let single = classes.iter().filter(|c| **c != PartisanClass::IndependentFollower).count();
    assert_eq!(single * 100, 92 * classes.len());
    let mut counts = [0usize; 3];
    for c in classes {
        counts[c.index()] += 1;
    }
    assert_eq!(counts, pop.truth.class_counts);
}

#[test]
fn unknown_candidate_names_line() {
    let r = roster_of(2);
    let err = parse_edges("user_id,candidate_id\nu1,c00\nu2,nobody\n".as_bytes(), "e.csv", &r).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("nobody") && msg.contains('3'), "{msg}");
}

#[test]
fn empty_edge_stream_is_valid_and_all_zero() {
    let r = roster_of(3);
    let m = ingest_edges(std::iter::empty::<(&str, &str)>(), &r).unwrap();
    assert_eq!(m.n_users(), 0);
    assert_eq!(follower_counts(&m), vec![0, 0, 0]);
    assert!(engagement_distribution(&m).iter().all(|e| e.fractions.is_none()));
}

#[test]
fn saturated_matrix_engagement() {
    let m = matrix_from_masks(5, vec![0b11111; 7]);
    for e in engagement_distribution(&m) {
        assert_eq!(e.fractions.unwrap(), [0.0, 0.0, 0.0, 0.0, 1.0]);
    }
}

fn brute_counts(m: &FollowMatrix) -> Vec<u64> {
    (0..m.n_candidates())
        .map(|c| (0..m.n_users()).filter(|&u| m.follows(u, c)).count() as u64)
        .collect()
}

proptest! {
    #[test]
    fn counts_match_column_sums((k, rows) in strategies::matrix(8, 60)) {
        let m = matrix_from_masks(k, rows);
        let counts = follower_counts(&m);
        prop_assert_eq!(&counts, &brute_counts(&m));
        prop_assert!(counts.iter().sum::<u64>() >= m.n_users() as u64);
    }

    #[test]
    fn engagement_matches_tally((k, rows) in strategies::matrix(8, 100)) {
        let m = matrix_from_masks(k, rows.clone());
        for (c, e) in engagement_distribution(&m).into_iter().enumerate() {
            let mut tally = [0u64; 5];
            for &r in &rows {
                if r >> c & 1 == 1 {
                    tally[(r.count_ones() as usize).min(5) - 1] += 1;
                }
            }
            prop_assert_eq!(e.counts, tally);
            match e.fractions {
                Some(f) => prop_assert!((f.iter().sum::<f64>() - 1.0).abs() <= 1e-12),
                None => prop_assert_eq!(tally.iter().sum::<u64>(), 0),
            }
        }
    }

    #[test]
    fn histogram_is_popcount((k, rows) in strategies::matrix(10, 80)) {
        let m = matrix_from_masks(k, rows.clone());
        let h = follow_count_histogram(&m);
        prop_assert_eq!(h.len(), k);
        let mut oracle = vec![0u64; k];
        for r in &rows {
            oracle[columns(*r).len() - 1] += 1;
        }
        prop_assert_eq!(h.iter().sum::<u64>(), m.n_users() as u64);
        prop_assert_eq!(h, oracle);
    }

    #[test]
    fn classes_partition_users((k, rows) in strategies::matrix(8, 80)) {
        let m = matrix_from_masks(k, rows);
        let classes = partisan_classes(&m);
        prop_assert_eq!(classes.len(), m.n_users());
        for (i, c) in classes.iter().enumerate() {
            let row = m.row(i);
            let dems = row.iter().filter(|&&c| c % 2 == 0).count();
            let want = if dems == row.len() {
                PartisanClass::DemocratFollower
            } else if dems == 0 {
                PartisanClass::RepublicanFollower
            } else {
                PartisanClass::IndependentFollower
            };
            prop_assert_eq!(*c, want);
            prop_assert_eq!(partisan_class(&row, m.roster()).unwrap(), want);
        }
    }

    #[test]
    fn ingestion_dedups_and_keeps_first_appearance(
        edges in prop::collection::vec((0usize..12, 0usize..6), 1..80)
    ) {
        let r = roster_of(6);
        let named: Vec<(String, String)> =
            edges.iter().map(|&(u, c)| (format!("u{u}"), format!("c{c:02}"))).collect();
        let m = ingest_edges(named.iter().map(|(u, c)| (u.as_str(), c.as_str())), &r).unwrap();
        let mut order: Vec<String> = Vec::new();
        for (u, _) in &named {
            if !order.contains(u) {
                order.push(u.clone());
            }
        }
        prop_assert_eq!(m.user_ids(), order.as_slice());
        for (i, u) in order.iter().enumerate() {
            let mut want: Vec<usize> =
                edges.iter().filter(|(uu, _)| format!("u{uu}") == *u).map(|&(_, c)| c).collect();
            want.sort_unstable();
            want.dedup();
            prop_assert_eq!(m.row(i), want);
        }
    }
}
