//! Candidate rosters, the boolean follower matrix and its descriptive
//! statistics.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Largest roster a [`FollowMatrix`] can hold (one bit per candidate).
pub const MAX_CANDIDATES: usize = 128;

/// Engagement buckets: followers of 1, 2, 3, 4 and 5+ candidates.
pub const ENGAGEMENT_BUCKETS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    #[serde(rename = "D")]
    Democrat,
    #[serde(rename = "R")]
    Republican,
}

impl Party {
    pub fn code(self) -> &'static str {
        match self {
            Party::Democrat => "D",
            Party::Republican => "R",
        }
    }

    pub fn parse(s: &str) -> Option<Party> {
        match s.trim() {
            "D" => Some(Party::Democrat),
            "R" => Some(Party::Republican),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub candidate_id: String,
    pub display_name: String,
    pub party: Party,
}

/// Ordered candidate list; the order defines matrix column indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateRoster {
    candidates: Vec<Candidate>,
    index: HashMap<String, usize>,
}

impl CandidateRoster {
    pub fn new(candidates: Vec<Candidate>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::EmptyRoster);
        }
        if candidates.len() > MAX_CANDIDATES {
            return Err(Error::RosterTooLarge(candidates.len()));
        }
        let mut index = HashMap::with_capacity(candidates.len());
        for (i, c) in candidates.iter().enumerate() {
            if index.insert(c.candidate_id.clone(), i).is_some() {
                // header is line 1
                return Err(Error::DuplicateCandidate {
                    id: c.candidate_id.clone(),
                    line: i + 2,
                });
            }
        }
        Ok(CandidateRoster { candidates, index })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn get(&self, column: usize) -> &Candidate {
        &self.candidates[column]
    }

    pub fn column_of(&self, candidate_id: &str) -> Option<usize> {
        self.index.get(candidate_id).copied()
    }

    pub fn party_of(&self, column: usize) -> Party {
        self.candidates[column].party
    }

    /// Bitmask of all columns belonging to `party`.
    pub fn party_mask(&self, party: Party) -> u128 {
        self.candidates
            .iter()
            .enumerate()
            .filter(|(_, c)| c.party == party)
            .fold(0u128, |m, (i, _)| m | (1u128 << i))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().from_writer(w);
        out.write_record(["candidate_id", "display_name", "party"])?;
        for c in &self.candidates {
            out.write_record([c.candidate_id.as_str(), c.display_name.as_str(), c.party.code()])?;
        }
        out.flush().map_err(|e| Error::io("<roster>", e))?;
        Ok(())
    }
}

pub fn load_roster(path: impl AsRef<Path>) -> Result<CandidateRoster> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_roster(file, &path.display().to_string())
}

/// Parse a roster CSV (`candidate_id,display_name,party`).
pub fn parse_roster<R: Read>(reader: R, file_name: &str) -> Result<CandidateRoster> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["candidate_id", "display_name", "party"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h.trim() != e) {
        return Err(Error::Parse {
            file: file_name.to_string(),
            line: 1,
            message: format!("expected header `{}`", expected.join(",")),
        });
    }
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let id = record[0].trim().to_string();
        if id.is_empty() {
            return Err(Error::Parse {
                file: file_name.to_string(),
                line,
                message: "empty candidate_id".into(),
            });
        }
        let party = Party::parse(&record[2]).ok_or_else(|| Error::UnknownParty {
            party: record[2].to_string(),
            line,
        })?;
        if seen.insert(id.clone(), line).is_some() {
            return Err(Error::DuplicateCandidate { id, line });
        }
        candidates.push(Candidate {
            candidate_id: id,
            display_name: record[1].trim().to_string(),
            party,
        });
    }
    CandidateRoster::new(candidates)
}

/// Partisan label derived from a follow set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartisanClass {
    DemocratFollower,
    IndependentFollower,
    RepublicanFollower,
}

impl PartisanClass {
    pub const ALL: [PartisanClass; 3] = [
        PartisanClass::DemocratFollower,
        PartisanClass::IndependentFollower,
        PartisanClass::RepublicanFollower,
    ];

    /// Outcome code used by the multinomial model: 1 Democrat, 2 Independent, 3 Republican.
    pub fn code(self) -> u8 {
        match self {
            PartisanClass::DemocratFollower => 1,
            PartisanClass::IndependentFollower => 2,
            PartisanClass::RepublicanFollower => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(PartisanClass::DemocratFollower),
            2 => Some(PartisanClass::IndependentFollower),
            3 => Some(PartisanClass::RepublicanFollower),
            _ => None,
        }
    }

    /// Zero-based index in [`PartisanClass::ALL`].
    pub fn index(self) -> usize {
        self.code() as usize - 1
    }

    pub fn name(self) -> &'static str {
        match self {
            PartisanClass::DemocratFollower => "democrat",
            PartisanClass::IndependentFollower => "independent",
            PartisanClass::RepublicanFollower => "republican",
        }
    }
}

impl fmt::Display for PartisanClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sparse boolean follower x candidate incidence.
///
/// Each row is stored as a bitmask over roster columns, which is a sorted,
/// deduplicated set by construction. Rows are never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FollowMatrix {
    roster: CandidateRoster,
    user_ids: Vec<String>,
    rows: Vec<u128>,
}

impl FollowMatrix {
    /// Build from raw row masks. Fails on an empty row or a bit outside the roster.
    pub fn from_rows(roster: CandidateRoster, user_ids: Vec<String>, rows: Vec<u128>) -> Result<Self> {
        if user_ids.len() != rows.len() {
            return Err(Error::Dimension(format!(
                "{} user ids for {} rows",
                user_ids.len(),
                rows.len()
            )));
        }
        let valid = if roster.len() == 128 {
            u128::MAX
        } else {
            (1u128 << roster.len()) - 1
        };
        for &r in &rows {
            if r == 0 {
                return Err(Error::EmptyRow);
            }
            if r & !valid != 0 {
                return Err(Error::InvalidArgument("column index outside roster".into()));
            }
        }
        Ok(FollowMatrix {
            roster,
            user_ids,
            rows,
        })
    }

    pub fn roster(&self) -> &CandidateRoster {
        &self.roster
    }

    pub fn n_users(&self) -> usize {
        self.rows.len()
    }

    pub fn n_candidates(&self) -> usize {
        self.roster.len()
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn row_masks(&self) -> &[u128] {
        &self.rows
    }

    /// Followed column indices of row `i`, ascending.
    pub fn row(&self, i: usize) -> Vec<usize> {
        mask_columns(self.rows[i]).collect()
    }

    pub fn follows(&self, user: usize, column: usize) -> bool {
        self.rows[user] >> column & 1 == 1
    }

    /// Emit the matrix as an edge CSV, rows in order, columns ascending.
    pub fn write_edges<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().from_writer(w);
        out.write_record(["user_id", "candidate_id"])?;
        for (uid, &mask) in self.user_ids.iter().zip(&self.rows) {
            for col in mask_columns(mask) {
                out.write_record([uid.as_str(), self.roster.get(col).candidate_id.as_str()])?;
            }
        }
        out.flush().map_err(|e| Error::io("<edges>", e))?;
        Ok(())
    }
}

/// Iterate the set bits of a row mask in ascending order.
pub fn mask_columns(mut mask: u128) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let c = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(c)
        }
    })
}

/// Build a matrix from `(user_id, candidate_id)` edges.
///
/// Rows follow first-appearance order of `user_id`; duplicate edges collapse.
pub fn ingest_edges<I, U, C>(edges: I, roster: &CandidateRoster) -> Result<FollowMatrix>
where
    I: IntoIterator<Item = (U, C)>,
    U: AsRef<str>,
    C: AsRef<str>,
{
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut user_ids = Vec::new();
    let mut rows: Vec<u128> = Vec::new();
    for (user, cand) in edges {
        let (user, cand) = (user.as_ref(), cand.as_ref());
        let col = roster
            .column_of(cand)
            .ok_or_else(|| Error::UnknownCandidate(cand.to_string()))?;
        let row = match ids.get(user) {
            Some(&r) => r,
            None => {
                ids.insert(user.to_string(), rows.len());
                user_ids.push(user.to_string());
                rows.push(0);
                rows.len() - 1
            }
        };
        rows[row] |= 1u128 << col;
    }
    Ok(FollowMatrix {
        roster: roster.clone(),
        user_ids,
        rows,
    })
}

/// Stream an edge CSV (`user_id,candidate_id`) into a matrix.
pub fn load_edges(path: impl AsRef<Path>, roster: &CandidateRoster) -> Result<FollowMatrix> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edges(file, &path.display().to_string(), roster)
}

pub fn parse_edges<R: Read>(reader: R, file_name: &str, roster: &CandidateRoster) -> Result<FollowMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || headers[0].trim() != "user_id" || headers[1].trim() != "candidate_id" {
        return Err(Error::Parse {
            file: file_name.to_string(),
            line: 1,
            message: "expected header `user_id,candidate_id`".into(),
        });
    }
    let mut edges = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != 2 {
            return Err(Error::Parse {
                file: file_name.to_string(),
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let cand = record[1].trim();
        if roster.column_of(cand).is_none() {
            return Err(Error::Parse {
                file: file_name.to_string(),
                line,
                message: format!("unknown candidate id `{cand}`"),
            });
        }
        edges.push((record[0].trim().to_string(), cand.to_string()));
    }
    ingest_edges(edges, roster)
}

fn column_tally<F>(matrix: &FollowMatrix, width: usize, bin: F) -> Vec<Vec<u64>>
where
    F: Fn(u128) -> usize + Sync + Send,
{
    let k = matrix.n_candidates();
    let rows = matrix.row_masks();
    par::block_reduce(
        rows.len(),
        |range| {
            let mut t = vec![vec![0u64; width]; k];
            for &mask in &rows[range] {
                let b = bin(mask);
                for c in mask_columns(mask) {
                    t[c][b] += 1;
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
    .unwrap_or_else(|| vec![vec![0u64; width]; k])
}

/// Number of followers of each candidate, in roster order.
pub fn follower_counts(matrix: &FollowMatrix) -> Vec<u64> {
    column_tally(matrix, 1, |_| 0).into_iter().map(|v| v[0]).collect()
}

/// One candidate's engagement row.
#[derive(Debug, Clone, PartialEq)]
pub struct Engagement {
    pub candidate_id: String,
    /// Followers bucketed by how many candidates they follow in total.
    pub counts: [u64; ENGAGEMENT_BUCKETS],
    /// `None` marks a candidate with no followers.
    pub fractions: Option<[f64; ENGAGEMENT_BUCKETS]>,
}

fn engagement_bucket(mask: u128) -> usize {
    (mask.count_ones() as usize).min(ENGAGEMENT_BUCKETS) - 1
}

pub fn engagement_distribution(matrix: &FollowMatrix) -> Vec<Engagement> {
    let tally = column_tally(matrix, ENGAGEMENT_BUCKETS, engagement_bucket);
    tally
        .into_iter()
        .enumerate()
        .map(|(c, v)| {
            let mut counts = [0u64; ENGAGEMENT_BUCKETS];
            counts.copy_from_slice(&v);
            let total: u64 = counts.iter().sum();
            let fractions = (total > 0).then(|| counts.map(|x| x as f64 / total as f64));
            Engagement {
                candidate_id: matrix.roster().get(c).candidate_id.clone(),
                counts,
                fractions,
            }
        })
        .collect()
}

/// Classify a single follow set.
pub fn partisan_class(row: &[usize], roster: &CandidateRoster) -> Result<PartisanClass> {
    if row.is_empty() {
        return Err(Error::EmptyRow);
    }
    let mut mask = 0u128;
    for &c in row {
        if c >= roster.len() {
            return Err(Error::InvalidArgument(format!("column {c} outside roster")));
        }
        mask |= 1u128 << c;
    }
    Ok(class_of_mask(mask, roster.party_mask(Party::Democrat)))
}

pub(crate) fn class_of_mask(mask: u128, democrats: u128) -> PartisanClass {
    let dem = mask & democrats != 0;
    let rep = mask & !democrats != 0;
    match (dem, rep) {
        (true, false) => PartisanClass::DemocratFollower,
        (false, true) => PartisanClass::RepublicanFollower,
        _ => PartisanClass::IndependentFollower,
    }
}

/// Partisan class of every row, in row order.
pub fn partisan_classes(matrix: &FollowMatrix) -> Vec<PartisanClass> {
    let dems = matrix.roster().party_mask(Party::Democrat);
    matrix.row_masks().iter().map(|&m| class_of_mask(m, dems)).collect()
}

/// `hist[k-1]` = number of users following exactly `k` candidates, for
/// `k` in `1..=roster size`.
pub fn follow_count_histogram(matrix: &FollowMatrix) -> Vec<u64> {
    let mut hist = vec![0u64; matrix.n_candidates()];
    for &m in matrix.row_masks() {
        hist[m.count_ones() as usize - 1] += 1;
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn roster(spec: &[(&str, Party)]) -> CandidateRoster {
        CandidateRoster::new(
            spec.iter()
                .map(|(id, p)| Candidate {
                    candidate_id: id.to_string(),
                    display_name: id.to_string(),
                    party: *p,
                })
                .collect(),
        )
        .unwrap()
    }

    const TABLE_ONE: &str = "candidate_id,display_name,party
chafee,Lincoln Chafee,D
clinton,Hillary Clinton,D
omalley,Martin O'Malley,D
sanders,Bernie Sanders,D
webb,Jim Webb,D
bush,Jeb Bush,R
carson,Ben Carson,R
christie,Chris Christie,R
cruz,Ted Cruz,R
fiorina,Carly Fiorina,R
kasich,John Kasich,R
huckabee,Mike Huckabee,R
paul,Rand Paul,R
rubio,Marco Rubio,R
trump,Donald Trump,R
walker,Scott Walker,R
";

    #[test]
    fn sixteen_candidate_roster() {
        let r = parse_roster(TABLE_ONE.as_bytes(), "t").unwrap();
        assert_eq!(r.len(), 16);
        let dems = r.candidates().iter().filter(|c| c.party == Party::Democrat).count();
        assert_eq!(dems, 5);
        assert_eq!(r.len() - dems, 11);
        assert_eq!(r.column_of("sanders"), Some(3));
    }

    #[test]
    fn one_line_roster() {
        let r = parse_roster("candidate_id,display_name,party\nx,X,D\n".as_bytes(), "t").unwrap();
        assert_eq!(r.len(), 1);
    }

    #[test]
    fn roster_errors_are_distinct() {
        let dup = "candidate_id,display_name,party\nclinton,a,D\nclinton,b,D\n";
        match parse_roster(dup.as_bytes(), "t") {
            Err(Error::DuplicateCandidate { id, line }) => {
                assert_eq!(id, "clinton");
                assert_eq!(line, 3);
            }
            other => panic!("{other:?}"),
        }
        let bad = "candidate_id,display_name,party\nx,X,G\n";
        assert!(matches!(
            parse_roster(bad.as_bytes(), "t"),
            Err(Error::UnknownParty { line: 2, .. })
        ));
        let empty = "candidate_id,display_name,party\n";
        assert!(matches!(parse_roster(empty.as_bytes(), "t"), Err(Error::EmptyRoster)));
    }

    #[test]
    fn ingest_deduplicates_and_orders() {
        let r = roster(&[("trump", Party::Republican), ("cruz", Party::Republican), ("clinton", Party::Democrat)]);
        let m = ingest_edges([("u1", "trump"), ("u1", "trump"), ("u1", "cruz")], &r).unwrap();
        assert_eq!(m.n_users(), 1);
        assert_eq!(m.row(0), vec![0, 1]);

        let m = ingest_edges([("u1", "clinton"), ("u2", "trump")], &r).unwrap();
        assert_eq!(m.n_users(), 2);
        assert_eq!(m.user_ids(), ["u1", "u2"]);
        assert_eq!(m.row(0), vec![2]);
        assert_eq!(m.row(1), vec![0]);
    }

    #[test]
    fn ingest_rejects_unknown_candidate() {
        let r = roster(&[("a", Party::Democrat)]);
        match ingest_edges([("u", "zz")], &r) {
            Err(Error::UnknownCandidate(id)) => assert_eq!(id, "zz"),
            other => panic!("{other:?}"),
        }
        let m = ingest_edges(Vec::<(String, String)>::new(), &r).unwrap();
        assert_eq!(m.n_users(), 0);
    }

    #[test]
    fn edge_parse_error_names_line() {
        let r = roster(&[("a", Party::Democrat)]);
        let src = "user_id,candidate_id\nu1,a\nu2,b\n";
        match parse_edges(src.as_bytes(), "edges.csv", &r) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains('b'));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn counts_by_hand() {
        let r = roster(&[("clinton", Party::Democrat), ("trump", Party::Republican)]);
        let m = ingest_edges([("u1", "clinton"), ("u2", "clinton"), ("u2", "trump")], &r).unwrap();
        assert_eq!(follower_counts(&m), vec![2, 1]);
        let empty = ingest_edges(Vec::<(&str, &str)>::new(), &r).unwrap();
        assert_eq!(follower_counts(&empty), vec![0, 0]);
    }

    #[test]
    fn engagement_by_hand() {
        let r = roster(&[("a", Party::Democrat), ("b", Party::Democrat), ("c", Party::Republican)]);
        let m = ingest_edges([("1", "a"), ("2", "a"), ("3", "a"), ("3", "b")], &r).unwrap();
        let e = engagement_distribution(&m);
        let fa = e[0].fractions.unwrap();
        assert_eq!(fa[0], 2.0 / 3.0);
        assert_eq!(fa[1], 1.0 / 3.0);
        assert_eq!(e[1].fractions.unwrap()[1], 1.0);
        assert!(e[2].fractions.is_none());
    }

    #[test]
    fn engagement_saturates_in_last_bucket() {
        let ids = ["a", "b", "c", "d", "e"];
        let r = roster(&ids.map(|i| (i, Party::Republican)));
        let edges: Vec<_> = (0..4).flat_map(|u| ids.map(move |c| (u.to_string(), c))).collect();
        let m = ingest_edges(edges, &r).unwrap();
        for e in engagement_distribution(&m) {
            assert_eq!(e.fractions.unwrap(), [0.0, 0.0, 0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn partisan_examples() {
        let r = roster(&[("clinton", Party::Democrat), ("sanders", Party::Democrat), ("trump", Party::Republican)]);
        assert_eq!(partisan_class(&[0, 1], &r).unwrap(), PartisanClass::DemocratFollower);
        assert_eq!(partisan_class(&[0, 2], &r).unwrap(), PartisanClass::IndependentFollower);
        assert_eq!(partisan_class(&[2], &r).unwrap(), PartisanClass::RepublicanFollower);
        assert!(matches!(partisan_class(&[], &r), Err(Error::EmptyRow)));
    }

    #[test]
    fn histogram_by_hand() {
        let r = roster(&[("a", Party::Democrat), ("b", Party::Democrat), ("c", Party::Republican)]);
        let m = ingest_edges(
            [("1", "a"), ("2", "a"), ("2", "b"), ("3", "a"), ("3", "b"), ("3", "c")],
            &r,
        )
        .unwrap();
        assert_eq!(follow_count_histogram(&m), vec![1, 1, 1]);
        let m = ingest_edges([("1", "a"), ("2", "b"), ("3", "c")], &r).unwrap();
        assert_eq!(follow_count_histogram(&m), vec![3, 0, 0]);
    }
}
