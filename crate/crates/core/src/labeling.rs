//! Gender labeling from three channels with strict priority
//! (first name, then profile image, then self-description), journalist
//! detection, and per-channel coverage accounting.

use std::collections::HashMap;
use std::io::{BufRead, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    #[serde(rename = "F")]
    Female,
    #[serde(rename = "M")]
    Male,
}

impl Gender {
    pub fn code(self) -> &'static str {
        match self {
            Gender::Female => "F",
            Gender::Male => "M",
        }
    }

    pub fn parse(s: &str) -> Option<Gender> {
        match s.trim() {
            "F" | "f" => Some(Gender::Female),
            "M" | "m" => Some(Gender::Male),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    FirstName,
    ProfileImage,
    SelfDescription,
}

impl Channel {
    /// Priority order.
    pub const ALL: [Channel; 3] = [Channel::FirstName, Channel::ProfileImage, Channel::SelfDescription];

    pub fn name(self) -> &'static str {
        match self {
            Channel::FirstName => "first_name",
            Channel::ProfileImage => "profile_image",
            Channel::SelfDescription => "self_description",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderLabel {
    pub gender: Gender,
    pub channel: Channel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub display_name: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_image_ref: Option<String>,
    pub tweets_posted: u64,
    pub followers_count: u64,
    pub start_year: i32,
}

/// Earliest plausible account start year.
pub const FIRST_START_YEAR: i32 = 2006;

impl UserProfile {
    pub fn validate(&self, ingestion_year: i32) -> Result<()> {
        if !(FIRST_START_YEAR..=ingestion_year).contains(&self.start_year) {
            return Err(Error::InvalidArgument(format!(
                "user {}: start_year {} outside [{FIRST_START_YEAR}, {ingestion_year}]",
                self.user_id, self.start_year
            )));
        }
        Ok(())
    }
}

/// Read JSON-lines profiles, validating each start year.
pub fn read_profiles<R: Read>(reader: R, file_name: &str, ingestion_year: i32) -> Result<Vec<UserProfile>> {
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io(file_name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let p: UserProfile = serde_json::from_str(&line).map_err(|e| Error::Parse {
            file: file_name.to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        p.validate(ingestion_year).map_err(|e| Error::Parse {
            file: file_name.to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(p);
    }
    Ok(out)
}

pub fn load_profiles(path: impl AsRef<Path>, ingestion_year: i32) -> Result<Vec<UserProfile>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_profiles(f, &path.display().to_string(), ingestion_year)
}

/// Case-folded first name to gender.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NameList {
    names: HashMap<String, Gender>,
}

impl NameList {
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Gender)>,
        S: AsRef<str>,
    {
        let mut names = HashMap::new();
        for (name, g) in pairs {
            let key = name.as_ref().trim().to_lowercase();
            match names.insert(key.clone(), g) {
                Some(prev) if prev != g => return Err(Error::ConflictingName { name: key }),
                _ => {}
            }
        }
        Ok(NameList { names })
    }

    pub fn lookup(&self, name: &str) -> Option<Gender> {
        self.names.get(&name.to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Parse a name list CSV (`name,gender`, gender F or M).
pub fn parse_name_list<R: Read>(reader: R, file_name: &str) -> Result<NameList> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut pairs = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let gender = record.get(1).and_then(Gender::parse).ok_or_else(|| Error::Parse {
            file: file_name.to_string(),
            line,
            message: "gender must be F or M".into(),
        })?;
        pairs.push((record[0].to_string(), gender));
    }
    NameList::from_pairs(pairs)
}

pub fn load_name_list(path: impl AsRef<Path>) -> Result<NameList> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_name_list(f, &path.display().to_string())
}

/// Gender guess from a profile image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagePrediction {
    pub gender: Gender,
    pub confidence: f64,
}

/// Anything that can guess a gender from an image handle.
///
/// Implementations must be safe to call from several threads at once.
pub trait ImagePredictor: Send + Sync {
    fn predict(&self, image_ref: &str) -> Result<Option<ImagePrediction>>;
}

/// Never predicts anything.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoImagePredictor;

impl ImagePredictor for NoImagePredictor {
    fn predict(&self, _image_ref: &str) -> Result<Option<ImagePrediction>> {
        Ok(None)
    }
}

/// Lookup-table predictor; stands in for a trained image classifier.
#[derive(Debug, Clone, Default)]
pub struct TablePredictor {
    table: HashMap<String, ImagePrediction>,
}

impl TablePredictor {
    pub fn new(table: HashMap<String, ImagePrediction>) -> Self {
        TablePredictor { table }
    }

    /// CSV `image_ref,gender,confidence`.
    pub fn parse<R: Read>(reader: R, file_name: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut table = HashMap::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
            let bad = |m: &str| Error::Parse {
                file: file_name.to_string(),
                line,
                message: m.to_string(),
            };
            let gender = record.get(1).and_then(Gender::parse).ok_or_else(|| bad("gender must be F or M"))?;
            let confidence: f64 = record
                .get(2)
                .and_then(|s| s.trim().parse().ok())
                .filter(|c: &f64| (0.0..=1.0).contains(c))
                .ok_or_else(|| bad("confidence must be a number in [0, 1]"))?;
            table.insert(record[0].trim().to_string(), ImagePrediction { gender, confidence });
        }
        Ok(TablePredictor { table })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(f, &path.display().to_string())
    }
}

impl ImagePredictor for TablePredictor {
    fn predict(&self, image_ref: &str) -> Result<Option<ImagePrediction>> {
        Ok(self.table.get(image_ref).copied())
    }
}

/// Lowercased alphanumeric words of `text`.
fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
}

/// Look up the first whitespace-delimited token of the display name,
/// trimmed of non-alphabetic edge characters.
pub fn label_by_name(display_name: &str, names: &NameList) -> Option<Gender> {
    let token = display_name.split_whitespace().next()?;
    let token = token.trim_matches(|c: char| !c.is_alphabetic());
    if token.is_empty() {
        return None;
    }
    names.lookup(token)
}

const MALE_KEYWORDS: [&str; 3] = ["papa", "father", "husband"];
const FEMALE_KEYWORDS: [&str; 4] = ["mama", "mom", "mother", "wife"];

/// Whole-word family keywords; mixed signals abstain.
pub fn label_by_description(description: &str) -> Option<Gender> {
    let (mut male, mut female) = (false, false);
    for w in words(description) {
        male |= MALE_KEYWORDS.contains(&w.as_str());
        female |= FEMALE_KEYWORDS.contains(&w.as_str());
    }
    match (male, female) {
        (true, false) => Some(Gender::Male),
        (false, true) => Some(Gender::Female),
        _ => None,
    }
}

/// Occupation keywords marking a journalist.
pub const JOURNALIST_KEYWORDS: [&str; 6] = ["journalist", "reporter", "correspondent", "editor", "anchor", "columnist"];

pub fn detect_journalist(description: &str) -> bool {
    words(description).any(|w| JOURNALIST_KEYWORDS.contains(&w.as_str()))
}

/// First channel that yields a gender wins; later channels are not consulted.
pub fn classify_gender(profile: &UserProfile, names: &NameList, images: &dyn ImagePredictor) -> Option<GenderLabel> {
    if let Some(gender) = label_by_name(&profile.display_name, names) {
        return Some(GenderLabel {
            gender,
            channel: Channel::FirstName,
        });
    }
    if let Some(image) = profile.profile_image_ref.as_deref() {
        match images.predict(image) {
            Ok(Some(p)) => {
                return Some(GenderLabel {
                    gender: p.gender,
                    channel: Channel::ProfileImage,
                })
            }
            Ok(None) => {}
            Err(e) => log::warn!("user {}: image channel skipped: {e}", profile.user_id),
        }
    }
    label_by_description(&profile.description).map(|gender| GenderLabel {
        gender,
        channel: Channel::SelfDescription,
    })
}

/// Label every profile, in order.
pub fn classify_all(profiles: &[UserProfile], names: &NameList, images: &dyn ImagePredictor) -> Vec<Option<GenderLabel>> {
    crate::par::map_indexed(profiles.len(), |i| classify_gender(&profiles[i], names, images))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelCoverage {
    pub channel: Channel,
    /// Users whose label came from this channel.
    pub identified: u64,
    pub net_contribution: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub n_users: u64,
    pub channels: Vec<ChannelCoverage>,
    pub labeled: u64,
    pub total_fraction: f64,
}

/// Net contribution of each channel. The per-channel counts partition the
/// labeled users, so the fractions add up to the total labeled fraction.
pub fn channel_coverage(labels: &[Option<GenderLabel>]) -> CoverageReport {
    let n = labels.len() as u64;
    let mut counts = [0u64; 3];
    for l in labels.iter().flatten() {
        counts[l.channel as usize] += 1;
    }
    let frac = |c: u64| if n == 0 { 0.0 } else { c as f64 / n as f64 };
    let labeled: u64 = counts.iter().sum();
    CoverageReport {
        n_users: n,
        channels: Channel::ALL
            .iter()
            .map(|&channel| ChannelCoverage {
                channel,
                identified: counts[channel as usize],
                net_contribution: frac(counts[channel as usize]),
            })
            .collect(),
        labeled,
        total_fraction: frac(labeled),
    }
}

/// Gross identification: how many users each channel could label on its
/// own, ignoring priority.
pub fn gross_identification(profiles: &[UserProfile], names: &NameList, images: &dyn ImagePredictor) -> [u64; 3] {
    let mut out = [0u64; 3];
    for p in profiles {
        if label_by_name(&p.display_name, names).is_some() {
            out[0] += 1;
        }
        if let Some(img) = p.profile_image_ref.as_deref() {
            if matches!(images.predict(img), Ok(Some(_))) {
                out[1] += 1;
            }
        }
        if label_by_description(&p.description).is_some() {
            out[2] += 1;
        }
    }
    out
}
