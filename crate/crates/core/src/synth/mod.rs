//! Seeded synthetic populations and model datasets with planted truth.
//!
//! A [`Scenario`] is the complete recipe: running the same scenario (same
//! seed) reproduces every file bit for bit.

pub mod rng;

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::design::INTERCEPT;
use crate::glm::special::log_sum_exp;
use crate::glm::DesignMatrix;
use crate::labeling::{Gender, UserProfile};
use crate::roster::{class_of_mask, Candidate, CandidateRoster, FollowMatrix, Party, PartisanClass};
pub use rng::{SimRng, Stream};

/// Built-in scenario used by `simulate` when no file is given.
pub const DEFAULT_SCENARIO: &str = include_str!("../../scenarios/election.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSpec {
    pub candidate_id: String,
    pub display_name: String,
    pub party: Party,
    /// Relative chance of being picked as a user's primary candidate.
    #[serde(default = "one")]
    pub popularity: f64,
    /// Chance that a user drawn to this candidate follows no one else.
    #[serde(default = "half")]
    pub committedness: f64,
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartisanMix {
    pub democrat: f64,
    pub republican: f64,
    pub independent: f64,
}

/// An exact follow set planted at a fixed population fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedPattern {
    pub candidates: Vec<String>,
    pub fraction: f64,
}

/// Planted net contribution of each gender channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelingPlan {
    pub first_name: f64,
    pub profile_image: f64,
    pub self_description: f64,
    #[serde(default = "half")]
    pub female_fraction: f64,
    #[serde(default)]
    pub journalist_fraction: f64,
}

impl Default for LabelingPlan {
    fn default() -> Self {
        LabelingPlan {
            first_name: 0.387,
            profile_image: 0.172,
            self_description: 0.007,
            female_fraction: 0.5,
            journalist_fraction: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Distribution {
    Normal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
    Bernoulli { p: f64 },
}

impl Distribution {
    fn sample(&self, rng: &mut SimRng) -> f64 {
        match *self {
            Distribution::Normal { mean, sd } => mean + sd * rng.normal(),
            Distribution::Uniform { low, high } => low + (high - low) * rng.uniform(),
            Distribution::Bernoulli { p } => f64::from(u8::from(rng.bernoulli(p))),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ok = match *self {
            Distribution::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd >= 0.0,
            Distribution::Uniform { low, high } => low.is_finite() && high.is_finite() && low <= high,
            Distribution::Bernoulli { p } => (0.0..=1.0).contains(&p),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Scenario(format!("covariate `{name}` has an invalid distribution")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateSpec {
    pub name: String,
    pub distribution: Distribution,
}

/// True negative binomial model. `beta[0]` is the intercept, then one
/// coefficient per covariate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbTruth {
    pub covariates: Vec<CovariateSpec>,
    pub beta: Vec<f64>,
    pub alpha: f64,
    #[serde(default)]
    pub rows: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnlTruth {
    pub covariates: Vec<CovariateSpec>,
    pub beta_democrat: Vec<f64>,
    pub beta_republican: Vec<f64>,
    #[serde(default)]
    pub rows: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitTruth {
    pub covariates: Vec<CovariateSpec>,
    pub beta: Vec<f64>,
    #[serde(default)]
    pub rows: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub roster: Vec<CandidateSpec>,
    pub population_size: usize,
    pub partisan_mix: PartisanMix,
    #[serde(default)]
    pub planted_patterns: Vec<PlantedPattern>,
    /// Chance of following one more candidate after each extra follow.
    #[serde(default = "half")]
    pub extra_follow_continue: f64,
    #[serde(default)]
    pub labeling: LabelingPlan,
    #[serde(default)]
    pub celebrity_fraction: f64,
    #[serde(default)]
    pub nb: Option<NbTruth>,
    #[serde(default)]
    pub mnl: Option<MnlTruth>,
    #[serde(default)]
    pub logit: Option<LogitTruth>,
}

fn check_fraction(v: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Scenario(format!("{what} must lie in [0, 1], got {v}")))
    }
}

fn check_covariates(covs: &[CovariateSpec], n_coef: usize, what: &str) -> Result<()> {
    if n_coef != covs.len() + 1 {
        return Err(Error::Scenario(format!(
            "{what}: {n_coef} coefficients for intercept + {} covariates",
            covs.len()
        )));
    }
    covs.iter().try_for_each(|c| c.distribution.validate(&c.name))
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn default_election() -> Self {
        Self::from_json(DEFAULT_SCENARIO).expect("built-in scenario is valid")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 {
            return Err(Error::Scenario("population_size must be at least 1".into()));
        }
        let mix = self.partisan_mix;
        for (v, n) in [(mix.democrat, "democrat"), (mix.republican, "republican"), (mix.independent, "independent")] {
            check_fraction(v, n)?;
        }
        if (mix.democrat + mix.republican + mix.independent - 1.0).abs() > 1e-12 {
            return Err(Error::Scenario("partisan_mix fractions must sum to 1".into()));
        }
        for c in &self.roster {
            check_fraction(c.committedness, "committedness")?;
            if !(c.popularity > 0.0 && c.popularity.is_finite()) {
                return Err(Error::Scenario(format!("{}: popularity must be positive", c.candidate_id)));
            }
        }
        check_fraction(self.extra_follow_continue, "extra_follow_continue")?;
        let l = self.labeling;
        for (v, n) in [
            (l.first_name, "first_name"),
            (l.profile_image, "profile_image"),
            (l.self_description, "self_description"),
            (l.female_fraction, "female_fraction"),
            (l.journalist_fraction, "journalist_fraction"),
        ] {
            check_fraction(v, n)?;
        }
        if l.first_name + l.profile_image + l.self_description > 1.0 + 1e-12 {
            return Err(Error::Scenario("labeling fractions exceed 1".into()));
        }
        check_fraction(self.celebrity_fraction, "celebrity_fraction")?;
        for p in &self.planted_patterns {
            check_fraction(p.fraction, "planted pattern fraction")?;
            if p.candidates.is_empty() {
                return Err(Error::Scenario("planted pattern with no candidates".into()));
            }
        }
        if let Some(nb) = &self.nb {
            if !(nb.alpha > 0.0 && nb.alpha.is_finite()) {
                return Err(Error::Scenario(format!("alpha must be positive, got {}", nb.alpha)));
            }
            check_covariates(&nb.covariates, nb.beta.len(), "nb")?;
        }
        if let Some(m) = &self.mnl {
            check_covariates(&m.covariates, m.beta_democrat.len(), "mnl democrat block")?;
            check_covariates(&m.covariates, m.beta_republican.len(), "mnl republican block")?;
        }
        if let Some(l) = &self.logit {
            check_covariates(&l.covariates, l.beta.len(), "logit")?;
        }
        self.candidate_roster()?;
        Ok(())
    }

    pub fn candidate_roster(&self) -> Result<CandidateRoster> {
        CandidateRoster::new(
            self.roster
                .iter()
                .map(|c| Candidate {
                    candidate_id: c.candidate_id.clone(),
                    display_name: c.display_name.clone(),
                    party: c.party,
                })
                .collect(),
        )
    }
}

/// Split `n` into integer parts proportional to `fractions` (largest
/// remainder, ties to the lower index).
pub fn allocate(fractions: &[f64], n: usize) -> Vec<usize> {
    let raw: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let target = (fractions.iter().sum::<f64>() * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (raw[a] - raw[a].floor(), raw[b] - raw[b].floor());
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for &i in order.iter().take(target.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

#[allow(clippy::same_item_push)]
fn sample_design(covs: &[CovariateSpec], n: usize, rng: &mut SimRng) -> Result<DesignMatrix> {
    let mut names = vec![INTERCEPT.to_string()];
    names.extend(covs.iter().map(|c| c.name.clone()));
    let mut data = Vec::with_capacity(n * names.len());
    for _ in 0..n {
        data.push(1.0);
        for c in covs {
            data.push(c.distribution.sample(rng));
        }
    }
    DesignMatrix::from_flat(names, data)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn truth<'a, T>(t: &'a Option<T>, what: &str) -> Result<&'a T> {
    t.as_ref()
        .ok_or_else(|| Error::Scenario(format!("scenario has no {what} parameters")))
}

/// Counts from the gamma–Poisson mixture: `v ~ Gamma(1/α, α)`, `y ~ Poisson(v μ)`.
pub fn simulate_nb(scenario: &Scenario) -> Result<(Vec<u64>, DesignMatrix)> {
    let t = truth(&scenario.nb, "negative binomial")?;
    if t.alpha.is_nan() || t.alpha <= 0.0 {
        return Err(Error::Scenario("alpha must be positive".into()));
    }
    let n = t.rows.unwrap_or(scenario.population_size);
    let mut rng = SimRng::new(scenario.seed, Stream::NegativeBinomial);
    let x = sample_design(&t.covariates, n, &mut rng)?;
    let y = (0..n)
        .map(|i| {
            let mu = dot(x.row(i), &t.beta).exp();
            let v = rng.gamma(1.0 / t.alpha, t.alpha);
            rng.poisson(v * mu)
        })
        .collect();
    Ok((y, x))
}

fn draw_class(rng: &mut SimRng, probs: &[f64]) -> usize {
    let u = rng.uniform();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

/// Partisan classes drawn from the exact multinomial probabilities.
pub fn simulate_mnl(scenario: &Scenario) -> Result<(Vec<PartisanClass>, DesignMatrix)> {
    let t = truth(&scenario.mnl, "multinomial")?;
    let n = t.rows.unwrap_or(scenario.population_size);
    let mut rng = SimRng::new(scenario.seed, Stream::Multinomial);
    let x = sample_design(&t.covariates, n, &mut rng)?;
    let classes = (0..n)
        .map(|i| {
            let eta = [dot(x.row(i), &t.beta_democrat), 0.0, dot(x.row(i), &t.beta_republican)];
            let lse = log_sum_exp(&eta);
            let probs = eta.map(|e| (e - lse).exp());
            PartisanClass::ALL[draw_class(&mut rng, &probs)]
        })
        .collect();
    Ok((classes, x))
}

pub fn simulate_logit(scenario: &Scenario) -> Result<(Vec<bool>, DesignMatrix)> {
    let t = truth(&scenario.logit, "logit")?;
    let n = t.rows.unwrap_or(scenario.population_size);
    let mut rng = SimRng::new(scenario.seed, Stream::Logit);
    let x = sample_design(&t.covariates, n, &mut rng)?;
    let y = (0..n)
        .map(|i| rng.uniform() < crate::glm::special::sigmoid(dot(x.row(i), &t.beta)))
        .collect();
    Ok((y, x))
}

/// Ground truth planted in a population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationTruth {
    pub n_users: usize,
    /// Users per class, ordered Democrat, Independent, Republican.
    pub class_counts: [usize; 3],
    /// Users holding each planted exact pattern, in scenario order.
    pub planted_counts: Vec<usize>,
    /// Users labeled by first name, profile image, self-description.
    pub channel_counts: [usize; 3],
}

#[derive(Debug, Clone)]
pub struct Population {
    pub matrix: FollowMatrix,
    pub profiles: Vec<UserProfile>,
    pub names: Vec<(String, Gender)>,
    pub image_table: Vec<(String, Gender, f64)>,
    pub celebrity_followers: Vec<String>,
    pub truth: PopulationTruth,
}

const FEMALE_NAMES: [&str; 20] = [
    "Emily", "Isabella", "Sarah", "Olivia", "Emma", "Sophia", "Ava", "Mia", "Abigail", "Madison", "Chloe", "Grace",
    "Hannah", "Natalie", "Lily", "Samantha", "Ashley", "Jessica", "Lauren", "Megan",
];
const MALE_NAMES: [&str; 20] = [
    "Mike", "Jake", "James", "John", "Robert", "David", "William", "Joseph", "Daniel", "Matthew", "Andrew", "Joshua",
    "Ryan", "Tyler", "Brandon", "Kevin", "Justin", "Eric", "Steven", "Jason",
];
const SURNAMES: [&str; 10] = [
    "Smith", "Johnson", "Rodriguez", "Lee", "Walker", "Young", "Lopez", "Hill", "Green", "Adams",
];
const HANDLES: [&str; 10] = [
    "Patriot", "TruthSeeker", "VoterUSA", "NewsJunkie", "Liberty", "TeamBlue", "RedStateGuy", "Resist", "Freedom1776",
    "xX_gamer_Xx",
];
const PLAIN_BIOS: [&str; 8] = [
    "coffee lover", "sports fan", "love my country", "retired teacher", "dog person", "tech and politics",
    "living the dream", "",
];
const FEMALE_WORDS: [&str; 4] = ["mom", "mother", "wife", "mama"];
const MALE_WORDS: [&str; 3] = ["father", "husband", "papa"];
const JOURNALIST_WORDS: [&str; 6] = ["journalist", "reporter", "correspondent", "editor", "anchor", "columnist"];

/// The 40-name fixture lexicon the generator draws display names from.
pub fn fixture_names() -> Vec<(String, Gender)> {
    FEMALE_NAMES
        .iter()
        .map(|n| (n.to_string(), Gender::Female))
        .chain(MALE_NAMES.iter().map(|n| (n.to_string(), Gender::Male)))
        .collect()
}

fn pick<'a>(rng: &mut SimRng, xs: &[&'a str]) -> &'a str {
    xs[rng.below(xs.len() as u64) as usize]
}

fn opposite(g: Gender) -> Gender {
    match g {
        Gender::Female => Gender::Male,
        Gender::Male => Gender::Female,
    }
}

fn keyword(rng: &mut SimRng, g: Gender) -> &'static str {
    match g {
        Gender::Female => pick(rng, &FEMALE_WORDS),
        Gender::Male => pick(rng, &MALE_WORDS),
    }
}

struct FollowSampler<'a> {
    scenario: &'a Scenario,
    roster: &'a CandidateRoster,
    planted: HashSet<u128>,
}

impl FollowSampler<'_> {
    fn pool(&self, party: Option<Party>) -> Vec<usize> {
        (0..self.roster.len())
            .filter(|&c| party.is_none_or(|p| self.roster.party_of(c) == p))
            .collect()
    }

    fn pick_from(&self, rng: &mut SimRng, pool: &[usize], taken: u128) -> Option<usize> {
        let avail: Vec<usize> = pool.iter().copied().filter(|&c| taken >> c & 1 == 0).collect();
        if avail.is_empty() {
            return None;
        }
        let w: Vec<f64> = avail.iter().map(|&c| self.scenario.roster[c].popularity).collect();
        Some(avail[rng.weighted(&w)])
    }

    fn extend(&self, rng: &mut SimRng, mut mask: u128, pool: &[usize]) -> u128 {
        while rng.bernoulli(self.scenario.extra_follow_continue) {
            match self.pick_from(rng, pool, mask) {
                Some(c) => mask |= 1u128 << c,
                None => break,
            }
        }
        mask
    }

    fn draw_once(&self, rng: &mut SimRng, class: PartisanClass) -> Option<u128> {
        match class {
            PartisanClass::DemocratFollower | PartisanClass::RepublicanFollower => {
                let party = if class == PartisanClass::DemocratFollower {
                    Party::Democrat
                } else {
                    Party::Republican
                };
                let pool = self.pool(Some(party));
                let primary = self.pick_from(rng, &pool, 0)?;
                let mask = 1u128 << primary;
                if rng.bernoulli(self.scenario.roster[primary].committedness) {
                    return Some(mask);
                }
                let second = self.pick_from(rng, &pool, mask).map_or(0, |c| 1u128 << c);
                Some(self.extend(rng, mask | second, &pool))
            }
            PartisanClass::IndependentFollower => {
                let all = self.pool(None);
                let primary = self.pick_from(rng, &all, 0)?;
                let other = match self.roster.party_of(primary) {
                    Party::Democrat => Party::Republican,
                    Party::Republican => Party::Democrat,
                };
                let cross = self.pick_from(rng, &self.pool(Some(other)), 0)?;
                Some(self.extend(rng, (1u128 << primary) | (1u128 << cross), &all))
            }
        }
    }

    fn draw(&self, rng: &mut SimRng, class: PartisanClass) -> Result<u128> {
        for _ in 0..10_000 {
            if let Some(m) = self.draw_once(rng, class) {
                if !self.planted.contains(&m) {
                    return Ok(m);
                }
            }
        }
        Err(Error::Scenario(format!(
            "cannot draw a {class} follow set outside the planted patterns"
        )))
    }
}

/// Build the follower matrix and profiles for a scenario.
pub fn simulate_population(scenario: &Scenario) -> Result<Population> {
    scenario.validate()?;
    let roster = scenario.candidate_roster()?;
    let n = scenario.population_size;
    let mut rng = SimRng::new(scenario.seed, Stream::Population);
    let dems = roster.party_mask(Party::Democrat);

    let mix = scenario.partisan_mix;
    // allocation order matches PartisanClass::ALL
    let mut budget = allocate(&[mix.democrat, mix.independent, mix.republican], n);
    let class_counts = [budget[0], budget[1], budget[2]];

    let mut rows: Vec<u128> = Vec::with_capacity(n);
    let mut planted_counts = Vec::new();
    let mut planted = HashSet::new();
    for p in &scenario.planted_patterns {
        let mut mask = 0u128;
        for id in &p.candidates {
            let c = roster
                .column_of(id)
                .ok_or_else(|| Error::Scenario(format!("planted pattern names unknown candidate `{id}`")))?;
            mask |= 1u128 << c;
        }
        if !planted.insert(mask) {
            return Err(Error::Scenario("planted patterns must be distinct".into()));
        }
        let count = (p.fraction * n as f64).round() as usize;
        let class = class_of_mask(mask, dems);
        if budget[class.index()] < count {
            return Err(Error::Scenario(format!(
                "planted patterns exceed the {class} share of the population"
            )));
        }
        budget[class.index()] -= count;
        rows.extend(std::iter::repeat_n(mask, count));
        planted_counts.push(count);
    }

    let sampler = FollowSampler {
        scenario,
        roster: &roster,
        planted,
    };
    for class in PartisanClass::ALL {
        for _ in 0..budget[class.index()] {
            rows.push(sampler.draw(&mut rng, class)?);
        }
    }
    rng.shuffle(&mut rows);

    let width = n.to_string().len();
    let user_ids: Vec<String> = (1..=n).map(|i| format!("u{i:0width$}")).collect();
    let matrix = FollowMatrix::from_rows(roster, user_ids.clone(), rows)?;

    let (profiles, image_table, channel_counts) = simulate_profiles(scenario, &user_ids)?;

    let mut crng = SimRng::new(scenario.seed, Stream::Celebrity);
    let celebrity_followers = user_ids
        .iter()
        .filter(|_| crng.bernoulli(scenario.celebrity_fraction))
        .cloned()
        .collect();

    Ok(Population {
        matrix,
        profiles,
        names: fixture_names(),
        image_table,
        celebrity_followers,
        truth: PopulationTruth {
            n_users: n,
            class_counts,
            planted_counts,
            channel_counts,
        },
    })
}

type Profiles = (Vec<UserProfile>, Vec<(String, Gender, f64)>, [usize; 3]);

/// Profiles whose winning gender channel is planted exactly. Users labeled
/// by name also get adversarial image and description signals so the
/// priority order matters.
fn simulate_profiles(scenario: &Scenario, user_ids: &[String]) -> Result<Profiles> {
    let n = user_ids.len();
    let plan = scenario.labeling;
    let none = (1.0 - plan.first_name - plan.profile_image - plan.self_description).max(0.0);
    let alloc = allocate(&[plan.first_name, plan.profile_image, plan.self_description, none], n);
    let mut categories: Vec<u8> = Vec::with_capacity(n);
    for (cat, &count) in alloc.iter().enumerate() {
        categories.extend(std::iter::repeat_n(cat as u8, count));
    }
    // rounding can leave the total one short or long
    categories.resize(n, 3);
    let mut rng = SimRng::new(scenario.seed, Stream::Profiles);
    rng.shuffle(&mut categories);

    let mut profiles = Vec::with_capacity(n);
    let mut images = Vec::new();
    let mut channel_counts = [0usize; 3];
    for (uid, &cat) in user_ids.iter().zip(&categories) {
        let gender = if rng.bernoulli(plan.female_fraction) {
            Gender::Female
        } else {
            Gender::Male
        };
        let surname = pick(&mut rng, &SURNAMES);
        let handle = format!("{} {surname}", pick(&mut rng, &HANDLES));
        let mut bio = vec![pick(&mut rng, &PLAIN_BIOS).to_string()];
        let mut image = None;
        match cat {
            0 => {
                let first = match gender {
                    Gender::Female => pick(&mut rng, &FEMALE_NAMES),
                    Gender::Male => pick(&mut rng, &MALE_NAMES),
                };
                if rng.bernoulli(0.5) {
                    let r = format!("img_{uid}");
                    images.push((r.clone(), opposite(gender), 0.7));
                    image = Some(r);
                }
                if rng.bernoulli(0.2) {
                    bio.push(format!("proud {}", keyword(&mut rng, opposite(gender))));
                }
                channel_counts[0] += 1;
                profiles.push((first.to_string() + " " + surname, image, bio, gender));
                continue;
            }
            1 => {
                let r = format!("img_{uid}");
                images.push((r.clone(), gender, 0.6 + 0.4 * rng.uniform()));
                image = Some(r);
                if rng.bernoulli(0.2) {
                    bio.push(format!("proud {}", keyword(&mut rng, opposite(gender))));
                }
                channel_counts[1] += 1;
            }
            2 => {
                if rng.bernoulli(0.5) {
                    image = Some(format!("noface_{uid}"));
                }
                bio.push(format!("proud {}", keyword(&mut rng, gender)));
                channel_counts[2] += 1;
            }
            _ => {
                if rng.bernoulli(0.5) {
                    image = Some(format!("noface_{uid}"));
                }
            }
        }
        profiles.push((handle, image, bio, gender));
    }

    let out = profiles
        .into_iter()
        .zip(user_ids)
        .map(|((display_name, image, mut bio, _), uid)| {
            if rng.bernoulli(plan.journalist_fraction) {
                bio.push(pick(&mut rng, &JOURNALIST_WORDS).to_string());
            }
            let description = bio.into_iter().filter(|s| !s.is_empty()).collect::<Vec<_>>().join(" | ");
            UserProfile {
                user_id: uid.clone(),
                display_name,
                description,
                profile_image_ref: image,
                tweets_posted: (6.0 + 1.5 * rng.normal()).exp().floor() as u64,
                followers_count: (5.0 + 1.8 * rng.normal()).exp().floor() as u64,
                start_year: 2006 + rng.below(11) as i32,
            }
        })
        .collect();
    Ok((out, images, channel_counts))
}

/// Format a float the same way everywhere (shortest round-trip form).
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, std::io::BufWriter<std::fs::File>)> {
    let path = dir.join(name);
    let f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    Ok((path, std::io::BufWriter::new(f)))
}

fn finish(path: &Path, mut w: std::io::BufWriter<std::fs::File>) -> Result<PathBuf> {
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Write roster, edges, profiles, name list, image stub table and celebrity
/// follower list into `dir`. Returns the paths written.
pub fn write_population(pop: &Population, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();

    let (p, mut w) = create(dir, "roster.csv")?;
    pop.matrix.roster().write_csv(&mut w)?;
    out.push(finish(&p, w)?);

    let (p, mut w) = create(dir, "edges.csv")?;
    pop.matrix.write_edges(&mut w)?;
    out.push(finish(&p, w)?);

    let (p, mut w) = create(dir, "profiles.jsonl")?;
    for prof in &pop.profiles {
        serde_json::to_writer(&mut w, prof)?;
        w.write_all(b"\n").map_err(|e| Error::io(&p, e))?;
    }
    out.push(finish(&p, w)?);

    let (p, w) = create(dir, "names.csv")?;
    let mut csv_w = csv::Writer::from_writer(w);
    csv_w.write_record(["name", "gender"])?;
    for (name, g) in &pop.names {
        csv_w.write_record([name.as_str(), g.code()])?;
    }
    out.push(finish(&p, csv_w.into_inner().map_err(|e| Error::io(&p, e.into_error()))?)?);

    let (p, w) = create(dir, "image_stub.csv")?;
    let mut csv_w = csv::Writer::from_writer(w);
    csv_w.write_record(["image_ref", "gender", "confidence"])?;
    for (r, g, c) in &pop.image_table {
        csv_w.write_record([r.as_str(), g.code(), &format!("{c:.6}")])?;
    }
    out.push(finish(&p, csv_w.into_inner().map_err(|e| Error::io(&p, e.into_error()))?)?);

    let (p, w) = create(dir, "celebrity_followers.csv")?;
    let mut csv_w = csv::Writer::from_writer(w);
    csv_w.write_record(["user_id"])?;
    for u in &pop.celebrity_followers {
        csv_w.write_record([u.as_str()])?;
    }
    out.push(finish(&p, csv_w.into_inner().map_err(|e| Error::io(&p, e.into_error()))?)?);

    Ok(out)
}

/// Write a model dataset: the outcome column first, then every non-intercept
/// design column.
pub fn write_dataset(path: &Path, outcome: &str, y: &[String], x: &DesignMatrix) -> Result<PathBuf> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(f));
    let keep: Vec<usize> = (0..x.n_cols()).filter(|&j| x.names()[j] != INTERCEPT).collect();
    let mut header = vec![outcome.to_string()];
    header.extend(keep.iter().map(|&j| x.names()[j].clone()));
    w.write_record(&header)?;
    for (i, yi) in y.iter().enumerate() {
        let row = x.row(i);
        let mut rec = vec![yi.clone()];
        rec.extend(keep.iter().map(|&j| fmt_f64(row[j])));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}
