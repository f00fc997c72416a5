//! The `followgraph` command line.
//!
//! Every subcommand reads its inputs, calls the library, writes CSV/JSON
//! artifacts into `--output-dir` and finishes with a run manifest.

pub mod manifest;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::glm::{self, DesignSpec, FitConfig, ModelFit, Table};
use crate::labeling::{self, Gender, ImagePredictor, NoImagePredictor, TablePredictor};
use crate::patterns;
use crate::roster::{self, FollowMatrix, PartisanClass};
use crate::shares;
use crate::synth;
pub use manifest::RunManifest;

/// Exit code for malformed input or bad usage.
pub const EXIT_INPUT: i32 = 2;
/// Exit code for numerical or model failures.
pub const EXIT_NUMERICAL: i32 = 3;

pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INPUT
    }
}

#[derive(Debug, Parser)]
#[command(name = "followgraph", version, about = "Follow-graph analytics for candidate follower populations")]
pub struct Cli {
    /// Directory receiving every output file (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub output_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Follower counts, engagement buckets, follow-count histogram and partisan classes.
    Summarize(EdgeArgs),
    /// Raw and reciprocal-weighted candidate shares.
    Shares(SharesArgs),
    /// Frequent itemsets (containment support) and exact follow-set frequencies.
    Patterns(PatternsArgs),
    /// Pairwise phi correlations between candidate follow indicators.
    Correlations(EdgeArgs),
    /// Gender labels, channel coverage and journalist flags.
    Label(LabelArgs),
    /// Fit a negative binomial, multinomial logit or logit model.
    Fit(FitArgs),
    /// Per-class probability change when a binary covariate goes from 0 to 1.
    Effects(EffectsArgs),
    /// Generate a synthetic population and model datasets.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct EdgeArgs {
    /// Follow edges, CSV `user_id,candidate_id`.
    #[arg(long)]
    #[serde(serialize_with = "file_name")]
    pub edges: PathBuf,
    /// Candidate roster, CSV `candidate_id,display_name,party`.
    #[arg(long)]
    #[serde(serialize_with = "file_name")]
    pub roster: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SharesArgs {
    #[command(flatten)]
    pub input: EdgeArgs,
    /// Candidate ids summed into the `__top_k__` line.
    #[arg(long, value_delimiter = ',', default_value = "trump,clinton,sanders")]
    pub top_k: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct PatternsArgs {
    #[command(flatten)]
    pub input: EdgeArgs,
    /// Minimum containment support, in (0, 1].
    #[arg(long, default_value_t = 0.01)]
    pub min_support: f64,
    /// Largest itemset size.
    #[arg(long, default_value_t = 3)]
    pub max_size: usize,
    /// Number of exact follow sets to report.
    #[arg(long, default_value_t = 15)]
    pub top_n: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct LabelArgs {
    /// User profiles, JSON lines.
    #[arg(long)]
    #[serde(serialize_with = "file_name")]
    pub profiles: PathBuf,
    /// First-name list, CSV `name,gender`.
    #[arg(long)]
    #[serde(serialize_with = "file_name")]
    pub name_list: PathBuf,
    /// Table-backed image predictions, CSV `image_ref,gender,confidence`.
    #[arg(long)]
    #[serde(serialize_with = "opt_file_name")]
    pub image_stub: Option<PathBuf>,
    /// Year of data collection; later account start years are rejected.
    #[arg(long, default_value_t = 2016)]
    pub ingestion_year: i32,
    /// With `--roster` and `--celebrity-followers`, also write a regression
    /// table `features.csv` joining labels to partisan classes.
    #[arg(long, requires_all = ["roster", "celebrity_followers"])]
    #[serde(serialize_with = "opt_file_name")]
    pub edges: Option<PathBuf>,
    #[arg(long)]
    #[serde(serialize_with = "opt_file_name")]
    pub roster: Option<PathBuf>,
    /// CSV with a `user_id` column listing celebrity followers.
    #[arg(long)]
    #[serde(serialize_with = "opt_file_name")]
    pub celebrity_followers: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Nb,
    Mnl,
    Logit,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub model: ModelChoice,
    /// Data table, CSV with a header row.
    #[arg(long)]
    #[serde(serialize_with = "file_name")]
    pub data: PathBuf,
    /// Outcome column. nb: non-negative counts; logit: 0/1; mnl: 1/2/3
    /// partisan codes (independent is the reference) or 0/1.
    #[arg(long)]
    pub outcome: String,
    /// Covariate columns; defaults to every numeric non-outcome column.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    /// Categorical year column expanded into dummies (earliest year omitted).
    #[arg(long)]
    pub year_column: Option<String>,
    /// Override a covariate divisor, `NAME=FACTOR`. Count columns default to 1e6.
    #[arg(long = "scale", value_name = "NAME=FACTOR")]
    pub scales: Vec<String>,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct EffectsArgs {
    /// `fit.json` written by `fit --model mnl`.
    #[arg(long)]
    #[serde(serialize_with = "file_name")]
    pub fit: PathBuf,
    /// Data table the design is rebuilt from.
    #[arg(long)]
    #[serde(serialize_with = "file_name")]
    pub data: PathBuf,
    /// Binary covariate to switch from 0 to 1.
    #[arg(long)]
    pub column: String,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Overrides the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scenario JSON; the built-in election scenario when omitted.
    #[arg(long)]
    #[serde(serialize_with = "opt_file_name")]
    pub scenario: Option<PathBuf>,
}

/// What `fit` writes to `fit.json`: the estimates plus the design recipe
/// needed to rebuild covariates for `effects`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedFit {
    pub fit: ModelFit,
    pub design: DesignSpec,
    pub outcome: String,
}

/// Manifests record input paths by file name only; the digests identify
/// the content, and the directory a run happened in is irrelevant.
fn file_name<S: serde::Serializer>(p: &Path, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&p.file_name().map(|f| f.to_string_lossy()).unwrap_or_default())
}

fn opt_file_name<S: serde::Serializer>(p: &Option<PathBuf>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match p {
        Some(p) => file_name(p, s),
        None => s.serialize_none(),
    }
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

struct Outputs {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Outputs {
    fn new(dir: &Path, command: &str, config: serde_json::Value) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            manifest: RunManifest::new(command, config),
        })
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        self.manifest.add_input(path)
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let path = self.dir.join(name);
        let f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(f));
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        drop(w);
        self.manifest.add_output(&path)
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        let mut f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(text.as_bytes()).map_err(|e| Error::io(&path, e))?;
        self.manifest.add_output(&path)
    }

    fn existing(&mut self, path: &Path) -> Result<()> {
        self.manifest.add_output(path)
    }

    fn finish(self) -> Result<PathBuf> {
        self.manifest.write(&self.dir)
    }
}

fn config_of<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).unwrap_or(serde_json::Value::Null)
}

fn load_matrix(input: &EdgeArgs, out: &mut Outputs) -> Result<FollowMatrix> {
    out.input(&input.roster)?;
    out.input(&input.edges)?;
    let roster = roster::load_roster(&input.roster)?;
    let matrix = roster::load_edges(&input.edges, &roster)?;
    if matrix.n_users() == 0 {
        return Err(Error::NoFollowers);
    }
    Ok(matrix)
}

/// Parse arguments from the process and run; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let dir = &cli.output_dir;
    match &cli.command {
        Command::Summarize(a) => summarize(a, dir),
        Command::Shares(a) => cmd_shares(a, dir),
        Command::Patterns(a) => cmd_patterns(a, dir),
        Command::Correlations(a) => correlations(a, dir),
        Command::Label(a) => label(a, dir),
        Command::Fit(a) => fit(a, dir),
        Command::Effects(a) => effects(a, dir),
        Command::Simulate(a) => simulate(a, dir),
    }
}

pub fn summarize(args: &EdgeArgs, dir: &Path) -> Result<()> {
    let mut out = Outputs::new(dir, "summarize", config_of(args))?;
    let matrix = load_matrix(args, &mut out)?;
    let roster = matrix.roster();

    let counts = roster::follower_counts(&matrix);
    out.csv(
        "follower_counts.csv",
        &["candidate_id", "display_name", "party", "followers"],
        roster.candidates().iter().zip(&counts).map(|(c, n)| {
            vec![c.candidate_id.clone(), c.display_name.clone(), c.party.code().to_string(), n.to_string()]
        }),
    )?;

    out.csv(
        "engagement.csv",
        &[
            "candidate_id", "n_1", "n_2", "n_3", "n_4", "n_5plus", "frac_1", "frac_2", "frac_3", "frac_4",
            "frac_5plus", "status",
        ],
        roster::engagement_distribution(&matrix).into_iter().map(|e| {
            let mut r = vec![e.candidate_id];
            r.extend(e.counts.iter().map(u64::to_string));
            match e.fractions {
                Some(f) => {
                    r.extend(f.iter().map(|&v| f6(v)));
                    r.push("ok".into());
                }
                None => {
                    r.extend(std::iter::repeat_n(String::new(), 5));
                    r.push("no_followers".into());
                }
            }
            r
        }),
    )?;

    let n = matrix.n_users() as f64;
    out.csv(
        "follow_count_histogram.csv",
        &["candidates_followed", "users", "fraction"],
        roster::follow_count_histogram(&matrix)
            .into_iter()
            .enumerate()
            .map(|(k, c)| vec![(k + 1).to_string(), c.to_string(), f6(c as f64 / n)]),
    )?;

    let mut class_counts = [0u64; 3];
    for c in roster::partisan_classes(&matrix) {
        class_counts[c.index()] += 1;
    }
    out.csv(
        "partisan_classes.csv",
        &["class", "code", "users", "fraction"],
        PartisanClass::ALL.iter().map(|c| {
            let k = class_counts[c.index()];
            vec![c.name().to_string(), c.code().to_string(), k.to_string(), f6(k as f64 / n)]
        }),
    )?;
    out.finish()?;
    Ok(())
}

pub fn cmd_shares(args: &SharesArgs, dir: &Path) -> Result<()> {
    let mut out = Outputs::new(dir, "shares", config_of(args))?;
    let matrix = load_matrix(&args.input, &mut out)?;
    let report = shares::share_report(&matrix, &args.top_k)?;
    let (raw, weighted) = (report.raw_f64(), report.weighted_f64());
    let mut rows: Vec<Vec<String>> = report
        .candidate_ids
        .iter()
        .enumerate()
        .map(|(i, id)| vec![id.clone(), f6(raw[i]), f6(weighted[i])])
        .collect();
    rows.push(vec![
        "__top_k__".into(),
        f6(shares::to_f64(&report.top_k_raw)),
        f6(shares::to_f64(&report.top_k_weighted)),
    ]);
    out.csv("shares.csv", &["candidate_id", "raw_share", "weighted_share"], rows)?;
    out.finish()?;
    Ok(())
}

pub fn cmd_patterns(args: &PatternsArgs, dir: &Path) -> Result<()> {
    if !(args.min_support > 0.0 && args.min_support <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "--min-support must lie in (0, 1], got {}",
            args.min_support
        )));
    }
    let mut out = Outputs::new(dir, "patterns", config_of(args))?;
    let matrix = load_matrix(&args.input, &mut out)?;
    let itemsets = patterns::frequent_itemsets(&matrix, args.min_support, args.max_size)?;
    let exclusive = patterns::exclusive_pattern_shares(&matrix, args.top_n)?;
    let row = |r: &patterns::ItemsetResult| vec![r.rank.to_string(), r.label(), f6(r.support), r.count.to_string()];
    out.csv("itemsets.csv", &["rank", "itemset", "support", "count"], itemsets.iter().map(row))?;
    out.csv("exclusive_patterns.csv", &["rank", "itemset", "support", "count"], exclusive.iter().map(row))?;
    out.finish()?;
    Ok(())
}

pub fn correlations(args: &EdgeArgs, dir: &Path) -> Result<()> {
    let mut out = Outputs::new(dir, "correlations", config_of(args))?;
    let matrix = load_matrix(args, &mut out)?;
    let phi = patterns::pairwise_phi(&matrix)?;
    let mut header = vec![""];
    header.extend(phi.candidate_ids.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = phi
        .candidate_ids
        .iter()
        .enumerate()
        .map(|(a, id)| {
            let mut r = vec![id.clone()];
            r.extend(phi.values[a].iter().map(|v| v.map(f6).unwrap_or_default()));
            r
        })
        .collect();
    out.csv("correlations.csv", &header, rows)?;
    out.finish()?;
    Ok(())
}

fn read_user_ids(path: &Path) -> Result<HashSet<String>> {
    let table = Table::load(path)?;
    Ok(table.text("user_id")?.into_iter().map(String::from).collect())
}

pub fn label(args: &LabelArgs, dir: &Path) -> Result<()> {
    let mut out = Outputs::new(dir, "label", config_of(args))?;
    out.input(&args.profiles)?;
    out.input(&args.name_list)?;
    let profiles = labeling::load_profiles(&args.profiles, args.ingestion_year)?;
    let names = labeling::load_name_list(&args.name_list)?;
    let images: Box<dyn ImagePredictor> = match &args.image_stub {
        Some(p) => {
            out.input(p)?;
            Box::new(TablePredictor::load(p)?)
        }
        None => Box::new(NoImagePredictor),
    };
    let labels = labeling::classify_all(&profiles, &names, images.as_ref());

    out.csv(
        "labels.csv",
        &["user_id", "gender", "channel", "journalist"],
        profiles.iter().zip(&labels).map(|(p, l)| {
            vec![
                p.user_id.clone(),
                l.map(|l| l.gender.code().to_string()).unwrap_or_default(),
                l.map(|l| l.channel.name().to_string()).unwrap_or_default(),
                u8::from(labeling::detect_journalist(&p.description)).to_string(),
            ]
        }),
    )?;

    let cov = labeling::channel_coverage(&labels);
    let mut rows: Vec<Vec<String>> = cov
        .channels
        .iter()
        .map(|c| vec![c.channel.name().to_string(), c.identified.to_string(), f6(c.net_contribution)])
        .collect();
    rows.push(vec!["total".into(), cov.labeled.to_string(), f6(cov.total_fraction)]);
    out.csv("gender_coverage.csv", &["channel", "identified", "net_contribution_fraction"], rows)?;

    let gross = labeling::gross_identification(&profiles, &names, images.as_ref());
    let n = profiles.len().max(1) as f64;
    out.csv(
        "gender_gross_identification.csv",
        &["channel", "identified", "fraction"],
        labeling::Channel::ALL
            .iter()
            .zip(gross)
            .map(|(c, g)| vec![c.name().to_string(), g.to_string(), f6(g as f64 / n)]),
    )?;

    if let (Some(edges), Some(roster_path), Some(celebs)) = (&args.edges, &args.roster, &args.celebrity_followers) {
        out.input(roster_path)?;
        out.input(edges)?;
        out.input(celebs)?;
        let roster = roster::load_roster(roster_path)?;
        let matrix = roster::load_edges(edges, &roster)?;
        let celebs = read_user_ids(celebs)?;
        out.csv("features.csv", &FEATURE_COLUMNS, feature_rows(&matrix, &profiles, &labels, &celebs))?;
    }
    out.finish()?;
    Ok(())
}

/// Columns of the regression table written by `label`.
pub const FEATURE_COLUMNS: [&str; 8] = [
    "user_id", "class", "female", "journalist", "tweets_posted", "followers_count", "start_year", "celebrity",
];

/// One row per profile that follows at least one candidate and received a
/// gender label; everyone else is dropped (listwise deletion).
pub fn feature_rows(
    matrix: &FollowMatrix,
    profiles: &[labeling::UserProfile],
    labels: &[Option<labeling::GenderLabel>],
    celebrity_followers: &HashSet<String>,
) -> Vec<Vec<String>> {
    let index: HashMap<&str, usize> = matrix
        .user_ids()
        .iter()
        .enumerate()
        .map(|(i, u)| (u.as_str(), i))
        .collect();
    let dems = matrix.roster().party_mask(crate::roster::Party::Democrat);
    profiles
        .iter()
        .zip(labels)
        .filter_map(|(p, l)| {
            let l = (*l)?;
            let row = *index.get(p.user_id.as_str())?;
            let class = roster::class_of_mask(matrix.row_masks()[row], dems);
            Some(vec![
                p.user_id.clone(),
                class.code().to_string(),
                u8::from(l.gender == Gender::Female).to_string(),
                u8::from(labeling::detect_journalist(&p.description)).to_string(),
                p.tweets_posted.to_string(),
                p.followers_count.to_string(),
                p.start_year.to_string(),
                u8::from(celebrity_followers.contains(&p.user_id)).to_string(),
            ])
        })
        .collect()
}

fn parse_scales(specs: &[String]) -> Result<BTreeMap<String, f64>> {
    specs
        .iter()
        .map(|s| {
            let (name, factor) = s
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("--scale expects NAME=FACTOR, got `{s}`")))?;
            let f: f64 = factor
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite() && *v != 0.0)
                .ok_or_else(|| Error::InvalidArgument(format!("--scale factor `{factor}` is not a nonzero number")))?;
            Ok((name.to_string(), f))
        })
        .collect()
}

fn default_covariates(table: &Table, exclude: &[&str]) -> Vec<String> {
    table
        .columns
        .iter()
        .filter(|c| !exclude.contains(&c.as_str()))
        .filter(|c| table.numeric(c).is_ok())
        .cloned()
        .collect()
}

fn parse_counts(table: &Table, col: &str) -> Result<Vec<u64>> {
    table
        .text(col)?
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.parse::<u64>().map_err(|_| Error::Parse {
                file: table.file.clone(),
                line: i + 2,
                message: format!("outcome `{s}` is not a non-negative integer"),
            })
        })
        .collect()
}

fn parse_codes(table: &Table, col: &str, allowed: &[u8]) -> Result<Vec<u8>> {
    table
        .text(col)?
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.parse::<u8>().ok().filter(|v| allowed.contains(v)).ok_or_else(|| Error::Parse {
                file: table.file.clone(),
                line: i + 2,
                message: format!("outcome `{s}` is not one of {allowed:?}"),
            })
        })
        .collect()
}

/// Fit the chosen model on a table; shared by `fit` and the tests.
pub fn fit_table(
    model: ModelChoice,
    table: &Table,
    outcome: &str,
    design: &DesignSpec,
    config: &FitConfig,
) -> Result<ModelFit> {
    let x = design.build(table)?;
    match model {
        ModelChoice::Nb => glm::nb_fit(&parse_counts(table, outcome)?, &x, config),
        ModelChoice::Logit => {
            let y: Vec<bool> = parse_codes(table, outcome, &[0, 1])?.into_iter().map(|v| v == 1).collect();
            glm::logit_fit(&y, &x, config)
        }
        ModelChoice::Mnl => {
            let codes = parse_codes(table, outcome, &[0, 1, 2, 3])?;
            if codes.iter().all(|&c| c <= 1) {
                let y: Vec<usize> = codes.iter().map(|&c| c as usize).collect();
                glm::multinomial_fit(&y, &["0".to_string(), "1".to_string()], 0, &x, config)
            } else if codes.iter().all(|&c| c >= 1) {
                let classes: Vec<PartisanClass> =
                    codes.iter().map(|&c| PartisanClass::from_code(c).expect("checked")).collect();
                glm::mnl_fit(&classes, &x, config)
            } else {
                Err(Error::InvalidArgument(
                    "mnl outcome must be coded 1/2/3 or 0/1, not a mix".into(),
                ))
            }
        }
    }
}

pub fn fit(args: &FitArgs, dir: &Path) -> Result<()> {
    let mut out = Outputs::new(dir, "fit", config_of(args))?;
    out.input(&args.data)?;
    let table = Table::load(&args.data)?;
    if table.is_empty() {
        return Err(Error::InvalidArgument(format!("{}: no data rows", args.data.display())));
    }
    let covariates = if args.covariates.is_empty() {
        let mut skip = vec![args.outcome.as_str()];
        skip.extend(args.year_column.as_deref());
        default_covariates(&table, &skip)
    } else {
        args.covariates.clone()
    };
    let mut design = DesignSpec::infer(&table, &covariates, args.year_column.as_deref())?;
    for (name, f) in parse_scales(&args.scales)? {
        if !covariates.contains(&name) {
            return Err(Error::UnknownColumn(name));
        }
        design.scales.insert(name, f);
    }
    design.scales.retain(|_, f| *f != 1.0);
    let config = FitConfig {
        max_iter: args.max_iter,
        ..FitConfig::default()
    };
    let fit = fit_table(args.model, &table, &args.outcome, &design, &config)?;
    for w in &fit.warnings {
        log::warn!("{w}");
    }
    let saved = SavedFit {
        fit,
        design,
        outcome: args.outcome.clone(),
    };
    let mut text = serde_json::to_string_pretty(&saved)?;
    text.push('\n');
    out.text("fit.json", &text)?;
    out.text("fit_table.txt", &saved.fit.render_table())?;
    out.finish()?;
    Ok(())
}

pub fn load_saved_fit(path: &Path) -> Result<SavedFit> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn effects(args: &EffectsArgs, dir: &Path) -> Result<()> {
    let mut out = Outputs::new(dir, "effects", config_of(args))?;
    out.input(&args.fit)?;
    out.input(&args.data)?;
    let saved = load_saved_fit(&args.fit)?;
    let params = saved.fit.mnl_params().ok_or_else(|| {
        Error::InvalidArgument("effects need a three-class partisan multinomial fit".into())
    })?;
    let table = Table::load(&args.data)?;
    let x = saved.design.build(&table)?;
    let me = glm::marginal_effect(&params, &x, &args.column)?;
    out.csv(
        "effects.csv",
        &["class", "p_at_0", "p_at_1", "delta"],
        PartisanClass::ALL.iter().map(|c| {
            let k = c.index();
            vec![c.name().to_string(), f6(me.at_zero[k]), f6(me.at_one[k]), f6(me.delta[k])]
        }),
    )?;
    out.finish()?;
    Ok(())
}

pub fn simulate(args: &SimulateArgs, dir: &Path) -> Result<()> {
    let mut scenario = match &args.scenario {
        Some(p) => synth::Scenario::load(p)?,
        None => synth::Scenario::default_election(),
    };
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    let mut out = Outputs::new(dir, "simulate", json!({ "scenario": scenario }))?;
    if let Some(p) = &args.scenario {
        out.input(p)?;
    }
    out.manifest.seed = Some(scenario.seed);

    let pop = synth::simulate_population(&scenario)?;
    for p in synth::write_population(&pop, dir)? {
        out.existing(&p)?;
    }
    if scenario.nb.is_some() {
        let (y, x) = synth::simulate_nb(&scenario)?;
        let y: Vec<String> = y.iter().map(u64::to_string).collect();
        out.existing(&synth::write_dataset(&dir.join("nb_data.csv"), "y", &y, &x)?)?;
    }
    if scenario.mnl.is_some() {
        let (y, x) = synth::simulate_mnl(&scenario)?;
        let y: Vec<String> = y.iter().map(|c| c.code().to_string()).collect();
        out.existing(&synth::write_dataset(&dir.join("mnl_data.csv"), "class", &y, &x)?)?;
    }
    if scenario.logit.is_some() {
        let (y, x) = synth::simulate_logit(&scenario)?;
        let y: Vec<String> = y.iter().map(|&b| u8::from(b).to_string()).collect();
        out.existing(&synth::write_dataset(&dir.join("logit_data.csv"), "y", &y, &x)?)?;
    }
    let truth = json!({ "scenario": scenario, "population": pop.truth });
    let mut text = serde_json::to_string_pretty(&truth)?;
    text.push('\n');
    out.text("truth.json", &text)?;
    out.finish()?;
    Ok(())
}
