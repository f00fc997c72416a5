//! Follow-graph analytics for candidate follower populations.
//!
//! * [`roster`]: candidate rosters, the boolean follower matrix and its
//!   descriptive statistics (follower counts, engagement, partisan classes).
//! * [`shares`]: reciprocal follower weighting and exact candidate shares.
//! * [`patterns`]: frequent follow patterns and pairwise phi correlations.
//! * [`labeling`]: three-channel gender labeling and journalist detection.
//! * [`glm`]: negative binomial, multinomial logit and logit estimation.
//! * [`synth`]: seeded generators with planted ground truth.
//! * [`cli`]: the `followgraph` command surface.
//!
//! Row-parallel work goes through [`par`], which uses rayon when the
//! `parallel` feature is enabled and yields bit-identical results either way.

pub mod cli;
pub mod error;
pub mod glm;
pub mod labeling;
pub mod par;
pub mod patterns;
pub mod roster;
pub mod shares;
pub mod synth;

pub use error::{Error, Result};
