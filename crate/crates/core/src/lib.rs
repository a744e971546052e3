//! Stochastic model of how stories on a social news site accumulate votes from
//! the submitter's fans, fans of other voters, and everyone else.
//!
//! The crate separates *visibility* (where the story sits on the recency and
//! popularity lists, and whether it shows up in a fan's friends feed) from
//! *interestingness* (the probability that a user who sees the story votes
//! for it). It provides the mean-field rate equations, estimators for every
//! site-wide and per-story parameter, forecasts with Laplace-approximation
//! confidence intervals, a stochastic simulator used as ground truth, and
//! readers/writers for vote logs and fan graphs.
//!
//! All times are in *Digg hours*: wall-clock time rescaled by site-wide voting
//! activity so that daily activity cycles drop out.

pub mod data;
pub mod dist;
pub mod error;
pub mod estimation;
pub mod model;
pub mod numerics;
pub mod prediction;
pub mod simulator;

pub use error::{Error, Result};
