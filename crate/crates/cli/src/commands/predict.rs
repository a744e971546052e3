use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use storyvotes::data::StoryRecord;
use storyvotes::model::VoterClass;
use storyvotes::prediction::{confidence_interval_with, predict_with, Forecast, PoolSource, PredictOptions};
use storyvotes::simulator::story_seed;

use super::{csv_out, load_dataset, load_priors, load_site, opt, out_dir, OutArgs};
use crate::DataArgs;

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Lognormal priors for MAP estimates; maximum likelihood without them.
    #[arg(long)]
    pub priors: Option<PathBuf>,
    /// Comma-separated prediction times, Digg hours after `--from`.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub made_at: Vec<f64>,
    /// Forecast horizon, Digg hours after `--from`.
    #[arg(long, default_value_t = 24.0)]
    pub horizon: f64,
    #[arg(long, value_enum, default_value_t = From::Promotion)]
    pub from: From,
    /// Interval level.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Posterior samples per forecast; 0 skips intervals.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Required when intervals are drawn.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Source of the unseen pools at the prediction time.
    #[arg(long, value_enum, default_value_t = Pools::Rates)]
    pub pools: Pools,
    /// Add Poisson vote noise to interval samples.
    #[arg(long)]
    pub vote_noise: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum From {
    Promotion,
    Submission,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pools {
    /// Invert the rate equations at recent vote rates.
    Rates,
    /// Take pools from the fitted model trajectory.
    Model,
}

pub fn forecast_header() -> Vec<String> {
    let mut h: Vec<String> = ["story_id", "digg_t_promotion", "digg_made_at", "digg_horizon", "level"]
        .map(String::from)
        .to_vec();
    for prefix in ["predicted", "lower", "upper", "r", "boundary", "pool_fallback", "observed"] {
        for c in VoterClass::ALL {
            h.push(format!("{prefix}_{}", c.label()));
        }
    }
    h
}

fn forecast_row(f: &Forecast, observed: [u64; 3]) -> Vec<String> {
    let mut row = vec![
        f.story.to_string(),
        opt(f.t_promotion),
        f.made_at.to_string(),
        f.horizon.to_string(),
        opt(f.interval.map(|i| i.level)),
    ];
    row.extend(f.predicted.iter().map(|x| x.to_string()));
    row.extend((0..3).map(|c| opt(f.interval.map(|i| i.bounds[c].0))));
    row.extend((0..3).map(|c| opt(f.interval.map(|i| i.bounds[c].1))));
    row.extend(f.r_hat.r_triple().iter().map(|x| x.to_string()));
    row.extend(f.at_boundary.iter().map(|x| x.to_string()));
    row.extend(f.reconstruction.fallback.iter().map(|x| x.to_string()));
    row.extend(observed.iter().map(|x| x.to_string()));
    row
}

pub fn run(a: &PredictArgs) -> Result<()> {
    if a.samples > 0 && a.seed.is_none() {
        bail!("--seed is required when --samples is positive");
    }
    let data = load_dataset(&a.data)?;
    let site = load_site(a.params.as_deref())?;
    let priors = load_priors(a.priors.as_deref())?;
    let opts = PredictOptions {
        pools: match a.pools {
            Pools::Rates => PoolSource::VoteRates,
            Pools::Model => PoolSource::ModelTrajectory,
        },
        vote_noise: a.vote_noise,
    };
    let eligible: Vec<&StoryRecord> = data
        .stories
        .iter()
        .filter(|s| s.t_promotion.is_some_and(|tp| tp <= 24.0))
        .collect();
    let skipped = data.stories.len() - eligible.len();
    if skipped > 0 {
        log::warn!("{skipped} stories skipped: not promoted within 24 Digg hours of submission");
    }
    let jobs: Vec<(&StoryRecord, f64)> = eligible
        .iter()
        .flat_map(|s| a.made_at.iter().map(move |&m| (*s, m)))
        .collect();
    let rows: Vec<Vec<String>> = jobs
        .par_iter()
        .map(|&(s, m)| {
            let base = match a.from {
                From::Promotion => s.t_promotion.expect("eligible stories are promoted"),
                From::Submission => 0.0,
            };
            let (made_at, horizon) = (base + m, base + a.horizon);
            let f = if a.samples == 0 {
                predict_with(s, made_at, horizon, &site, priors.as_ref(), &opts)
            } else {
                let seed = story_seed(a.seed.expect("checked above"), s.id);
                confidence_interval_with(s, made_at, horizon, a.level, a.samples, seed, &site, priors.as_ref(), &opts)
            }
            .with_context(|| format!("predict: story {} at {made_at} Digg hours", s.id))?;
            Ok(forecast_row(&f, s.counts_at(horizon)))
        })
        .collect::<Result<_>>()?;
    out_dir(&a.out.out)?;
    let mut w = csv_out(&a.out.out, "forecasts.csv")?;
    w.write_record(forecast_header())?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}
