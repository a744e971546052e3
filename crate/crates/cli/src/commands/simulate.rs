use std::fs::File;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use storyvotes::data::write_dataset;
use storyvotes::simulator::{simulate_corpus, write_truth, FanCountPrior, PromotionRule, SimConfig, SimMode};

use super::{load_priors, load_site, out_dir, OutArgs};
use crate::params::reference_priors;

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Interestingness priors to draw from; published values by default.
    #[arg(long)]
    pub priors: Option<PathBuf>,
    #[arg(long)]
    pub stories: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Agent)]
    pub mode: Mode,
    /// Promote when the vote count reaches this many.
    #[arg(long, default_value_t = 40, conflicts_with = "delay")]
    pub threshold: u32,
    /// Promote this many Digg hours after submission instead.
    #[arg(long)]
    pub delay: Option<f64>,
    /// Comma-separated submitter fan counts, drawn uniformly per story.
    #[arg(long, value_delimiter = ',', default_value = "100")]
    pub s0: Vec<u32>,
    /// Digg hours between submissions.
    #[arg(long, default_value_t = 0.25)]
    pub spacing: f64,
    /// Observation continues this long after promotion.
    #[arg(long, default_value_t = 24.0)]
    pub after_promotion: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Every user tracked individually.
    Agent,
    /// Pools kept as counts.
    MeanField,
}

pub fn run(a: &SimulateArgs) -> Result<()> {
    if a.s0.is_empty() {
        bail!("--s0 needs at least one value");
    }
    let site = load_site(a.params.as_deref())?;
    let priors = load_priors(a.priors.as_deref())?.unwrap_or_else(reference_priors);
    let mut cfg = SimConfig::new(site, priors, a.stories, a.seed);
    cfg.s0 = if a.s0.len() == 1 {
        FanCountPrior::Fixed(a.s0[0])
    } else {
        FanCountPrior::Choices(a.s0.clone())
    };
    cfg.spacing = a.spacing;
    cfg.story.mode = match a.mode {
        Mode::Agent => SimMode::Agent,
        Mode::MeanField => SimMode::MeanField,
    };
    cfg.story.promotion = match a.delay {
        Some(d) => PromotionRule::Delay(d),
        None => PromotionRule::Threshold(a.threshold),
    };
    cfg.story.after_promotion = a.after_promotion;
    let corpus = simulate_corpus(&cfg).context("simulate")?;
    out_dir(&a.out.out)?;
    write_dataset(&a.out.out, &corpus.stories, &corpus.graph)?;
    let path = a.out.out.join("truth.csv");
    write_truth(File::create(&path).with_context(|| format!("creating {}", path.display()))?, &corpus.truth)?;
    Ok(())
}
