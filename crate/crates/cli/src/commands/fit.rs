use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use rayon::prelude::*;
use storyvotes::data::StoryRecord;
use storyvotes::estimation::{fit_story_interest, StoryFit};

use super::{csv_out, load_dataset, load_priors, load_site, opt, out_dir, OutArgs};
use crate::DataArgs;

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Lognormal priors; without them the fit is maximum likelihood.
    #[arg(long)]
    pub priors: Option<PathBuf>,
    /// Votes up to this many Digg hours after promotion (after submission for
    /// stories never promoted) are used.
    #[arg(long, default_value_t = 24.0)]
    pub window: f64,
    /// Fit promoted stories only.
    #[arg(long)]
    pub promoted_only: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

pub const FITS_HEADER: [&str; 11] = [
    "story_id",
    "s0",
    "digg_t_promotion",
    "digg_upto",
    "r_submitter_fan",
    "r_other_fan",
    "r_non_fan",
    "boundary_submitter_fan",
    "boundary_other_fan",
    "boundary_non_fan",
    "objective",
];

pub fn write_fits(dir: &Path, name: &str, rows: &[(&StoryRecord, f64, &StoryFit)]) -> Result<()> {
    let mut w = csv_out(dir, name)?;
    w.write_record(FITS_HEADER)?;
    for (s, upto, f) in rows {
        let r = f.params.r_triple();
        w.write_record([
            s.id.to_string(),
            s.s0.to_string(),
            opt(s.t_promotion),
            upto.to_string(),
            r[0].to_string(),
            r[1].to_string(),
            r[2].to_string(),
            f.at_boundary[0].to_string(),
            f.at_boundary[1].to_string(),
            f.at_boundary[2].to_string(),
            f.objective.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fits every selected story; `upto` is `window` past promotion, or past
/// submission for stories never promoted.
pub fn fit_all(
    stories: &[StoryRecord],
    site: &storyvotes::model::SiteModel,
    priors: Option<&storyvotes::estimation::ClassPriors>,
    window: f64,
) -> Result<Vec<(f64, StoryFit)>> {
    stories
        .par_iter()
        .map(|s| {
            let upto = s.t_promotion.unwrap_or(0.0) + window;
            fit_story_interest(s, site, priors, upto)
                .map(|f| (upto, f))
                .with_context(|| format!("fitting story {}", s.id))
        })
        .collect()
}

pub fn run(a: &FitArgs) -> Result<()> {
    let data = load_dataset(&a.data)?;
    let site = load_site(a.params.as_deref())?;
    let priors = load_priors(a.priors.as_deref())?;
    let stories: Vec<StoryRecord> = data
        .stories
        .into_iter()
        .filter(|s| !a.promoted_only || s.is_promoted())
        .collect();
    let fits = fit_all(&stories, &site, priors.as_ref(), a.window).context("fit")?;
    out_dir(&a.out.out)?;
    let rows: Vec<_> = stories.iter().zip(&fits).map(|(s, (u, f))| (s, *u, f)).collect();
    write_fits(&a.out.out, "fits.csv", &rows)
}
