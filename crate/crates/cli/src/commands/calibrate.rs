use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use storyvotes::estimation::{calibrate, CalibrateOptions, CfanMethod, PoolApproximation, SiteFitOptions, Stage};

use super::fit::write_fits;
use super::{csv_out, load_dataset, load_site, out_dir, OutArgs, PARAMS_FILE, PRIORS_FILE};
use crate::params::{priors_into_file, site_into_file, ParamFile};
use crate::DataArgs;

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Starting parameter file; its values are used for kept stages and its
    /// comments are carried into the output.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Comma-separated stages to keep from `--params` instead of estimating:
    /// activity, rho, popularity, submitter, site, c_nonfan, c_other_fan, priors.
    #[arg(long, value_delimiter = ',')]
    pub keep: Vec<String>,
    /// Calibrate on the first N promoted stories.
    #[arg(long)]
    pub max_stories: Option<usize>,
    /// Digg hours after promotion used by the story-level fits.
    #[arg(long, default_value_t = 24.0)]
    pub window: f64,
    #[arg(long, value_enum, default_value_t = CfanArg::PoolAdjusted)]
    pub cfan: CfanArg,
    /// Unseen non-fan pool used by the site visibility fit.
    #[arg(long, value_enum, default_value_t = SitePoolArg::ObservedPath)]
    pub site_pool: SitePoolArg,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfanArg {
    /// Vote rates scaled by the rebuilt other-fan pool.
    PoolAdjusted,
    /// Plain vote rates in the hour on each side of promotion.
    RawRates,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SitePoolArg {
    /// Track the pool along the observed votes.
    ObservedPath,
    /// Treat the pool as the whole active population.
    ConstantUsers,
}

pub fn run(a: &CalibrateArgs) -> Result<()> {
    let mut keep = BTreeSet::new();
    for k in &a.keep {
        match Stage::parse(k.trim()) {
            Some(s) => {
                keep.insert(s);
            }
            None => bail!("unknown stage `{k}`"),
        }
    }
    let data = load_dataset(&a.data)?;
    let base = load_site(a.params.as_deref())?;
    let opts = CalibrateOptions {
        base,
        keep,
        max_stories: a.max_stories,
        window: a.window,
        site: SiteFitOptions {
            pool: match a.site_pool {
                SitePoolArg::ObservedPath => PoolApproximation::ObservedPath,
                SitePoolArg::ConstantUsers => PoolApproximation::ConstantUsers,
            },
            ..SiteFitOptions::default()
        },
        cfan: match a.cfan {
            CfanArg::PoolAdjusted => CfanMethod::PoolAdjusted,
            CfanArg::RawRates => CfanMethod::RawRates,
        },
        ..CalibrateOptions::default()
    };
    let cal = calibrate(&data.stories, &data.graph, &opts).context("calibrate")?;

    out_dir(&a.out.out)?;
    let mut pf = match &a.params {
        Some(p) => ParamFile::read(p)?,
        None => ParamFile::default(),
    };
    site_into_file(&mut pf, &cal.site, &cal.std_errors);
    pf.write(&a.out.out.join(PARAMS_FILE))?;
    if let Some(priors) = &cal.priors {
        let mut pr = ParamFile::default();
        priors_into_file(&mut pr, priors);
        pr.write(&a.out.out.join(PRIORS_FILE))?;
    }

    let mut w = csv_out(&a.out.out, "diagnostics.csv")?;
    w.write_record(["stage", "quantity", "value"])?;
    for d in &cal.diagnostics {
        w.write_record([d.stage.name(), &d.quantity, &d.value.to_string()])?;
    }
    w.flush()?;

    if !cal.story_fits.is_empty() {
        let rows: Vec<_> = cal
            .story_fits
            .iter()
            .map(|(id, f)| {
                let story = data.stories.iter().find(|s| s.id == *id).expect("fitted story exists");
                (story, story.t_promotion.unwrap_or(0.0) + a.window, f)
            })
            .collect();
        write_fits(&a.out.out, "story_fits.csv", &rows)?;
    }
    Ok(())
}
