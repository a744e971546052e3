//! One module per subcommand, plus the loading and writing they share.

pub mod calibrate;
pub mod evaluate;
pub mod fit;
pub mod predict;
pub mod report;
pub mod simulate;

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use storyvotes::data::{ingest, ClockKind, Dataset};
use storyvotes::estimation::ClassPriors;
use storyvotes::model::SiteModel;

use crate::params::{priors_from_file, priors_into_file, reference_priors, site_from_file, site_into_file, ParamFile};
use crate::{Clock, DataArgs};

pub const PARAMS_FILE: &str = "params.txt";
pub const PRIORS_FILE: &str = "priors.txt";

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn load_dataset(d: &DataArgs) -> Result<Dataset> {
    let clock = match d.clock {
        Clock::Activity => ClockKind::Activity,
        Clock::Linear => ClockKind::Linear,
    };
    let data = ingest(&d.votes, &d.friends, &d.promotions, clock).context("reading dataset")?;
    log::info!(
        "{} stories ({} promoted), {} votes, {} fan links",
        data.report.stories,
        data.report.promoted,
        data.report.votes,
        data.report.fan_links
    );
    Ok(data)
}

/// Site parameters from a file, or the published values.
pub fn load_site(path: Option<&Path>) -> Result<SiteModel> {
    match path {
        Some(p) => site_from_file(&ParamFile::read(p)?).with_context(|| format!("parameters in {}", p.display())),
        None => Ok(SiteModel::reference()),
    }
}

pub fn load_priors(path: Option<&Path>) -> Result<Option<ClassPriors>> {
    path.map(|p| priors_from_file(&ParamFile::read(p)?).with_context(|| format!("priors in {}", p.display())))
        .transpose()
}

pub fn out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

pub fn csv_out(dir: &Path, name: &str) -> Result<csv::Writer<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(csv::Writer::from_writer(f))
}

pub fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn reference(a: &OutArgs) -> Result<()> {
    out_dir(&a.out)?;
    let mut pf = ParamFile::default();
    site_into_file(&mut pf, &SiteModel::reference(), &BTreeMap::new());
    pf.write(&a.out.join(PARAMS_FILE))?;
    let mut pr = ParamFile::default();
    priors_into_file(&mut pr, &reference_priors());
    pr.write(&a.out.join(PRIORS_FILE))
}
