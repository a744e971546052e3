use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use storyvotes::data::{corpus_stats, StatsOptions, StoryId};
use storyvotes::dist::LogNormal;
use storyvotes::estimation::{ks_bootstrap, Family};
use storyvotes::model::VoterClass;

use super::fit::fit_all;
use super::{csv_out, load_dataset, load_priors, load_site, opt, out_dir, OutArgs};
use crate::DataArgs;

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Per-story estimates written by `fit`; estimated here when absent.
    #[arg(long)]
    pub fits: Option<PathBuf>,
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub priors: Option<PathBuf>,
    /// Vote counts are taken this many Digg hours after promotion.
    #[arg(long, default_value_t = 24.0)]
    pub window: f64,
    /// Histogram bins for r values.
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    /// Bootstrap replicates for the KS test of each lognormal fit; 0 skips it.
    #[arg(long, default_value_t = 0)]
    pub ks_replicates: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

/// `(story, r triple, boundary flags)` per fitted story.
type FitRow = (StoryId, [f64; 3], [bool; 3]);

fn read_fits(path: &PathBuf) -> Result<Vec<FitRow>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: String| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{}: missing column `{name}`", path.display()))
    };
    let id = col("story_id".into())?;
    let r: Vec<usize> = VoterClass::ALL.iter().map(|c| col(format!("r_{}", c.label()))).collect::<Result<_>>()?;
    let b: Vec<usize> = VoterClass::ALL
        .iter()
        .map(|c| col(format!("boundary_{}", c.label())))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |i: usize| format!("{}:{line}: invalid `{}` value `{}`", path.display(), &headers[i], &rec[i]);
        let mut rs = [0.0; 3];
        let mut bs = [false; 3];
        for c in 0..3 {
            rs[c] = rec[r[c]].parse().with_context(|| bad(r[c]))?;
            bs[c] = rec[b[c]].parse().with_context(|| bad(b[c]))?;
        }
        out.push((rec[id].parse().with_context(|| bad(id))?, rs, bs));
    }
    Ok(out)
}

pub fn run(a: &ReportArgs) -> Result<()> {
    let data = load_dataset(&a.data)?;
    let stats = corpus_stats(
        &data.stories,
        &StatsOptions {
            after_promotion: a.window,
            ..StatsOptions::default()
        },
    );
    let fits: Vec<FitRow> = match &a.fits {
        Some(p) => read_fits(p)?,
        None => {
            let site = load_site(a.params.as_deref())?;
            let priors = load_priors(a.priors.as_deref())?;
            let fitted = fit_all(&data.stories, &site, priors.as_ref(), a.window).context("report")?;
            data.stories
                .iter()
                .zip(fitted)
                .map(|(s, (_, f))| (s.id, f.params.r_triple(), f.at_boundary))
                .collect()
        }
    };
    out_dir(&a.out.out)?;

    let mut w = csv_out(&a.out.out, "vote_types.csv")?;
    w.write_record(["story_id", "submitter_fan", "other_fan", "non_fan"])?;
    for (id, c) in &stats.class_counts {
        w.write_record([id.to_string(), c[0].to_string(), c[1].to_string(), c[2].to_string()])?;
    }
    w.flush()?;

    let mut w = csv_out(&a.out.out, "correlations.csv")?;
    w.write_record(["pair", "pearson"])?;
    let cc = &stats.correlations;
    for (pair, v) in [
        ("submitter_fan:other_fan", cc.submitter_other),
        ("submitter_fan:non_fan", cc.submitter_nonfan),
        ("other_fan:non_fan", cc.other_nonfan),
    ] {
        w.write_record([pair.to_string(), opt(v)])?;
    }
    w.flush()?;

    let mut w = csv_out(&a.out.out, "activity.csv")?;
    w.write_record(["votes", "users"])?;
    for (k, n) in &stats.activity {
        w.write_record([k.to_string(), n.to_string()])?;
    }
    w.flush()?;

    let mut w = csv_out(&a.out.out, "popularity_ranks.csv")?;
    w.write_record(["list", "votes", "rank"])?;
    for (list, samples) in [("front", &stats.front_samples), ("upcoming", &stats.upcoming_samples)] {
        for (v, r) in samples.iter() {
            w.write_record([list.to_string(), v.to_string(), r.to_string()])?;
        }
    }
    w.flush()?;

    let mut values = csv_out(&a.out.out, "r_values.csv")?;
    values.write_record(["story_id", "class", "r", "boundary"])?;
    for (id, r, b) in &fits {
        for c in VoterClass::ALL {
            let i = c.index();
            values.write_record([id.to_string(), c.label().to_string(), r[i].to_string(), b[i].to_string()])?;
        }
    }
    values.flush()?;

    let mut fitw = csv_out(&a.out.out, "r_lognormal.csv")?;
    fitw.write_record(["class", "stories", "mu", "sigma", "ks_statistic", "ks_p_value"])?;
    let mut hist = csv_out(&a.out.out, "r_histogram.csv")?;
    hist.write_record(["class", "bin_lo", "bin_hi", "count", "expected"])?;
    for c in VoterClass::ALL {
        let i = c.index();
        let rs: Vec<f64> = fits.iter().filter(|f| !f.2[i]).map(|f| f.1[i]).collect();
        let Ok(ln) = LogNormal::fit(&rs) else {
            log::warn!("too few interior {} estimates for a lognormal fit", c.label());
            fitw.write_record([c.label().to_string(), rs.len().to_string(), String::new(), String::new(), String::new(), String::new()])?;
            continue;
        };
        let ks = if a.ks_replicates > 0 {
            Some(ks_bootstrap(&rs, Family::LogNormal, a.ks_replicates, a.seed).context("report: KS test")?)
        } else {
            None
        };
        fitw.write_record([
            c.label().to_string(),
            rs.len().to_string(),
            ln.mu_log.to_string(),
            ln.sigma_log.to_string(),
            opt(ks.as_ref().map(|k| k.statistic)),
            opt(ks.as_ref().map(|k| k.p_value)),
        ])?;
        // Log-spaced bins over the observed range.
        let lo = rs.iter().copied().fold(f64::INFINITY, f64::min).ln();
        let hi = rs.iter().copied().fold(f64::NEG_INFINITY, f64::max).ln();
        let bins = a.bins.max(1);
        let width = ((hi - lo) / bins as f64).max(1e-12);
        let mut counts = vec![0usize; bins];
        for r in &rs {
            let k = (((r.ln() - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        for (k, n) in counts.iter().enumerate() {
            let (a0, b0) = ((lo + k as f64 * width).exp(), (lo + (k + 1) as f64 * width).exp());
            let expected = rs.len() as f64 * (ln.cdf(b0) - ln.cdf(a0));
            hist.write_record([c.label().to_string(), a0.to_string(), b0.to_string(), n.to_string(), expected.to_string()])?;
        }
    }
    fitw.flush()?;
    hist.flush()?;
    Ok(())
}
