use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use storyvotes::model::VoterClass;
use storyvotes::prediction::{evaluate_points, spearman, PointForecast};

use super::{csv_out, opt, out_dir, OutArgs};

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Forecast table written by `predict`.
    #[arg(long)]
    pub forecasts: PathBuf,
    #[command(flatten)]
    pub out: OutArgs,
}

/// One forecast row as read back from disk.
struct Row {
    point: PointForecast,
    observed: [f64; 3],
    /// Per-class interval, when the forecast has one.
    interval: Option<(f64, [(f64, f64); 3])>,
}

fn read_rows(path: &PathBuf) -> Result<Vec<Row>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{}: missing column `{name}`", path.display()))
    };
    let per_class = |prefix: &str| -> Result<[usize; 3]> {
        let v = VoterClass::ALL
            .iter()
            .map(|c| col(&format!("{prefix}_{}", c.label())))
            .collect::<Result<Vec<_>>>()?;
        Ok([v[0], v[1], v[2]])
    };
    let (id, tp, made, level) = (col("story_id")?, col("digg_t_promotion")?, col("digg_made_at")?, col("level")?);
    let (pred, lo, hi, obs) = (per_class("predicted")?, per_class("lower")?, per_class("upper")?, per_class("observed")?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .with_context(|| format!("{}:{line}: invalid `{}` value `{}`", path.display(), &headers[i], &rec[i]))
        };
        let maybe = |i: usize| -> Result<Option<f64>> { if rec[i].is_empty() { Ok(None) } else { num(i).map(Some) } };
        let three = |ix: [usize; 3]| -> Result<[f64; 3]> { Ok([num(ix[0])?, num(ix[1])?, num(ix[2])?]) };
        let interval = match maybe(level)? {
            Some(l) => {
                let (a, b) = (three(lo)?, three(hi)?);
                Some((l, [(a[0], b[0]), (a[1], b[1]), (a[2], b[2])]))
            }
            None => None,
        };
        out.push(Row {
            point: PointForecast {
                story: rec[id]
                    .parse()
                    .with_context(|| format!("{}:{line}: invalid story_id", path.display()))?,
                t_promotion: maybe(tp)?,
                made_at: num(made)?,
                predicted: three(pred)?,
            },
            observed: three(obs)?,
            interval,
        });
    }
    if out.is_empty() {
        bail!("{}: no forecasts", path.display());
    }
    Ok(out)
}

pub fn run(a: &EvaluateArgs) -> Result<()> {
    let rows = read_rows(&a.forecasts)?;
    let pairs: Vec<(PointForecast, [f64; 3])> = rows.iter().map(|r| (r.point, r.observed)).collect();
    let report = evaluate_points(&pairs).context("evaluate")?;
    out_dir(&a.out.out)?;

    let mut w = csv_out(&a.out.out, "metrics.csv")?;
    w.write_record([
        "digg_made_after_promotion",
        "class",
        "stories",
        "median_abs_error",
        "median_rel_error",
        "spearman",
        "classification_error",
    ])?;
    for r in &report.rows {
        w.write_record([
            r.made_after_promotion.to_string(),
            r.class.label().to_string(),
            r.stories.to_string(),
            r.median_abs_error.to_string(),
            r.median_rel_error.to_string(),
            opt(r.spearman),
            r.classification_error.to_string(),
        ])?;
    }
    w.flush()?;

    // Wide tables: one row per prediction time, one column per class.
    let mut offsets: Vec<f64> = report.rows.iter().map(|r| r.made_after_promotion).collect();
    offsets.dedup();
    for (name, pick) in [
        ("spearman.csv", (|r: &storyvotes::prediction::MetricRow| opt(r.spearman)) as fn(&_) -> String),
        ("classification.csv", |r| r.classification_error.to_string()),
    ] {
        let mut w = csv_out(&a.out.out, name)?;
        w.write_record(["digg_made_after_promotion", "submitter_fan", "other_fan", "non_fan"])?;
        for &o in &offsets {
            let mut rec = vec![o.to_string()];
            for c in VoterClass::ALL {
                rec.push(report.row(o, c).map(pick).unwrap_or_default());
            }
            w.write_record(rec)?;
        }
        w.flush()?;
    }

    // Interval coverage and width-versus-error rank correlation.
    let mut groups: BTreeMap<i64, Vec<&Row>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.interval.is_some()) {
        let off = r.point.made_at - r.point.t_promotion.unwrap_or(0.0);
        groups.entry((off * 1e6).round() as i64).or_default().push(r);
    }
    if !groups.is_empty() {
        let mut w = csv_out(&a.out.out, "coverage.csv")?;
        w.write_record([
            "digg_made_after_promotion",
            "class",
            "level",
            "stories",
            "coverage",
            "spearman_width_abs_error",
        ])?;
        for (key, items) in groups {
            for c in VoterClass::ALL {
                let i = c.index();
                let level = items[0].interval.expect("filtered").0;
                let mut inside = 0usize;
                let (mut widths, mut errors) = (Vec::new(), Vec::new());
                for r in &items {
                    let (lo, hi) = r.interval.expect("filtered").1[i];
                    inside += (r.observed[i] >= lo && r.observed[i] <= hi) as usize;
                    widths.push(hi - lo);
                    errors.push((r.point.predicted[i] - r.observed[i]).abs());
                }
                w.write_record([
                    (key as f64 / 1e6).to_string(),
                    c.label().to_string(),
                    level.to_string(),
                    items.len().to_string(),
                    (inside as f64 / items.len() as f64).to_string(),
                    opt(spearman(&widths, &errors)),
                ])?;
            }
        }
        w.flush()?;
    }
    Ok(())
}
