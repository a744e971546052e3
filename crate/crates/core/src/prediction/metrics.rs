//! Corpus-level forecast quality: errors, rank correlation and above/below
//! median classification, per class and per prediction time.

use std::collections::BTreeMap;

use serde::Serialize;

use super::forecast::Forecast;
use crate::data::StoryId;
use crate::error::{Error, Result};
use crate::model::VoterClass;

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation, or `None` when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    crate::data::stats::pearson(&average_ranks(x), &average_ranks(y))
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricRow {
    /// Prediction time relative to promotion, Digg hours.
    pub made_after_promotion: f64,
    pub class: VoterClass,
    pub stories: usize,
    pub median_abs_error: f64,
    /// Median of `|predicted − observed| / observed` over stories with
    /// observed votes.
    pub median_rel_error: f64,
    pub spearman: Option<f64>,
    /// Fraction of stories where "above the corpus median" is predicted wrongly.
    pub classification_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub rows: Vec<MetricRow>,
}

impl EvaluationReport {
    pub fn row(&self, made_after_promotion: f64, class: VoterClass) -> Option<&MetricRow> {
        self.rows
            .iter()
            .find(|r| r.class == class && (r.made_after_promotion - made_after_promotion).abs() < 1e-9)
    }
}

/// The part of a forecast that the metrics look at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointForecast {
    pub story: StoryId,
    pub t_promotion: Option<f64>,
    pub made_at: f64,
    pub predicted: [f64; 3],
}

impl From<&Forecast> for PointForecast {
    fn from(f: &Forecast) -> Self {
        Self {
            story: f.story,
            t_promotion: f.t_promotion,
            made_at: f.made_at,
            predicted: f.predicted,
        }
    }
}

/// Scores forecasts against observed per-class counts at each forecast's
/// horizon. Forecasts are grouped by prediction time relative to promotion.
/// The classification threshold is the per-class median of the observed
/// counts over the stories in the group.
pub fn evaluate_corpus(forecasts: &[Forecast], actuals: &BTreeMap<StoryId, [f64; 3]>) -> Result<EvaluationReport> {
    let pairs = forecasts
        .iter()
        .map(|f| match actuals.get(&f.story) {
            Some(a) => Ok((PointForecast::from(f), *a)),
            None => Err(Error::domain(format!("no observed counts for story {}", f.story))),
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate_points(&pairs)
}

/// Same as [`evaluate_corpus`], with each forecast paired with its observed
/// counts.
pub fn evaluate_points(pairs: &[(PointForecast, [f64; 3])]) -> Result<EvaluationReport> {
    if pairs.is_empty() {
        return Err(Error::domain("no forecasts to evaluate"));
    }
    let mut groups: BTreeMap<i64, Vec<(&PointForecast, [f64; 3])>> = BTreeMap::new();
    for (f, actual) in pairs {
        let offset = f.made_at - f.t_promotion.unwrap_or(0.0);
        let key = (offset * 1e6).round() as i64;
        groups.entry(key).or_default().push((f, *actual));
    }
    let mut rows = Vec::new();
    for (key, items) in groups {
        for class in VoterClass::ALL {
            let c = class.index();
            let pred: Vec<f64> = items.iter().map(|(f, _)| f.predicted[c]).collect();
            let obs: Vec<f64> = items.iter().map(|(_, a)| a[c]).collect();
            let mut abs: Vec<f64> = pred.iter().zip(&obs).map(|(p, o)| (p - o).abs()).collect();
            let mut rel: Vec<f64> = pred
                .iter()
                .zip(&obs)
                .filter(|(_, &o)| o > 0.0)
                .map(|(p, o)| (p - o).abs() / o)
                .collect();
            let threshold = median(&mut obs.clone());
            let wrong = pred
                .iter()
                .zip(&obs)
                .filter(|(&p, &o)| (p > threshold) != (o > threshold))
                .count();
            rows.push(MetricRow {
                made_after_promotion: key as f64 / 1e6,
                class,
                stories: items.len(),
                median_abs_error: median(&mut abs),
                median_rel_error: if rel.is_empty() { f64::NAN } else { median(&mut rel) },
                spearman: spearman(&pred, &obs),
                classification_error: wrong as f64 / items.len() as f64,
            });
        }
    }
    Ok(EvaluationReport { rows })
}
