use std::collections::BTreeMap;

use serde::Serialize;

use super::ingest::votes_per_user;
use super::records::{StoryId, StoryRecord};

/// Sampling settings for [`corpus_stats`].
#[derive(Debug, Clone, Copy)]
pub struct StatsOptions {
    /// Class counts are taken this many Digg hours after promotion.
    pub after_promotion: f64,
    /// Spacing of the list snapshots used for (votes, rank) samples.
    pub snapshot_every: f64,
    /// Upper bound on each sample set; extra samples are thinned evenly.
    pub max_rank_samples: usize,
}

impl Default for StatsOptions {
    fn default() -> Self {
        Self {
            after_promotion: 24.0,
            snapshot_every: 1.0,
            max_rank_samples: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassCorrelations {
    pub submitter_other: Option<f64>,
    pub submitter_nonfan: Option<f64>,
    pub other_nonfan: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    /// Per promoted story, votes by class at `after_promotion`.
    pub class_counts: Vec<(StoryId, [u64; 3])>,
    pub correlations: ClassCorrelations,
    /// Number of users (value) with exactly k votes (key), k ≥ 1.
    pub activity: BTreeMap<u64, u64>,
    /// `(votes, rank)` on the front-page popularity list; rank counts the
    /// stories with strictly more votes, so the leader has rank 0.
    pub front_samples: Vec<(f64, f64)>,
    pub upcoming_samples: Vec<(f64, f64)>,
    /// Mean number of stories promoted per 24 Digg hours.
    pub promoted_per_day: Option<f64>,
}

/// Pearson correlation; `None` with fewer than two points or zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

fn thin<T: Copy>(v: Vec<T>, cap: usize) -> Vec<T> {
    if v.len() <= cap || cap == 0 {
        return v;
    }
    let step = v.len() as f64 / cap as f64;
    (0..cap).map(|i| v[(i as f64 * step) as usize]).collect()
}

fn votes_by(story: &StoryRecord, abs_t: f64) -> usize {
    let rel = abs_t - story.origin;
    story.votes.partition_point(|v| v.time <= rel)
}

fn rank_samples(listed: &[&StoryRecord], at: f64, out: &mut Vec<(f64, f64)>) {
    let mut counts: Vec<usize> = listed.iter().map(|s| votes_by(s, at)).collect();
    let snapshot = counts.clone();
    counts.sort_unstable_by(|a, b| b.cmp(a));
    for v in snapshot {
        let rank = counts.partition_point(|&c| c > v);
        out.push((v as f64, rank as f64));
    }
}

/// Descriptive statistics of a labeled corpus.
pub fn corpus_stats(stories: &[StoryRecord], opts: &StatsOptions) -> CorpusStats {
    let class_counts: Vec<(StoryId, [u64; 3])> = stories
        .iter()
        .filter_map(|s| s.t_promotion.map(|tp| (s.id, s.counts_at(tp + opts.after_promotion))))
        .collect();
    let col = |i: usize| class_counts.iter().map(|(_, c)| c[i] as f64).collect::<Vec<_>>();
    let (cs, cf, cn) = (col(0), col(1), col(2));
    let correlations = ClassCorrelations {
        submitter_other: pearson(&cs, &cf),
        submitter_nonfan: pearson(&cs, &cn),
        other_nonfan: pearson(&cf, &cn),
    };

    let mut activity = BTreeMap::new();
    for k in votes_per_user(stories).into_values() {
        *activity.entry(k).or_insert(0) += 1;
    }

    let mut front_samples = Vec::new();
    let mut upcoming_samples = Vec::new();
    let start = stories.iter().map(|s| s.origin).fold(f64::INFINITY, f64::min);
    let end = stories.iter().map(|s| s.origin + s.last_vote_time()).fold(f64::NEG_INFINITY, f64::max);
    if start.is_finite() && end > start && opts.snapshot_every > 0.0 {
        let mut at = start + opts.snapshot_every;
        while at <= end {
            let front: Vec<&StoryRecord> = stories
                .iter()
                .filter(|s| {
                    s.t_promotion
                        .is_some_and(|tp| at >= s.origin + tp && at < s.origin + tp + opts.after_promotion)
                })
                .collect();
            let upcoming: Vec<&StoryRecord> = stories
                .iter()
                .filter(|s| {
                    let leaves = s.origin + s.t_promotion.unwrap_or(opts.after_promotion);
                    at >= s.origin && at < leaves
                })
                .collect();
            rank_samples(&front, at, &mut front_samples);
            rank_samples(&upcoming, at, &mut upcoming_samples);
            at += opts.snapshot_every;
        }
    }

    let promo: Vec<f64> = stories
        .iter()
        .filter_map(|s| s.t_promotion.map(|tp| s.origin + tp))
        .collect();
    let promo_span = promo.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - promo.iter().copied().fold(f64::INFINITY, f64::min);
    let promoted_per_day = (promo.len() >= 2 && promo_span > 0.0).then(|| (promo.len() - 1) as f64 / promo_span * 24.0);

    CorpusStats {
        class_counts,
        correlations,
        activity,
        front_samples: thin(front_samples, opts.max_rank_samples),
        upcoming_samples: thin(upcoming_samples, opts.max_rank_samples),
        promoted_per_day,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::records::VoteEvent;
    use crate::model::VoterClass;

    fn story(id: StoryId, origin: f64, tp: Option<f64>, votes: &[(f64, VoterClass)]) -> StoryRecord {
        StoryRecord {
            id,
            submitter: id * 1000,
            submitted_wall: origin * 3600.0,
            origin,
            promotion_wall: tp.map(|t| (origin + t) * 3600.0),
            t_promotion: tp,
            s0: 0,
            votes: votes
                .iter()
                .enumerate()
                .map(|(i, &(time, class))| VoteEvent {
                    voter: id * 1000 + i as u64,
                    wall_time: (origin + time) * 3600.0,
                    time,
                    class,
                })
                .collect(),
        }
    }

    #[test]
    fn pearson_basics() {
        assert_eq!(pearson(&[1.0], &[2.0]), None);
        assert_eq!(pearson(&[1.0, 1.0], &[2.0, 3.0]), None);
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.5]).unwrap();
        assert!(r > 0.99 && r <= 1.0);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_story_has_no_correlations() {
        use VoterClass::*;
        let s = story(1, 0.0, Some(1.0), &[(0.0, NonFan), (0.5, SubmitterFan), (2.0, OtherFan)]);
        let st = corpus_stats(&[s], &StatsOptions::default());
        assert_eq!(st.class_counts, vec![(1, [1, 1, 1])]);
        assert_eq!(st.correlations.other_nonfan, None);
    }

    #[test]
    fn histogram_counts_every_vote() {
        use VoterClass::*;
        let a = story(1, 0.0, Some(1.0), &[(0.0, NonFan), (0.5, NonFan), (3.0, NonFan)]);
        let b = story(2, 2.0, None, &[(0.0, NonFan), (0.1, NonFan)]);
        let st = corpus_stats(&[a, b], &StatsOptions::default());
        let total: u64 = st.activity.iter().map(|(k, n)| k * n).sum();
        assert_eq!(total, 5);
    }

    #[test]
    fn ranks_count_stories_ahead() {
        use VoterClass::*;
        let a = story(1, 0.0, Some(0.1), &[(0.0, NonFan), (0.2, NonFan), (0.3, NonFan), (0.9, NonFan)]);
        let b = story(2, 0.0, Some(0.1), &[(0.0, NonFan), (0.2, NonFan)]);
        let opts = StatsOptions {
            snapshot_every: 0.5,
            ..Default::default()
        };
        let st = corpus_stats(&[a, b], &opts);
        assert_eq!(&st.front_samples[..2], &[(3.0, 0.0), (2.0, 1.0)]);
    }
}
