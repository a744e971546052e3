use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{Phase, VoterClass};

pub type StoryId = u64;
pub type UserId = u64;

/// One row of a vote log before any time transformation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawVote {
    pub story: StoryId,
    pub voter: UserId,
    /// Seconds since the Unix epoch; fractional seconds are allowed.
    pub wall_time: f64,
}

/// A vote on a known story.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoteEvent {
    pub voter: UserId,
    pub wall_time: f64,
    /// Digg hours since the story's submission.
    pub time: f64,
    pub class: VoterClass,
}

/// A story with its ordered votes. The first vote is the submitter's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryRecord {
    pub id: StoryId,
    pub submitter: UserId,
    pub submitted_wall: f64,
    /// Submission time on the dataset's absolute Digg clock.
    pub origin: f64,
    pub promotion_wall: Option<f64>,
    /// Digg hours from submission to promotion.
    pub t_promotion: Option<f64>,
    /// Fans of the submitter.
    pub s0: u32,
    pub votes: Vec<VoteEvent>,
}

/// Votes after the submitter's, as `(Digg time, class)` pairs, observed over
/// `[0, window]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VoteStream {
    pub events: Vec<(f64, VoterClass)>,
    pub window: f64,
}

impl VoteStream {
    pub fn times(&self, class: VoterClass) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().filter(move |(_, c)| *c == class).map(|(t, _)| *t)
    }

    pub fn count(&self, class: VoterClass) -> usize {
        self.events.iter().filter(|(_, c)| *c == class).count()
    }
}

impl StoryRecord {
    pub fn is_promoted(&self) -> bool {
        self.t_promotion.is_some()
    }

    pub fn phase_at(&self, t: f64) -> Phase {
        Phase::at(t, self.t_promotion)
    }

    /// Time of the last vote, or 0 for a story with only the submitter's vote.
    pub fn last_vote_time(&self) -> f64 {
        self.votes.last().map_or(0.0, |v| v.time)
    }

    /// Votes per class with `time ≤ t`, counting the submitter's vote as non-fan.
    pub fn counts_at(&self, t: f64) -> [u64; 3] {
        let mut out = [0u64; 3];
        for v in self.votes.iter().take_while(|v| v.time <= t) {
            out[v.class.index()] += 1;
        }
        out
    }

    pub fn total_counts(&self) -> [u64; 3] {
        let mut out = [0u64; 3];
        for v in &self.votes {
            out[v.class.index()] += 1;
        }
        out
    }

    /// Every vote after the submitter's with `time ≤ upto`.
    pub fn stream(&self, upto: f64) -> VoteStream {
        VoteStream {
            events: self
                .votes
                .iter()
                .skip(1)
                .take_while(|v| v.time <= upto)
                .map(|v| (v.time, v.class))
                .collect(),
            window: upto,
        }
    }
}

/// Directed follower graph: an edge `fan → followee` means the fan sees the
/// followee's activity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FanGraph {
    followees: BTreeMap<UserId, BTreeSet<UserId>>,
    fan_counts: BTreeMap<UserId, u32>,
    edges: u64,
}

impl FanGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an edge; returns false for self-edges and duplicates.
    pub fn add_edge(&mut self, fan: UserId, followee: UserId) -> bool {
        if fan == followee {
            return false;
        }
        if !self.followees.entry(fan).or_default().insert(followee) {
            return false;
        }
        *self.fan_counts.entry(followee).or_default() += 1;
        self.edges += 1;
        true
    }

    pub fn follows(&self, fan: UserId, followee: UserId) -> bool {
        self.followees.get(&fan).is_some_and(|s| s.contains(&followee))
    }

    pub fn followees(&self, fan: UserId) -> impl Iterator<Item = UserId> + '_ {
        self.followees.get(&fan).into_iter().flatten().copied()
    }

    pub fn fan_count(&self, user: UserId) -> u32 {
        self.fan_counts.get(&user).copied().unwrap_or(0)
    }

    pub fn edge_count(&self) -> u64 {
        self.edges
    }

    /// Users with at least one fan.
    pub fn users_with_fans(&self) -> u64 {
        self.fan_counts.len() as u64
    }

    /// All edges in `(fan, followee)` order.
    pub fn edges(&self) -> impl Iterator<Item = (UserId, UserId)> + '_ {
        self.followees.iter().flat_map(|(&f, s)| s.iter().map(move |&e| (f, e)))
    }
}
