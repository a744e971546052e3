//! Stochastic vote generator.
//!
//! Each unseen user belongs to one of three pools: fans of the submitter, fans
//! of some earlier voter, and everyone else. A pool member who visits the site
//! sees the story with the class's visibility and then votes with the class's
//! interestingness. Every vote turns a batch of unseen non-fans into fans of
//! the new voter. Visits that do not lead to a sighting change nothing, so
//! sightings are drawn directly by thinning: between events the non-fan
//! visibility can only fall (the story sinks down the recency list while its
//! vote count is fixed), so its value at the start of a window bounds it over
//! the window.
//!
//! [`SimMode::MeanField`] keeps the non-fan pool as a count and draws each
//! vote's fan batch as `Binomial(N, ρ)`. [`SimMode::Agent`] keeps every user
//! individually: a voter's fans are drawn from the whole population and only
//! those who are still unseen non-fans join the fan pool.

use std::io::{Read, Write};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp};
use rayon::prelude::*;

use crate::data::records::{FanGraph, StoryId, StoryRecord, UserId, VoteEvent};
use crate::dist::LogNormal;
use crate::error::{Error, Result};
use crate::model::params::{Phase, SiteModel, StoryParams, VoterClass};
use crate::model::visibility::class_visibility;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    MeanField,
    Agent,
}

/// When a simulated story leaves the upcoming list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PromotionRule {
    /// Promote the moment the vote count (submitter included) reaches this.
    Threshold(u32),
    /// Promote a fixed number of Digg hours after submission.
    Delay(f64),
    Never,
}

/// Number of fans a new voter brings along.
#[derive(Debug, Clone, PartialEq)]
pub enum FanCounts {
    /// Every user is a fan of a given voter with probability ρ.
    ConstantMean,
    /// Fan counts drawn uniformly from observed values.
    Empirical(Vec<u32>),
}

/// Per-story simulation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub mode: SimMode,
    pub promotion: PromotionRule,
    pub fan_counts: FanCounts,
    /// A story not promoted by this age is dropped from the upcoming list.
    pub upcoming_limit: f64,
    /// Observation continues this long after promotion.
    pub after_promotion: f64,
    /// Maximum thinning window.
    pub refresh: f64,
    /// Times at which to record the unseen pool sizes.
    pub snapshots: Vec<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            mode: SimMode::MeanField,
            promotion: PromotionRule::Threshold(40),
            fan_counts: FanCounts::ConstantMean,
            upcoming_limit: 24.0,
            after_promotion: 24.0,
            refresh: 0.1,
            snapshots: Vec::new(),
        }
    }
}

/// One simulated story. `record` uses story-local user ids: the submitter is 0
/// and the submitter's fans are `1..=s0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedStory {
    pub record: StoryRecord,
    /// Generating parameters, with the realized promotion time.
    pub truth: StoryParams,
    /// For each vote, the earlier voter whose activity brought an other-fan
    /// voter to the story.
    pub sources: Vec<Option<UserId>>,
    /// Unseen pool sizes `(S, F, N)` at each requested snapshot time.
    pub pools: Vec<(f64, [u64; 3])>,
}

enum NonFans {
    Count(u64),
    Agents {
        /// Unseen non-fans, with each user's slot in the list (`NO_SLOT` once
        /// they leave it).
        unseen: Vec<u32>,
        slot: Vec<u32>,
    },
}

struct Pools {
    submitter_fans: Vec<u32>,
    /// `(user, source)` for fans of earlier voters who have not seen the story.
    other_fans: Vec<(u32, u32)>,
    non_fans: NonFans,
    population: u32,
    next_id: u32,
}

impl Pools {
    fn size(&self, class: VoterClass) -> u64 {
        match class {
            VoterClass::SubmitterFan => self.submitter_fans.len() as u64,
            VoterClass::OtherFan => self.other_fans.len() as u64,
            VoterClass::NonFan => match &self.non_fans {
                NonFans::Count(n) => *n,
                NonFans::Agents { unseen, .. } => unseen.len() as u64,
            },
        }
    }

    /// Removes a random member of the pool; returns the user and, for other
    /// fans, who they follow.
    fn take<R: Rng>(&mut self, class: VoterClass, rng: &mut R) -> (u32, Option<u32>) {
        match class {
            VoterClass::SubmitterFan => {
                let i = rng.random_range(0..self.submitter_fans.len());
                (self.submitter_fans.swap_remove(i), None)
            }
            VoterClass::OtherFan => {
                let i = rng.random_range(0..self.other_fans.len());
                let (u, s) = self.other_fans.swap_remove(i);
                (u, Some(s))
            }
            VoterClass::NonFan => match &mut self.non_fans {
                NonFans::Count(n) => {
                    *n -= 1;
                    let id = self.next_id;
                    self.next_id += 1;
                    (id, None)
                }
                NonFans::Agents { unseen, slot, .. } => {
                    let i = rng.random_range(0..unseen.len());
                    (remove_agent(unseen, slot, i), None)
                }
            },
        }
    }

    /// Makes a batch of unseen non-fans into fans of `voter`.
    fn recruit<R: Rng>(&mut self, voter: u32, rho: f64, fan_counts: &FanCounts, rng: &mut R) {
        match &mut self.non_fans {
            NonFans::Count(n) => {
                let k = match fan_counts {
                    FanCounts::ConstantMean => binomial(*n, rho, rng),
                    FanCounts::Empirical(counts) => {
                        // Each fan is an unseen non-fan with probability N/U.
                        let fans = *counts.choose(rng).unwrap_or(&0) as u64;
                        binomial(fans, *n as f64 / self.population as f64, rng)
                    }
                };
                *n -= k;
                for _ in 0..k {
                    self.other_fans.push((self.next_id, voter));
                    self.next_id += 1;
                }
            }
            NonFans::Agents { unseen, slot } => {
                let population = self.population;
                let others = (population - 1) as u64;
                let k = match fan_counts {
                    FanCounts::ConstantMean => binomial(others, rho, rng),
                    FanCounts::Empirical(counts) => (*counts.choose(rng).unwrap_or(&0) as u64).min(others),
                };
                for _ in 0..k {
                    let mut u = rng.random_range(0..population - 1);
                    if u >= voter {
                        u += 1;
                    }
                    let i = slot[u as usize];
                    if i != NO_SLOT {
                        remove_agent(unseen, slot, i as usize);
                        self.other_fans.push((u, voter));
                    }
                }
            }
        }
    }
}

const NO_SLOT: u32 = u32::MAX;

/// Records the pool sizes for every pending snapshot time before `until`.
fn take_snapshots(until: f64, times: &[f64], next: &mut usize, pools: &Pools, out: &mut Vec<(f64, [u64; 3])>) {
    while *next < times.len() && times[*next] < until {
        out.push((times[*next], VoterClass::ALL.map(|c| pools.size(c))));
        *next += 1;
    }
}

fn remove_agent(unseen: &mut Vec<u32>, slot: &mut [u32], i: usize) -> u32 {
    let u = unseen.swap_remove(i);
    slot[u as usize] = NO_SLOT;
    if let Some(&moved) = unseen.get(i) {
        slot[moved as usize] = i as u32;
    }
    u
}

fn binomial<R: Rng>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    Binomial::new(n, p.min(1.0)).expect("valid binomial").sample(rng)
}

/// Simulates one story from submission until `after_promotion` Digg hours
/// after promotion, or until `upcoming_limit` if it is never promoted.
pub fn simulate_story(sp: &StoryParams, site: &SiteModel, opts: &SimOptions, seed: u64) -> Result<SimulatedStory> {
    sp.validate()?;
    site.validate()?;
    if let PromotionRule::Threshold(0) = opts.promotion {
        return Err(Error::domain("promotion threshold must be at least 1"));
    }
    if !(opts.refresh > 0.0 && opts.upcoming_limit >= 0.0 && opts.after_promotion >= 0.0) {
        return Err(Error::domain("simulation windows must be non-negative and refresh positive"));
    }
    let gp = &site.global;
    let users = gp.users.round();
    if !(users >= sp.s0 as f64 + 1.0 && users < u32::MAX as f64) {
        return Err(Error::domain(format!("population {users} cannot hold the submitter and {} fans", sp.s0)));
    }
    let users = users as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let first_nonfan = sp.s0 + 1;
    let non_fans = match opts.mode {
        SimMode::MeanField => NonFans::Count((users - first_nonfan) as u64),
        SimMode::Agent => {
            let unseen: Vec<u32> = (first_nonfan..users).collect();
            let mut slot = vec![NO_SLOT; users as usize];
            for (i, &u) in unseen.iter().enumerate() {
                slot[u as usize] = i as u32;
            }
            NonFans::Agents { unseen, slot }
        }
    };
    let mut pools = Pools {
        submitter_fans: (1..first_nonfan).collect(),
        other_fans: Vec::new(),
        non_fans,
        population: users,
        next_id: users,
    };

    let mut t_promotion = match opts.promotion {
        PromotionRule::Delay(d) if d <= opts.upcoming_limit => Some(d.max(0.0)),
        PromotionRule::Threshold(1) => Some(0.0),
        _ => None,
    };
    let end_time = |tp: Option<f64>| tp.map_or(opts.upcoming_limit, |p| p + opts.after_promotion);
    let mut t_end = end_time(t_promotion);

    let mut votes = vec![VoteEvent {
        voter: 0,
        wall_time: 0.0,
        time: 0.0,
        class: VoterClass::NonFan,
    }];
    let mut sources = vec![None];
    let mut t = 0.0;
    let w = gp.omega;
    let mut snapshot_times = opts.snapshots.clone();
    snapshot_times.sort_by(f64::total_cmp);
    let mut next_snapshot = 0;
    let mut snapshots = Vec::with_capacity(snapshot_times.len());

    while t < t_end {
        let phase = Phase::at(t, t_promotion);
        let mut window_end = (t + opts.refresh).min(t_end);
        if let Some(tp) = t_promotion {
            if t < tp {
                window_end = window_end.min(tp);
            }
        }
        let v = votes.len() as f64;
        let bound = VoterClass::ALL.map(|c| class_visibility(c, t, v, t_promotion, phase, site));
        let rates = VoterClass::ALL.map(|c| w * bound[c.index()] * pools.size(c) as f64);
        let total: f64 = rates.iter().sum();
        if total <= 0.0 {
            take_snapshots(window_end, &snapshot_times, &mut next_snapshot, &pools, &mut snapshots);
            t = window_end;
            continue;
        }
        let dt = Exp::new(total).expect("positive rate").sample(&mut rng);
        take_snapshots((t + dt).min(window_end), &snapshot_times, &mut next_snapshot, &pools, &mut snapshots);
        if t + dt >= window_end {
            t = window_end;
            continue;
        }
        t += dt;
        let mut pick = rng.random::<f64>() * total;
        let mut class = VoterClass::NonFan;
        for c in VoterClass::ALL {
            if pick < rates[c.index()] {
                class = c;
                break;
            }
            pick -= rates[c.index()];
        }
        if class == VoterClass::NonFan {
            let actual = class_visibility(class, t, v, t_promotion, phase, site);
            if rng.random::<f64>() * bound[class.index()] >= actual {
                continue;
            }
        }
        let (user, source) = pools.take(class, &mut rng);
        if rng.random::<f64>() >= sp.r(class) {
            continue;
        }
        votes.push(VoteEvent {
            voter: user as UserId,
            wall_time: t * 3600.0,
            time: t,
            class,
        });
        sources.push(source.map(|s| s as UserId));
        pools.recruit(user, gp.rho, &opts.fan_counts, &mut rng);
        if let PromotionRule::Threshold(k) = opts.promotion {
            if t_promotion.is_none() && votes.len() >= k as usize && t <= opts.upcoming_limit {
                t_promotion = Some(t);
                t_end = end_time(t_promotion);
            }
        }
    }

    take_snapshots(f64::INFINITY, &snapshot_times, &mut next_snapshot, &pools, &mut snapshots);
    let truth = StoryParams { t_promotion, ..*sp };
    Ok(SimulatedStory {
        record: StoryRecord {
            id: 0,
            submitter: 0,
            submitted_wall: 0.0,
            origin: 0.0,
            promotion_wall: t_promotion.map(|p| p * 3600.0),
            t_promotion,
            s0: sp.s0,
            votes,
        },
        truth,
        sources,
        pools: snapshots,
    })
}

/// Distribution of the submitter's fan count across a corpus.
#[derive(Debug, Clone, PartialEq)]
pub enum FanCountPrior {
    Fixed(u32),
    /// Drawn uniformly from these values.
    Choices(Vec<u32>),
}

/// Settings for a synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub site: SiteModel,
    /// Interestingness priors in class order (submitter fan, other fan, non-fan).
    pub priors: [LogNormal; 3],
    pub n_stories: usize,
    pub s0: FanCountPrior,
    pub story: SimOptions,
    /// Digg hours between consecutive submissions.
    pub spacing: f64,
    /// Wall time (Unix seconds) of the first submission; one Digg hour is
    /// written as one wall hour.
    pub epoch: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(site: SiteModel, priors: [LogNormal; 3], n_stories: usize, seed: u64) -> Self {
        Self {
            site,
            priors,
            n_stories,
            s0: FanCountPrior::Fixed(100),
            story: SimOptions::default(),
            spacing: 0.25,
            epoch: 1_230_000_000.0,
            seed,
        }
    }
}

/// Ground truth for one story, as written to the sidecar file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthRow {
    pub story_id: StoryId,
    pub params: StoryParams,
}

/// A labeled synthetic dataset with its generating parameters.
#[derive(Debug, Clone)]
pub struct SimulatedCorpus {
    pub stories: Vec<StoryRecord>,
    pub graph: FanGraph,
    pub truth: Vec<TruthRow>,
}

/// Seed for story `index` of a corpus.
pub fn story_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.random()
}

/// Draws per-story parameters from the priors, simulates every story
/// independently and assembles a dataset with globally unique user ids.
pub fn simulate_corpus(cfg: &SimConfig) -> Result<SimulatedCorpus> {
    if cfg.n_stories == 0 {
        return Err(Error::domain("a corpus needs at least one story"));
    }
    if let FanCountPrior::Choices(c) = &cfg.s0 {
        if c.is_empty() {
            return Err(Error::domain("fan-count choices are empty"));
        }
    }
    let users = cfg.site.global.users.round() as u64;
    let stride = 10u64.pow((users as f64 + 1.0).log10().ceil() as u32 + 1);

    let sims: Vec<SimulatedStory> = (0..cfg.n_stories)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(story_seed(cfg.seed, i as u64));
            let r = cfg.priors.map(|p| p.sample(&mut rng).min(1.0));
            let s0 = match &cfg.s0 {
                FanCountPrior::Fixed(s) => *s,
                FanCountPrior::Choices(c) => *c.choose(&mut rng).expect("non-empty"),
            };
            let sp = StoryParams {
                r_submitter_fan: r[0],
                r_other_fan: r[1],
                r_nonfan: r[2],
                s0,
                t_promotion: None,
            };
            simulate_story(&sp, &cfg.site, &cfg.story, rng.random())
        })
        .collect::<Result<_>>()?;

    let mut graph = FanGraph::new();
    let mut stories = Vec::with_capacity(sims.len());
    let mut truth = Vec::with_capacity(sims.len());
    for (i, sim) in sims.into_iter().enumerate() {
        let id = i as StoryId + 1;
        let base = id * stride;
        let origin = i as f64 * cfg.spacing;
        let to_wall = |t: f64| cfg.epoch + (origin + t) * 3600.0;
        for fan in 1..=sim.record.s0 as u64 {
            graph.add_edge(base + fan, base);
        }
        let mut record = sim.record;
        for (vote, source) in record.votes.iter_mut().zip(&sim.sources) {
            vote.voter += base;
            vote.wall_time = to_wall(vote.time);
            if let Some(s) = source {
                graph.add_edge(vote.voter, base + s);
            }
        }
        record.id = id;
        record.submitter = base;
        record.submitted_wall = to_wall(0.0);
        record.origin = origin;
        record.promotion_wall = record.t_promotion.map(to_wall);
        truth.push(TruthRow {
            story_id: id,
            params: sim.truth,
        });
        stories.push(record);
    }
    Ok(SimulatedCorpus { stories, graph, truth })
}

pub const TRUTH_HEADER: [&str; 6] = ["story_id", "r_s", "r_f", "r_n", "s0", "t_promotion"];

pub fn write_truth<W: Write>(out: W, rows: &[TruthRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRUTH_HEADER)?;
    for row in rows {
        let p = &row.params;
        w.write_record([
            row.story_id.to_string(),
            p.r_submitter_fan.to_string(),
            p.r_other_fan.to_string(),
            p.r_nonfan.to_string(),
            p.s0.to_string(),
            p.t_promotion.map(|t| t.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_truth<R: Read>(input: R, source: &str) -> Result<Vec<TruthRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let perr = |line: u64, message: String| Error::Parse {
        source_name: source.to_string(),
        line,
        message,
    };
    if rdr.headers()?.iter().ne(TRUTH_HEADER) {
        return Err(perr(1, format!("expected header `{}`", TRUTH_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| perr(line, format!("invalid `{}` value `{}`", TRUTH_HEADER[i], &rec[i])))
        };
        let t_promotion = if rec[5].is_empty() { None } else { Some(num(5)?) };
        out.push(TruthRow {
            story_id: rec[0]
                .parse()
                .map_err(|_| perr(line, format!("invalid story_id `{}`", &rec[0])))?,
            params: StoryParams {
                r_submitter_fan: num(1)?,
                r_other_fan: num(2)?,
                r_nonfan: num(3)?,
                s0: rec[4].parse().map_err(|_| perr(line, format!("invalid s0 `{}`", &rec[4])))?,
                t_promotion,
            },
        });
    }
    Ok(out)
}
