//! Canonical CSV layout:
//!
//! * votes: `story_id,voter_id,unix_time`
//! * friends: `fan_id,followee_id` (the fan follows the followee)
//! * promotions: `story_id,unix_promotion_time`
//!
//! Times are seconds since the Unix epoch and may carry a fractional part.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use log::warn;

use super::clock::DiggClock;
use super::labels::label_votes;
use super::records::{FanGraph, RawVote, StoryId, StoryRecord, UserId, VoteEvent};
use crate::error::{Error, Result};
use crate::model::VoterClass;

pub const VOTES_HEADER: [&str; 3] = ["story_id", "voter_id", "unix_time"];
pub const FRIENDS_HEADER: [&str; 2] = ["fan_id", "followee_id"];
pub const PROMOTIONS_HEADER: [&str; 2] = ["story_id", "unix_promotion_time"];

/// How wall time is turned into Digg time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClockKind {
    /// Rescale by the activity on promoted stories.
    #[default]
    Activity,
    /// One Digg hour per wall hour.
    Linear,
}

/// Totals gathered while reading a dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub stories: u64,
    pub promoted: u64,
    pub votes: u64,
    pub voters: u64,
    pub voters_without_fans: u64,
    pub fan_links: u64,
    pub users_with_fans: u64,
    pub duplicate_votes: u64,
    pub self_links: u64,
    pub orphan_promotions: u64,
    /// Stories dropped because a vote fell outside the Digg clock's range.
    pub out_of_clock: u64,
}

/// A fully prepared dataset: labeled stories, the fan graph and the clock
/// used to convert times.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub stories: Vec<StoryRecord>,
    pub graph: FanGraph,
    pub clock: DiggClock,
    pub report: IngestReport,
}

fn parse_err(source: &str, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source.to_string(),
        line,
        message: message.into(),
    }
}

fn reader<R: Read>(input: R, source: &str, header: &[&str]) -> Result<csv::Reader<R>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let got = rdr.headers().map_err(|e| parse_err(source, 1, e.to_string()))?;
    if got.iter().ne(header.iter().copied()) {
        return Err(parse_err(
            source,
            1,
            format!("expected header `{}`, found `{}`", header.join(","), got.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(rdr)
}

fn records<'a, R: Read>(
    rdr: &'a mut csv::Reader<R>,
    source: &str,
) -> impl Iterator<Item = Result<(u64, csv::StringRecord)>> + 'a {
    let source = source.to_string();
    rdr.records().map(move |rec| {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(&source, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        Ok((line, rec))
    })
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str, source: &str, line: u64) -> Result<T> {
    let raw = rec.get(i).ok_or_else(|| parse_err(source, line, format!("missing `{name}`")))?;
    raw.parse()
        .map_err(|_| parse_err(source, line, format!("invalid `{name}` value `{raw}`")))
}

fn time_field(rec: &csv::StringRecord, i: usize, name: &str, source: &str, line: u64) -> Result<f64> {
    let t: f64 = field(rec, i, name, source, line)?;
    if !t.is_finite() {
        return Err(parse_err(source, line, format!("`{name}` must be finite")));
    }
    Ok(t)
}

/// Reads a vote log. Repeated `(story, voter)` pairs are dropped with a
/// warning; the count of dropped rows is returned alongside the votes.
pub fn read_votes<R: Read>(input: R, source: &str) -> Result<(Vec<RawVote>, u64)> {
    let mut rdr = reader(input, source, &VOTES_HEADER)?;
    let mut seen = HashSet::new();
    let mut votes = Vec::new();
    let mut duplicates = 0;
    for row in records(&mut rdr, source) {
        let (line, rec) = row?;
        let story: StoryId = field(&rec, 0, "story_id", source, line)?;
        let voter: UserId = field(&rec, 1, "voter_id", source, line)?;
        let wall_time = time_field(&rec, 2, "unix_time", source, line)?;
        if !seen.insert((story, voter)) {
            warn!("{source}:{line}: voter {voter} already voted on story {story}; row ignored");
            duplicates += 1;
            continue;
        }
        votes.push(RawVote {
            story,
            voter,
            wall_time,
        });
    }
    Ok((votes, duplicates))
}

/// Reads a fan graph. Self-links are dropped with a warning and counted.
pub fn read_fan_graph<R: Read>(input: R, source: &str) -> Result<(FanGraph, u64)> {
    let mut rdr = reader(input, source, &FRIENDS_HEADER)?;
    let mut graph = FanGraph::new();
    let mut self_links = 0;
    for row in records(&mut rdr, source) {
        let (line, rec) = row?;
        let fan: UserId = field(&rec, 0, "fan_id", source, line)?;
        let followee: UserId = field(&rec, 1, "followee_id", source, line)?;
        if fan == followee {
            warn!("{source}:{line}: user {fan} listed as their own fan; row ignored");
            self_links += 1;
            continue;
        }
        graph.add_edge(fan, followee);
    }
    Ok((graph, self_links))
}

/// Reads promotion times. A story listed twice keeps its first time.
pub fn read_promotions<R: Read>(input: R, source: &str) -> Result<BTreeMap<StoryId, f64>> {
    let mut rdr = reader(input, source, &PROMOTIONS_HEADER)?;
    let mut out = BTreeMap::new();
    for row in records(&mut rdr, source) {
        let (line, rec) = row?;
        let story: StoryId = field(&rec, 0, "story_id", source, line)?;
        let t = time_field(&rec, 1, "unix_promotion_time", source, line)?;
        if out.contains_key(&story) {
            warn!("{source}:{line}: second promotion time for story {story}; row ignored");
            continue;
        }
        out.insert(story, t);
    }
    Ok(out)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Reads and prepares the three canonical files.
pub fn ingest(votes_path: &Path, friends_path: &Path, promotions_path: &Path, clock: ClockKind) -> Result<Dataset> {
    let (votes, duplicates) = read_votes(open(votes_path)?, &votes_path.display().to_string())?;
    let (graph, self_links) = read_fan_graph(open(friends_path)?, &friends_path.display().to_string())?;
    let promotions = read_promotions(open(promotions_path)?, &promotions_path.display().to_string())?;
    let mut data = assemble(votes, graph, &promotions, clock)?;
    data.report.duplicate_votes = duplicates;
    data.report.self_links = self_links;
    Ok(data)
}

/// Groups raw votes into labeled stories.
pub fn assemble(
    votes: Vec<RawVote>,
    graph: FanGraph,
    promotions: &BTreeMap<StoryId, f64>,
    clock: ClockKind,
) -> Result<Dataset> {
    let mut by_story: BTreeMap<StoryId, Vec<RawVote>> = BTreeMap::new();
    for v in votes {
        by_story.entry(v.story).or_default().push(v);
    }
    for list in by_story.values_mut() {
        list.sort_by(|a, b| a.wall_time.total_cmp(&b.wall_time));
    }
    let mut report = IngestReport::default();
    report.orphan_promotions = promotions.keys().filter(|id| !by_story.contains_key(id)).count() as u64;
    if report.orphan_promotions > 0 {
        warn!("{} promotion records refer to stories without votes", report.orphan_promotions);
    }

    let clock = match clock {
        ClockKind::Linear => {
            let origin = by_story
                .values()
                .flat_map(|l| l.iter().map(|v| v.wall_time))
                .fold(f64::INFINITY, f64::min);
            DiggClock::linear(if origin.is_finite() { origin } else { 0.0 })
        }
        ClockKind::Activity => {
            let walls: Vec<f64> = by_story
                .iter()
                .filter(|(id, _)| promotions.contains_key(id))
                .flat_map(|(_, l)| l.iter().map(|v| v.wall_time))
                .collect();
            DiggClock::from_activity(&walls)?
        }
    };

    let mut stories = Vec::with_capacity(by_story.len());
    'story: for (id, list) in by_story {
        let submitter = list[0].voter;
        let submitted_wall = list[0].wall_time;
        let origin = match clock.digg_time(submitted_wall) {
            Ok(t) => t,
            Err(_) => {
                report.out_of_clock += 1;
                continue;
            }
        };
        let mut events = Vec::with_capacity(list.len());
        for v in &list {
            let Ok(t) = clock.digg_time(v.wall_time) else {
                report.out_of_clock += 1;
                continue 'story;
            };
            events.push(VoteEvent {
                voter: v.voter,
                wall_time: v.wall_time,
                time: t - origin,
                class: VoterClass::NonFan,
            });
        }
        let (promotion_wall, t_promotion) = match promotions.get(&id) {
            Some(&w) if w >= submitted_wall => match clock.digg_time(w) {
                Ok(t) => (Some(w), Some(t - origin)),
                Err(_) => {
                    report.out_of_clock += 1;
                    continue 'story;
                }
            },
            Some(&w) => {
                warn!("story {id} promoted at {w}, before its first vote; treated as unpromoted");
                (None, None)
            }
            None => (None, None),
        };
        let mut story = StoryRecord {
            id,
            submitter,
            submitted_wall,
            origin,
            promotion_wall,
            t_promotion,
            s0: graph.fan_count(submitter),
            votes: events,
        };
        label_votes(&mut story, &graph);
        stories.push(story);
    }
    if report.out_of_clock > 0 {
        warn!("{} stories dropped: votes outside the Digg clock range", report.out_of_clock);
    }

    let mut voters = HashSet::new();
    for s in &stories {
        report.votes += s.votes.len() as u64;
        voters.extend(s.votes.iter().map(|v| v.voter));
    }
    report.stories = stories.len() as u64;
    report.promoted = stories.iter().filter(|s| s.is_promoted()).count() as u64;
    report.voters = voters.len() as u64;
    report.voters_without_fans = voters.iter().filter(|&&u| graph.fan_count(u) == 0).count() as u64;
    report.fan_links = graph.edge_count();
    report.users_with_fans = graph.users_with_fans();
    Ok(Dataset {
        stories,
        graph,
        clock,
        report,
    })
}

/// Votes cast by each user over the whole corpus, submitters included.
pub fn votes_per_user(stories: &[StoryRecord]) -> HashMap<UserId, u64> {
    let mut out = HashMap::new();
    for s in stories {
        for v in &s.votes {
            *out.entry(v.voter).or_insert(0) += 1;
        }
    }
    out
}

pub fn write_votes<W: Write>(out: W, stories: &[StoryRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(VOTES_HEADER)?;
    for s in stories {
        for v in &s.votes {
            w.write_record([s.id.to_string(), v.voter.to_string(), v.wall_time.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_fan_graph<W: Write>(out: W, graph: &FanGraph) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FRIENDS_HEADER)?;
    for (fan, followee) in graph.edges() {
        w.write_record([fan.to_string(), followee.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_promotions<W: Write>(out: W, stories: &[StoryRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROMOTIONS_HEADER)?;
    for s in stories {
        if let Some(p) = s.promotion_wall {
            w.write_record([s.id.to_string(), p.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// File names used by [`write_dataset`].
pub const VOTES_FILE: &str = "votes.csv";
pub const FRIENDS_FILE: &str = "friends.csv";
pub const PROMOTIONS_FILE: &str = "promotions.csv";

/// Writes `votes.csv`, `friends.csv` and `promotions.csv` into `dir`.
pub fn write_dataset(dir: &Path, stories: &[StoryRecord], graph: &FanGraph) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_votes(File::create(dir.join(VOTES_FILE))?, stories)?;
    write_fan_graph(File::create(dir.join(FRIENDS_FILE))?, graph)?;
    write_promotions(File::create(dir.join(PROMOTIONS_FILE))?, stories)?;
    Ok(())
}
