//! Adapter for the public 2009 Digg release.
//!
//! * votes (`digg_votes*.csv`): `vote_date,voter_id,story_id`, with
//!   `vote_date` in Unix seconds.
//! * friends (`digg_friends.csv`): `mutual,friend_date,user_id,friend_id`.
//!   `user_id` lists `friend_id` as a friend, so `user_id` is the fan. A
//!   `mutual` flag of 1 adds the reverse link as well.
//!
//! The release carries no promotion times; those must come from a separate
//! promotions file. Files may or may not have a header row; the original
//! release quotes every field.

use std::io::Read;

use log::warn;

use super::records::{FanGraph, RawVote, StoryId, UserId};
use crate::error::{Error, Result};

fn parse_err(source: &str, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source.to_string(),
        line,
        message: message.into(),
    }
}

fn rows<R: Read>(input: R, source: &str, width: usize, first_col: &str) -> Result<Vec<(u64, Vec<String>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(source, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if line == 1 && rec.get(0) == Some(first_col) {
            continue;
        }
        if rec.len() != width {
            return Err(parse_err(source, line, format!("expected {width} fields, found {}", rec.len())));
        }
        out.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(raw: &str, name: &str, source: &str, line: u64) -> Result<T> {
    raw.parse()
        .map_err(|_| parse_err(source, line, format!("invalid `{name}` value `{raw}`")))
}

/// Reads a Digg-2009 vote file. Repeated `(story, voter)` pairs keep their
/// first occurrence; the number dropped is returned.
pub fn read_votes<R: Read>(input: R, source: &str) -> Result<(Vec<RawVote>, u64)> {
    let mut seen = std::collections::HashSet::new();
    let mut votes = Vec::new();
    let mut duplicates = 0;
    for (line, rec) in rows(input, source, 3, "vote_date")? {
        let wall_time: f64 = num(&rec[0], "vote_date", source, line)?;
        let voter: UserId = num(&rec[1], "voter_id", source, line)?;
        let story: StoryId = num(&rec[2], "story_id", source, line)?;
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

/// Reads a Digg-2009 friends file into a fan graph.
pub fn read_fan_graph<R: Read>(input: R, source: &str) -> Result<FanGraph> {
    let mut graph = FanGraph::new();
    for (line, rec) in rows(input, source, 4, "mutual")? {
        let mutual: u8 = num(&rec[0], "mutual", source, line)?;
        let user: UserId = num(&rec[2], "user_id", source, line)?;
        let friend: UserId = num(&rec[3], "friend_id", source, line)?;
        if user == friend {
            continue;
        }
        graph.add_edge(user, friend);
        if mutual == 1 {
            graph.add_edge(friend, user);
        }
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_quoted_votes() {
        let src = "\"1261090000\",\"17\",\"3\"\n\"1261090060\",\"18\",\"3\"\n";
        let (v, dup) = read_votes(src.as_bytes(), "digg_votes").unwrap();
        assert_eq!(dup, 0);
        assert_eq!(v[1], RawVote { story: 3, voter: 18, wall_time: 1261090060.0 });
    }

    #[test]
    fn mutual_links_go_both_ways() {
        let src = "mutual,friend_date,user_id,friend_id\n1,1200000000,5,6\n0,1200000000,7,5\n";
        let g = read_fan_graph(src.as_bytes(), "digg_friends").unwrap();
        assert!(g.follows(5, 6) && g.follows(6, 5));
        assert!(g.follows(7, 5) && !g.follows(5, 7));
        assert_eq!(g.fan_count(5), 2);
    }
}
