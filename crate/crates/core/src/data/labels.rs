use std::collections::HashSet;

use super::records::{FanGraph, StoryRecord, UserId};
use crate::model::VoterClass;

/// Class of a voter given the submitter and the set of earlier voters.
/// Following the submitter takes precedence over following another voter.
pub fn classify(voter: UserId, submitter: UserId, earlier: &HashSet<UserId>, graph: &FanGraph) -> VoterClass {
    if graph.follows(voter, submitter) {
        VoterClass::SubmitterFan
    } else if graph.followees(voter).any(|u| earlier.contains(&u)) {
        VoterClass::OtherFan
    } else {
        VoterClass::NonFan
    }
}

/// Labels every vote of a time-ordered story. The first vote is the
/// submitter's and counts as a non-fan vote.
pub fn label_votes(story: &mut StoryRecord, graph: &FanGraph) {
    let mut earlier = HashSet::with_capacity(story.votes.len());
    for (i, vote) in story.votes.iter_mut().enumerate() {
        vote.class = if i == 0 {
            VoterClass::NonFan
        } else {
            classify(vote.voter, story.submitter, &earlier, graph)
        };
        earlier.insert(vote.voter);
    }
}
