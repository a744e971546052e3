//! Vote logs, fan graphs, the Digg clock, voter-class labeling and corpus
//! statistics.

pub mod clock;
pub mod digg2009;
pub mod ingest;
pub mod labels;
pub mod records;
pub mod stats;

pub use clock::DiggClock;
pub use ingest::{assemble, ingest, write_dataset, ClockKind, Dataset, IngestReport};
pub use labels::label_votes;
pub use records::{FanGraph, RawVote, StoryId, StoryRecord, UserId, VoteEvent, VoteStream};
pub use stats::{corpus_stats, CorpusStats, StatsOptions};
