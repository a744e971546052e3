mod common;

use std::collections::HashSet;

use storyvotes::data::{label_votes, write_dataset};
use storyvotes::dist::LogNormal;
use storyvotes::estimation::{ks_bootstrap, Family};
use storyvotes::model::{SiteModel, VoterClass};
use storyvotes::simulator::{
    simulate_corpus, write_truth, FanCountPrior, PromotionRule, SimConfig, SimMode, SimulatedCorpus,
};

use common::{median, table_priors};

fn corpus(mode: SimMode, n: usize, seed: u64) -> SimulatedCorpus {
    let mut cfg = SimConfig::new(SiteModel::reference(), table_priors(), n, seed);
    cfg.story.mode = mode;
    cfg.s0 = FanCountPrior::Choices(vec![50, 200, 800]);
    simulate_corpus(&cfg).unwrap()
}

#[test]
fn same_config_same_bytes() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let c = corpus(SimMode::Agent, 6, 31);
        write_dataset(d.path(), &c.stories, &c.graph).unwrap();
        write_truth(std::fs::File::create(d.path().join("truth.csv")).unwrap(), &c.truth).unwrap();
    }
    for name in ["votes.csv", "friends.csv", "promotions.csv", "truth.csv"] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        assert!(a == b, "{name} differs between runs");
    }
}

#[test]
fn corpus_size_guard() {
    assert_eq!(corpus(SimMode::MeanField, 1, 2).stories.len(), 1);
    let cfg = SimConfig::new(SiteModel::reference(), table_priors(), 0, 2);
    assert!(simulate_corpus(&cfg).is_err());
}

#[test]
fn agent_stories_are_consistent() {
    let c = corpus(SimMode::Agent, 8, 5);
    for s in &c.stories {
        let mut seen = HashSet::new();
        assert!(s.votes.iter().all(|v| seen.insert(v.voter)), "story {} has a repeat voter", s.id);
        assert!(s.votes.windows(2).all(|w| w[0].time <= w[1].time));
        // Only the submitter's initial fans carry the submitter-fan label.
        for v in &s.votes {
            if v.class == VoterClass::SubmitterFan {
                assert!(c.graph.follows(v.voter, s.submitter));
            }
        }
        let mut relabeled = s.clone();
        label_votes(&mut relabeled, &c.graph);
        assert_eq!(relabeled.votes, s.votes);
        assert_eq!(s.total_counts().iter().sum::<u64>(), s.votes.len() as u64);
    }
}

#[test]
fn voting_speeds_up_at_promotion() {
    let c = corpus(SimMode::MeanField, 60, 8);
    let (mut before, mut after) = (0usize, 0usize);
    for s in &c.stories {
        let Some(tp) = s.t_promotion else { continue };
        if tp < 0.5 {
            continue;
        }
        before += s.votes.iter().filter(|v| v.time >= tp - 0.5 && v.time < tp).count();
        after += s.votes.iter().filter(|v| v.time > tp && v.time <= tp + 0.5).count();
    }
    assert!(after as f64 > 2.0 * before as f64, "{before} votes in the half hour before, {after} after");
}

#[test]
fn non_fans_outvote_other_fans_who_outvote_submitter_fans() {
    let mut cfg = SimConfig::new(SiteModel::reference(), table_priors(), 120, 13);
    cfg.s0 = FanCountPrior::Choices(vec![500, 1500, 3000]);
    cfg.story.promotion = PromotionRule::Threshold(40);
    let c = simulate_corpus(&cfg).unwrap();
    let mut counts: [Vec<f64>; 3] = Default::default();
    for s in c.stories.iter().filter(|s| s.t_promotion.is_some()) {
        let at = s.counts_at(s.t_promotion.unwrap() + 24.0);
        for i in 0..3 {
            counts[i].push(at[i] as f64);
        }
    }
    assert!(counts[0].len() >= 20);
    let [s, f, n] = counts.map(|mut v| median(&mut v));
    assert!(n > f && f > s, "medians: submitter fans {s}, other fans {f}, non-fans {n}");
}

#[test]
fn drawn_interest_follows_the_prior() {
    let prior = table_priors();
    let runs = 20;
    let mut accepted = 0;
    for run in 0..runs {
        let mut cfg = SimConfig::new(SiteModel::reference(), prior, 1000, 500 + run);
        // Only the parameter draws matter here.
        cfg.story.promotion = PromotionRule::Never;
        cfg.story.upcoming_limit = 0.0;
        let c = simulate_corpus(&cfg).unwrap();
        let r_n: Vec<f64> = c.truth.iter().map(|t| t.params.r_nonfan).collect();
        let fit = LogNormal::fit(&r_n).unwrap();
        assert!((fit.mu_log - prior[2].mu_log).abs() < 0.1);
        if ks_bootstrap(&r_n, Family::LogNormal, 200, run).unwrap().p_value > 0.05 {
            accepted += 1;
        }
    }
    assert!(accepted * 10 >= runs * 9, "{accepted} of {runs} runs accepted");
}
