mod common;

use std::collections::BTreeSet;

use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use storyvotes::dist::{poisson_lognormal, DoubleParetoLognormal, LogNormal};
use storyvotes::estimation::popularity::{fit_front_curve, fit_upcoming_curve};
use storyvotes::estimation::{
    calibrate, estimate_active_users, estimate_cfan, estimate_rho, fit_site_visibility, fit_story_interest,
    ks_bootstrap, poisson_loglik, ActivityFit, CalibrateOptions, CfanMethod, Family, SiteFitOptions, Stage,
};
use storyvotes::model::{GlobalParams, SiteModel, VoterClass};
use storyvotes::simulator::{simulate_corpus, simulate_story, PromotionRule, SimConfig, SimMode, SimOptions};
use storyvotes::Error;

use common::{median, record, spaced, story, table_priors};

fn loglik_const(events: &[f64], rate: f64, t: f64) -> f64 {
    poisson_loglik(events, |_| rate, (0.0, t), &[]).unwrap().value
}

#[test]
fn constant_rate_fixture() {
    let events = spaced(0.0, 5.0, 10);
    assert_relative_eq!(loglik_const(&events, 2.0, 5.0), -10.0 + 10.0 * 2f64.ln(), epsilon = 1e-9);
    assert!((loglik_const(&events, 2.0, 5.0) - (-3.0685)).abs() < 1e-4);
}

#[test]
fn empty_stream_is_minus_the_integral() {
    let ll = poisson_loglik(&[], |t| 1.0 + t, (0.0, 2.0), &[]).unwrap();
    assert_relative_eq!(ll.value, -4.0, epsilon = 1e-9);
}

#[test]
fn visit_rate_and_interest_trade_off_when_fully_visible() {
    // The non-fan rate is ω·U·r·P; only the product is identified.
    let gp = GlobalParams::reference();
    let events = spaced(0.0, 6.0, 37);
    let rate = |omega: f64, r: f64| move |_t: f64| omega * gp.users * r * 1.0;
    let a = poisson_loglik(&events, rate(gp.omega, 0.002), (0.0, 6.0), &[]).unwrap().value;
    let b = poisson_loglik(&events, rate(2.0 * gp.omega, 0.001), (0.0, 6.0), &[]).unwrap().value;
    assert_relative_eq!(a, b, max_relative = 1e-12);
}

#[test]
fn active_user_examples() {
    let fit = |p_zero| ActivityFit {
        mu: -0.10,
        sigma: 2.43,
        p_zero,
        log_likelihood: 0.0,
    };
    let u = estimate_active_users(139_409, &fit(0.43)).unwrap();
    // p_zero is quoted to two digits, which moves U by up to u₊·0.005/0.57².
    assert!((u - 248_000.0).abs() < 3000.0 + 139_409.0 * 0.005 / 0.57f64.powi(2), "{u}");
    assert_relative_eq!(u, 244_577.0, epsilon = 1.0);
    assert_eq!(estimate_active_users(1000, &fit(0.0)).unwrap(), 1000.0);
    assert_eq!(estimate_active_users(1000, &fit(0.5)).unwrap(), 2000.0);
    assert!(estimate_active_users(1000, &fit(1.0)).is_err());
}

#[test]
fn link_density_examples() {
    let rho = estimate_rho(1_731_658, 258_218, 0.56, 248_000.0).unwrap();
    assert!((rho - 1.7e-5).abs() < 0.05e-5, "{rho}");
    assert_eq!(estimate_rho(0, 10, 0.5, 1000.0).unwrap(), 0.0);
    assert!(estimate_rho(10, 10, 1.0, 1000.0).is_err());
}

#[test]
fn other_fan_factor_edge_cases() {
    let gp = GlobalParams::reference();
    let of = VoterClass::OtherFan;
    let mut votes: Vec<(f64, VoterClass)> = spaced(4.0, 5.0, 6).into_iter().map(|t| (t, of)).collect();
    votes.extend(spaced(5.0, 6.0, 6).into_iter().map(|t| (t, of)));
    let even = record(1, 10, Some(5.0), &votes);
    assert_relative_eq!(estimate_cfan(&[even], CfanMethod::RawRates, &gp).unwrap(), 1.0);

    let after: Vec<_> = spaced(5.0, 6.0, 4).into_iter().map(|t| (t, of)).collect();
    let late = record(2, 10, Some(5.0), &after);
    assert_eq!(estimate_cfan(&[late], CfanMethod::RawRates, &gp).unwrap(), 0.0);

    let before: Vec<_> = spaced(4.0, 5.0, 4).into_iter().map(|t| (t, of)).collect();
    let early = record(3, 10, Some(5.0), &before);
    assert!(estimate_cfan(&[early], CfanMethod::RawRates, &gp).is_err());
}

fn front_samples(noise: f64, seed: u64) -> Vec<(f64, f64)> {
    let f = storyvotes::model::PopularityFitFront::reference();
    let d = DoubleParetoLognormal::new(f.a, f.b, f.nu, f.sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..400)
        .map(|i| {
            let v = 60.0 * (4000.0f64 / 60.0).powf(i as f64 / 399.0);
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            (v, f.s_daily * d.sf(v) * (noise * z).exp())
        })
        .collect()
}

fn within(got: f64, want: f64, rel: f64) -> bool {
    ((got - want) / want).abs() <= rel
}

#[test]
fn front_curve_exact_recovery() {
    let (fit, rms, _) = fit_front_curve(&front_samples(0.0, 1)).unwrap();
    let r = storyvotes::model::PopularityFitFront::reference();
    assert!(rms < 1e-4, "rms {rms}");
    for (got, want) in [(fit.s_daily, r.s_daily), (fit.a, r.a), (fit.b, r.b), (fit.nu, r.nu), (fit.sigma, r.sigma)] {
        assert!(within(got, want, 1e-3), "{fit:?}");
    }
}

#[test]
fn popularity_curves_recovered_from_noisy_samples() {
    let (fit, _, _) = fit_front_curve(&front_samples(0.05, 2)).unwrap();
    let r = storyvotes::model::PopularityFitFront::reference();
    for (got, want) in [(fit.s_daily, r.s_daily), (fit.a, r.a), (fit.b, r.b), (fit.nu, r.nu), (fit.sigma, r.sigma)] {
        assert!(within(got, want, 0.10), "{fit:?}");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let up: Vec<(f64, f64)> = (0..300)
        .map(|i| {
            let v = 101.0 + i as f64;
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            (v, (5.3 - 0.029 * v + 0.1 * z).exp())
        })
        .collect();
    let (fit, _, _) = fit_upcoming_curve(&up, 100.0).unwrap();
    assert!(within(fit.c_exp, 5.3, 0.10) && within(fit.d_exp, 0.029, 0.10), "{fit:?}");
}

#[test]
fn ks_bootstrap_rejects_at_the_nominal_rate() {
    let truth = LogNormal::new(-6.3, 0.6).unwrap();
    let trials = 500;
    let mut rejected = 0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
        let xs: Vec<f64> = (0..50).map(|_| truth.sample(&mut rng)).collect();
        let p = ks_bootstrap(&xs, Family::LogNormal, 200, trial).unwrap().p_value;
        if p < 0.05 {
            rejected += 1;
        }
    }
    let rate = rejected as f64 / trials as f64;
    assert!((rate - 0.05).abs() <= 0.02, "reject rate {rate}");
}

#[test]
fn silent_story_lands_on_the_prior_modes() {
    let priors = table_priors();
    let site = SiteModel::reference();
    let s = record(1, 20, None, &[]);
    let fit = fit_story_interest(&s, &site, Some(&priors), 0.01).unwrap();
    for class in VoterClass::ALL {
        let got = fit.params.r(class).ln();
        let want = priors[class.index()].mu_log;
        assert!((got - want).abs() < 0.05, "{class:?}: ln r = {got}, prior mode {want}");
    }
}

fn sim_stories(n: usize, r: [f64; 3], s0: u32, seed: u64) -> Vec<storyvotes::data::StoryRecord> {
    let site = SiteModel::reference();
    let opts = SimOptions {
        mode: SimMode::MeanField,
        promotion: PromotionRule::Threshold(40),
        ..Default::default()
    };
    (0..n)
        .map(|i| {
            let mut rec = simulate_story(&story(r, s0, None), &site, &opts, seed + i as u64).unwrap().record;
            rec.id = i as u64 + 1;
            rec
        })
        .filter(|r| r.t_promotion.is_some_and(|t| t <= 24.0))
        .collect()
}

#[test]
fn map_approaches_mle_as_priors_widen() {
    let site = SiteModel::reference();
    let stories = sim_stories(3, [0.05, 0.15, 0.004], 500, 40);
    let priors = |scale: f64| table_priors().map(|p| LogNormal::new(p.mu_log, p.sigma_log * scale).unwrap());
    for s in &stories {
        let upto = s.t_promotion.unwrap() + 6.0;
        let mle = fit_story_interest(s, &site, None, upto).unwrap();
        let gap = |scale: f64| {
            let map = fit_story_interest(s, &site, Some(&priors(scale)), upto).unwrap();
            VoterClass::ALL
                .iter()
                .map(|&c| (map.params.r(c).ln() - mle.params.r(c).ln()).abs())
                .fold(0.0, f64::max)
        };
        let (narrow, wide) = (gap(1.0), gap(100.0));
        assert!(wide < narrow && wide < 0.01, "story {}: gap {narrow} -> {wide}", s.id);
    }
}

#[test]
fn story_interest_recovered_from_a_day_of_votes() {
    let site = SiteModel::reference();
    let r = [0.05, 0.15, 0.004];
    let stories = sim_stories(100, r, 500, 7);
    assert!(stories.len() >= 90);
    let mut errs: [Vec<f64>; 3] = Default::default();
    for s in &stories {
        let fit = fit_story_interest(s, &site, None, s.t_promotion.unwrap() + 24.0).unwrap();
        for c in VoterClass::ALL {
            errs[c.index()].push((fit.params.r(c) - r[c.index()]).abs() / r[c.index()]);
        }
    }
    for c in VoterClass::ALL {
        let m = median(&mut errs[c.index()]);
        assert!(m < 0.20, "{c:?}: median relative error {m}");
    }
}

#[test]
fn map_and_mle_converge_with_more_votes() {
    let site = SiteModel::reference();
    let priors = table_priors();
    let stories = sim_stories(10, [0.05, 0.15, 0.004], 500, 90);
    let mean_gap = |hours: f64| {
        let mut total = 0.0;
        for s in &stories {
            let upto = s.t_promotion.unwrap() + hours;
            let mle = fit_story_interest(s, &site, None, upto).unwrap();
            let map = fit_story_interest(s, &site, Some(&priors), upto).unwrap();
            total += (map.params.r_nonfan.ln() - mle.params.r_nonfan.ln()).abs();
        }
        total / stories.len() as f64
    };
    let (short, long) = (mean_gap(0.5), mean_gap(24.0));
    assert!(long < short, "gap {short} -> {long}");
}

fn small_corpus(seed: u64) -> storyvotes::simulator::SimulatedCorpus {
    let mut cfg = SimConfig::new(SiteModel::reference(), table_priors(), 12, seed);
    cfg.s0 = storyvotes::simulator::FanCountPrior::Fixed(300);
    cfg.story.promotion = PromotionRule::Threshold(30);
    simulate_corpus(&cfg).unwrap()
}

#[test]
fn site_fit_trace_is_monotone_and_repeatable() {
    let corpus = small_corpus(11);
    let site = SiteModel::reference();
    let opts = SiteFitOptions::default();
    let a = fit_site_visibility(&corpus.stories, &site, &opts).unwrap();
    assert!(a.trace.windows(2).all(|w| w[1] >= w[0]), "trace not monotone");
    let b = fit_site_visibility(&corpus.stories, &site, &opts).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.surfing, b.surfing);
    assert_eq!(a.r_nonfan, b.r_nonfan);
}

#[test]
fn calibration_needs_two_promoted_stories() {
    let corpus = small_corpus(12);
    let one = &corpus.stories[..1];
    match calibrate(one, &corpus.graph, &CalibrateOptions::default()) {
        Err(Error::Domain(_)) => {}
        other => panic!("expected a domain error, got {other:?}"),
    }
}

#[test]
fn calibration_failure_names_the_stage() {
    // No fans anywhere: the submitter stage has nothing to fit.
    let nf = VoterClass::NonFan;
    let votes: Vec<_> = spaced(0.0, 20.0, 30).into_iter().map(|t| (t, nf)).collect();
    let stories = vec![record(1, 0, Some(5.0), &votes), record(2, 0, Some(6.0), &votes)];
    let opts = CalibrateOptions {
        keep: BTreeSet::from([Stage::Activity, Stage::Rho, Stage::Popularity]),
        ..Default::default()
    };
    let graph = storyvotes::data::FanGraph::new();
    match calibrate(&stories, &graph, &opts) {
        Err(e @ Error::Stage { stage, .. }) => {
            assert_eq!(stage, Stage::Submitter.name());
            assert!(e.to_string().starts_with("submitter stage failed"), "{e}");
        }
        other => panic!("expected a stage error, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn constant_rate_maximum_is_count_over_time(
        mut times in proptest::collection::vec(0.0f64..10.0, 1..60),
        t_extra in 0.0f64..5.0,
        step in 0.01f64..0.5,
    ) {
        times.sort_by(f64::total_cmp);
        let t = 10.0 + t_extra;
        let best = times.len() as f64 / t;
        let at_best = loglik_const(&times, best, t);
        prop_assert!(at_best >= loglik_const(&times, best * (1.0 + step), t));
        prop_assert!(at_best >= loglik_const(&times, best * (1.0 - step), t));
    }

    #[test]
    fn poisson_lognormal_mass_sums_to_one(mu in -1.0f64..1.0, sigma in 0.1f64..1.5) {
        let total: f64 = (0..5000u64).map(|k| poisson_lognormal::pmf(mu, sigma, k).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-6, "sum {total}");
    }

    #[test]
    fn active_users_undo_the_zero_fraction(u_plus in 1u64..1_000_000, p_zero in 0.0f64..0.95) {
        let fit = ActivityFit { mu: 0.0, sigma: 1.0, p_zero, log_likelihood: 0.0 };
        let u = estimate_active_users(u_plus, &fit).unwrap();
        prop_assert!((u * (1.0 - p_zero) - u_plus as f64).abs() <= 1e-9 * u);
    }

    #[test]
    fn link_density_is_inverse_in_active_users(
        links in 1u64..10_000_000,
        with_fans in 1u64..1_000_000,
        z in 0.0f64..0.99,
        users in 1.0f64..1e7,
    ) {
        let a = estimate_rho(links, with_fans, z, users).unwrap();
        let b = estimate_rho(links, with_fans, z, 2.0 * users).unwrap();
        prop_assert!((a - 2.0 * b).abs() <= 1e-12 * a);
    }
}
