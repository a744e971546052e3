//! End-to-end acceptance checks. Each prints one PASS/FAIL/SKIP line; the
//! process exits non-zero if any check fails.
//!
//! Pass check numbers as arguments to run a subset, e.g.
//! `cargo test -p storyvotes-validation --test acceptance -- 2 5`.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use storyvotes::data::{corpus_stats, ingest, ClockKind, StatsOptions, StoryRecord};
use storyvotes::dist::LogNormal;
use storyvotes::estimation::likelihood::constant_rate_mle;
use storyvotes::estimation::site::{fit_site_visibility, SiteFitOptions};
use storyvotes::estimation::{calibrate, estimate_cfan, fit_activity_mixture, poisson_loglik, CalibrateOptions, CfanMethod};
use storyvotes::model::{fraction_to_page, solve_trajectory, SiteModel, StateVector, StoryParams, SurfingParams};
use storyvotes::numerics::optim::brent_minimize;
use storyvotes::prediction::{
    confidence_interval_with, evaluate_points, predict_with, reconstruct_state, spearman, PointForecast, PoolSource,
    PredictOptions,
};
use storyvotes::simulator::{
    simulate_corpus, simulate_story, story_seed, FanCountPrior, PromotionRule, SimConfig, SimMode, SimOptions,
    SimulatedCorpus,
};
use storyvotes::model::VoterClass;
use storyvotes_validation::{mean_sd, median, rel_err, Report, Status};

type Check = Result<(Status, String), String>;

const CLASS_NAMES: [&str; 3] = ["submitter fans", "other fans", "non-fans"];

fn table_priors() -> [LogNormal; 3] {
    [
        LogNormal::new(-3.5, 0.8).unwrap(),
        LogNormal::new(-2.3, 0.3).unwrap(),
        LogNormal::new(-6.3, 0.6).unwrap(),
    ]
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

fn ig_density(x: f64, mu: f64, lambda: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (lambda / (2.0 * PI * x.powi(3))).sqrt() * (-lambda * (x - mu).powi(2) / (2.0 * mu * mu * x)).exp()
}

/// Upper tail `P(X > depth)` of the inverse Gaussian, as one minus the
/// quadrature of the density over `[0, depth]`.
fn ig_tail(depth: f64, mu: f64, lambda: f64) -> f64 {
    if depth <= 0.0 {
        return 1.0;
    }
    1.0 - simpson(|x| ig_density(x, mu, lambda), 0.0, depth, 200_000)
}

fn surfing_law() -> Check {
    let mut worst = (0.0f64, 0.0, 0.0, 0.0);
    let mut points = 0;
    for &mu in &[0.5, 0.92, 1.5, 3.0] {
        for &lambda in &[0.3, 0.9, 2.0, 5.0] {
            let sp = SurfingParams::new(mu, lambda).map_err(err)?;
            for &m in &[1.0, 1.5, 2.0, 5.0, 10.0] {
                let d = (fraction_to_page(m, sp).map_err(err)? - ig_tail(m - 1.0, mu, lambda)).abs();
                if d > worst.0 {
                    worst = (d, mu, lambda, m);
                }
                points += 1;
            }
        }
    }
    let (d, mu, lambda, m) = worst;
    Ok((
        Status::from_bool(d <= 1e-6),
        format!("max |F − quadrature| = {d:.2e} over {points} points (at μ={mu}, λ={lambda}, m={m}); tolerance 1e-6"),
    ))
}

fn mean_field_consistency() -> Check {
    let site = SiteModel::reference();
    let priors = table_priors();
    let r = [priors[0].mu_log.exp(), priors[1].mu_log.exp(), priors[2].mu_log.exp()];
    let (s0, tp, runs) = (2000u32, 4.0, 500u64);
    let params = |t_promotion| StoryParams {
        r_submitter_fan: r[0],
        r_other_fan: r[1],
        r_nonfan: r[2],
        s0,
        t_promotion,
    };
    let opts = SimOptions {
        mode: SimMode::Agent,
        promotion: PromotionRule::Delay(tp),
        after_promotion: 24.0 - tp,
        ..Default::default()
    };
    let checkpoints: Vec<f64> = (1..=10).map(|i| 2.4 * i as f64).collect();
    let mut counts = vec![[Vec::new(), Vec::new(), Vec::new()]; checkpoints.len()];
    for run in 0..runs {
        let sim = simulate_story(&params(None), &site, &opts, story_seed(20090604, run)).map_err(err)?;
        for (k, &t) in checkpoints.iter().enumerate() {
            let c = sim.record.counts_at(t);
            for i in 0..3 {
                counts[k][i].push(c[i] as f64);
            }
        }
    }
    let traj = solve_trajectory(
        &StateVector::initial(s0, site.global.users),
        0.0,
        24.0,
        &checkpoints,
        &params(Some(tp)),
        &site,
    )
    .map_err(err)?;
    let mut worst = (0.0f64, 0.0, 0);
    for (k, (t, state)) in traj.points.iter().enumerate() {
        let ode = [state.v_s, state.v_f, state.v_n];
        for i in 0..3 {
            let (mean, sd) = mean_sd(&counts[k][i]);
            let se = sd / (runs as f64).sqrt();
            let z = if se > 0.0 {
                (mean - ode[i]) / se
            } else if mean == ode[i] {
                0.0
            } else {
                f64::INFINITY
            };
            if z.abs() > worst.0.abs() {
                worst = (z, *t, i);
            }
        }
    }
    let (z, t, i) = worst;
    Ok((
        Status::from_bool(z.abs() <= 3.0),
        format!(
            "{runs} agent runs vs rate equations at 10 checkpoints: max |z| = {:.2} ({}, t = {t:.1} h); limit 3",
            z.abs(),
            CLASS_NAMES[i]
        ),
    ))
}

fn likelihood_sanity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20090605);
    let mut mle_worst = 0.0f64;
    let mut ll_worst = 0.0f64;
    for _ in 0..20 {
        let v: f64 = rng.random_range(0.01..50.0);
        let t_end: f64 = rng.random_range(0.1..48.0);
        let n = Poisson::new(v * t_end).map_err(err)?.sample(&mut rng) as usize;
        let mut events: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..t_end)).collect();
        events.sort_by(f64::total_cmp);

        let ll = poisson_loglik(&events, |_| v, (0.0, t_end), &[]).map_err(err)?.value;
        let exact = -v * t_end + n as f64 * v.ln();
        ll_worst = ll_worst.max((ll - exact).abs() / exact.abs().max(1.0));

        if n > 0 {
            let closed = constant_rate_mle(n, t_end).map_err(err)?;
            let want = n as f64 / t_end;
            // Maximize the evaluated log-likelihood over ln v as well.
            let (best, _) = brent_minimize(
                |lv| -poisson_loglik(&events, |_| lv.exp(), (0.0, t_end), &[]).unwrap().value,
                want.ln() - 5.0,
                want.ln() + 5.0,
                1e-12,
                500,
            );
            mle_worst = mle_worst.max(rel_err(closed, want)).max(rel_err(best.exp(), want));
        }
    }
    Ok((
        Status::from_bool(mle_worst <= 1e-6 && ll_worst <= 1e-9),
        format!(
            "constant-rate MLE vs n/T: max rel err {mle_worst:.1e} (limit 1e-6); \
             log-likelihood vs −vT + n ln v over 20 fixtures: max rel err {ll_worst:.1e}"
        ),
    ))
}

fn acceptance_corpus(n: usize, seed: u64) -> Result<SimulatedCorpus, String> {
    let mut cfg = SimConfig::new(SiteModel::reference(), table_priors(), n, seed);
    cfg.story.mode = SimMode::Agent;
    cfg.story.promotion = PromotionRule::Threshold(60);
    cfg.s0 = FanCountPrior::Choices(vec![2000, 3000, 4000]);
    simulate_corpus(&cfg).map_err(err)
}

/// The first `n` stories promoted within a day of submission.
fn promoted(corpus: &SimulatedCorpus, n: usize) -> Result<Vec<StoryRecord>, String> {
    let out: Vec<StoryRecord> = corpus
        .stories
        .iter()
        .filter(|s| s.t_promotion.is_some_and(|tp| tp <= 24.0))
        .take(n)
        .cloned()
        .collect();
    if out.len() < n {
        return Err(format!("only {} of {} simulated stories were promoted", out.len(), corpus.stories.len()));
    }
    Ok(out)
}

fn estimator_recovery() -> Check {
    let corpus = acceptance_corpus(150, 20090601)?;
    let stories = promoted(&corpus, 100)?;
    let site = SiteModel::reference();
    let gp = site.global;
    let fit = fit_site_visibility(&stories, &site, &SiteFitOptions::default()).map_err(err)?;
    let mut fitted = gp;
    fitted.surfing = fit.surfing;
    fitted.p_other = fit.p_other;
    let c_f = estimate_cfan(&stories, CfanMethod::PoolAdjusted, &fitted).map_err(err)?;

    let truth: HashMap<u64, f64> = corpus.truth.iter().map(|t| (t.story_id, t.params.r_nonfan)).collect();
    let r_errs: Vec<f64> = fit.r_nonfan.iter().map(|e| rel_err(e.r, truth[&e.story])).collect();
    let r_med = median(&r_errs);

    let site_errs = [
        ("μ", fit.surfing.mu, gp.surfing.mu),
        ("λ", fit.surfing.lambda, gp.surfing.lambda),
        ("P_other", fit.p_other, gp.p_other),
        ("c_F", c_f, gp.c_other_fan),
    ];
    let ok = site_errs.iter().all(|(_, got, want)| rel_err(*got, *want) <= 0.15) && r_med < 0.20;
    let parts: Vec<String> = site_errs
        .iter()
        .map(|(name, got, want)| format!("{name} {got:.4} ({:+.1}%)", 100.0 * (got - want) / want))
        .collect();
    Ok((
        Status::from_bool(ok),
        format!(
            "{}; median r_N rel err {:.1}% (limits 15% and 20%)",
            parts.join(", "),
            100.0 * r_med
        ),
    ))
}

fn activity_recovery() -> Check {
    let (mu, sigma) = (-0.10, 2.43);
    let normal = Normal::<f64>::new(mu, sigma).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(20090606);
    let mut hist = BTreeMap::new();
    for _ in 0..100_000 {
        let mean: f64 = normal.sample(&mut rng);
        let mean = mean.exp();
        let k = Poisson::new(mean).map_err(err)?.sample(&mut rng) as u64;
        if k > 0 {
            *hist.entry(k).or_insert(0u64) += 1;
        }
    }
    let fit = fit_activity_mixture(&hist).map_err(err)?;
    let ok = (fit.mu - mu).abs() <= 0.1 && (fit.sigma - sigma).abs() <= 0.05 && (fit.p_zero - 0.43).abs() <= 0.02;
    Ok((
        Status::from_bool(ok),
        format!(
            "μ {:.3} (±0.1 of {mu}), σ {:.3} (±0.05 of {sigma}), p_zero {:.3} (0.43 ± 0.02)",
            fit.mu, fit.sigma, fit.p_zero
        ),
    ))
}

const OFFSETS: [f64; 4] = [0.0, 2.0, 4.0, 6.0];

/// Median relative 24-hour error per offset and class.
fn prediction_errors(stories: &[StoryRecord], opts: &PredictOptions) -> Result<[[f64; 3]; 4], String> {
    let site = SiteModel::reference();
    let priors = table_priors();
    let mut pairs = Vec::new();
    for s in stories {
        let tp = s.t_promotion.expect("promoted");
        let actual = s.counts_at(tp + 24.0).map(|c| c as f64);
        for off in OFFSETS {
            let f = predict_with(s, tp + off, tp + 24.0, &site, Some(&priors), opts)
                .map_err(|e| format!("story {}: {e}", s.id))?;
            pairs.push((PointForecast::from(&f), actual));
        }
    }
    let report = evaluate_points(&pairs).map_err(err)?;
    let mut out = [[0.0; 3]; 4];
    for (k, off) in OFFSETS.iter().enumerate() {
        for c in VoterClass::ALL {
            out[k][c.index()] = report.row(*off, c).ok_or("missing metric row")?.median_rel_error;
        }
    }
    Ok(out)
}

fn format_errors(e: &[[f64; 3]; 4]) -> String {
    (0..3)
        .map(|c| {
            let xs: Vec<String> = e.iter().map(|row| format!("{:.3}", row[c])).collect();
            format!("{} {}", CLASS_NAMES[c], xs.join(" → "))
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn prediction_pattern(notes: &mut Vec<String>) -> Check {
    let corpus = acceptance_corpus(150, 20090602)?;
    let stories = promoted(&corpus, 100)?;
    let e = prediction_errors(&stories, &PredictOptions::default())?;
    let decreasing = |c: usize| e.windows(2).all(|w| w[1][c] < w[0][c]);
    let ok = decreasing(0) && decreasing(2) && e[0][1] > e[0][2];

    let model_pools = PredictOptions {
        pools: PoolSource::ModelTrajectory,
        ..Default::default()
    };
    let alt = prediction_errors(&stories, &model_pools)?;
    notes.push(format!("pools from the model trajectory: {}", format_errors(&alt)));
    Ok((
        Status::from_bool(ok),
        format!("median rel error at made_at 0/2/4/6 h after promotion: {}", format_errors(&e)),
    ))
}

struct Calibration {
    coverage: [f64; 3],
    spearman: [Option<f64>; 3],
}

fn interval_calibration_with(stories: &[StoryRecord], opts: &PredictOptions) -> Result<Calibration, String> {
    let site = SiteModel::reference();
    let priors = table_priors();
    let mut covered = [0usize; 3];
    let mut widths: [Vec<f64>; 3] = Default::default();
    let mut errors: [Vec<f64>; 3] = Default::default();
    for s in stories {
        let tp = s.t_promotion.expect("promoted");
        let actual = s.counts_at(tp + 24.0).map(|c| c as f64);
        let seed = story_seed(20090603, s.id);
        let f = confidence_interval_with(s, tp, tp + 24.0, 0.95, 1000, seed, &site, Some(&priors), opts)
            .map_err(|e| format!("story {}: {e}", s.id))?;
        let iv = f.interval.ok_or("no interval")?;
        for c in 0..3 {
            let (lo, hi) = iv.bounds[c];
            covered[c] += (lo <= actual[c] && actual[c] <= hi) as usize;
            widths[c].push(hi - lo);
            errors[c].push((f.predicted[c] - actual[c]).abs());
        }
    }
    let n = stories.len() as f64;
    Ok(Calibration {
        coverage: covered.map(|k| k as f64 / n),
        spearman: [0, 1, 2].map(|c| spearman(&widths[c], &errors[c])),
    })
}

fn format_calibration(c: &Calibration) -> String {
    let rho = |r: Option<f64>| r.map_or("n/a".to_string(), |r| format!("{r:.2}"));
    format!(
        "coverage {:.3} / {:.3} / {:.3}, width-error Spearman {} / {} / {}",
        c.coverage[0],
        c.coverage[1],
        c.coverage[2],
        rho(c.spearman[0]),
        rho(c.spearman[1]),
        rho(c.spearman[2])
    )
}

fn interval_calibration(notes: &mut Vec<String>) -> Check {
    let corpus = acceptance_corpus(300, 20090603)?;
    let stories = promoted(&corpus, 200)?;
    let base = interval_calibration_with(&stories, &PredictOptions::default())?;
    let ok = base.coverage.iter().all(|c| (0.90..=0.98).contains(c))
        && base.spearman.iter().all(|r| r.is_some_and(|r| r > 0.0));
    let variants = [
        ("with vote noise", PoolSource::VoteRates, true),
        ("pools from the model trajectory", PoolSource::ModelTrajectory, false),
        ("model-trajectory pools with vote noise", PoolSource::ModelTrajectory, true),
    ];
    for (name, pools, vote_noise) in variants {
        let c = interval_calibration_with(&stories, &PredictOptions { pools, vote_noise })?;
        notes.push(format!("{name}: {}", format_calibration(&c)));
    }
    Ok((
        Status::from_bool(ok),
        format!(
            "{} stories, 95% intervals, classes S/F/N: {} (need coverage in [0.90, 0.98] and positive Spearman)",
            stories.len(),
            format_calibration(&base)
        ),
    ))
}

/// Directory holding `votes.csv`, `friends.csv` and `promotions.csv` in the
/// public dataset layout.
fn dataset_dir() -> Option<PathBuf> {
    let dir = PathBuf::from(std::env::var_os("STORYVOTES_DATASET")?);
    ["votes.csv", "friends.csv", "promotions.csv"]
        .iter()
        .all(|f| dir.join(f).is_file())
        .then_some(dir)
}

fn real_data() -> Check {
    let Some(dir) = dataset_dir() else {
        return Ok((
            Status::Skip,
            "set STORYVOTES_DATASET to a directory with votes.csv, friends.csv and promotions.csv".to_string(),
        ));
    };
    let data = ingest(
        &dir.join("votes.csv"),
        &dir.join("friends.csv"),
        &dir.join("promotions.csv"),
        ClockKind::Activity,
    )
    .map_err(err)?;
    let opts = CalibrateOptions {
        max_stories: Some(100),
        ..Default::default()
    };
    let cal = calibrate(&data.stories, &data.graph, &opts).map_err(err)?;
    let g = cal.site.global;
    let targets = [
        ("ω", g.omega, 0.16, 0.01),
        ("μ", g.surfing.mu, 0.92, 0.04),
        ("λ", g.surfing.lambda, 0.9, 0.1),
        ("P_other", g.p_other, 0.05, 0.01),
        ("c_S", g.c_submitter_fan, 0.57, 0.03),
        ("c_F", g.c_other_fan, 0.10, 0.01),
        ("c_N", g.c_nonfan, 0.11, 0.01),
    ];
    let mut ok = targets.iter().all(|(_, got, want, unc)| (got - want).abs() <= 2.0 * unc);
    let corr = corpus_stats(&data.stories, &StatsOptions::default()).correlations;
    let pairs = [
        ("S-F", corr.submitter_other, 0.09),
        ("S-N", corr.submitter_nonfan, 0.05),
        ("F-N", corr.other_nonfan, 0.90),
    ];
    ok &= pairs.iter().all(|(_, got, want)| got.is_some_and(|g| (g - want).abs() <= 0.05));
    let mut parts: Vec<String> = targets.iter().map(|(n, got, want, _)| format!("{n} {got:.3} (ref {want})")).collect();
    parts.extend(
        pairs
            .iter()
            .map(|(n, got, want)| format!("corr {n} {} (ref {want})", got.map_or("n/a".into(), |g| format!("{g:.2}")))),
    );
    Ok((Status::from_bool(ok), parts.join(", ")))
}

fn pool_reconstruction() -> Check {
    let site = SiteModel::reference();
    let (tp, at) = (3.0, 5.0);
    let opts = SimOptions {
        mode: SimMode::MeanField,
        promotion: PromotionRule::Delay(tp),
        snapshots: vec![at],
        ..Default::default()
    };
    let sp = StoryParams {
        r_submitter_fan: 0.1,
        r_other_fan: 0.15,
        r_nonfan: 0.006,
        s0: 2000,
        t_promotion: None,
    };
    let mut errs: [Vec<f64>; 3] = Default::default();
    for seed in 100..200 {
        let sim = simulate_story(&sp, &site, &opts, seed).map_err(err)?;
        let rec = reconstruct_state(&sim.record, at, &sim.truth, &site).map_err(err)?;
        let (_, truth) = sim.pools[0];
        let got = [rec.state.s, rec.state.f, rec.state.n];
        for i in 0..3 {
            errs[i].push(rel_err(got[i], truth[i] as f64));
        }
    }
    let med = errs.map(|e| median(&e));
    Ok((
        Status::from_bool(med.iter().all(|&m| m < 0.25)),
        format!(
            "median rel error of pools rebuilt 2 h after promotion, 100 stories: S {:.3}, F {:.3}, N {:.3} (limit 0.25)",
            med[0], med[1], med[2]
        ),
    ))
}

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |k: u32| selected.is_empty() || selected.contains(&k);
    let mut report = Report::new();
    if wanted(1) {
        report.run("1 surfing law vs quadrature", |_| surfing_law());
    }
    if wanted(2) {
        report.run("2 agent simulations vs rate equations", |_| mean_field_consistency());
    }
    if wanted(3) {
        report.run("3 likelihood sanity", |_| likelihood_sanity());
    }
    if wanted(4) {
        report.run("4 site estimator recovery", |_| estimator_recovery());
    }
    if wanted(5) {
        report.run("5 activity mixture recovery", |_| activity_recovery());
    }
    if wanted(6) {
        report.run("6 prediction error pattern", prediction_pattern);
    }
    if wanted(7) {
        report.run("7 confidence interval calibration", interval_calibration);
    }
    if wanted(8) {
        report.run("8 real dataset calibration", |_| real_data());
    }
    if wanted(9) {
        report.run("9 state reconstruction vs simulated pools", |_| pool_reconstruction());
    }
    println!("acceptance: {}", report.summary());
    if report.count(Status::Fail) > 0 {
        std::process::exit(1);
    }
}
