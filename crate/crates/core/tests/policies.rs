use approx::assert_abs_diff_eq;
use cascade_bandits_core::cascade::top_k;
use cascade_bandits_core::linalg::{dot, norm};
use cascade_bandits_core::policies::{
    bayes_ucb_policy, cascade_klucb_policy, cascade_linucb_policy, cascade_ucb1_policy, default_delta, glmts_policy,
    gts_policy, kl_bernoulli, kl_ucb_index, lints_policy, newton_glmts_policy, ts_beta_policy, ucb1_index, BayesUcb,
    ContextualConfig, LinTs,
};
use cascade_bandits_core::posterior::{BetaItemPosterior, EllipsoidState};
use cascade_bandits_core::{
    kappa_min, sigmoid, simulate_cascade_round, FeatureMatrix, Feedback, LinkFunction, Policy, RankedAction,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// χ² quantile at 0.999 with 9 degrees of freedom.
const CHI2_9DF_999: f64 = 27.877;

fn unit_ball_row(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = norm(&v).max(1.0);
    v.iter().map(|x| x / n).collect()
}

fn random_context(l: usize, d: usize, rng: &mut impl Rng) -> FeatureMatrix {
    FeatureMatrix::from_rows((0..l).map(|_| unit_ball_row(d, rng)).collect()).unwrap()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    norm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
}

fn chi_square_uniform(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let e = n as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
}

/// Counts of the first-ranked item over repeated selections in the prior state.
fn first_position_counts(policy: &mut dyn Policy, l: usize, draws: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut counts = vec![0u64; l];
    for _ in 0..draws {
        counts[policy.select(None, rng).unwrap().items()[0]] += 1;
    }
    counts
}

/// `P(Z > z)` for a standard normal by Simpson's rule on `[z, 12]`.
fn normal_upper_tail(z: f64) -> f64 {
    let n = 100_000;
    let h = (12.0 - z) / n as f64;
    let f = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = f(z) + f(12.0);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(z + i as f64 * h);
    }
    s * h / 3.0
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

#[test]
fn gts_first_round_is_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut p = gts_policy(10, 3, 0.0, 1.0, 0.25).unwrap();
    let counts = first_position_counts(&mut p, 10, 10_000, &mut rng);
    let chi2 = chi_square_uniform(&counts);
    assert!(chi2 < CHI2_9DF_999, "{chi2}");
}

#[test]
fn gts_concentrates_on_a_well_observed_item() {
    let (l, k) = (5usize, 3usize);
    let mut p = gts_policy(l, k, 0.0, 1.0, 0.25).unwrap();
    p.posterior_mut().set_stats(0, 1_000_000, 900_000.0);
    assert!(p.posterior().variance(0) < 1e-6);

    // item 0 sits at 0.9 up to 1e-3; it drops out only if K others exceed it
    let q = normal_upper_tail(0.9);
    assert_abs_diff_eq!(q, 0.184_060, epsilon = 1e-5);
    let others = (l - 1) as u64;
    let expected: f64 = (0..k as u64)
        .map(|j| binomial(others, j) * q.powi(j as i32) * (1.0 - q).powi((others - j) as i32))
        .sum();

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 20_000;
    let hits = (0..n)
        .filter(|_| p.select(None, &mut rng).unwrap().items().contains(&0))
        .count();
    let freq = hits as f64 / n as f64;
    let se = (expected * (1.0 - expected) / n as f64).sqrt();
    assert!((freq - expected).abs() < 4.0 * se, "{freq} vs {expected}");
    assert!(freq >= 0.8);
}

#[test]
fn lints_recovers_a_noiseless_parameter() {
    let theta_star = [0.5, -0.3, 0.2];
    let (l, k, d, rounds) = (10, 3, 3, 500);
    let mut p = lints_policy(d, k, 1e-4, 1.0, 0.25, default_delta(rounds)).unwrap();
    assert_eq!(p.ellipsoid().theta_hat(), &[0.0; 3]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..rounds {
        let ctx = random_context(l, d, &mut rng);
        let a = p.select(Some(&ctx), &mut rng).unwrap();
        let values = a.items().iter().map(|&i| dot(ctx.row(i), &theta_star)).collect();
        p.update(&a, &Feedback::new(values, k).unwrap()).unwrap();
    }
    let err = dist(p.ellipsoid().theta_hat(), &theta_star);
    assert!(err <= 0.05, "{err}");
}

#[test]
fn lints_with_zero_scale_is_greedy() {
    let mut cfg = ContextualConfig::new(3, 2, 1.0, 1.0, 0.25, 0.01);
    cfg.scale_override = Some(0.0);
    let mut p = LinTs::new(cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ctx = random_context(6, 3, &mut rng);
    // θ̂ = 0 ties every item, broken by index
    assert_eq!(p.select(Some(&ctx), &mut rng).unwrap().items(), &[0, 1]);
    for _ in 0..30 {
        let ctx = random_context(6, 3, &mut rng);
        let a = p.select(Some(&ctx), &mut rng).unwrap();
        assert_eq!(a.items(), top_k(&ctx.scores(p.ellipsoid().theta_hat()), 2).as_slice());
        let values = vec![rng.random::<f64>(), rng.random::<f64>()];
        p.update(&a, &Feedback::new(values, 2).unwrap()).unwrap();
    }
}

fn run_glmts_logistic(rounds: usize, seed: u64) -> (cascade_bandits_core::policies::GlmTs, Vec<f64>) {
    let theta_star = [0.6, -0.5, 0.3];
    let (l, k, d) = (10, 3, 3);
    let mut p = glmts_policy(d, k, 1.0, 1.0, 0.25, default_delta(2000), LinkFunction::Sigmoid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = Vec::new();
    for _ in 0..rounds {
        let ctx = random_context(l, d, &mut rng);
        let means: Vec<f64> = ctx.scores(&theta_star).into_iter().map(sigmoid).collect();
        let a = p.select(Some(&ctx), &mut rng).unwrap();
        let fb = simulate_cascade_round(&a, &means, &mut rng).unwrap();
        p.update(&a, &fb).unwrap();
        errors.push(dist(p.theta_hat(), &theta_star));
    }
    (p, errors)
}

#[test]
fn glmts_estimate_is_consistent() {
    let (_, errors) = run_glmts_logistic(2000, 5);
    let last = errors[1999];
    assert!(last <= 0.2, "{last}");
    assert!(last < errors[99]);
    assert!(errors[999] < errors[99]);
}

#[test]
fn glmts_first_round_state() {
    let (d, lambda, s, sigma_sq, delta) = (3, 1.0, 1.0, 0.25, 0.01);
    let p = glmts_policy(d, 2, lambda, s, sigma_sq, delta, LinkFunction::Sigmoid).unwrap();
    assert_eq!(p.theta_hat(), &[0.0; 3]);
    assert_eq!(p.gram().gram().diagonal(), vec![lambda; 3]);
    // β₁ with δ₁ = δ/2, divided by κ = μ̇(S)
    let d_half = d as f64 / 2.0;
    let ratio = (lambda + 1.0f64).powf(d_half) * lambda.powf(-d_half) / (delta / 2.0);
    let beta = sigma_sq * (2.0 * ratio.ln()).sqrt() + lambda.sqrt() * s;
    let kappa = sigmoid(s) * (1.0 - sigmoid(s));
    assert_abs_diff_eq!(p.kappa(), kappa, epsilon = 1e-15);
    assert_abs_diff_eq!(p.kappa(), kappa_min(s), epsilon = 1e-15);
    assert_abs_diff_eq!(p.scale_at(1), beta / kappa, epsilon = 1e-12);
}

#[test]
fn glmts_laplace_draws_have_the_scaled_inverse_gram_covariance() {
    let (p, _) = run_glmts_logistic(60, 6);
    let t = 61;
    let scale = p.scale_at(t);
    let target = p.gram().gram().cholesky().unwrap().inverse();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 100_000;
    let draws: Vec<Vec<f64>> = (0..n).map(|_| p.sample_parameter(t, &mut rng).unwrap()).collect();
    let d = 3;
    let mean: Vec<f64> = (0..d).map(|i| draws.iter().map(|x| x[i]).sum::<f64>() / n as f64).collect();
    for i in 0..d {
        let sd = scale * target[(i, i)].sqrt();
        assert!((mean[i] - p.theta_hat()[i]).abs() < 5.0 * sd / (n as f64).sqrt());
        for j in 0..d {
            let c: f64 = draws.iter().map(|x| (x[i] - mean[i]) * (x[j] - mean[j])).sum::<f64>() / (n - 1) as f64;
            let want = scale * scale * target[(i, j)];
            let unit = scale * scale * (target[(i, i)] * target[(j, j)]).sqrt();
            assert!((c - want).abs() < 0.05 * unit, "({i},{j}) {c} vs {want}");
        }
    }
}

fn unit_basis_context(d: usize) -> FeatureMatrix {
    FeatureMatrix::from_rows((0..d).map(|i| (0..d).map(|j| f64::from(u8::from(i == j))).collect()).collect()).unwrap()
}

#[test]
fn newton_first_update_example() {
    for alpha in [1.0, 0.5, 2.0] {
        let mut p = newton_glmts_policy(3, 3, alpha).unwrap();
        let ctx = unit_basis_context(3);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        p.select(Some(&ctx), &mut rng).unwrap();
        assert_eq!(p.counter(), 1);
        let a = RankedAction::new(vec![0, 1, 2], 3).unwrap();
        p.update(&a, &Feedback::new(vec![1.0, 0.0, 0.0], 1).unwrap()).unwrap();
        assert_eq!(p.gram().gram().diagonal(), vec![4.0, 3.0, 3.0]);
        assert_abs_diff_eq!(p.theta_hat()[0], 0.125 * alpha, epsilon = 1e-15);
        assert_eq!(&p.theta_hat()[1..], &[0.0, 0.0]);
        assert_eq!(p.counter(), 2);
    }
}

#[test]
fn newton_alternating_labels_stay_bounded() {
    let mut p = newton_glmts_policy(3, 1, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = RankedAction::new(vec![0], 2).unwrap();
    for step in 0..100_000u32 {
        let ctx = random_context(2, 3, &mut rng);
        p.select(Some(&ctx), &mut rng).unwrap();
        let y = f64::from(step % 2);
        p.update(&a, &Feedback::new(vec![y], 1).unwrap()).unwrap();
    }
    assert!(p.theta_hat().iter().all(|v| v.is_finite()));
    assert!(norm(p.theta_hat()) < 10.0, "{:?}", p.theta_hat());
    assert_eq!(p.counter(), 100_001);
}

#[test]
fn ts_beta_prefers_the_confident_item() {
    let mut p = ts_beta_policy(1, vec![1000.0, 1.0], vec![1.0, 1000.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let n = 10_000;
    let hits = (0..n).filter(|_| p.select(None, &mut rng).unwrap().items() == [0]).count();
    assert!(hits as f64 / n as f64 >= 0.999);
}

#[test]
fn ts_beta_first_round_is_uniform_and_counts_update() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut p = ts_beta_policy(3, vec![1.0; 10], vec![1.0; 10]).unwrap();
    let counts = first_position_counts(&mut p, 10, 10_000, &mut rng);
    assert!(chi_square_uniform(&counts) < CHI2_9DF_999);

    let a = RankedAction::new(vec![4, 2, 7], 10).unwrap();
    p.update(&a, &Feedback::from_attractions(&[false, true, false])).unwrap();
    let post = p.posterior();
    assert_eq!((post.alpha(4), post.beta(4)), (1.0, 2.0));
    assert_eq!((post.alpha(2), post.beta(2)), (2.0, 1.0));
    assert_eq!((post.alpha(7), post.beta(7)), (1.0, 1.0));
}

#[test]
fn bayes_ucb_examples() {
    assert_eq!(BayesUcb::quantile_level(1), 0.5);
    assert_eq!(BayesUcb::quantile_level(2), 0.5);
    assert_eq!(BayesUcb::quantile_level(4), 0.75);
    let mut p = bayes_ucb_policy(3, vec![2.0; 6], vec![3.0; 6]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    assert_eq!(p.select(None, &mut rng).unwrap().items(), &[0, 1, 2]);

    // the index tends to 1 as the level does
    let post = BetaItemPosterior::uniform(1, 2.0, 5.0).unwrap();
    let mut prev = 0.0;
    for t in [10u64, 1_000, 100_000, 1_000_000_000_000] {
        let v = post.quantile(0, BayesUcb::quantile_level(t)).unwrap();
        assert!(v > prev);
        prev = v;
    }
    assert!(prev > 0.99, "{prev}");
}

#[test]
fn ucb1_examples() {
    assert_abs_diff_eq!(ucb1_index(0.5, 100, 1000), 0.8219, epsilon = 1e-4);
    assert_eq!(ucb1_index(0.2, 0, 10), f64::INFINITY);
    let mut p = cascade_ucb1_policy(5, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let a = p.select(None, &mut rng).unwrap();
    assert_eq!(a.items(), &[0, 1]);
    p.update(&a, &Feedback::from_attractions(&[false, false])).unwrap();
    assert_eq!(p.select(None, &mut rng).unwrap().items(), &[2, 3]);
    assert_eq!((p.count(0), p.count(4)), (1, 0));
}

#[test]
fn klucb_examples() {
    assert_eq!(kl_ucb_index(1.0, 5, 100), 1.0);
    assert_eq!(kl_ucb_index(0.3, 0, 100), f64::INFINITY);
    let (mean, n, t) = (0.5, 10u64, 100u64);
    let q = kl_ucb_index(mean, n, t);
    let lt = (t as f64).ln();
    let rhs = lt + 3.0 * lt.ln();
    let lhs = n as f64 * kl_bernoulli(mean, q);
    assert!(lhs <= rhs + 1e-9);
    assert!(rhs - lhs <= 1e-9, "{}", rhs - lhs);
    assert!(n as f64 * kl_bernoulli(mean, q + 1e-9) > rhs);
    let _ = cascade_klucb_policy(4, 2).unwrap();
}

#[test]
fn linucb_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    // V = λI and θ̂ = 0: the index is c‖x‖/√λ, so items rank by norm
    let ctx = FeatureMatrix::from_rows(vec![vec![0.1, 0.0], vec![0.0, 0.9], vec![0.5, 0.5], vec![0.2, -0.2]]).unwrap();
    let mut p = cascade_linucb_policy(2, 3, 1.0, 1.0, 0.25, 0.01, None).unwrap();
    assert!(p.confidence_at(1) > 0.0);
    assert_eq!(p.select(Some(&ctx), &mut rng).unwrap().items(), &[1, 2, 3]);

    let mut greedy = cascade_linucb_policy(2, 2, 1.0, 1.0, 0.25, 0.01, Some(0.0)).unwrap();
    let mut ucb = cascade_linucb_policy(2, 2, 1.0, 1.0, 0.25, 0.01, None).unwrap();
    for _ in 0..40 {
        let ctx = random_context(5, 2, &mut rng);
        let a = greedy.select(Some(&ctx), &mut rng).unwrap();
        assert_eq!(a.items(), top_k(&ctx.scores(greedy.ellipsoid().theta_hat()), 2).as_slice());
        let b = ucb.select(Some(&ctx), &mut rng).unwrap();
        let fb = Feedback::new(vec![rng.random(), rng.random()], 2).unwrap();
        greedy.update(&a, &fb).unwrap();
        ucb.update(&b, &fb).unwrap();
    }
    // the index never undercuts the point estimate
    let e: &EllipsoidState = ucb.ellipsoid();
    let c = ucb.confidence_at(41);
    for _ in 0..100 {
        let x = unit_ball_row(2, &mut rng);
        let mean = dot(&x, e.theta_hat());
        assert!(mean + c * e.inv_norm_sq(&x).sqrt() >= mean);
    }
}

const NAMES: [&str; 9] = [
    "gts", "lints", "glmts", "newton-glmts", "ts-beta", "bayes-ucb", "cascade-ucb1", "cascade-klucb", "cascade-linucb",
];

fn make_policy(name: &str, l: usize, k: usize, d: usize) -> Box<dyn Policy> {
    let delta = 0.01;
    match name {
        "gts" => Box::new(gts_policy(l, k, 0.0, 1.0, 0.25).unwrap()),
        "lints" => Box::new(lints_policy(d, k, 1.0, 1.0, 0.25, delta).unwrap()),
        "glmts" => Box::new(glmts_policy(d, k, 1.0, 1.0, 0.25, delta, LinkFunction::Sigmoid).unwrap()),
        "newton-glmts" => Box::new(newton_glmts_policy(d, k, 1.0).unwrap()),
        "ts-beta" => Box::new(ts_beta_policy(k, vec![1.0; l], vec![1.0; l]).unwrap()),
        "bayes-ucb" => Box::new(bayes_ucb_policy(k, vec![1.0; l], vec![1.0; l]).unwrap()),
        "cascade-ucb1" => Box::new(cascade_ucb1_policy(l, k).unwrap()),
        "cascade-klucb" => Box::new(cascade_klucb_policy(l, k).unwrap()),
        "cascade-linucb" => Box::new(cascade_linucb_policy(d, k, 1.0, 1.0, 0.25, delta, None).unwrap()),
        _ => unreachable!(),
    }
}

/// Runs `rounds` steps and returns the chosen lists. When `garble` is set,
/// every unexamined value is overwritten with noise before the update.
fn trajectory(name: &str, seed: u64, rounds: usize, garble: Option<u64>) -> Vec<Vec<usize>> {
    let (l, k, d) = (6, 3, 3);
    let mut p = make_policy(name, l, k, d);
    let mut env_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pol_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut noise = garble.map(ChaCha8Rng::seed_from_u64);
    let ctx = random_context(l, d, &mut env_rng);
    let means: Vec<f64> = (0..l).map(|_| env_rng.random_range(0.05..0.6)).collect();
    let mut out = Vec::new();
    for _ in 0..rounds {
        let a = p.select(Some(&ctx), &mut pol_rng).unwrap();
        let fb = simulate_cascade_round(&a, &means, &mut env_rng).unwrap();
        let fb = match noise.as_mut() {
            Some(r) => {
                let mut values = fb.values().to_vec();
                for v in &mut values[fb.click_position()..] {
                    *v = r.random();
                }
                Feedback::new(values, fb.click_position()).unwrap()
            }
            None => fb,
        };
        p.update(&a, &fb).unwrap();
        out.push(a.items().to_vec());
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_policy_returns_k_distinct_items(seed in any::<u64>()) {
        for name in NAMES {
            for list in trajectory(name, seed, 15, None) {
                prop_assert_eq!(list.len(), 3);
                prop_assert!(list.iter().all(|&i| i < 6));
                let mut sorted = list.clone();
                sorted.sort_unstable();
                sorted.dedup();
                prop_assert_eq!(sorted.len(), 3);
            }
        }
    }

    #[test]
    fn unexamined_values_never_reach_the_state(seed in any::<u64>(), noise in any::<u64>()) {
        for name in NAMES {
            prop_assert_eq!(trajectory(name, seed, 15, None), trajectory(name, seed, 15, Some(noise)), "{}", name);
        }
    }

    #[test]
    fn trajectories_are_seed_deterministic(seed in any::<u64>()) {
        for name in NAMES {
            prop_assert_eq!(trajectory(name, seed, 10, None), trajectory(name, seed, 10, None));
        }
    }

    #[test]
    fn link_transform_keeps_the_ranking(scores in prop::collection::vec(-2000i32..2000, 1..15), k in 1usize..15) {
        let scores: Vec<f64> = scores.into_iter().map(|s| f64::from(s) / 100.0).collect();
        let k = k.min(scores.len());
        let linked: Vec<f64> = scores.iter().map(|&s| sigmoid(s)).collect();
        prop_assert_eq!(top_k(&scores, k), top_k(&linked, k));
    }

    #[test]
    fn klucb_index_lies_between_mean_and_one(mean in 0.0f64..=1.0, n in 1u64..10_000, t in 1u64..1_000_000) {
        let q = kl_ucb_index(mean, n, t);
        prop_assert!(q >= mean && q <= 1.0);
    }

    #[test]
    fn bayes_ucb_index_is_monotone_in_the_level(a in 1u32..50, b in 1u32..50, q1 in 0.5f64..0.999, dq in 0.0f64..0.0009) {
        let post = BetaItemPosterior::uniform(1, f64::from(a), f64::from(b)).unwrap();
        let lo = post.quantile(0, q1).unwrap();
        let hi = post.quantile(0, q1 + dq).unwrap();
        prop_assert!(hi >= lo - 1e-12);
    }
}
