use num::{BigRational, Signed};
use proptest::collection::vec;
use proptest::prelude::*;
use rand::Rng;

use reprl::lower::{
    coin_to_rademacher, coin_to_sign, episodic_budget_simulation, mdp_from_rademacher, normalize_reward,
    policy_to_marginals, read_means, rep_infty_estimate, sign_constrain, sign_one_way_check, visit_envelope,
    write_means, EmpiricalSignOracle, InftyConfig, RademacherProduct, DUMMY_REWARD, MINUS, PLUS,
};
use reprl::mdp::{optimal_policy, value_of_policy, Policy};
use reprl::scalar::exact;
use reprl::{Error, Scalar, SharedSeed};

/// Means on the grid `k/16`, which are exact in binary.
fn grid_means(len: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(-16i32..=16, len).prop_map(|v| v.into_iter().map(|k| k as f64 / 16.0).collect())
}

fn shape() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..=3, 2usize..=3, 1usize..=3)
}

fn mean_abs(p: &[f64], s: usize) -> BigRational {
    p.iter().map(|&x| exact(x).abs()).fold(BigRational::from_count(0), |a, b| a + b) / BigRational::from_count(s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn optimal_value_is_mean_absolute_bias(((s, a, h), seed) in (shape(), any::<u64>())) {
        let mut rng = SharedSeed::new(seed).stream();
        let p: Vec<f64> = (0..s * h).map(|_| rng.random_range(-16i32..=16) as f64 / 16.0).collect();
        let ep: Vec<BigRational> = p.iter().map(|&x| exact(x)).collect();
        let raw = mdp_from_rademacher(&ep, s, a, h, false).unwrap();
        prop_assert_eq!(raw.horizon(), h + 1);
        let (pi, v) = optimal_policy(&raw);
        prop_assert_eq!(v.clone(), mean_abs(&p, s));
        let decoded = policy_to_marginals(&pi);
        prop_assert_eq!(decoded.len(), s * h);
        let check = sign_one_way_check(&p, &decoded, 3.0 * 1e-9).unwrap();
        prop_assert!(check.passed);
        // the normalized reduction rescales the value affinely
        let norm = mdp_from_rademacher(&ep, s, a, h, true).unwrap();
        let (_, vn) = optimal_policy(&norm);
        let want = (v + BigRational::from_count(2 * h)) / BigRational::from_count(3);
        prop_assert_eq!(vn, want);
    }

    /// Any policy with gap `g` decodes to a solution passing at `g / H`.
    #[test]
    fn near_optimal_policies_decode_to_passing_solutions(((s, a, h), seed) in (shape(), any::<u64>())) {
        let mut rng = SharedSeed::new(seed).stream();
        let p: Vec<f64> = (0..s * h).map(|_| rng.random_range(-16i32..=16) as f64 / 16.0).collect();
        let ep: Vec<BigRational> = p.iter().map(|&x| exact(x)).collect();
        let raw = mdp_from_rademacher(&ep, s, a, h, false).unwrap();
        let pi = Policy::from_fn(h + 1, s, |_, _| rng.random_range(0..a));
        let (_, star) = optimal_policy(&raw);
        let gap = star - value_of_policy(&raw, &pi).unwrap();
        let v = policy_to_marginals(&pi);
        let slack0 = sign_one_way_check(&p, &v, 0.0).unwrap().slack;
        prop_assert!(slack0 >= -(gap / BigRational::from_count(h)));
    }

    #[test]
    fn forcing_signs_at_most_doubles_the_error(p in grid_means(6), v in vec(-1.0f64..=1.0, 6), margin in 1e-6f64..0.1) {
        let slack0 = sign_one_way_check(&p, &v, 0.0).unwrap().slack_f64();
        let eps = (-slack0).max(0.0) + margin;
        prop_assert!(sign_one_way_check(&p, &v, eps).unwrap().passed);
        let signed = sign_constrain(&v);
        prop_assert!(signed.iter().all(|&x| x == 1.0 || x == -1.0));
        prop_assert!(sign_one_way_check(&p, &signed, 2.0 * eps).unwrap().passed);
    }

    #[test]
    fn means_file_round_trips(p in vec(-1.0f64..=1.0, 0..20)) {
        let mut buf = Vec::new();
        write_means(&p, &mut buf).unwrap();
        prop_assert_eq!(read_means(buf.as_slice()).unwrap(), p);
    }

    #[test]
    fn reward_normalization_is_affine(r in -2.0f64..=1.0) {
        let n = normalize_reward(r);
        prop_assert!((0.0..=1.0).contains(&n));
        prop_assert!((n * 3.0 - 2.0 - r).abs() < 1e-12);
    }
}

#[test]
fn reduction_rewards_have_the_declared_means() {
    let p = [0.5, -0.25];
    let mdp = mdp_from_rademacher(&p, 2, 3, 1, false).unwrap();
    for (s, &m) in p.iter().enumerate() {
        assert_eq!(mdp.mean_reward(1, s, PLUS), m);
        assert_eq!(mdp.mean_reward(1, s, MINUS), -m);
        assert_eq!(mdp.mean_reward(1, s, 2), DUMMY_REWARD);
    }
    assert_eq!(mdp.transition(0, 0, 0), &[0.5, 0.5]);
    assert!(mdp_from_rademacher(&p, 2, 1, 1, false).is_err());
}

#[test]
fn coins_map_to_rademacher_means() {
    let b = [0.0, 0.25, 0.5, 0.9];
    let r = coin_to_rademacher(&b).unwrap();
    assert_eq!(r.means(), &[-1.0, -0.5, 0.0, 0.8]);
    let mut rng = SharedSeed::new(4).stream();
    let n = 20_000;
    let mut sums = [0.0; 4];
    for _ in 0..n {
        for (acc, &x) in sums.iter_mut().zip(&r.sample(&mut rng)) {
            assert!(x == 1.0 || x == -1.0);
            *acc += x;
        }
        let heads = rng.random_bool(0.9);
        assert_eq!(coin_to_sign(heads), if heads { 1.0 } else { -1.0 });
    }
    for (acc, &m) in sums.iter().zip(r.means()) {
        let se = ((1.0 - m * m) / n as f64).sqrt();
        assert!((acc / n as f64 - m).abs() <= 4.0 * se + 1e-12);
    }
    assert!(coin_to_rademacher(&[1.5]).is_err());
    assert!(RademacherProduct::new(vec![-1.2]).is_err());
}

#[test]
fn visits_stay_inside_the_envelope() {
    let (s, a, h) = (4, 2, 3);
    let p = vec![0.0; s * h];
    for (run, episodes) in [(0u64, 100usize), (1, 1000), (2, 5000)] {
        let mut rng = SharedSeed::new(run).child("agent").stream();
        let counts =
            episodic_budget_simulation(&p, s, a, h, episodes, |_, _| rng.random_range(0..a), SharedSeed::new(run).stream())
                .unwrap();
        let per_step: u64 = counts.state_counts()[..s].iter().sum();
        assert_eq!(per_step as usize, episodes);
        assert!(counts.max() as f64 <= visit_envelope(episodes, s, a, h));
    }
}

#[test]
fn sign_estimation_recovers_clear_signs() {
    let p = vec![0.6, -0.6, 0.8, -0.7, 0.5];
    let product = RademacherProduct::new(p.clone()).unwrap();
    let cfg = InftyConfig::new(0.05, 0.1, 40);
    for run in 0..5u64 {
        let mut data = SharedSeed::new(run).child("data").stream();
        let est = rep_infty_estimate(|r| product.sample(r), 5, &mut data, &mut EmpiricalSignOracle, &SharedSeed::new(run), &cfg)
            .unwrap();
        assert_eq!(est.rounds, cfg.rounds(5));
        assert_eq!(est.v, sign_constrain(&p), "run {run}");
    }
    let mut data = SharedSeed::new(0).stream();
    let mut bad = |_: &[Vec<f64>], _: &SharedSeed| vec![0.0; 15];
    let out = rep_infty_estimate(|r| product.sample(r), 5, &mut data, &mut bad, &SharedSeed::new(0), &cfg);
    assert!(matches!(out, Err(Error::Oracle(_))));
}

#[test]
fn malformed_means_report_the_line() {
    let err = read_means("0.5\n\n2.0\n".as_bytes()).unwrap_err();
    assert!(err.to_string().contains("line 3"), "{err}");
    let err = read_means("0.5\nx\n".as_bytes()).unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
    assert_eq!(exact(0.5).approx(), 0.5);
}
