use proptest::collection::vec;
use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use reprl::primitives::{
    bernoulli_product_tv, bernoulli_product_tv_bound, coord_round, corr_samp_index, divergences, rand_round,
    rep_heavy_hitters, total_variation, BernoulliProduct, HeavyHitterParams, RandomizedRounding, DEFAULT_TRUNCATION,
};
use reprl::SharedSeed;

fn simplex(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

fn chi_square_p(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0;
    for (&c, &p) in counts.iter().zip(probs) {
        if p == 0.0 {
            assert_eq!(c, 0, "drew a zero-probability point");
            continue;
        }
        let e = p * n as f64;
        stat += (c as f64 - e).powi(2) / e;
        cells += 1;
    }
    if cells < 2 {
        return 1.0;
    }
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn correlated_draws_have_the_right_marginal() {
    let mut rng = SharedSeed::new(11).stream();
    for d in 0..4 {
        let p = simplex(&(0..8).map(|_| rng.random::<f64>() + 0.05).collect::<Vec<_>>());
        let mut counts = vec![0u64; 8];
        for i in 0..20_000u64 {
            counts[corr_samp_index(&p, &SharedSeed::new(d).split("draw", i))] += 1;
        }
        let pv = chi_square_p(&counts, &p);
        assert!(pv > 1e-3, "distribution {d}: p-value {pv}");
    }
}

/// Any coupling disagrees with probability at least `tv`; shared-proposal
/// rejection sampling disagrees with probability at most `2 tv / (1 + tv)`.
#[test]
fn mismatch_rate_sits_between_coupling_bounds() {
    let base = simplex(&[4.0, 3.0, 2.0, 1.0, 1.0, 1.0]);
    for shift in [0.02, 0.05, 0.1] {
        let mut q = base.clone();
        q[0] -= shift;
        q[5] += shift;
        let tv = total_variation(&base, &q);
        let n = 20_000u64;
        let miss = (0..n)
            .filter(|&i| {
                let xi = SharedSeed::new(5).split("pair", i);
                corr_samp_index(&base, &xi) != corr_samp_index(&q, &xi)
            })
            .count() as f64
            / n as f64;
        let upper = 2.0 * tv / (1.0 + tv);
        let se = (upper * (1.0 - upper) / n as f64).sqrt();
        assert!(miss >= tv - 5.0 * se, "tv {tv}: mismatch {miss}");
        assert!(miss <= upper + 5.0 * se + DEFAULT_TRUNCATION, "tv {tv}: {miss} above {upper}");
        assert!(miss <= 2.0 * tv + 5.0 * se + DEFAULT_TRUNCATION);
    }
}

#[test]
fn joint_and_product_bernoulli_draws_keep_marginals() {
    let bp = BernoulliProduct::new(vec![0.1, 0.5, 0.8]).unwrap();
    let n = 8_000u64;
    let mut joint = [0u64; 3];
    let mut prod = [0u64; 3];
    for i in 0..n {
        let xi = SharedSeed::new(9).split("draw", i);
        for (c, b) in joint.iter_mut().zip(bp.corr_samp_joint(&xi, 1 << 10).unwrap()) {
            *c += b as u64;
        }
        for (c, b) in prod.iter_mut().zip(bp.corr_samp_product(&xi)) {
            *c += b as u64;
        }
    }
    for (j, &m) in bp.means().iter().enumerate() {
        let se = (m * (1.0 - m) / n as f64).sqrt();
        assert!((joint[j] as f64 / n as f64 - m).abs() < 4.0 * se);
        assert!((prod[j] as f64 / n as f64 - m).abs() < 4.0 * se);
    }
    assert!(bp.corr_samp_joint(&SharedSeed::new(1), 4).is_err());
}

fn dist(n: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(0.01f64..1.0, n).prop_map(|w| simplex(&w))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rounding_error_is_bounded(x in vec(-5.0f64..5.0, 1..12), eps in 0.01f64..1.0, seed in any::<u64>()) {
        let xi = SharedSeed::new(seed);
        let y = rand_round(&x, eps, &xi).unwrap();
        prop_assert_eq!(y.len(), x.len());
        for (a, b) in x.iter().zip(&y) {
            prop_assert!((a - b).abs() <= eps);
        }
        prop_assert_eq!(rand_round(&x, eps, &xi).unwrap(), y);
        let c = coord_round(&x, eps, &xi).unwrap();
        for (a, b) in x.iter().zip(&c) {
            prop_assert!((a - b).abs() <= eps / 4.0 + 1e-12);
        }
        prop_assert_eq!(coord_round(&x, eps, &xi).unwrap(), c);
    }

    #[test]
    fn identical_inputs_round_identically(x in vec(-1.0f64..1.0, 1..8), rho in 0.05f64..0.9, seed in any::<u64>()) {
        let r = RandomizedRounding::new(rho).unwrap();
        let xi = SharedSeed::new(seed);
        prop_assert_eq!(r.round(&x, 0.1, &xi).unwrap(), r.round(&x.clone(), 0.1, &xi).unwrap());
        prop_assert!(r.grid_width(x.len(), 0.1) > 0.0);
    }

    #[test]
    fn divergence_chain_holds((p, q) in (2usize..10).prop_flat_map(|n| (dist(n), dist(n)))) {
        let d = divergences(&p, &q).unwrap();
        prop_assert!(2.0 * d.tv * d.tv <= d.kl + 1e-12);
        prop_assert!(d.kl <= d.chi2 + 1e-12);
        prop_assert!(d.kl <= (1.0 + d.chi2).ln() + 1e-12);
        prop_assert!(d.tv >= 0.0 && d.tv <= 1.0);
        let same = divergences(&p, &p).unwrap();
        prop_assert!(same.tv.abs() < 1e-15 && same.kl.abs() < 1e-12 && same.chi2.abs() < 1e-12);
    }

    #[test]
    fn product_tv_stays_under_its_bound(
        (a, b) in (1usize..8).prop_flat_map(|n| (vec(0.02f64..0.98, n), vec(0.02f64..0.98, n)))
    ) {
        let exact = bernoulli_product_tv(&a, &b).unwrap();
        prop_assert!(exact <= bernoulli_product_tv_bound(&a, &b).unwrap() + 1e-12);
        prop_assert!(exact >= (a[0] - b[0]).abs() - 1e-12);
        if a.len() == 1 {
            prop_assert!((exact - (a[0] - b[0]).abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn heavy_hitters_follow_the_shared_threshold(
        weights in vec(0.0f64..1.0, 1..6), seed in any::<u64>(), data_seed in any::<u64>()
    ) {
        let p = simplex(&weights.iter().map(|w| w + 1e-3).collect::<Vec<_>>());
        let mut params = HeavyHitterParams::new(0.5, 0.1, 0.5, 0.05);
        params.samples = Some(300);
        let xi = SharedSeed::new(seed);
        let mut rng = SharedSeed::new(data_seed).stream();
        let draws: Vec<usize> = (0..300).map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            p.iter().position(|&x| { acc += x; u < acc }).unwrap_or(p.len() - 1)
        }).collect();
        let mut it = draws.iter().copied();
        let out = rep_heavy_hitters(|| it.next().unwrap(), &params, &xi).unwrap();
        prop_assert!(out.threshold > 0.4 && out.threshold < 0.6);
        let want: Vec<usize> = (0..p.len())
            .filter(|&k| draws.iter().filter(|&&d| d == k).count() as f64 / 300.0 > out.threshold)
            .collect();
        prop_assert_eq!(&out.elements, &want);
        let again = rep_heavy_hitters(|| 0usize, &params, &xi).unwrap();
        prop_assert_eq!(again.threshold, out.threshold);
    }
}
