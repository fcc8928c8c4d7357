//! Invariant suites behind the `verify` subcommand.

use num::BigRational;
use rand::Rng;
use serde::Serialize;

use reprl::explore::{estimate_under_explored_mean, mean_reachability};
use reprl::lower::{mdp_from_rademacher, policy_to_marginals, sign_constrain, sign_one_way_check};
use reprl::mdp::{
    optimal_policy, random_mdp, reachability, simulate_episode, value_of_policy, Policy, RandomMdpSpec, Simulator,
};
use reprl::scalar::exact;
use reprl::{Mdp, Scalar, SharedSeed};

pub const SUITES: &[&str] = &["oracle", "reduction", "marginal", "sign"];

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub checked: usize,
    pub detail: String,
}

pub fn run_suite(name: &str, instances: usize, seed: u64) -> anyhow::Result<SuiteResult> {
    let xi = SharedSeed::new(seed).child(name);
    let (passed, detail) = match name {
        "oracle" => oracle_suite(instances, &xi)?,
        "reduction" => reduction_suite(instances, &xi)?,
        "marginal" => marginal_suite(instances, &xi)?,
        "sign" => sign_suite(instances, &xi)?,
        _ => anyhow::bail!("unknown suite `{name}`; expected one of {}", SUITES.join(", ")),
    };
    Ok(SuiteResult { name: name.to_string(), passed, checked: instances, detail })
}

fn small_mdp(rng: &mut impl Rng) -> Mdp {
    let spec = RandomMdpSpec::new(rng.random_range(1..=4), rng.random_range(1..=3), rng.random_range(1..=3));
    random_mdp(&spec, rng)
}

fn random_policy(mdp: &Mdp, rng: &mut impl Rng) -> Policy {
    let k = mdp.num_actions();
    Policy::from_fn(mdp.horizon(), mdp.num_states(), |_, _| rng.random_range(0..k))
}

/// Float and rational evaluations agree; Monte-Carlo returns sit within 4 SE.
fn oracle_suite(instances: usize, xi: &SharedSeed) -> anyhow::Result<(bool, String)> {
    let mut worst_exact = 0.0f64;
    let mut worst_z = 0.0f64;
    for i in 0..instances {
        let mut rng = xi.split("instance", i as u64).stream();
        let mdp = small_mdp(&mut rng);
        let pi = random_policy(&mdp, &mut rng);
        let v = value_of_policy(&mdp, &pi)?;
        let ve = value_of_policy(&mdp.to_exact()?, &pi)?;
        worst_exact = worst_exact.max((v - ve.approx()).abs());
        let n = 4000;
        let mut sim = Simulator::new(&mdp, xi.split("env", i as u64).stream());
        let returns: Vec<f64> = (0..n).map(|_| simulate_episode(&mut sim, |h, s| pi.action(h, s)).total_reward()).collect();
        let mean = returns.iter().sum::<f64>() / n as f64;
        let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt().max(1e-12);
        worst_z = worst_z.max((mean - v).abs() / se);
    }
    Ok((worst_exact < 1e-9 && worst_z < 4.0, format!("max float/rational gap {worst_exact:.2e}, max |z| {worst_z:.2}")))
}

/// Exactly optimal policies of the reduction decode to passing solutions,
/// and the optimal value is the mean absolute bias per state.
fn reduction_suite(instances: usize, xi: &SharedSeed) -> anyhow::Result<(bool, String)> {
    let mut failures = 0;
    for i in 0..instances {
        let mut rng = xi.split("instance", i as u64).stream();
        let (s, h) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let p: Vec<f64> = (0..s * h).map(|_| (rng.random_range(-8..=8) as f64) / 8.0).collect();
        let exact_p: Vec<BigRational> = p.iter().map(|&x| exact(x)).collect();
        let raw = mdp_from_rademacher(&exact_p, s, 3, h, false)?;
        let (pi, v) = optimal_policy(&raw);
        let want = exact_p.iter().map(|x| num::Signed::abs(x)).fold(BigRational::from_count(0), |a, b| a + b)
            / BigRational::from_count(s);
        let decoded = policy_to_marginals(&pi);
        let check = sign_one_way_check(&p, &decoded, 1e-9)?;
        if v != want || !check.passed {
            failures += 1;
        }
    }
    Ok((failures == 0, format!("{failures} failing instances")))
}

/// Expected reachability under `B(mu_hat)` equals the run average exactly.
fn marginal_suite(instances: usize, xi: &SharedSeed) -> anyhow::Result<(bool, String)> {
    let mut failures = 0;
    for i in 0..instances {
        let mut rng = xi.split("instance", i as u64).stream();
        let mdp = small_mdp(&mut rng);
        let pi = random_policy(&mdp, &mut rng);
        let runs = rng.random_range(1..=6);
        let mut sim = Simulator::new(&mdp, xi.split("env", i as u64).stream());
        let mean = estimate_under_explored_mean(&mut sim, runs, rng.random_range(1..=40), 0.5)?;
        let em = mdp.to_exact()?;
        let mu: Vec<BigRational> =
            mean.counts.iter().map(|&c| BigRational::from_count(c) / BigRational::from_count(runs)).collect();
        let lhs = mean_reachability(&em, &pi, &mu)?;
        let mut rhs = BigRational::from_count(0);
        for set in &mean.runs {
            rhs += reachability(&em, &pi, set)?;
        }
        rhs /= BigRational::from_count(runs);
        if lhs != rhs {
            failures += 1;
        }
    }
    Ok((failures == 0, format!("{failures} failing instances")))
}

/// Forcing signs at most doubles the error of an accurate solution.
fn sign_suite(instances: usize, xi: &SharedSeed) -> anyhow::Result<(bool, String)> {
    let mut failures = 0;
    for i in 0..instances {
        let mut rng = xi.split("instance", i as u64).stream();
        let n = rng.random_range(1..=8);
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        // tightest eps for which v passes, plus a margin
        let slack0 = sign_one_way_check(&p, &v, 0.0)?.slack_f64();
        let eps = (-slack0).max(0.0) + 1e-6;
        let signed = sign_constrain(&v);
        if !sign_one_way_check(&p, &signed, 2.0 * eps)?.passed {
            failures += 1;
        }
    }
    Ok((failures == 0, format!("{failures} failing instances")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_small() {
        for name in SUITES {
            let r = run_suite(name, 5, 1).unwrap();
            assert!(r.passed, "{name}: {}", r.detail);
        }
        assert!(run_suite("nope", 1, 1).is_err());
    }
}
