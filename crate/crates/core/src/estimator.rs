//! End-to-end replicable policy estimators and the boosting wrapper.

use serde::{Deserialize, Serialize};

use crate::backward::{
    check_nice, parallel_zeta, rep_rl_bandit, BackwardConfig, BackwardInduction, NicenessReport, OfflineDatasets,
};
use crate::bandit::{rep_best_arm, BestArmParams};
use crate::error::{invalid, Error, Result};
use crate::explore::{rep_level_explore, ExploreConfig};
use crate::mdp::{simulate_episode, tiers_for_zeta, EpisodicEnv, ParallelSample, Policy, Simulator, TieredPartition};
use crate::primitives::{rep_heavy_hitters, HeavyHitterParams};
use crate::scalar::Scalar;
use crate::seed::SharedSeed;

/// Parallel-sampling access.
pub trait ParallelAccess {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn horizon(&self) -> usize;
    fn initial_state(&self) -> usize;
    fn parallel_sample(&mut self) -> ParallelSample;
}

impl<T: Scalar> ParallelAccess for Simulator<'_, T> {
    fn num_states(&self) -> usize {
        self.mdp().num_states()
    }

    fn num_actions(&self) -> usize {
        self.mdp().num_actions()
    }

    fn horizon(&self) -> usize {
        self.mdp().horizon()
    }

    fn initial_state(&self) -> usize {
        self.mdp().initial_state()
    }

    fn parallel_sample(&mut self) -> ParallelSample {
        Simulator::parallel_sample(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostConfig {
    /// Number of seed strings `k`; `ceil(10 ln(1/delta))` when unset.
    pub seeds: Option<usize>,
    /// Base runs per heavy-hitter call.
    pub heavy_samples: Option<usize>,
    pub heavy_desk_scale: f64,
    /// Pulls per candidate in the selection stage.
    pub arm_samples: Option<usize>,
    pub arm_desk_scale: f64,
    /// Per-step reward range, used to map returns into `[0, 1]`.
    pub reward_range: (f64, f64),
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            seeds: None,
            heavy_samples: None,
            heavy_desk_scale: 1.0,
            arm_samples: None,
            arm_desk_scale: 1.0,
            reward_range: (0.0, 1.0),
        }
    }
}

impl BoostConfig {
    pub fn num_seeds(&self, delta: f64) -> usize {
        self.seeds.unwrap_or_else(|| ((10.0 * (1.0 / delta).ln()).ceil() as usize).max(1))
    }

    /// Maps an episode return into `[0, 1]`.
    pub fn normalize(&self, ret: f64, horizon: usize) -> f64 {
        let (lo, hi) = self.reward_range;
        let h = horizon as f64;
        ((ret - h * lo) / (h * (hi - lo))).clamp(0.0, 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostOutcome {
    pub policy: Policy,
    /// Sorted, deduplicated candidates.
    pub pool: Vec<Policy>,
    pub seeds: usize,
    pub base_runs: usize,
    /// Base runs that ended without a policy.
    pub base_failures: usize,
}

/// Whether a base-run error counts as a failed run rather than a fault.
fn is_run_failure(e: &Error) -> bool {
    matches!(e, Error::MissingData { .. } | Error::InsufficientSamples(_) | Error::EmptyPool)
}

/// Boosts a base estimator's replicability and success probability.
///
/// For each of `k` seeds, heavy hitters over repeated base runs (fresh
/// environment data, same seed) nominate candidates; a best-arm stage over
/// the pooled candidates, pulled through `pull`, picks the output.
pub fn boost<E: ?Sized>(
    env: &mut E,
    mut base: impl FnMut(&mut E, &SharedSeed) -> Result<Policy>,
    mut pull: impl FnMut(&mut E, &Policy) -> f64,
    eps: f64,
    rho: f64,
    delta: f64,
    xi: &SharedSeed,
    config: &BoostConfig,
) -> Result<BoostOutcome> {
    if !(eps > 0.0) || !(delta > 0.0 && delta < rho && rho < 1.0) {
        return Err(invalid("boost needs eps > 0 and 0 < delta < rho < 1"));
    }
    let k = config.num_seeds(delta);
    let mut hh = HeavyHitterParams::new(0.6, 0.05, rho / (2.0 * k as f64), delta / (3.0 * k as f64));
    hh.desk_scale = config.heavy_desk_scale;
    hh.samples = config.heavy_samples;
    let mut pool = Vec::new();
    let mut runs = 0;
    let mut failures = 0;
    for i in 0..k {
        let seed = xi.split("boost", i as u64);
        let base_seed = seed.child("base");
        let mut fault = None;
        let found = rep_heavy_hitters(
            || {
                runs += 1;
                match base(env, &base_seed) {
                    Ok(p) => Some(p),
                    Err(e) => {
                        if is_run_failure(&e) {
                            failures += 1;
                        } else if fault.is_none() {
                            fault = Some(e);
                        }
                        None
                    }
                }
            },
            &hh,
            &seed.child("heavy"),
        )?;
        if let Some(e) = fault {
            return Err(e);
        }
        pool.extend(found.elements.into_iter().flatten());
    }
    pool.sort();
    pool.dedup();
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let mut arms = BestArmParams::new(eps / 2.0, rho / 2.0, delta / 3.0);
    arms.desk_scale = config.arm_desk_scale;
    arms.samples_per_arm = config.arm_samples;
    let mut sampler = |a: usize| pull(env, &pool[a]);
    let choice = rep_best_arm(&mut sampler, pool.len(), &arms, &xi.child("select"))?;
    Ok(BoostOutcome { policy: pool[choice.arm].clone(), pool, seeds: k, base_runs: runs, base_failures: failures })
}

/// One episode's return under `pi`.
pub fn episode_return<E: EpisodicEnv + ?Sized>(env: &mut E, pi: &Policy) -> f64 {
    simulate_episode(env, |h, s| pi.action(h, s)).total_reward()
}

/// `eps / (H^2 max(1, ln(SAH/(eps delta)))^5)`, capped below `1/2`.
pub fn default_zeta(num_states: usize, num_actions: usize, horizon: usize, eps: f64, delta: f64) -> f64 {
    let log = ((num_states * num_actions * horizon) as f64 / (eps * delta)).ln().max(1.0);
    (eps / ((horizon * horizon) as f64 * log.powi(5))).min(0.49)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodicConfig {
    pub explore: ExploreConfig,
    pub backward: BackwardConfig,
    pub boost: BoostConfig,
    pub zeta: Option<f64>,
    pub kappa: Option<f64>,
    /// Failure probability of the base run's backward induction.
    pub base_delta: f64,
}

impl Default for EpisodicConfig {
    fn default() -> Self {
        Self {
            explore: ExploreConfig::default(),
            backward: BackwardConfig::default(),
            boost: BoostConfig::default(),
            zeta: None,
            kappa: None,
            base_delta: 0.1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BaseRun {
    pub policy: Policy,
    pub partition: TieredPartition,
    pub niceness: Option<NicenessReport>,
    pub induction: BackwardInduction,
    pub zeta: f64,
}

/// Tiered exploration followed by backward induction at accuracy `eps / 2`.
pub fn episodic_base<E: EpisodicEnv + ?Sized>(
    env: &mut E,
    eps: f64,
    xi: &SharedSeed,
    config: &EpisodicConfig,
) -> Result<BaseRun> {
    let (n, k, horizon) = (env.num_states(), env.num_actions(), env.horizon());
    let zeta = config.zeta.unwrap_or_else(|| default_zeta(n, k, horizon, eps, config.base_delta));
    let explored = rep_level_explore(env, zeta, &xi.child("explore"), &config.explore, config.kappa)?;
    let niceness = check_nice(&explored.partition, &explored.datasets, &explored.bounds, zeta).ok();
    let induction = rep_rl_bandit(
        &explored.partition,
        &explored.datasets,
        eps / 2.0,
        config.base_delta,
        &xi.child("induction"),
        &config.backward,
    )?;
    Ok(BaseRun { policy: induction.policy.clone(), partition: explored.partition, niceness, induction, zeta })
}

/// Replicable policy estimation from episodic access.
pub fn episodic_estimator<E: EpisodicEnv + ?Sized>(
    env: &mut E,
    eps: f64,
    delta: f64,
    rho: f64,
    xi: &SharedSeed,
    config: &EpisodicConfig,
) -> Result<BoostOutcome> {
    let horizon = env.horizon();
    boost(
        env,
        |e, seed| episodic_base(e, eps, seed, config).map(|r| r.policy),
        |e, pi| config.boost.normalize(episode_return(e, pi), horizon),
        eps,
        rho,
        delta,
        xi,
        &config.boost,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParallelConfig {
    pub backward: BackwardConfig,
    pub boost: BoostConfig,
    /// Parallel-sampling calls per base run.
    pub calls: Option<usize>,
    pub desk_scale: f64,
    pub base_delta: f64,
}

impl Default for ParallelConfig {
    fn default() -> Self {
        Self {
            backward: BackwardConfig::default(),
            boost: BoostConfig::default(),
            calls: None,
            desk_scale: 1.0,
            base_delta: 0.1,
        }
    }
}

impl ParallelConfig {
    /// `S H^6 ln(A) / eps^2`, scaled.
    pub fn num_calls(&self, num_states: usize, num_actions: usize, horizon: usize, eps: f64) -> usize {
        self.calls.unwrap_or_else(|| {
            let m = num_states as f64 * (horizon as f64).powi(6) * (num_actions as f64).ln().max(1.0) / (eps * eps);
            ((m * self.desk_scale).ceil() as usize).max(1)
        })
    }
}

/// Backward induction over uniform datasets from parallel sampling.
pub fn parallel_base<P: ParallelAccess + ?Sized>(
    env: &mut P,
    eps: f64,
    xi: &SharedSeed,
    config: &ParallelConfig,
) -> Result<BackwardInduction> {
    let (n, k, horizon) = (env.num_states(), env.num_actions(), env.horizon());
    let m = config.num_calls(n, k, horizon, eps);
    let samples: Vec<ParallelSample> = (0..m).map(|_| env.parallel_sample()).collect();
    let d = OfflineDatasets::from_parallel_samples(horizon, n, k, &samples)?;
    let tiers = tiers_for_zeta(parallel_zeta(horizon, n, m).min(0.5)).max(2);
    rep_rl_bandit(&TieredPartition::trivial(horizon, n, tiers), &d, eps / 2.0, config.base_delta, xi, &config.backward)
}

/// Replicable policy estimation from parallel-sampling access.
pub fn parallel_estimator<P: ParallelAccess + ?Sized>(
    env: &mut P,
    eps: f64,
    delta: f64,
    rho: f64,
    xi: &SharedSeed,
    config: &ParallelConfig,
) -> Result<BoostOutcome> {
    let horizon = env.horizon();
    boost(
        env,
        |e, seed| parallel_base(e, eps, seed, config).map(|r| r.policy),
        |e, pi| {
            let start = e.initial_state();
            config.boost.normalize(e.parallel_sample().rollout(start, |h, s| pi.action(h, s)), horizon)
        },
        eps,
        rho,
        delta,
        xi,
        &config.boost,
    )
}
