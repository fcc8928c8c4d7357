//! Reward-free optimistic exploration and replicable tiered exploration.

use serde::{Deserialize, Serialize};

use crate::backward::{OfflineDatasets, Record, TierBounds};
use crate::bandit::{Mode, DEFAULT_JOINT_CAP};
use crate::error::{invalid, Error, Result};
use crate::mdp::{
    simulate_episode, state_visit_distribution, tiers_for_zeta, EpisodicEnv, Policy, StateCombination, StepOutcome,
    TabularMdp, TieredPartition, Trajectory,
};
use crate::primitives::BernoulliProduct;
use crate::scalar::Scalar;
use crate::seed::SharedSeed;

/// Learning rate `(H + 1) / (H + t)`.
pub fn learning_rate(horizon: usize, t: u64) -> f64 {
    (horizon as f64 + 1.0) / (horizon as f64 + t as f64)
}

/// Episodes `SAH^5 ln(SAH/iota) / lambda^2`, scaled and rounded up.
pub fn theory_episodes(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    lambda: f64,
    iota: f64,
    desk_scale: f64,
) -> usize {
    let sah = (num_states * num_actions * horizon) as f64;
    let k = sah * (horizon as f64).powi(4) * (sah / iota).ln().max(1.0) / (lambda * lambda);
    ((k * desk_scale).ceil() as usize).max(1)
}

/// Optimistic Q-learning with UCB bonuses.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QAgent {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    planned_episodes: usize,
    bonus_c: f64,
    q: Vec<f64>,
    // H + 1 rows; the last stays 0
    v: Vec<f64>,
    visits: Vec<u64>,
    episodes: usize,
}

impl QAgent {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        planned_episodes: usize,
        bonus_c: f64,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 || horizon == 0 {
            return Err(invalid("agent needs at least one state, action and step"));
        }
        if planned_episodes == 0 {
            return Err(invalid("agent needs at least one episode"));
        }
        let h = horizon as f64;
        let mut v = vec![h; (horizon + 1) * num_states];
        v[horizon * num_states..].iter_mut().for_each(|x| *x = 0.0);
        Ok(Self {
            horizon,
            num_states,
            num_actions,
            planned_episodes,
            bonus_c,
            q: vec![h; horizon * num_states * num_actions],
            v,
            visits: vec![0; horizon * num_states * num_actions],
            episodes: 0,
        })
    }

    fn index(&self, h: usize, s: usize, a: usize) -> usize {
        (h * self.num_states + s) * self.num_actions + a
    }

    pub fn q(&self, h: usize, s: usize, a: usize) -> f64 {
        self.q[self.index(h, s, a)]
    }

    /// `V_h(s)`, with `h = H` giving 0.
    pub fn v(&self, h: usize, s: usize) -> f64 {
        self.v[h * self.num_states + s]
    }

    pub fn visits(&self, h: usize, s: usize, a: usize) -> u64 {
        self.visits[self.index(h, s, a)]
    }

    pub fn episodes(&self) -> usize {
        self.episodes
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// `c sqrt(H^3 ln(SAKH) / t)`.
    pub fn bonus(&self, t: u64) -> f64 {
        let log = ((self.num_states * self.num_actions * self.planned_episodes * self.horizon) as f64).ln();
        self.bonus_c * ((self.horizon as f64).powi(3) * log / t as f64).sqrt()
    }

    /// Greedy action; ties go to the lowest index.
    pub fn greedy(&self, h: usize, s: usize) -> usize {
        let row = &self.q[self.index(h, s, 0)..self.index(h, s, 0) + self.num_actions];
        let mut best = 0;
        for (a, &x) in row.iter().enumerate() {
            if x > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn run_episode<E: EpisodicEnv + ?Sized>(&mut self, env: &mut E) -> Trajectory {
        assert_eq!(
            (env.num_states(), env.num_actions(), env.horizon()),
            (self.num_states, self.num_actions, self.horizon),
            "agent and environment shapes differ"
        );
        let mut traj = Trajectory::default();
        let mut s = env.reset();
        for h in 0..self.horizon {
            let a = self.greedy(h, s);
            let out = env.step(a);
            let i = self.index(h, s, a);
            self.visits[i] += 1;
            let t = self.visits[i];
            let alpha = learning_rate(self.horizon, t);
            let cont = out.next.map_or(0.0, |x| self.v(h + 1, x));
            self.q[i] = (1.0 - alpha) * self.q[i] + alpha * (out.reward + cont + self.bonus(t));
            let best = self.q[self.index(h, s, 0)..self.index(h, s, 0) + self.num_actions]
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            self.v[h * self.num_states + s] = best.min(self.horizon as f64);
            traj.states.push(s);
            traj.actions.push(a);
            traj.rewards.push(out.reward);
            traj.next_states.push(out.next);
            match out.next {
                Some(x) => s = x,
                None => break,
            }
        }
        self.episodes += 1;
        traj
    }
}

/// Runs a fresh agent for `episodes` episodes.
pub fn q_agent<E: EpisodicEnv + ?Sized>(env: &mut E, episodes: usize, bonus_c: f64) -> Result<(QAgent, Vec<Trajectory>)> {
    let mut agent = QAgent::new(env.num_states(), env.num_actions(), env.horizon(), episodes, bonus_c)?;
    let trajectories = (0..episodes).map(|_| agent.run_episode(env)).collect();
    Ok((agent, trajectories))
}

/// Presents `2A` actions over an environment with `A`: action `A + a` takes
/// `a`, stores the outcome, and ends the episode. All rewards read as 0.
pub struct PhantomEnv<'a, E: ?Sized> {
    inner: &'a mut E,
    data: &'a mut OfflineDatasets,
    step: usize,
    state: usize,
    active: bool,
}

impl<'a, E: EpisodicEnv + ?Sized> PhantomEnv<'a, E> {
    pub fn new(inner: &'a mut E, data: &'a mut OfflineDatasets) -> Self {
        Self { inner, data, step: 0, state: 0, active: false }
    }
}

impl<E: EpisodicEnv + ?Sized> EpisodicEnv for PhantomEnv<'_, E> {
    fn num_states(&self) -> usize {
        self.inner.num_states()
    }

    fn num_actions(&self) -> usize {
        2 * self.inner.num_actions()
    }

    fn horizon(&self) -> usize {
        self.inner.horizon()
    }

    fn reset(&mut self) -> usize {
        self.step = 0;
        self.state = self.inner.reset();
        self.active = true;
        self.state
    }

    fn step(&mut self, action: usize) -> StepOutcome {
        assert!(self.active, "step called outside an episode");
        let k = self.inner.num_actions();
        let real = action % k;
        let out = self.inner.step(real);
        if action >= k {
            self.data
                .push(self.step, self.state, real, Record { next: out.next, reward: out.reward })
                .expect("environment produced an out-of-range record");
            self.active = false;
            return StepOutcome { reward: 0.0, next: None };
        }
        match out.next {
            Some(x) => {
                self.step += 1;
                self.state = x;
            }
            None => self.active = false,
        }
        StepOutcome { reward: 0.0, next: out.next }
    }
}

/// States with some action holding fewer than `H` records.
pub fn under_explored(d: &OfflineDatasets) -> StateCombination {
    let threshold = d.horizon();
    StateCombination::from_fn(d.horizon(), d.num_states(), |h, s| d.min_count(h, s) < threshold)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExplorationOutput {
    pub under_explored: StateCombination,
    pub datasets: OfflineDatasets,
    pub episodes_used: usize,
}

/// Incremental phantom-action exploration, inspectable between episodes.
pub struct QExplorer {
    agent: QAgent,
    data: OfflineDatasets,
}

impl QExplorer {
    pub fn new(num_states: usize, num_actions: usize, horizon: usize, planned_episodes: usize, bonus_c: f64) -> Result<Self> {
        Ok(Self {
            agent: QAgent::new(num_states, 2 * num_actions, horizon, planned_episodes, bonus_c)?,
            data: OfflineDatasets::new(horizon, num_states, num_actions),
        })
    }

    /// One episode; returns the number of records it added (0 or 1).
    pub fn run_episode<E: EpisodicEnv + ?Sized>(&mut self, env: &mut E) -> usize {
        let before = self.data.total();
        self.agent.run_episode(&mut PhantomEnv::new(env, &mut self.data));
        let added = self.data.total() - before;
        assert!(added <= 1, "more than one phantom record in an episode");
        added
    }

    pub fn agent(&self) -> &QAgent {
        &self.agent
    }

    pub fn datasets(&self) -> &OfflineDatasets {
        &self.data
    }

    pub fn under_explored(&self) -> StateCombination {
        under_explored(&self.data)
    }

    pub fn finish(self) -> ExplorationOutput {
        ExplorationOutput { under_explored: under_explored(&self.data), episodes_used: self.agent.episodes(), datasets: self.data }
    }
}

/// `episodes` episodes of phantom-action exploration.
pub fn q_explore<E: EpisodicEnv + ?Sized>(env: &mut E, episodes: usize, bonus_c: f64) -> Result<ExplorationOutput> {
    let mut ex = QExplorer::new(env.num_states(), env.num_actions(), env.horizon(), episodes, bonus_c)?;
    for _ in 0..episodes {
        ex.run_episode(env);
    }
    Ok(ex.finish())
}

/// Frequency `mu_hat[h][s]` of `s` being under-explored at `h` across runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnderExploredMean {
    pub horizon: usize,
    pub num_states: usize,
    /// Flat `[h][s]`.
    pub mu_hat: Vec<f64>,
    pub counts: Vec<usize>,
    /// Per-run under-explored sets.
    pub runs: Vec<StateCombination>,
}

impl UnderExploredMean {
    pub fn from_runs(horizon: usize, num_states: usize, runs: Vec<StateCombination>) -> Result<Self> {
        if runs.is_empty() {
            return Err(invalid("need at least one run"));
        }
        let mut counts = vec![0; horizon * num_states];
        for r in &runs {
            for (c, &b) in counts.iter_mut().zip(r.bits()) {
                *c += b as usize;
            }
        }
        let m = runs.len() as f64;
        let mu_hat = counts.iter().map(|&c| c as f64 / m).collect();
        Ok(Self { horizon, num_states, mu_hat, counts, runs })
    }

    pub fn mu(&self, h: usize, s: usize) -> f64 {
        self.mu_hat[h * self.num_states + s]
    }

    pub fn num_runs(&self) -> usize {
        self.runs.len()
    }
}

/// Runs `q_explore` `runs` times in sequence on `env`.
pub fn estimate_under_explored_mean<E: EpisodicEnv + ?Sized>(
    env: &mut E,
    runs: usize,
    episodes: usize,
    bonus_c: f64,
) -> Result<UnderExploredMean> {
    if runs == 0 {
        return Err(invalid("need at least one run"));
    }
    let sets = (0..runs)
        .map(|_| q_explore(env, episodes, bonus_c).map(|o| o.under_explored))
        .collect::<Result<Vec<_>>>()?;
    UnderExploredMean::from_runs(env.horizon(), env.num_states(), sets)
}

/// `sum_h sum_s P[x_h = s] mu[h][s]`: expected reachability of a set drawn from `B(mu)`.
pub fn mean_reachability<T: Scalar>(mdp: &TabularMdp<T>, pi: &Policy, mu: &[T]) -> Result<T> {
    let n = mdp.num_states();
    if mu.len() != mdp.horizon() * n {
        return Err(Error::Shape("one mean per (step, state)".into()));
    }
    let mut total = T::zero();
    for h in 0..mdp.horizon() {
        let x = state_visit_distribution(mdp, pi, h)?;
        for s in 0..n {
            total = total + x[s].clone() * mu[h * n + s].clone();
        }
    }
    Ok(total)
}

/// Implicit sample bounds `M H (1 - mu) / 2`, zeroed where `1 - mu` falls
/// below `1 / (10 m ln(SH/kappa))`.
pub fn implicit_bounds(
    mu: &[f64],
    num_states: usize,
    horizon: usize,
    mean_runs: usize,
    collect_runs: usize,
    kappa: f64,
) -> Vec<f64> {
    let log = ((num_states * horizon) as f64 / kappa).ln().max(1.0);
    let floor = 1.0 / (10.0 * mean_runs as f64 * log);
    mu.iter()
        .map(|&m| {
            let gap = 1.0 - m;
            if gap < floor {
                0.0
            } else {
                collect_runs as f64 * horizon as f64 * gap / 2.0
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExploreConfig {
    pub mode: Mode,
    pub desk_scale: f64,
    pub bonus_c: f64,
    /// Runs used to estimate the under-explored mean.
    pub mean_runs: Option<usize>,
    /// Runs used to collect datasets.
    pub collect_runs: Option<usize>,
    /// Episodes per exploration run.
    pub episodes: Option<usize>,
    pub iota: Option<f64>,
    pub joint_cap: usize,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Exact,
            desk_scale: 1.0,
            bonus_c: 1.0,
            mean_runs: None,
            collect_runs: None,
            episodes: None,
            iota: None,
            joint_cap: DEFAULT_JOINT_CAP,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplorePlan {
    pub mean_runs: usize,
    pub collect_runs: usize,
    pub episodes: usize,
    pub iota: f64,
}

impl ExploreConfig {
    /// Run counts and episode budget for one single-tier call.
    pub fn plan(&self, num_states: usize, num_actions: usize, horizon: usize, kappa: f64, lambda: f64, beta: f64) -> ExplorePlan {
        let sh = (num_states * horizon) as f64;
        let scaled = |x: f64| ((x * self.desk_scale).ceil() as usize).max(1);
        let mean_runs = self.mean_runs.unwrap_or_else(|| scaled(sh * (sh / kappa).ln().max(1.0) / (kappa * kappa)));
        let collect_runs = self.collect_runs.unwrap_or_else(|| scaled(2.0 * sh / (kappa * beta).powi(2)));
        let iota = self.iota.unwrap_or_else(|| f64::min(1e-3, kappa / (10.0 * (mean_runs + collect_runs) as f64)));
        let episodes = self
            .episodes
            .unwrap_or_else(|| theory_episodes(num_states, num_actions, horizon, lambda * kappa, iota, self.desk_scale));
        ExplorePlan { mean_runs, collect_runs, episodes, iota }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepExploreOutput {
    pub under_explored: StateCombination,
    pub datasets: OfflineDatasets,
    /// Implicit bounds `m[h][s]`, flat.
    pub bounds: Vec<f64>,
    pub mean: UnderExploredMean,
    pub plan: ExplorePlan,
    pub episodes_used: usize,
}

/// Single-tier replicable exploration.
///
/// Estimates the under-explored mean, draws the set from `B(mu_hat)` with
/// shared randomness, then collects datasets from fresh runs.
pub fn rep_explore<E: EpisodicEnv + ?Sized>(
    env: &mut E,
    kappa: f64,
    lambda: f64,
    beta: f64,
    xi: &SharedSeed,
    config: &ExploreConfig,
) -> Result<RepExploreOutput> {
    for (name, x) in [("kappa", kappa), ("lambda", lambda), ("beta", beta)] {
        if !(x > 0.0 && x < 1.0) {
            return Err(invalid(format!("{name} must lie in (0, 1), got {x}")));
        }
    }
    let (n, k, horizon) = (env.num_states(), env.num_actions(), env.horizon());
    let plan = config.plan(n, k, horizon, kappa, lambda, beta);
    let mean = estimate_under_explored_mean(env, plan.mean_runs, plan.episodes, config.bonus_c)?;
    let product = BernoulliProduct::new(mean.mu_hat.clone())?;
    let seed = xi.child("combination");
    let bits = match config.mode {
        Mode::Exact => product.corr_samp_joint(&seed, config.joint_cap).map_err(|e| match e {
            Error::DomainCap { size, cap } => {
                log::warn!("state combination domain 2^{} exceeds the cap; use efficient mode", n * horizon);
                Error::DomainCap { size, cap }
            }
            e => e,
        })?,
        Mode::Efficient => product.corr_samp_product(&seed),
    };
    let set = StateCombination::from_bits(horizon, n, bits)?;
    let mut datasets = OfflineDatasets::new(horizon, n, k);
    for _ in 0..plan.collect_runs {
        datasets.merge(&q_explore(env, plan.episodes, config.bonus_c)?.datasets)?;
    }
    let bounds = implicit_bounds(&mean.mu_hat, n, horizon, plan.mean_runs, plan.collect_runs, kappa);
    let episodes_used = (plan.mean_runs + plan.collect_runs) * plan.episodes;
    Ok(RepExploreOutput { under_explored: set, datasets, bounds, mean, plan, episodes_used })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelExploreOutput {
    pub partition: TieredPartition,
    pub datasets: OfflineDatasets,
    pub bounds: TierBounds,
    /// One single-tier result per level `1..L`.
    pub levels: Vec<RepExploreOutput>,
    pub kappa: f64,
    pub episodes_used: usize,
}

/// Default per-level `kappa = 0.01 / log2(1/zeta)`.
pub fn level_kappa(zeta: f64) -> f64 {
    0.01 / (1.0 / zeta).log2().ceil().max(1.0)
}

/// Assembles tiers from the per-level under-explored sets `I^1..I^{L-1}`.
pub fn partition_from_levels(horizon: usize, num_states: usize, sets: &[StateCombination]) -> Result<TieredPartition> {
    let top = sets.len() + 1;
    let mut tier = vec![top; horizon * num_states];
    for h in 0..horizon {
        for s in 0..num_states {
            if let Some(i) = sets.iter().position(|set| !set.contains(h, s)) {
                tier[h * num_states + s] = i + 1;
            }
        }
    }
    TieredPartition::new(horizon, num_states, top, tier)
}

/// Tiered exploration: single-tier calls at `lambda = 2^-l`, `beta = 2^l zeta`.
pub fn rep_level_explore<E: EpisodicEnv + ?Sized>(
    env: &mut E,
    zeta: f64,
    xi: &SharedSeed,
    config: &ExploreConfig,
    kappa: Option<f64>,
) -> Result<LevelExploreOutput> {
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(invalid(format!("zeta must lie in (0, 1), got {zeta}")));
    }
    let (n, k, horizon) = (env.num_states(), env.num_actions(), env.horizon());
    let top = tiers_for_zeta(zeta);
    let kappa = kappa.unwrap_or_else(|| level_kappa(zeta));
    let mut levels = Vec::with_capacity(top.saturating_sub(1));
    let mut datasets = OfflineDatasets::new(horizon, n, k);
    let mut bounds = TierBounds::new(horizon, n, top);
    for level in 1..top {
        let lambda = 0.5f64.powi(level as i32);
        let beta = (2f64.powi(level as i32) * zeta).min(1.0 - f64::EPSILON);
        let out = rep_explore(env, kappa, lambda, beta, &xi.split("level", level as u64), config)?;
        datasets.merge(&out.datasets)?;
        for h in 0..horizon {
            for s in 0..n {
                bounds.set(level, h, s, out.bounds[h * n + s]);
            }
        }
        levels.push(out);
    }
    let sets: Vec<_> = levels.iter().map(|o| o.under_explored.clone()).collect();
    let partition = partition_from_levels(horizon, n, &sets)?;
    let episodes_used = levels.iter().map(|o| o.episodes_used).sum();
    Ok(LevelExploreOutput { partition, datasets, bounds, levels, kappa, episodes_used })
}

/// Runs an agent's greedy policy once, for diagnostics.
pub fn greedy_episode<E: EpisodicEnv + ?Sized>(agent: &QAgent, env: &mut E) -> Trajectory {
    simulate_episode(env, |h, s| agent.greedy(h, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{max_reachability, RewardDist, Simulator};

    fn single_state(horizon: usize) -> TabularMdp<f64> {
        TabularMdp::new(
            0,
            vec![vec![vec![vec![1.0]]]; horizon - 1],
            vec![vec![vec![RewardDist::point(0.0)]]; horizon],
            (0.0, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn learning_rate_values() {
        assert_eq!(learning_rate(3, 5), 0.5);
        assert_eq!(learning_rate(7, 1), 1.0);
    }

    #[test]
    fn first_update_replaces_q() {
        let m = single_state(2);
        let mut env = Simulator::new(&m, SharedSeed::new(1).stream());
        let (agent, _) = q_agent(&mut env, 1, 1.0).unwrap();
        // step 1 is updated first from V_2 = 0, then step 0 reads the old V_1 = H
        let b1 = agent.bonus(1);
        assert!((agent.q(1, 0, 0) - b1).abs() < 1e-12);
        assert!((agent.q(0, 0, 0) - (2.0 + b1)).abs() < 1e-12);
    }

    #[test]
    fn forced_visitation_counts() {
        let m = single_state(3);
        let mut env = Simulator::new(&m, SharedSeed::new(2).stream());
        let (agent, _) = q_agent(&mut env, 7, 1.0).unwrap();
        for h in 0..3 {
            assert_eq!(agent.visits(h, 0, 0), 7);
            assert!(agent.v(h, 0) <= 3.0 && agent.v(h, 0) >= 0.0);
        }
    }

    #[test]
    fn zero_episodes_rejected() {
        let m = single_state(2);
        let mut env = Simulator::new(&m, SharedSeed::new(3).stream());
        assert!(q_explore(&mut env, 0, 1.0).is_err());
    }

    #[test]
    fn phantom_records_and_explored_set() {
        let m = single_state(2);
        let mut env = Simulator::new(&m, SharedSeed::new(4).stream());
        let out = q_explore(&mut env, 400, 1.0).unwrap();
        assert!(out.datasets.total() <= 400);
        assert!(out.under_explored.is_empty());
        assert_eq!(env.episodes(), 400);
    }

    #[test]
    fn mean_counts_runs() {
        let empty = StateCombination::empty(1, 1);
        let full = StateCombination::full(1, 1);
        let mean = UnderExploredMean::from_runs(1, 1, vec![full, empty.clone(), empty.clone(), empty]).unwrap();
        assert_eq!(mean.mu(0, 0), 0.25);
    }

    #[test]
    fn unreachable_state_stays_under_explored() {
        // state 1 is never entered
        let m = TabularMdp::new(
            0,
            vec![vec![vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]]],
            vec![vec![vec![RewardDist::point(0.0)]; 2]; 2],
            (0.0, 1.0),
        )
        .unwrap();
        let mut env = Simulator::new(&m, SharedSeed::new(5).stream());
        let mean = estimate_under_explored_mean(&mut env, 3, 20, 1.0).unwrap();
        assert_eq!(mean.mu(1, 1), 1.0);
        assert_eq!(mean.mu(0, 1), 1.0);
    }

    #[test]
    fn level_partition_assembly() {
        let (h, n) = (1, 4);
        let i1 = StateCombination::from_bits(h, n, vec![false, true, true, true]).unwrap();
        let i2 = StateCombination::from_bits(h, n, vec![true, false, true, true]).unwrap();
        let p = partition_from_levels(h, n, &[i1, i2]).unwrap();
        assert_eq!((0..n).map(|s| p.tier(0, s)).collect::<Vec<_>>(), vec![1, 2, 3, 3]);
    }

    #[test]
    fn half_zeta_is_single_tier() {
        let m = single_state(2);
        let mut env = Simulator::new(&m, SharedSeed::new(6).stream());
        let out = rep_level_explore(&mut env, 0.5, &SharedSeed::new(7), &ExploreConfig::default(), None).unwrap();
        assert_eq!(out.partition.num_tiers(), 1);
        assert!(out.levels.is_empty());
        assert_eq!(env.episodes(), 0);
    }

    #[test]
    fn quarter_zeta_parameters() {
        assert_eq!(tiers_for_zeta(0.25), 2);
        let cfg = ExploreConfig { mean_runs: Some(2), collect_runs: Some(2), episodes: Some(30), ..Default::default() };
        let m = single_state(2);
        let mut env = Simulator::new(&m, SharedSeed::new(8).stream());
        let out = rep_level_explore(&mut env, 0.25, &SharedSeed::new(9), &cfg, Some(0.2)).unwrap();
        assert_eq!(out.levels.len(), 1);
        assert_eq!(env.episodes() as usize, out.episodes_used);
        assert_eq!(out.episodes_used, 4 * 30);
    }

    #[test]
    fn explored_chain_has_small_reachability() {
        let m = single_state(2);
        let mut env = Simulator::new(&m, SharedSeed::new(10).stream());
        let out = q_explore(&mut env, 400, 1.0).unwrap();
        let (_, r) = max_reachability(&m, &out.under_explored).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn bounds_threshold() {
        let b = implicit_bounds(&[0.0, 0.5, 1.0], 3, 1, 10, 8, 0.1);
        assert_eq!(b, vec![4.0, 2.0, 0.0]);
    }
}
