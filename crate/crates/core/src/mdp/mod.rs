//! Tabular finite-horizon MDPs, policies and state sets.
//!
//! Steps are 0-based: an MDP with horizon `H` has steps `0..H`, and step
//! `H - 1` is terminal (it has rewards but no transitions).

mod generators;
mod io;
mod oracle;
mod sim;

pub use generators::{combination_lock, random_mdp, uniform_transition_rows, RandomMdpSpec};
pub use io::{read_mdp, write_mdp, MdpFile, FORMAT_VERSION};
pub use oracle::{
    max_reachability, optimal_policy, optimal_values, policy_values, q_values, reachability,
    reachability_table, state_visit_distribution, truncate_mdp, value_of_policy,
};
pub use sim::{
    parallel_sample, sample_index, simulate_episode, EpisodicEnv, ParallelSample, Simulator,
    StepOutcome, Trajectory,
};

use num::BigRational;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Tolerance for probability vectors summing to one.
pub const PROB_TOL: f64 = 1e-9;
const RENORMALIZE_BELOW: f64 = 1e-12;

/// Finite reward distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardDist<T> {
    support: Vec<T>,
    probs: Vec<T>,
}

impl<T: Scalar> RewardDist<T> {
    /// Validates lengths and nonnegativity, renormalizing sums within [`PROB_TOL`].
    pub fn new(support: Vec<T>, probs: Vec<T>) -> Result<Self> {
        if support.is_empty() || support.len() != probs.len() {
            return Err(Error::InvalidMdp(format!(
                "reward support has {} points and {} probabilities",
                support.len(),
                probs.len()
            )));
        }
        let probs = normalize(probs).map_err(|e| Error::InvalidMdp(format!("reward {e}")))?;
        Ok(Self { support, probs })
    }

    pub fn point(x: T) -> Self {
        Self { support: vec![x], probs: vec![T::one()] }
    }

    /// Reward 1 with probability `p`, else 0.
    pub fn bernoulli(p: T) -> Self {
        Self { support: vec![T::zero(), T::one()], probs: vec![T::one() - p.clone(), p] }
    }

    pub fn support(&self) -> &[T] {
        &self.support
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn mean(&self) -> T {
        self.support
            .iter()
            .zip(&self.probs)
            .fold(T::zero(), |acc, (x, p)| acc + x.clone() * p.clone())
    }

    pub fn min(&self) -> T {
        self.support.iter().cloned().reduce(T::min_of).expect("nonempty support")
    }

    pub fn max(&self) -> T {
        self.support.iter().cloned().reduce(T::max_of).expect("nonempty support")
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Result<RewardDist<U>> {
        RewardDist::new(
            self.support.iter().map(&f).collect(),
            self.probs.iter().map(&f).collect(),
        )
    }

    /// Merges repeated support points and drops zero-probability ones.
    pub(crate) fn compact(self) -> Self {
        let mut pairs: Vec<(T, T)> = self
            .support
            .into_iter()
            .zip(self.probs)
            .filter(|(_, p)| *p > T::zero())
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("comparable rewards"));
        let mut support: Vec<T> = Vec::with_capacity(pairs.len());
        let mut probs: Vec<T> = Vec::with_capacity(pairs.len());
        for (x, p) in pairs {
            if support.last() == Some(&x) {
                let last = probs.pop().unwrap();
                probs.push(last + p);
            } else {
                support.push(x);
                probs.push(p);
            }
        }
        Self { support, probs }
    }
}

/// Gap between one and the next representable value; tiny for exact types.
fn unit_roundoff<T: Scalar>() -> f64 {
    let mut e = 1.0f64;
    for _ in 0..64 {
        let half = e / 2.0;
        if T::one() + T::lit(half) == T::one() {
            return e;
        }
        e = half;
    }
    e
}

pub(crate) fn normalize<T: Scalar>(probs: Vec<T>) -> std::result::Result<Vec<T>, String> {
    if probs.iter().any(|p| *p < T::zero()) {
        return Err("probabilities must be nonnegative".into());
    }
    let sum = probs.iter().cloned().fold(T::zero(), |a, b| a + b);
    let gap = sum.abs_diff(&T::one());
    // narrow floats accumulate more than PROB_TOL of rounding over a row
    let tol = PROB_TOL.max(4.0 * probs.len() as f64 * unit_roundoff::<T>());
    if gap > T::lit(tol) {
        return Err(format!("probabilities sum to {:?}", sum.approx()));
    }
    // rounding-level gaps are left alone so float rows survive a save/load cycle
    if gap <= T::lit(RENORMALIZE_BELOW) {
        Ok(probs)
    } else {
        Ok(probs.into_iter().map(|p| p / sum.clone()).collect())
    }
}

/// Finite-horizon MDP with a fixed initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularMdp<T> {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    initial_state: usize,
    reward_range: (T, T),
    // [h][s][a][s'] for h in 0..H-1
    transitions: Vec<T>,
    // [h][s][a]
    rewards: Vec<RewardDist<T>>,
}

impl<T: Scalar> TabularMdp<T> {
    /// Builds and validates an MDP.
    ///
    /// `transitions` has `H - 1` layers indexed `[h][s][a][s']`; `rewards` has
    /// `H` layers indexed `[h][s][a]`. Rows within [`PROB_TOL`] of summing to
    /// one are renormalized, others are rejected.
    pub fn new(
        initial_state: usize,
        transitions: Vec<Vec<Vec<Vec<T>>>>,
        rewards: Vec<Vec<Vec<RewardDist<T>>>>,
        reward_range: (T, T),
    ) -> Result<Self> {
        let horizon = rewards.len();
        if horizon == 0 {
            return Err(Error::InvalidMdp("horizon must be at least 1".into()));
        }
        let num_states = rewards[0].len();
        if num_states == 0 {
            return Err(Error::InvalidMdp("need at least one state".into()));
        }
        let num_actions = rewards[0][0].len();
        if num_actions == 0 {
            return Err(Error::InvalidMdp("need at least one action".into()));
        }
        if initial_state >= num_states {
            return Err(Error::InvalidMdp(format!(
                "initial state {initial_state} out of range for {num_states} states"
            )));
        }
        if transitions.len() + 1 != horizon {
            return Err(Error::InvalidMdp(format!(
                "expected {} transition layers for horizon {horizon}, got {}",
                horizon - 1,
                transitions.len()
            )));
        }
        if reward_range.0 > reward_range.1 {
            return Err(Error::InvalidMdp("reward range is empty".into()));
        }

        let mut flat_t = Vec::with_capacity((horizon - 1) * num_states * num_actions * num_states);
        for (h, layer) in transitions.into_iter().enumerate() {
            check_len(layer.len(), num_states, || format!("transitions[{h}]"))?;
            for (s, row_s) in layer.into_iter().enumerate() {
                check_len(row_s.len(), num_actions, || format!("transitions[{h}][{s}]"))?;
                for (a, row) in row_s.into_iter().enumerate() {
                    check_len(row.len(), num_states, || format!("transitions[{h}][{s}][{a}]"))?;
                    let row = normalize(row).map_err(|e| {
                        Error::InvalidMdp(format!("transitions[{h}][{s}][{a}]: {e}"))
                    })?;
                    flat_t.extend(row);
                }
            }
        }

        let mut flat_r = Vec::with_capacity(horizon * num_states * num_actions);
        for (h, layer) in rewards.into_iter().enumerate() {
            check_len(layer.len(), num_states, || format!("rewards[{h}]"))?;
            for (s, row) in layer.into_iter().enumerate() {
                check_len(row.len(), num_actions, || format!("rewards[{h}][{s}]"))?;
                for (a, dist) in row.into_iter().enumerate() {
                    let dist = RewardDist::new(dist.support, dist.probs)?;
                    if dist.min() < reward_range.0 || dist.max() > reward_range.1 {
                        return Err(Error::InvalidMdp(format!(
                            "rewards[{h}][{s}][{a}] leaves the declared range [{:?}, {:?}]",
                            reward_range.0.approx(),
                            reward_range.1.approx()
                        )));
                    }
                    flat_r.push(dist);
                }
            }
        }

        Ok(Self {
            num_states,
            num_actions,
            horizon,
            initial_state,
            reward_range,
            transitions: flat_t,
            rewards: flat_r,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn reward_range(&self) -> (T, T) {
        self.reward_range.clone()
    }

    /// Next-state distribution at a non-terminal step.
    pub fn transition(&self, h: usize, s: usize, a: usize) -> &[T] {
        assert!(h + 1 < self.horizon, "step {h} is terminal");
        let n = self.num_states;
        let start = ((h * n + s) * self.num_actions + a) * n;
        &self.transitions[start..start + n]
    }

    pub fn reward(&self, h: usize, s: usize, a: usize) -> &RewardDist<T> {
        &self.rewards[(h * self.num_states + s) * self.num_actions + a]
    }

    pub fn mean_reward(&self, h: usize, s: usize, a: usize) -> T {
        self.reward(h, s, a).mean()
    }

    pub fn is_terminal_step(&self, h: usize) -> bool {
        h + 1 == self.horizon
    }

    /// Nested `[h][s][a][s']` copy of the transition layers.
    pub fn transition_layers(&self) -> Vec<Vec<Vec<Vec<T>>>> {
        (0..self.horizon - 1)
            .map(|h| {
                (0..self.num_states)
                    .map(|s| (0..self.num_actions).map(|a| self.transition(h, s, a).to_vec()).collect())
                    .collect()
            })
            .collect()
    }

    /// Nested `[h][s][a]` copy of the reward distributions.
    pub fn reward_layers(&self) -> Vec<Vec<Vec<RewardDist<T>>>> {
        (0..self.horizon)
            .map(|h| {
                (0..self.num_states)
                    .map(|s| (0..self.num_actions).map(|a| self.reward(h, s, a).clone()).collect())
                    .collect()
            })
            .collect()
    }

    /// Converts every probability and reward through `f` and revalidates.
    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Result<TabularMdp<U>> {
        let transitions = self
            .transition_layers()
            .into_iter()
            .map(|l| l.into_iter().map(|r| r.into_iter().map(|row| row.iter().map(&f).collect()).collect()).collect())
            .collect();
        let rewards = self
            .reward_layers()
            .into_iter()
            .map(|l| {
                l.into_iter()
                    .map(|r| r.into_iter().map(|d| d.map(&f)).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        TabularMdp::new(
            self.initial_state,
            transitions,
            rewards,
            (f(&self.reward_range.0), f(&self.reward_range.1)),
        )
    }

    /// Prepends a step that draws the state from `initial`.
    ///
    /// The new step has deterministic reward 0 under every action, so values
    /// of the embedded MDP equal expected values under the initial
    /// distribution. The declared range is widened to contain 0.
    pub fn embed_initial_distribution(&self, initial: Vec<T>) -> Result<Self> {
        check_len(initial.len(), self.num_states, || "initial distribution".into())?;
        let row = normalize(initial).map_err(|e| Error::InvalidMdp(format!("initial distribution: {e}")))?;
        let first: Vec<Vec<Vec<T>>> =
            vec![vec![row; self.num_actions]; self.num_states];
        let mut transitions = vec![first];
        transitions.extend(self.transition_layers());
        let mut rewards = vec![vec![vec![RewardDist::point(T::zero()); self.num_actions]; self.num_states]];
        rewards.extend(self.reward_layers());
        let range = (
            self.reward_range.0.clone().min_of(T::zero()),
            self.reward_range.1.clone().max_of(T::zero()),
        );
        Self::new(0, transitions, rewards, range)
    }

    pub fn check_policy(&self, pi: &Policy) -> Result<()> {
        if pi.horizon() != self.horizon || pi.num_states() != self.num_states {
            return Err(Error::Shape(format!(
                "policy is {}x{}, MDP is {}x{}",
                pi.horizon(),
                pi.num_states(),
                self.horizon,
                self.num_states
            )));
        }
        if let Some(a) = pi.actions.iter().find(|&&a| a >= self.num_actions) {
            return Err(Error::Shape(format!("policy action {a} out of range")));
        }
        Ok(())
    }

    pub fn check_combination(&self, set: &StateCombination) -> Result<()> {
        if set.horizon() != self.horizon || set.num_states() != self.num_states {
            return Err(Error::Shape(format!(
                "state combination is {}x{}, MDP is {}x{}",
                set.horizon(),
                set.num_states(),
                self.horizon,
                self.num_states
            )));
        }
        Ok(())
    }
}

impl TabularMdp<f64> {
    /// Exact rational copy; rows are rescaled so they sum to exactly one.
    pub fn to_exact(&self) -> Result<TabularMdp<BigRational>> {
        let mut m = self.map_scalar(|x| crate::scalar::exact(*x))?;
        let k = m.num_states;
        for row in m.transitions.chunks_mut(k) {
            rescale(row);
        }
        for dist in &mut m.rewards {
            rescale(&mut dist.probs);
        }
        Ok(m)
    }
}

fn rescale<T: Scalar>(row: &mut [T]) {
    let sum = row.iter().cloned().fold(T::zero(), |a, b| a + b);
    if sum != T::one() {
        for p in row.iter_mut() {
            *p = p.clone() / sum.clone();
        }
    }
}

fn check_len(got: usize, want: usize, what: impl Fn() -> String) -> Result<()> {
    if got != want {
        return Err(Error::InvalidMdp(format!("{} has length {got}, expected {want}", what())));
    }
    Ok(())
}

/// Deterministic Markov policy, one action per `(step, state)`.
///
/// The derived ordering compares row-major action arrays, which is the
/// canonical identity used for replicability accounting.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Policy {
    horizon: usize,
    num_states: usize,
    actions: Vec<usize>,
}

impl Policy {
    pub fn new(horizon: usize, num_states: usize, actions: Vec<usize>) -> Result<Self> {
        if actions.len() != horizon * num_states {
            return Err(Error::Shape(format!(
                "{} actions for a {horizon}x{num_states} policy",
                actions.len()
            )));
        }
        Ok(Self { horizon, num_states, actions })
    }

    pub fn constant(horizon: usize, num_states: usize, action: usize) -> Self {
        Self { horizon, num_states, actions: vec![action; horizon * num_states] }
    }

    pub fn from_fn(horizon: usize, num_states: usize, mut f: impl FnMut(usize, usize) -> usize) -> Self {
        let mut actions = Vec::with_capacity(horizon * num_states);
        for h in 0..horizon {
            for s in 0..num_states {
                actions.push(f(h, s));
            }
        }
        Self { horizon, num_states, actions }
    }

    /// Policy number `index` in mixed radix `num_actions` (step-major).
    pub fn enumerate(horizon: usize, num_states: usize, num_actions: usize, mut index: u64) -> Self {
        let mut actions = vec![0; horizon * num_states];
        for slot in actions.iter_mut().rev() {
            *slot = (index % num_actions as u64) as usize;
            index /= num_actions as u64;
        }
        Self { horizon, num_states, actions }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn action(&self, h: usize, s: usize) -> usize {
        self.actions[h * self.num_states + s]
    }

    pub fn set(&mut self, h: usize, s: usize, a: usize) {
        self.actions[h * self.num_states + s] = a;
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    /// First 16 hex digits of SHA-256 over the shape and row-major actions.
    pub fn canonical_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.horizon as u64).to_le_bytes());
        h.update((self.num_states as u64).to_le_bytes());
        for &a in &self.actions {
            h.update((a as u64).to_le_bytes());
        }
        let digest = h.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One subset of states per step.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateCombination {
    horizon: usize,
    num_states: usize,
    member: Vec<bool>,
}

impl StateCombination {
    pub fn empty(horizon: usize, num_states: usize) -> Self {
        Self { horizon, num_states, member: vec![false; horizon * num_states] }
    }

    pub fn full(horizon: usize, num_states: usize) -> Self {
        Self { horizon, num_states, member: vec![true; horizon * num_states] }
    }

    pub fn from_fn(horizon: usize, num_states: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut set = Self::empty(horizon, num_states);
        for h in 0..horizon {
            for s in 0..num_states {
                set.member[h * num_states + s] = f(h, s);
            }
        }
        set
    }

    /// Builds from a flat `[h][s]` bitmap.
    pub fn from_bits(horizon: usize, num_states: usize, member: Vec<bool>) -> Result<Self> {
        if member.len() != horizon * num_states {
            return Err(Error::Shape(format!("{} bits for {horizon}x{num_states}", member.len())));
        }
        Ok(Self { horizon, num_states, member })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn contains(&self, h: usize, s: usize) -> bool {
        self.member[h * self.num_states + s]
    }

    pub fn set(&mut self, h: usize, s: usize, value: bool) {
        self.member[h * self.num_states + s] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.member
    }

    pub fn len(&self) -> usize {
        self.member.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.member.iter().zip(&other.member).all(|(a, b)| !a || *b)
    }
}

/// Per-step assignment of states to tiers `1..=L`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TieredPartition {
    horizon: usize,
    num_states: usize,
    num_tiers: usize,
    tier: Vec<usize>,
}

impl TieredPartition {
    pub fn new(horizon: usize, num_states: usize, num_tiers: usize, tier: Vec<usize>) -> Result<Self> {
        if num_tiers == 0 {
            return Err(Error::Shape("need at least one tier".into()));
        }
        if tier.len() != horizon * num_states {
            return Err(Error::Shape(format!("{} tiers for {horizon}x{num_states}", tier.len())));
        }
        if let Some(t) = tier.iter().find(|&&t| t == 0 || t > num_tiers) {
            return Err(Error::Shape(format!("tier {t} outside 1..={num_tiers}")));
        }
        Ok(Self { horizon, num_states, num_tiers, tier })
    }

    /// Every state in tier 1.
    pub fn trivial(horizon: usize, num_states: usize, num_tiers: usize) -> Self {
        assert!(num_tiers >= 1);
        Self { horizon, num_states, num_tiers, tier: vec![1; horizon * num_states] }
    }

    /// Every state in the fallback tier `L`.
    pub fn all_fallback(horizon: usize, num_states: usize, num_tiers: usize) -> Self {
        assert!(num_tiers >= 1);
        Self { horizon, num_states, num_tiers, tier: vec![num_tiers; horizon * num_states] }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_tiers(&self) -> usize {
        self.num_tiers
    }

    pub fn tier(&self, h: usize, s: usize) -> usize {
        self.tier[h * self.num_states + s]
    }

    pub fn is_fallback(&self, h: usize, s: usize) -> bool {
        self.tier(h, s) == self.num_tiers
    }

    /// States of tier `level` at step `h`, in increasing order.
    pub fn members(&self, h: usize, level: usize) -> Vec<usize> {
        (0..self.num_states).filter(|&s| self.tier(h, s) == level).collect()
    }
}

/// Number of tiers for a niceness parameter: `ceil(log2(1/zeta))`, at least 1.
pub fn tiers_for_zeta(zeta: f64) -> usize {
    assert!(zeta > 0.0 && zeta < 1.0, "zeta must lie in (0, 1)");
    ((1.0 / zeta).log2() - 1e-12).ceil().max(1.0) as usize
}
