//! Instance generators.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{RewardDist, TabularMdp};

/// Parameters for [`random_mdp`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomMdpSpec {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    /// Rewards live on the grid `{0, 1/(k-1), ..., 1}`; `k = 1` means all zero.
    #[serde(default = "default_levels")]
    pub reward_levels: usize,
}

fn default_levels() -> usize {
    2
}

impl RandomMdpSpec {
    pub fn new(num_states: usize, num_actions: usize, horizon: usize) -> Self {
        Self { num_states, num_actions, horizon, reward_levels: 2 }
    }
}

fn dirichlet<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Flat-Dirichlet transitions and rewards, initial state 0, range `[0, 1]`.
pub fn random_mdp<R: Rng + ?Sized>(spec: &RandomMdpSpec, rng: &mut R) -> TabularMdp<f64> {
    let (n, k, h) = (spec.num_states, spec.num_actions, spec.horizon);
    let levels = spec.reward_levels.max(1);
    let grid: Vec<f64> = if levels == 1 {
        vec![0.0]
    } else {
        (0..levels).map(|i| i as f64 / (levels - 1) as f64).collect()
    };
    let transitions = (0..h.saturating_sub(1))
        .map(|_| (0..n).map(|_| (0..k).map(|_| dirichlet(n, rng)).collect()).collect())
        .collect();
    let rewards = (0..h)
        .map(|_| {
            (0..n)
                .map(|_| {
                    (0..k)
                        .map(|_| RewardDist::new(grid.clone(), dirichlet(levels, rng)).expect("valid"))
                        .collect()
                })
                .collect()
        })
        .collect();
    TabularMdp::new(0, transitions, rewards, (0.0, 1.0)).expect("generated MDP is valid")
}

/// Rows of a uniform transition kernel.
pub fn uniform_transition_rows(num_states: usize) -> Vec<f64> {
    vec![1.0 / num_states as f64; num_states]
}

/// Deterministic lock: at each step one action (drawn from `rng`) moves the
/// state forward by one, every other action resets to state 0. The only
/// reward is 1 for the advancing action at the last step from the deepest
/// reachable state.
pub fn combination_lock<R: Rng + ?Sized>(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    rng: &mut R,
) -> TabularMdp<f64> {
    assert!(num_states >= 1 && num_actions >= 1 && horizon >= 1);
    let keys: Vec<usize> = (0..horizon).map(|_| rng.random_range(0..num_actions)).collect();
    let transitions = (0..horizon - 1)
        .map(|h| {
            (0..num_states)
                .map(|s| {
                    (0..num_actions)
                        .map(|a| {
                            let mut row = vec![0.0; num_states];
                            let to = if a == keys[h] { (s + 1).min(num_states - 1) } else { 0 };
                            row[to] = 1.0;
                            row
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let deepest = (horizon - 1).min(num_states - 1);
    let rewards = (0..horizon)
        .map(|h| {
            (0..num_states)
                .map(|s| {
                    (0..num_actions)
                        .map(|a| {
                            let hit = h + 1 == horizon && s == deepest && a == keys[h];
                            RewardDist::point(if hit { 1.0 } else { 0.0 })
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    TabularMdp::new(0, transitions, rewards, (0.0, 1.0)).expect("lock is valid")
}
