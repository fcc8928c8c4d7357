//! Episodic and parallel-sampling access to an MDP.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TabularMdp;
use crate::scalar::Scalar;
use crate::seed::Stream;

/// Draws an index from a probability vector by inverse CDF.
pub fn sample_index<T: Scalar, R: Rng + ?Sized>(probs: &[T], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.iter().enumerate() {
        let p = p.approx();
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    /// `None` once the episode has ended.
    pub next: Option<usize>,
}

/// Interactive access to an episodic environment.
pub trait EpisodicEnv {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn horizon(&self) -> usize;
    /// Starts a new episode and returns the initial state.
    fn reset(&mut self) -> usize;
    /// Takes an action in the current state. Panics if no episode is running.
    fn step(&mut self, action: usize) -> StepOutcome;
}

/// Simulator over a known MDP with sample accounting.
///
/// Every step draws one reward and one transition and is charged two
/// samples, so a full episode costs `2H`.
pub struct Simulator<'m, T> {
    mdp: &'m TabularMdp<T>,
    rng: Stream,
    step: usize,
    state: usize,
    active: bool,
    episodes: u64,
    samples: u64,
    parallel_calls: u64,
}

impl<'m, T: Scalar> Simulator<'m, T> {
    pub fn new(mdp: &'m TabularMdp<T>, rng: Stream) -> Self {
        Self {
            mdp,
            rng,
            step: 0,
            state: mdp.initial_state(),
            active: false,
            episodes: 0,
            samples: 0,
            parallel_calls: 0,
        }
    }

    pub fn mdp(&self) -> &'m TabularMdp<T> {
        self.mdp
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn parallel_calls(&self) -> u64 {
        self.parallel_calls
    }

    pub fn current_step(&self) -> usize {
        self.step
    }

    pub fn rng(&mut self) -> &mut Stream {
        &mut self.rng
    }

    /// One fresh draw for every `(h, s, a)`; charged `2SAH` samples.
    pub fn parallel_sample(&mut self) -> ParallelSample {
        self.parallel_calls += 1;
        let m = self.mdp;
        self.samples += 2 * (m.num_states() * m.num_actions() * m.horizon()) as u64;
        parallel_sample(m, &mut self.rng)
    }
}

impl<T: Scalar> EpisodicEnv for Simulator<'_, T> {
    fn num_states(&self) -> usize {
        self.mdp.num_states()
    }

    fn num_actions(&self) -> usize {
        self.mdp.num_actions()
    }

    fn horizon(&self) -> usize {
        self.mdp.horizon()
    }

    fn reset(&mut self) -> usize {
        self.episodes += 1;
        self.step = 0;
        self.state = self.mdp.initial_state();
        self.active = true;
        self.state
    }

    fn step(&mut self, action: usize) -> StepOutcome {
        assert!(self.active, "step called outside an episode");
        assert!(action < self.mdp.num_actions(), "action {action} out of range");
        let (h, s) = (self.step, self.state);
        let dist = self.mdp.reward(h, s, action);
        let reward = dist.support()[sample_index(dist.probs(), &mut self.rng)].approx();
        self.samples += 2;
        let next = if self.mdp.is_terminal_step(h) {
            self.active = false;
            None
        } else {
            let x = sample_index(self.mdp.transition(h, s, action), &mut self.rng);
            self.step += 1;
            self.state = x;
            Some(x)
        };
        StepOutcome { reward, next }
    }
}

/// One episode's record.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub next_states: Vec<Option<usize>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

/// Runs one full episode, asking `agent(h, s)` for each action.
pub fn simulate_episode<E: EpisodicEnv + ?Sized>(
    env: &mut E,
    mut agent: impl FnMut(usize, usize) -> usize,
) -> Trajectory {
    let mut traj = Trajectory::default();
    let mut s = env.reset();
    for h in 0..env.horizon() {
        let a = agent(h, s);
        let out = env.step(a);
        traj.states.push(s);
        traj.actions.push(a);
        traj.rewards.push(out.reward);
        traj.next_states.push(out.next);
        match out.next {
            Some(x) => s = x,
            None => break,
        }
    }
    traj
}

/// Result of one parallel-sampling call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelSample {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    // [h][s][a]; None at the terminal step
    next: Vec<Option<usize>>,
    reward: Vec<f64>,
}

impl ParallelSample {
    fn index(&self, h: usize, s: usize, a: usize) -> usize {
        (h * self.num_states + s) * self.num_actions + a
    }

    pub fn next_state(&self, h: usize, s: usize, a: usize) -> Option<usize> {
        self.next[self.index(h, s, a)]
    }

    pub fn reward(&self, h: usize, s: usize, a: usize) -> f64 {
        self.reward[self.index(h, s, a)]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Total reward of following `agent` through this table from `start`.
    pub fn rollout(&self, start: usize, mut agent: impl FnMut(usize, usize) -> usize) -> f64 {
        let mut s = start;
        let mut total = 0.0;
        for h in 0..self.horizon {
            let a = agent(h, s);
            total += self.reward(h, s, a);
            match self.next_state(h, s, a) {
                Some(x) => s = x,
                None => break,
            }
        }
        total
    }
}

/// Draws one independent `(next state, reward)` for every `(h, s, a)`.
pub fn parallel_sample<T: Scalar, R: Rng + ?Sized>(mdp: &TabularMdp<T>, rng: &mut R) -> ParallelSample {
    let (n, k, horizon) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
    let mut next = Vec::with_capacity(n * k * horizon);
    let mut reward = Vec::with_capacity(n * k * horizon);
    for h in 0..horizon {
        for s in 0..n {
            for a in 0..k {
                let dist = mdp.reward(h, s, a);
                reward.push(dist.support()[sample_index(dist.probs(), rng)].approx());
                next.push(if mdp.is_terminal_step(h) {
                    None
                } else {
                    Some(sample_index(mdp.transition(h, s, a), rng))
                });
            }
        }
    }
    ParallelSample { num_states: n, num_actions: k, horizon, next, reward }
}
