//! Lower-bound gadgets: sign-one-way marginals, the Rademacher MDP
//! reduction and the sign-testing wrapper.

use std::io::{BufRead, Write};

use num::{BigRational, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mdp::{simulate_episode, Policy, RewardDist, Simulator, TabularMdp};
use crate::scalar::{exact, Scalar};
use crate::seed::{SharedSeed, Stream};

/// Action paying the Rademacher reward.
pub const PLUS: usize = 0;
/// Action paying its negation.
pub const MINUS: usize = 1;
/// Reward of every other action.
pub const DUMMY_REWARD: f64 = -2.0;

/// Product of `±1` variables with means `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RademacherProduct {
    means: Vec<f64>,
}

impl RademacherProduct {
    pub fn new(means: Vec<f64>) -> Result<Self> {
        if let Some(p) = means.iter().find(|p| !(p.abs() <= 1.0)) {
            return Err(invalid(format!("Rademacher mean {p} outside [-1, 1]")));
        }
        Ok(Self { means })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.means.iter().map(|&p| rademacher(p, rng)).collect()
    }
}

fn rademacher<R: Rng + ?Sized>(p: f64, rng: &mut R) -> f64 {
    if rng.random::<f64>() < (1.0 + p) / 2.0 {
        1.0
    } else {
        -1.0
    }
}

/// Exact verdict of `mean(v p) > mean|p| - eps`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignCheck {
    pub passed: bool,
    /// `mean(v p) - (mean|p| - eps)`.
    pub slack: BigRational,
}

impl SignCheck {
    pub fn slack_f64(&self) -> f64 {
        self.slack.approx()
    }
}

pub fn sign_one_way_check(p: &[f64], v: &[f64], eps: f64) -> Result<SignCheck> {
    if p.len() != v.len() || p.is_empty() {
        return Err(Error::Shape(format!("means and solution have lengths {} and {}", p.len(), v.len())));
    }
    let mut inner = BigRational::zero();
    let mut abs = BigRational::zero();
    for (pi, vi) in p.iter().zip(v) {
        let pi = exact(*pi);
        inner += exact(*vi) * &pi;
        abs += pi.abs();
    }
    let n = BigRational::from_count(p.len());
    let slack = (inner - abs) / n + exact(eps);
    Ok(SignCheck { passed: slack.is_positive(), slack })
}

/// Coordinate-wise sign with `sign(0) = +1`.
pub fn sign_constrain(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| if x < 0.0 { -1.0 } else { 1.0 }).collect()
}

/// `Bern(p)` as `Rad(2p - 1)`.
pub fn coin_to_rademacher(bern_means: &[f64]) -> Result<RademacherProduct> {
    if let Some(p) = bern_means.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(invalid(format!("coin bias {p} outside [0, 1]")));
    }
    RademacherProduct::new(bern_means.iter().map(|p| 2.0 * p - 1.0).collect())
}

/// Coin outcome `0/1` as `-1/+1`.
pub fn coin_to_sign(heads: bool) -> f64 {
    if heads {
        1.0
    } else {
        -1.0
    }
}

/// Affine map of `[-2, 1]` onto `[0, 1]`.
pub fn normalize_reward<T: Scalar>(r: T) -> T {
    (r + T::lit(2.0)) / T::lit(3.0)
}

/// MDP whose near-optimal policies solve sign-one-way marginals for `p`.
///
/// `p` is indexed `[h][s]` over the `H` original steps. Transitions are
/// uniform, and a leading step draws the first state uniformly, so the
/// result has `H + 1` steps. Action [`PLUS`] at `(s, h)` pays a `±1`
/// reward with mean `p[h][s]`, [`MINUS`] pays its negation and any other
/// action pays [`DUMMY_REWARD`].
pub fn mdp_from_rademacher<T: Scalar>(
    p: &[T],
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    normalize: bool,
) -> Result<TabularMdp<T>> {
    if p.len() != num_states * horizon {
        return Err(Error::Shape(format!("{} means for S*H = {}", p.len(), num_states * horizon)));
    }
    if num_actions < 2 || num_states == 0 || horizon == 0 {
        return Err(invalid("need S, H >= 1 and A >= 2"));
    }
    let one = T::one();
    let two = T::lit(2.0);
    let map = |r: T| if normalize { normalize_reward(r) } else { r };
    let pm = |mean: &T| -> Result<RewardDist<T>> {
        let up = (one.clone() + mean.clone()) / two.clone();
        RewardDist::new(vec![map(T::zero() - one.clone()), map(one.clone())], vec![one.clone() - up.clone(), up])
    };
    let mut rewards = Vec::with_capacity(horizon);
    for h in 0..horizon {
        let mut layer = Vec::with_capacity(num_states);
        for s in 0..num_states {
            let mean = &p[h * num_states + s];
            let mut row = vec![pm(mean)?, pm(&(T::zero() - mean.clone()))?];
            row.extend((2..num_actions).map(|_| RewardDist::point(map(T::lit(DUMMY_REWARD)))));
            layer.push(row);
        }
        rewards.push(layer);
    }
    let uniform = vec![one.clone() / T::from_count(num_states); num_states];
    let transitions = vec![vec![vec![uniform.clone(); num_actions]; num_states]; horizon - 1];
    let range = if normalize { (T::zero(), one) } else { (T::lit(DUMMY_REWARD), one) };
    TabularMdp::new(0, transitions, rewards, range)?.embed_initial_distribution(uniform)
}

/// `+1` where the policy plays [`PLUS`], `-1` otherwise (dummies included).
/// The leading sampling step is skipped.
pub fn policy_to_marginals(pi: &Policy) -> Vec<f64> {
    let n = pi.num_states();
    (1..pi.horizon())
        .flat_map(|h| (0..n).map(move |s| (h, s)))
        .map(|(h, s)| if pi.action(h, s) == PLUS { 1.0 } else { -1.0 })
        .collect()
}

/// Per-`(h, s, a)` visit counts over the original steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisitCounts {
    pub num_states: usize,
    pub num_actions: usize,
    /// Flat `[h][s][a]`.
    pub counts: Vec<u64>,
}

impl VisitCounts {
    pub fn max(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// Visits to each `(h, s)`, summed over actions.
    pub fn state_counts(&self) -> Vec<u64> {
        self.counts.chunks(self.num_actions).map(|c| c.iter().sum()).collect()
    }
}

/// `m/S + 5 sqrt(m ln(SAH) / S)`.
pub fn visit_envelope(episodes: usize, num_states: usize, num_actions: usize, horizon: usize) -> f64 {
    let (m, s) = (episodes as f64, num_states as f64);
    let log = ((num_states * num_actions * horizon) as f64).ln().max(1.0);
    m / s + 5.0 * (m * log / s).sqrt()
}

/// Runs `episodes` episodes of `agent` on the reduction MDP and counts visits.
pub fn episodic_budget_simulation(
    p: &[f64],
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    episodes: usize,
    mut agent: impl FnMut(usize, usize) -> usize,
    env: Stream,
) -> Result<VisitCounts> {
    let mdp = mdp_from_rademacher(p, num_states, num_actions, horizon, false)?;
    let mut sim = Simulator::new(&mdp, env);
    let mut counts = vec![0u64; horizon * num_states * num_actions];
    for _ in 0..episodes {
        let t = simulate_episode(&mut sim, |h, s| if h == 0 { 0 } else { agent(h - 1, s) });
        for h in 1..t.len() {
            counts[((h - 1) * num_states + t.states[h]) * num_actions + t.actions[h]] += 1;
        }
    }
    Ok(VisitCounts { num_states, num_actions, counts })
}

/// Solver for sign-one-way marginals from `±1` sample vectors.
pub trait MarginalsOracle {
    fn solve(&mut self, samples: &[Vec<f64>], xi: &SharedSeed) -> Vec<f64>;
}

/// Empirical mean followed by sign; not replicable.
#[derive(Clone, Copy, Debug, Default)]
pub struct EmpiricalSignOracle;

impl MarginalsOracle for EmpiricalSignOracle {
    fn solve(&mut self, samples: &[Vec<f64>], _xi: &SharedSeed) -> Vec<f64> {
        let n = samples.first().map_or(0, Vec::len);
        let mut sum = vec![0.0; n];
        for x in samples {
            for (a, b) in sum.iter_mut().zip(x) {
                *a += b;
            }
        }
        sign_constrain(&sum)
    }
}

impl<F: FnMut(&[Vec<f64>], &SharedSeed) -> Vec<f64>> MarginalsOracle for F {
    fn solve(&mut self, samples: &[Vec<f64>], xi: &SharedSeed) -> Vec<f64> {
        self(samples, xi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InftyConfig {
    pub eps: f64,
    pub delta: f64,
    pub samples_per_round: usize,
    /// `C` in `T = ceil(C ln(n / delta))`.
    pub rounds_constant: f64,
}

impl InftyConfig {
    pub fn new(eps: f64, delta: f64, samples_per_round: usize) -> Self {
        Self { eps, delta, samples_per_round, rounds_constant: 10.0 }
    }

    pub fn rounds(&self, n: usize) -> usize {
        ((self.rounds_constant * (n as f64 / self.delta).ln()).ceil() as usize).max(1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InftyEstimate {
    pub v: Vec<f64>,
    pub rounds: usize,
}

/// Sign estimation through repeated padded, permuted marginals calls.
///
/// Each round pads the `n` coordinates with `n` copies of `Rad(10 eps)` and
/// `n` of `Rad(-10 eps)`, permutes all `3n` with a permutation drawn from
/// `xi`, and majority-votes the un-permuted answers. Ties vote `+1`.
pub fn rep_infty_estimate<R: Rng + ?Sized, O: MarginalsOracle + ?Sized>(
    mut draw: impl FnMut(&mut R) -> Vec<f64>,
    n: usize,
    data: &mut R,
    oracle: &mut O,
    xi: &SharedSeed,
    config: &InftyConfig,
) -> Result<InftyEstimate> {
    if n == 0 || !(config.eps > 0.0) || !(config.delta > 0.0 && config.delta < 1.0) {
        return Err(invalid("need n >= 1, eps > 0 and delta in (0, 1)"));
    }
    let pad = (10.0 * config.eps).min(1.0);
    let rounds = config.rounds(n);
    let mut votes = vec![0i64; n];
    for t in 0..rounds {
        let mut perm: Vec<usize> = (0..3 * n).collect();
        perm.shuffle(&mut xi.split("permutation", t as u64).stream());
        let samples: Vec<Vec<f64>> = (0..config.samples_per_round)
            .map(|_| {
                let x = draw(data);
                if x.len() != n {
                    return Err(Error::Shape(format!("sample of length {} for n = {n}", x.len())));
                }
                let mut full = x;
                full.extend((0..n).map(|_| rademacher(pad, data)));
                full.extend((0..n).map(|_| rademacher(-pad, data)));
                let mut y = vec![0.0; 3 * n];
                for (i, &j) in perm.iter().enumerate() {
                    y[j] = full[i];
                }
                Ok(y)
            })
            .collect::<Result<_>>()?;
        let w = oracle.solve(&samples, &xi.split("oracle", t as u64));
        if w.len() != 3 * n || w.iter().any(|&x| x != 1.0 && x != -1.0) {
            return Err(Error::Oracle("marginals oracle must return 3n values in {-1, +1}".into()));
        }
        for (i, vote) in votes.iter_mut().enumerate() {
            *vote += w[perm[i]] as i64;
        }
    }
    let v = votes.iter().map(|&c| if c < 0 { -1.0 } else { 1.0 }).collect();
    Ok(InftyEstimate { v, rounds })
}

/// Writes one mean per line.
pub fn write_means<W: Write>(means: &[f64], mut out: W) -> Result<()> {
    for p in means {
        writeln!(out, "{p}")?;
    }
    Ok(())
}

/// Reads one mean per line; blank lines are skipped.
pub fn read_means<R: BufRead>(input: R) -> Result<Vec<f64>> {
    let mut means = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let p: f64 = t.parse().map_err(|_| Error::Format(format!("line {}: not a number: {t:?}", i + 1)))?;
        if !(p.abs() <= 1.0) {
            return Err(Error::Format(format!("line {}: mean {p} outside [-1, 1]", i + 1)));
        }
        means.push(p);
    }
    Ok(means)
}
