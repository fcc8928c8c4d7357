//! Exact dynamic-programming oracles.

use super::{Policy, RewardDist, StateCombination, TabularMdp};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn expect<T: Scalar>(row: &[T], v: &[T]) -> T {
    row.iter().zip(v).fold(T::zero(), |acc, (p, x)| acc + p.clone() * x.clone())
}

/// `Q_h(s, a)` for a continuation value `next` over step `h + 1`.
pub fn q_values<T: Scalar>(mdp: &TabularMdp<T>, h: usize, next: &[T]) -> Vec<Vec<T>> {
    (0..mdp.num_states())
        .map(|s| {
            (0..mdp.num_actions())
                .map(|a| {
                    let r = mdp.mean_reward(h, s, a);
                    if mdp.is_terminal_step(h) {
                        r
                    } else {
                        r + expect(mdp.transition(h, s, a), next)
                    }
                })
                .collect()
        })
        .collect()
}

/// `V_h^pi(s)` for `h = 0..=H`, with `V_H = 0`.
pub fn policy_values<T: Scalar>(mdp: &TabularMdp<T>, pi: &Policy) -> Result<Vec<Vec<T>>> {
    mdp.check_policy(pi)?;
    let n = mdp.num_states();
    let mut values = vec![vec![T::zero(); n]; mdp.horizon() + 1];
    for h in (0..mdp.horizon()).rev() {
        let (head, tail) = values.split_at_mut(h + 1);
        let next = &tail[0];
        for s in 0..n {
            let a = pi.action(h, s);
            let mut v = mdp.mean_reward(h, s, a);
            if !mdp.is_terminal_step(h) {
                v = v + expect(mdp.transition(h, s, a), next);
            }
            head[h][s] = v;
        }
    }
    Ok(values)
}

/// Expected return of `pi` from the initial state.
pub fn value_of_policy<T: Scalar>(mdp: &TabularMdp<T>, pi: &Policy) -> Result<T> {
    let values = policy_values(mdp, pi)?;
    Ok(values[0][mdp.initial_state()].clone())
}

/// Optimal values `V*_h` for `h = 0..=H` and a greedy policy (lowest index on ties).
pub fn optimal_values<T: Scalar>(mdp: &TabularMdp<T>) -> (Policy, Vec<Vec<T>>) {
    let n = mdp.num_states();
    let mut values = vec![vec![T::zero(); n]; mdp.horizon() + 1];
    let mut pi = Policy::constant(mdp.horizon(), n, 0);
    for h in (0..mdp.horizon()).rev() {
        let q = q_values(mdp, h, &values[h + 1]);
        for (s, row) in q.into_iter().enumerate() {
            let (a, v) = argmax(row);
            pi.set(h, s, a);
            values[h][s] = v;
        }
    }
    (pi, values)
}

/// An optimal policy and the optimal value `V*`.
pub fn optimal_policy<T: Scalar>(mdp: &TabularMdp<T>) -> (Policy, T) {
    let (pi, values) = optimal_values(mdp);
    let v = values[0][mdp.initial_state()].clone();
    (pi, v)
}

pub(crate) fn argmax<T: Scalar>(row: Vec<T>) -> (usize, T) {
    let mut best = 0;
    let mut iter = row.into_iter().enumerate();
    let (_, mut top) = iter.next().expect("nonempty row");
    for (i, x) in iter {
        if x > top {
            top = x;
            best = i;
        }
    }
    (best, top)
}

/// `R_h^pi(s; I)` for `h = 0..=H`, with `R_H = 0`.
pub fn reachability_table<T: Scalar>(
    mdp: &TabularMdp<T>,
    pi: &Policy,
    set: &StateCombination,
) -> Result<Vec<Vec<T>>> {
    mdp.check_policy(pi)?;
    mdp.check_combination(set)?;
    let n = mdp.num_states();
    let mut table = vec![vec![T::zero(); n]; mdp.horizon() + 1];
    for h in (0..mdp.horizon()).rev() {
        for s in 0..n {
            let mut r = if set.contains(h, s) { T::one() } else { T::zero() };
            if !mdp.is_terminal_step(h) {
                r = r + expect(mdp.transition(h, s, pi.action(h, s)), &table[h + 1]);
            }
            table[h][s] = r;
        }
    }
    Ok(table)
}

/// Expected number of steps `h` with `x_h` in `I_h` when following `pi`.
pub fn reachability<T: Scalar>(mdp: &TabularMdp<T>, pi: &Policy, set: &StateCombination) -> Result<T> {
    Ok(reachability_table(mdp, pi, set)?[0][mdp.initial_state()].clone())
}

/// Largest reachability of `set` over all policies, with a maximizing policy.
///
/// Deterministic Markov policies attain the maximum, so the backward
/// recursion with a max over actions is exact.
pub fn max_reachability<T: Scalar>(mdp: &TabularMdp<T>, set: &StateCombination) -> Result<(Policy, T)> {
    mdp.check_combination(set)?;
    let n = mdp.num_states();
    let mut next = vec![T::zero(); n];
    let mut pi = Policy::constant(mdp.horizon(), n, 0);
    for h in (0..mdp.horizon()).rev() {
        let mut cur = Vec::with_capacity(n);
        for s in 0..n {
            let base = if set.contains(h, s) { T::one() } else { T::zero() };
            let (a, best) = if mdp.is_terminal_step(h) {
                (0, T::zero())
            } else {
                argmax((0..mdp.num_actions()).map(|a| expect(mdp.transition(h, s, a), &next)).collect())
            };
            pi.set(h, s, a);
            cur.push(base + best);
        }
        next = cur;
    }
    Ok((pi, next[mdp.initial_state()].clone()))
}

/// Distribution of the state at step `h` under `pi`.
pub fn state_visit_distribution<T: Scalar>(mdp: &TabularMdp<T>, pi: &Policy, h: usize) -> Result<Vec<T>> {
    mdp.check_policy(pi)?;
    if h >= mdp.horizon() {
        return Err(Error::InvalidParameter(format!("step {h} beyond horizon {}", mdp.horizon())));
    }
    let n = mdp.num_states();
    let mut dist = vec![T::zero(); n];
    dist[mdp.initial_state()] = T::one();
    for step in 0..h {
        let mut next = vec![T::zero(); n];
        for (s, mass) in dist.iter().enumerate() {
            if *mass == T::zero() {
                continue;
            }
            for (x, p) in mdp.transition(step, s, pi.action(step, s)).iter().enumerate() {
                next[x] = next[x].clone() + mass.clone() * p.clone();
            }
        }
        dist = next;
    }
    Ok(dist)
}

/// Truncates an MDP with `h` steps (`2 <= h <= H`) to `h - 1` steps.
///
/// Steps before the new last step are copied. The new last step pays
/// `r + v(x')` with `r` and `x'` drawn as in the original step. The declared
/// reward range is widened to cover the shifted rewards; nothing is clipped.
pub fn truncate_mdp<T: Scalar>(mdp: &TabularMdp<T>, h: usize, v: &[T]) -> Result<TabularMdp<T>> {
    if h < 2 || h > mdp.horizon() {
        return Err(Error::InvalidParameter(format!(
            "truncation step {h} outside 2..={}",
            mdp.horizon()
        )));
    }
    if v.len() != mdp.num_states() {
        return Err(Error::Shape(format!("substitution has {} entries, expected {}", v.len(), mdp.num_states())));
    }
    let last = h - 2;
    let mut transitions = mdp.transition_layers();
    transitions.truncate(last);
    let mut rewards = mdp.reward_layers();
    rewards.truncate(last + 1);
    for (s, row) in rewards[last].iter_mut().enumerate() {
        for (a, dist) in row.iter_mut().enumerate() {
            let next = mdp.transition(last, s, a);
            let mut support = Vec::new();
            let mut probs = Vec::new();
            for (r, pr) in dist.support().iter().zip(dist.probs()) {
                for (x, px) in next.iter().enumerate() {
                    support.push(r.clone() + v[x].clone());
                    probs.push(pr.clone() * px.clone());
                }
            }
            *dist = RewardDist { support, probs }.compact();
        }
    }
    let vmin = v.iter().cloned().reduce(T::min_of).expect("nonempty");
    let vmax = v.iter().cloned().reduce(T::max_of).expect("nonempty");
    let (lo, hi) = mdp.reward_range();
    let range = (lo.clone().min_of(lo + vmin), hi.clone().max_of(hi + vmax));
    TabularMdp::new(mdp.initial_state(), transitions, rewards, range)
}
