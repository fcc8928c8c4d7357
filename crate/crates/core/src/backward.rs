//! Tiered backward induction over offline datasets.

use serde::{Deserialize, Serialize};

use crate::bandit::{rep_var_bandit, ArmDatasets, SampleCheck, VarBanditConfig};
use crate::error::{invalid, Error, Result};
use crate::mdp::{truncate_mdp, ParallelSample, Policy, TabularMdp, TieredPartition};
use crate::scalar::Scalar;
use crate::seed::SharedSeed;

/// One observed `(next state, reward)`; `next` is `None` at the last step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub next: Option<usize>,
    pub reward: f64,
}

/// Per-cell datasets `D[h][s][a]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OfflineDatasets {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    data: Vec<Vec<Record>>,
}

impl OfflineDatasets {
    pub fn new(horizon: usize, num_states: usize, num_actions: usize) -> Self {
        Self { horizon, num_states, num_actions, data: vec![Vec::new(); horizon * num_states * num_actions] }
    }

    fn index(&self, h: usize, s: usize, a: usize) -> usize {
        (h * self.num_states + s) * self.num_actions + a
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn push(&mut self, h: usize, s: usize, a: usize, record: Record) -> Result<()> {
        if h >= self.horizon || s >= self.num_states || a >= self.num_actions {
            return Err(Error::Shape(format!("cell ({s}, {a}) at step {h} is out of range")));
        }
        let last = h + 1 == self.horizon;
        match record.next {
            None if !last => return Err(Error::Shape(format!("missing next state at step {h}"))),
            Some(_) if last => return Err(Error::Shape("last-step records are terminal".into())),
            Some(x) if x >= self.num_states => return Err(Error::Shape(format!("next state {x} out of range"))),
            _ => {}
        }
        let i = self.index(h, s, a);
        self.data[i].push(record);
        Ok(())
    }

    pub fn get(&self, h: usize, s: usize, a: usize) -> &[Record] {
        &self.data[self.index(h, s, a)]
    }

    pub fn count(&self, h: usize, s: usize, a: usize) -> usize {
        self.get(h, s, a).len()
    }

    /// Smallest dataset over actions at `(h, s)`.
    pub fn min_count(&self, h: usize, s: usize) -> usize {
        (0..self.num_actions).map(|a| self.count(h, s, a)).min().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.data.iter().map(Vec::len).sum()
    }

    /// Appends every record of `other`, which must have the same shape.
    pub fn merge(&mut self, other: &OfflineDatasets) -> Result<()> {
        if (other.horizon, other.num_states, other.num_actions) != (self.horizon, self.num_states, self.num_actions) {
            return Err(Error::Shape("datasets of different shapes cannot be merged".into()));
        }
        for (mine, theirs) in self.data.iter_mut().zip(&other.data) {
            mine.extend_from_slice(theirs);
        }
        Ok(())
    }

    /// One record per cell from each parallel sample.
    pub fn from_parallel_samples(
        horizon: usize,
        num_states: usize,
        num_actions: usize,
        samples: &[ParallelSample],
    ) -> Result<Self> {
        let mut d = Self::new(horizon, num_states, num_actions);
        for t in samples {
            for h in 0..horizon {
                for s in 0..num_states {
                    for a in 0..num_actions {
                        d.push(h, s, a, Record { next: t.next_state(h, s, a), reward: t.reward(h, s, a) })?;
                    }
                }
            }
        }
        Ok(d)
    }
}

/// Declared sample lower bounds `m[level][h][s]` for tiers `1..L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TierBounds {
    horizon: usize,
    num_states: usize,
    bounds: Vec<Vec<f64>>,
}

impl TierBounds {
    pub fn new(horizon: usize, num_states: usize, num_tiers: usize) -> Self {
        Self { horizon, num_states, bounds: vec![vec![0.0; horizon * num_states]; num_tiers.saturating_sub(1)] }
    }

    /// The same bound `m` for every cell of every tier below `L`.
    pub fn uniform(horizon: usize, num_states: usize, num_tiers: usize, m: f64) -> Self {
        let mut b = Self::new(horizon, num_states, num_tiers);
        for level in &mut b.bounds {
            level.iter_mut().for_each(|x| *x = m);
        }
        b
    }

    pub fn get(&self, level: usize, h: usize, s: usize) -> f64 {
        self.bounds[level - 1][h * self.num_states + s]
    }

    pub fn set(&mut self, level: usize, h: usize, s: usize, m: f64) {
        self.bounds[level - 1][h * self.num_states + s] = m;
    }

    pub fn num_levels(&self) -> usize {
        self.bounds.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TierReport {
    pub level: usize,
    /// `sum_h sqrt(sum_{s in tier} 1/m)`.
    pub spread: f64,
    /// `2^level * zeta`.
    pub limit: f64,
    /// Smallest `min_a |D| - m` over the tier's cells (`+inf` when empty).
    pub count_slack: f64,
}

impl TierReport {
    pub fn slack(&self) -> f64 {
        self.limit - self.spread
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NicenessReport {
    pub tiers: Vec<TierReport>,
}

impl NicenessReport {
    pub fn is_nice(&self) -> bool {
        self.tiers.iter().all(|t| t.slack() >= 0.0 && t.count_slack >= 0.0)
    }

    /// Smallest spread slack over tiers (`+inf` without tiers below `L`).
    pub fn worst_slack(&self) -> f64 {
        self.tiers.iter().map(TierReport::slack).fold(f64::INFINITY, f64::min)
    }
}

/// Checks the tier-wise sample bounds against the datasets.
pub fn check_nice(
    partition: &TieredPartition,
    d: &OfflineDatasets,
    bounds: &TierBounds,
    zeta: f64,
) -> Result<NicenessReport> {
    let levels = partition.num_tiers() - 1;
    if bounds.num_levels() != levels {
        return Err(invalid(format!("bounds cover {} tiers, partition needs {levels}", bounds.num_levels())));
    }
    let mut tiers = Vec::with_capacity(levels);
    for level in 1..=levels {
        let mut spread = 0.0;
        let mut count_slack = f64::INFINITY;
        for h in 0..partition.horizon() {
            let mut inv = 0.0;
            for s in partition.members(h, level) {
                let m = bounds.get(level, h, s);
                inv += 1.0 / m;
                count_slack = count_slack.min(d.min_count(h, s) as f64 - m);
            }
            spread += f64::sqrt(inv);
        }
        tiers.push(TierReport { level, spread, limit: 2f64.powi(level as i32) * zeta, count_slack });
    }
    Ok(NicenessReport { tiers })
}

/// Niceness parameter `H sqrt(S/m)` of `m` samples per cell under the trivial partition.
pub fn parallel_zeta(horizon: usize, num_states: usize, m: usize) -> f64 {
    horizon as f64 * (num_states as f64 / m as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackwardConfig {
    pub bandit: VarBanditConfig,
    /// Largest per-step reward; estimates are capped at `horizon * reward_max`.
    pub reward_max: f64,
}

impl Default for BackwardConfig {
    fn default() -> Self {
        Self { bandit: VarBanditConfig::default(), reward_max: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackwardInduction {
    pub policy: Policy,
    /// Bandit value estimates `[h][s]` before the penalty.
    pub estimates: Vec<Vec<f64>>,
    /// Penalized estimates `[h][s]`, used as continuation values.
    pub underestimates: Vec<Vec<f64>>,
    pub checks: Vec<SampleCheck>,
}

/// Accuracy `2^level * eps / (8 H L)` of tier `level`'s bandit calls.
pub fn tier_accuracy(level: usize, eps: f64, horizon: usize, num_tiers: usize) -> f64 {
    2f64.powi(level as i32) * eps / (8.0 * (horizon * num_tiers) as f64)
}

/// Backward induction with one multi-instance bandit call per `(step, tier)`.
///
/// Tier `L` states take action 0 with estimate 0. Every other state needs
/// data for every action; otherwise the run fails with [`Error::MissingData`].
pub fn rep_rl_bandit(
    partition: &TieredPartition,
    d: &OfflineDatasets,
    eps: f64,
    delta: f64,
    xi: &SharedSeed,
    config: &BackwardConfig,
) -> Result<BackwardInduction> {
    let (horizon, n, k) = (d.horizon(), d.num_states(), d.num_actions());
    if partition.horizon() != horizon || partition.num_states() != n {
        return Err(Error::Shape("partition and datasets disagree".into()));
    }
    if !(eps > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("need eps > 0 and delta in (0, 1)"));
    }
    let levels = partition.num_tiers();
    for h in 0..horizon {
        for s in 0..n {
            if partition.is_fallback(h, s) {
                continue;
            }
            if let Some(a) = (0..k).find(|&a| d.count(h, s, a) == 0) {
                return Err(Error::MissingData { state: s, action: a, step: h });
            }
        }
    }

    let cap = horizon as f64 * config.reward_max;
    let call_delta = delta / (horizon * levels) as f64;
    let mut policy = Policy::constant(horizon, n, 0);
    let mut estimates = vec![vec![0.0; n]; horizon];
    let mut under = vec![vec![0.0; n]; horizon];
    let mut checks = Vec::new();
    for h in (0..horizon).rev() {
        for level in 1..levels {
            let members = partition.members(h, level);
            if members.is_empty() {
                continue;
            }
            let data = members
                .iter()
                .map(|&s| {
                    (0..k)
                        .map(|a| {
                            d.get(h, s, a)
                                .iter()
                                .map(|r| r.reward + r.next.map_or(0.0, |x| under[h + 1][x]))
                                .collect()
                        })
                        .collect()
                })
                .collect();
            let acc = tier_accuracy(level, eps, horizon, levels);
            let seed = xi.split("step", h as u64).split("tier", level as u64);
            let sol = rep_var_bandit(&ArmDatasets::new(data)?, acc, call_delta, &seed, &config.bandit)?;
            checks.push(sol.check);
            for (i, &s) in members.iter().enumerate() {
                let hat = sol.values[i];
                let bar = (hat - acc).min(cap);
                assert!(bar <= hat, "penalized estimate exceeds the raw estimate");
                policy.set(h, s, sol.arms[i]);
                estimates[h][s] = hat;
                under[h][s] = bar;
            }
        }
    }
    Ok(BackwardInduction { policy, estimates, underestimates: under, checks })
}

/// The truncated MDPs `[M^(1), ..., M^(H)]` built from a run's underestimates,
/// where `M^(H) = M` and `M^(k)` replaces steps after `k` by `underestimates[k]`.
pub fn truncation_chain<T: Scalar>(mdp: &TabularMdp<T>, underestimates: &[Vec<T>]) -> Result<Vec<TabularMdp<T>>> {
    let horizon = mdp.horizon();
    if underestimates.len() != horizon {
        return Err(Error::Shape("one underestimate row per step".into()));
    }
    let mut chain = vec![mdp.clone()];
    for k in (1..horizon).rev() {
        let next = truncate_mdp(chain.last().unwrap(), k + 1, &underestimates[k])?;
        chain.push(next);
    }
    chain.reverse();
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::Mode;

    fn relaxed() -> BackwardConfig {
        BackwardConfig { bandit: VarBanditConfig { desk_scale: 0.5, ..VarBanditConfig::default() }, reward_max: 1.0 }
    }

    fn two_arm_data(n: usize) -> OfflineDatasets {
        let mut d = OfflineDatasets::new(1, n, 2);
        for s in 0..n {
            for _ in 0..5 {
                d.push(0, s, 0, Record { next: None, reward: 0.0 }).unwrap();
                d.push(0, s, 1, Record { next: None, reward: 1.0 }).unwrap();
            }
        }
        d
    }

    #[test]
    fn one_step_picks_the_better_arm() {
        let d = two_arm_data(3);
        for mode in [Mode::Exact, Mode::Efficient] {
            let mut cfg = relaxed();
            cfg.bandit.mode = mode;
            let out = rep_rl_bandit(&TieredPartition::trivial(1, 3, 2), &d, 0.5, 0.1, &SharedSeed::new(1), &cfg).unwrap();
            assert_eq!(out.policy, Policy::constant(1, 3, 1));
            for s in 0..3 {
                assert!(out.underestimates[0][s] <= out.estimates[0][s]);
            }
        }
    }

    #[test]
    fn all_fallback_gives_first_action() {
        let d = OfflineDatasets::new(2, 3, 2);
        let out = rep_rl_bandit(&TieredPartition::all_fallback(2, 3, 3), &d, 0.5, 0.1, &SharedSeed::new(2), &relaxed()).unwrap();
        assert_eq!(out.policy, Policy::constant(2, 3, 0));
        assert!(out.estimates.iter().flatten().all(|&v| v == 0.0));
        assert!(out.checks.is_empty());
    }

    #[test]
    fn missing_cell_is_named() {
        let mut d = two_arm_data(2);
        let i = d.index(0, 1, 1);
        d.data[i].clear();
        let err = rep_rl_bandit(&TieredPartition::trivial(1, 2, 2), &d, 0.5, 0.1, &SharedSeed::new(3), &relaxed());
        assert!(matches!(err, Err(Error::MissingData { state: 1, action: 1, step: 0 })));
    }

    #[test]
    fn record_shape_is_validated() {
        let mut d = OfflineDatasets::new(2, 2, 1);
        assert!(d.push(0, 0, 0, Record { next: None, reward: 0.0 }).is_err());
        assert!(d.push(1, 0, 0, Record { next: Some(1), reward: 0.0 }).is_err());
        assert!(d.push(0, 0, 0, Record { next: Some(2), reward: 0.0 }).is_err());
        assert!(d.push(0, 0, 0, Record { next: Some(1), reward: 0.0 }).is_ok());
    }

    #[test]
    fn uniform_bound_spread() {
        let p = TieredPartition::trivial(3, 4, 2);
        let mut d = OfflineDatasets::new(3, 4, 1);
        for h in 0..3 {
            for s in 0..4 {
                for _ in 0..100 {
                    let next = if h < 2 { Some(0) } else { None };
                    d.push(h, s, 0, Record { next, reward: 0.0 }).unwrap();
                }
            }
        }
        let r = check_nice(&p, &d, &TierBounds::uniform(3, 4, 2, 100.0), 0.1).unwrap();
        assert!((r.tiers[0].spread - 3.0 * (4.0f64 / 100.0).sqrt()).abs() < 1e-12);
        assert_eq!(r.tiers[0].count_slack, 0.0);
        assert!(!r.is_nice());
        let r = check_nice(&p, &d, &TierBounds::uniform(3, 4, 2, 100.0), 0.31).unwrap();
        assert!(r.is_nice());
    }

    #[test]
    fn empty_tier_is_vacuous() {
        let p = TieredPartition::all_fallback(2, 3, 3);
        let r = check_nice(&p, &OfflineDatasets::new(2, 3, 1), &TierBounds::new(2, 3, 3), 0.01).unwrap();
        assert!(r.is_nice());
        assert_eq!(r.tiers.len(), 2);
        assert_eq!(r.tiers[1].spread, 0.0);
    }

    #[test]
    fn parallel_zeta_rearranges() {
        let (h, s, zeta) = (3usize, 5usize, 0.25);
        let m = (h * h * s) as f64 / (zeta * zeta);
        assert!((parallel_zeta(h, s, m as usize) - zeta).abs() < 1e-12);
    }
}
