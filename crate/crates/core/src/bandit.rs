//! Replicable best-arm selection: one instance or many at once.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::primitives::{
    coord_round, corr_samp_index, joint_corr_samp_indices, prod_corr_samp_indices,
    RandomizedRounding,
};
use crate::seed::SharedSeed;

/// Joint (exact) or per-coordinate (efficient) sampling and rounding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Exact,
    Efficient,
}

/// Default cap on the joint outcome space in exact mode.
pub const DEFAULT_JOINT_CAP: usize = 1 << 20;

/// Exponential-mechanism weights `P(a) ∝ exp(t * u_a)`.
///
/// The maximum is subtracted before exponentiating, so large `t` is safe.
pub fn exp_mechanism(utilities: &[f64], t: f64) -> Vec<f64> {
    let top = utilities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = utilities.iter().map(|&u| (t * (u - top)).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Source of i.i.d. utilities per arm.
pub trait ArmSampler {
    fn pull(&mut self, arm: usize) -> f64;

    fn pull_sum(&mut self, arm: usize, n: usize) -> f64 {
        (0..n).map(|_| self.pull(arm)).sum()
    }
}

impl<F: FnMut(usize) -> f64> ArmSampler for F {
    fn pull(&mut self, arm: usize) -> f64 {
        self(arm)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestArmParams {
    pub eps: f64,
    pub rho: f64,
    pub delta: f64,
    pub desk_scale: f64,
    /// Replaces the formula-driven per-arm count when set.
    pub samples_per_arm: Option<usize>,
}

impl BestArmParams {
    pub fn new(eps: f64, rho: f64, delta: f64) -> Self {
        Self { eps, rho, delta, desk_scale: 1.0, samples_per_arm: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= self.rho && self.rho <= 0.5) {
            return Err(invalid(format!(
                "best arm needs 0 < delta <= rho <= 1/2 (delta={}, rho={})",
                self.delta, self.rho
            )));
        }
        if !(self.eps > 0.0) || !(self.desk_scale > 0.0) {
            return Err(invalid("eps and desk_scale must be positive"));
        }
        Ok(())
    }

    /// `desk_scale * ln^3(2A/delta) / (rho^2 eps^2)`, at least 1.
    pub fn samples_per_arm(&self, num_arms: usize) -> usize {
        if let Some(m) = self.samples_per_arm {
            return m.max(1);
        }
        let l = (2.0 * num_arms as f64 / self.delta).ln();
        ((self.desk_scale * l.powi(3) / (self.rho * self.eps).powi(2)).ceil() as usize).max(1)
    }

    /// Mechanism sharpness `ln(2A/delta) / eps`.
    pub fn temperature(&self, num_arms: usize) -> f64 {
        (2.0 * num_arms as f64 / self.delta).ln() / self.eps
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestArmOutcome {
    pub arm: usize,
    pub means: Vec<f64>,
    pub weights: Vec<f64>,
    pub samples_per_arm: usize,
}

/// Estimates every arm from `samples_per_arm` pulls, then draws an arm from
/// the exponential mechanism by correlated sampling.
///
/// A single arm is returned without pulling.
pub fn rep_best_arm<S: ArmSampler + ?Sized>(
    arms: &mut S,
    num_arms: usize,
    params: &BestArmParams,
    xi: &SharedSeed,
) -> Result<BestArmOutcome> {
    params.validate()?;
    if num_arms == 0 {
        return Err(invalid("need at least one arm"));
    }
    if num_arms == 1 {
        return Ok(BestArmOutcome { arm: 0, means: vec![f64::NAN], weights: vec![1.0], samples_per_arm: 0 });
    }
    let m = params.samples_per_arm(num_arms);
    let means: Vec<f64> = (0..num_arms).map(|a| arms.pull_sum(a, m) / m as f64).collect();
    let weights = exp_mechanism(&means, params.temperature(num_arms));
    let arm = corr_samp_index(&weights, &xi.child("arm"));
    Ok(BestArmOutcome { arm, means, weights, samples_per_arm: m })
}

/// Utility samples `data[s][a]` for a batch of bandit instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmDatasets {
    data: Vec<Vec<Vec<f64>>>,
    lower_bounds: Option<Vec<f64>>,
    fallback: Vec<bool>,
}

impl ArmDatasets {
    pub fn new(data: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let arms = data.first().map_or(0, |d| d.len());
        if data.iter().any(|d| d.len() != arms) || (arms == 0 && !data.is_empty()) {
            return Err(invalid("every instance needs the same positive number of arms"));
        }
        let fallback = vec![false; data.len()];
        Ok(Self { data, lower_bounds: None, fallback })
    }

    /// Declares `m_s`; each must not exceed the smallest dataset of instance `s`.
    pub fn with_lower_bounds(mut self, bounds: Vec<f64>) -> Result<Self> {
        if bounds.len() != self.data.len() {
            return Err(invalid("one lower bound per instance"));
        }
        for (s, (&m, arms)) in bounds.iter().zip(&self.data).enumerate() {
            let least = arms.iter().map(Vec::len).min().unwrap_or(0);
            if (least as f64) < m {
                return Err(invalid(format!("instance {s} has {least} samples, below its declared bound {m}")));
            }
        }
        self.lower_bounds = Some(bounds);
        Ok(self)
    }

    /// Excludes instance `s`; it gets arm 0 and value 0.
    pub fn mark_fallback(&mut self, s: usize) {
        self.fallback[s] = true;
    }

    pub fn num_instances(&self) -> usize {
        self.data.len()
    }

    pub fn num_arms(&self) -> usize {
        self.data.first().map_or(0, |d| d.len())
    }

    pub fn samples(&self, s: usize, a: usize) -> &[f64] {
        &self.data[s][a]
    }

    fn bound(&self, s: usize) -> f64 {
        match &self.lower_bounds {
            Some(b) => b[s],
            None => self.data[s].iter().map(Vec::len).min().unwrap_or(0) as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarBanditConfig {
    pub mode: Mode,
    /// Target replicability used in the sample-size precondition.
    pub rho: f64,
    /// Constant in the precondition.
    pub c: f64,
    /// Below 1 the precondition only warns.
    pub desk_scale: f64,
    pub joint_cap: usize,
    pub rounding: RandomizedRounding,
}

impl Default for VarBanditConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Exact,
            rho: 0.1,
            c: 1.0,
            desk_scale: 1.0,
            joint_cap: DEFAULT_JOINT_CAP,
            rounding: RandomizedRounding::default(),
        }
    }
}

/// Outcome of the sample-size precondition `sum_s 1/m_s <= bound`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleCheck {
    pub inverse_sum: f64,
    pub bound: f64,
}

impl SampleCheck {
    pub fn satisfied(&self) -> bool {
        self.inverse_sum <= self.bound
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BanditSolution {
    pub arms: Vec<usize>,
    /// Rounded value estimate of the chosen arm per instance.
    pub values: Vec<f64>,
    pub check: SampleCheck,
}

/// Mechanism sharpness `2 ln(3SA/delta) / eps` for the multi-instance problem.
pub fn multi_instance_temperature(instances: usize, arms: usize, eps: f64, delta: f64) -> f64 {
    2.0 * (3.0 * (instances * arms) as f64 / delta).ln() / eps
}

/// Solves every non-fallback instance of `d` at accuracy `eps`.
///
/// Arms come from the per-instance exponential mechanism, sampled jointly
/// (exact mode) or coordinate-wise (efficient mode); the chosen arms'
/// empirical means are then rounded with shared randomness.
pub fn rep_var_bandit(
    d: &ArmDatasets,
    eps: f64,
    delta: f64,
    xi: &SharedSeed,
    config: &VarBanditConfig,
) -> Result<BanditSolution> {
    if !(eps > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("need eps > 0 and delta in (0, 1)"));
    }
    let n = d.num_instances();
    let k = d.num_arms();
    let active: Vec<usize> = (0..n).filter(|&s| !d.fallback[s]).collect();
    let mut arms = vec![0; n];
    let mut values = vec![0.0; n];
    if active.is_empty() {
        return Ok(BanditSolution { arms, values, check: SampleCheck { inverse_sum: 0.0, bound: f64::INFINITY } });
    }

    let log = (3.0 * (n * k) as f64 / delta).ln();
    let mut bound = (config.rho * eps).powi(2) / (config.c * config.desk_scale * log.powi(3));
    if config.mode == Mode::Efficient {
        bound /= n as f64;
    }
    let inverse_sum: f64 = active.iter().map(|&s| 1.0 / d.bound(s)).sum();
    let check = SampleCheck { inverse_sum, bound };
    if !check.satisfied() {
        let msg = format!("sum of 1/m_s is {inverse_sum:.3e}, above the required {bound:.3e}");
        if config.desk_scale < 1.0 {
            log::warn!("{msg} (advisory at desk scale {})", config.desk_scale);
        } else {
            return Err(Error::InsufficientSamples(msg));
        }
    }

    let t = multi_instance_temperature(n, k, eps, delta);
    let mut means = Vec::with_capacity(active.len());
    let mut weights = Vec::with_capacity(active.len());
    for &s in &active {
        let row: Vec<f64> = (0..k)
            .map(|a| {
                let xs = d.samples(s, a);
                if xs.is_empty() {
                    Err(Error::InsufficientSamples(format!("instance {s}, arm {a} has no samples")))
                } else {
                    Ok(xs.iter().sum::<f64>() / xs.len() as f64)
                }
            })
            .collect::<Result<_>>()?;
        weights.push(exp_mechanism(&row, t));
        means.push(row);
    }

    let chosen = match config.mode {
        Mode::Exact => joint_corr_samp_indices(&weights, &xi.child("arms"), config.joint_cap)?,
        Mode::Efficient => prod_corr_samp_indices(&weights, &xi.child("arms")),
    };
    let raw: Vec<f64> = chosen.iter().zip(&means).map(|(&a, row)| row[a]).collect();
    let rounded = match config.mode {
        Mode::Exact => config.rounding.round(&raw, eps / 2.0, &xi.child("round"))?,
        Mode::Efficient => coord_round(&raw, eps, &xi.child("round"))?,
    };
    for (i, &s) in active.iter().enumerate() {
        arms[s] = chosen[i];
        values[s] = rounded[i];
    }
    Ok(BanditSolution { arms, values, check })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mechanism_normalizes_and_is_shift_invariant() {
        let w = exp_mechanism(&[0.1, 0.5, 0.2], 30.0);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let v = exp_mechanism(&[10.1, 10.5, 10.2], 30.0);
        for (a, b) in w.iter().zip(&v) {
            assert!((a - b).abs() < 1e-12);
        }
        let huge = exp_mechanism(&[0.0, 1.0], 1e6);
        assert_eq!(huge, vec![0.0, 1.0]);
    }

    #[test]
    fn single_arm_needs_no_pulls() {
        let mut pulls = 0;
        let mut sampler = |_: usize| {
            pulls += 1;
            0.0
        };
        let out = rep_best_arm(&mut sampler, 1, &BestArmParams::new(0.1, 0.2, 0.05), &SharedSeed::new(1)).unwrap();
        assert_eq!(out.arm, 0);
        assert_eq!(pulls, 0);
    }

    #[test]
    fn deterministic_best_arm() {
        let p = BestArmParams { samples_per_arm: Some(20), ..BestArmParams::new(0.1, 0.2, 0.05) };
        for i in 0..50 {
            let mut arms = |a: usize| if a == 2 { 1.0 } else { 0.0 };
            assert_eq!(rep_best_arm(&mut arms, 3, &p, &SharedSeed::new(i)).unwrap().arm, 2);
        }
    }

    #[test]
    fn best_arm_preconditions() {
        let mut arms = |_: usize| 0.0;
        assert!(rep_best_arm(&mut arms, 2, &BestArmParams::new(0.1, 0.6, 0.05), &SharedSeed::new(1)).is_err());
        assert!(rep_best_arm(&mut arms, 2, &BestArmParams::new(0.1, 0.2, 0.3), &SharedSeed::new(1)).is_err());
    }

    fn relaxed(mode: Mode) -> VarBanditConfig {
        VarBanditConfig { mode, desk_scale: 0.5, ..VarBanditConfig::default() }
    }

    #[test]
    fn single_instance_deterministic_arms() {
        let d = ArmDatasets::new(vec![vec![vec![0.0; 10], vec![1.0; 10]]]).unwrap();
        for mode in [Mode::Exact, Mode::Efficient] {
            let sol = rep_var_bandit(&d, 0.1, 0.1, &SharedSeed::new(3), &relaxed(mode)).unwrap();
            assert_eq!(sol.arms, vec![1]);
            assert!((sol.values[0] - 1.0).abs() <= 0.1);
            assert!(!sol.check.satisfied());
        }
    }

    #[test]
    fn insufficient_samples_is_an_error_at_full_scale() {
        let d = ArmDatasets::new(vec![vec![vec![0.0; 10], vec![1.0; 10]]]).unwrap();
        let err = rep_var_bandit(&d, 0.1, 0.1, &SharedSeed::new(3), &VarBanditConfig::default());
        assert!(matches!(err, Err(Error::InsufficientSamples(_))));
    }

    #[test]
    fn fallback_instances_are_skipped() {
        let mut d = ArmDatasets::new(vec![vec![vec![], vec![]], vec![vec![0.2; 5], vec![0.9; 5]]]).unwrap();
        assert!(rep_var_bandit(&d, 0.2, 0.1, &SharedSeed::new(4), &relaxed(Mode::Exact)).is_err());
        d.mark_fallback(0);
        let sol = rep_var_bandit(&d, 0.2, 0.1, &SharedSeed::new(4), &relaxed(Mode::Exact)).unwrap();
        assert_eq!(sol.arms, vec![0, 1]);
        assert_eq!(sol.values[0], 0.0);
    }

    #[test]
    fn joint_cap_is_enforced() {
        let data = vec![vec![vec![0.5; 3]; 3]; 4];
        let d = ArmDatasets::new(data).unwrap();
        let cfg = VarBanditConfig { joint_cap: 80, ..relaxed(Mode::Exact) };
        assert!(matches!(rep_var_bandit(&d, 0.2, 0.1, &SharedSeed::new(5), &cfg), Err(Error::DomainCap { .. })));
        let cfg = VarBanditConfig { joint_cap: 80, ..relaxed(Mode::Efficient) };
        assert!(rep_var_bandit(&d, 0.2, 0.1, &SharedSeed::new(5), &cfg).is_ok());
    }

    #[test]
    fn declared_bounds_must_hold() {
        let d = ArmDatasets::new(vec![vec![vec![0.0; 3], vec![1.0; 5]]]).unwrap();
        assert!(d.clone().with_lower_bounds(vec![4.0]).is_err());
        assert!(d.with_lower_bounds(vec![3.0]).is_ok());
    }

    #[test]
    fn same_inputs_same_solution() {
        let d = ArmDatasets::new(vec![
            vec![vec![0.3, 0.5, 0.4], vec![0.45, 0.4, 0.42]],
            vec![vec![0.1, 0.9], vec![0.5, 0.6]],
        ])
        .unwrap();
        let xi = SharedSeed::new(6);
        let a = rep_var_bandit(&d, 0.3, 0.1, &xi, &relaxed(Mode::Exact)).unwrap();
        let b = rep_var_bandit(&d.clone(), 0.3, 0.1, &xi, &relaxed(Mode::Exact)).unwrap();
        assert_eq!(a, b);
    }
}
