//! Replicable heavy hitters.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::seed::SharedSeed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeavyHitterParams {
    pub nu: f64,
    pub eps: f64,
    pub rho: f64,
    pub delta: f64,
    pub desk_scale: f64,
    /// Replaces the formula-driven sample count when set.
    pub samples: Option<usize>,
}

impl HeavyHitterParams {
    pub fn new(nu: f64, eps: f64, rho: f64, delta: f64) -> Self {
        Self { nu, eps, rho, delta, desk_scale: 1.0, samples: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && 4.0 * self.delta < self.rho && self.rho <= 1.0) {
            return Err(invalid(format!("heavy hitters need 4*delta < rho <= 1 (delta={}, rho={})", self.delta, self.rho)));
        }
        if !(self.eps > 0.0 && 4.0 * self.eps < self.nu && self.nu < 1.0) {
            return Err(invalid(format!("heavy hitters need 4*eps < nu < 1 (eps={}, nu={})", self.eps, self.nu)));
        }
        if !(self.desk_scale > 0.0) {
            return Err(invalid("desk_scale must be positive"));
        }
        Ok(())
    }

    /// `desk_scale * ln(1/(delta (nu-eps))) / ((nu-eps) eps^2 rho^2)`, at least 1.
    pub fn sample_count(&self) -> usize {
        if let Some(n) = self.samples {
            return n.max(1);
        }
        let low = self.nu - self.eps;
        let n = (1.0 / (self.delta * low)).ln() / (low * self.eps.powi(2) * self.rho.powi(2));
        ((n * self.desk_scale).ceil() as usize).max(1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeavyHitters<T> {
    /// Elements whose empirical frequency exceeds `threshold`, in order.
    pub elements: Vec<T>,
    pub threshold: f64,
    pub samples: usize,
}

/// Draws `params.sample_count()` samples and keeps the elements with empirical
/// frequency above a threshold drawn uniformly from `(nu - eps, nu + eps)`
/// using `xi`. Sharing `xi` shares the threshold, which is what makes the
/// output stable across independent sample sets.
pub fn rep_heavy_hitters<T: Ord + Clone>(
    mut oracle: impl FnMut() -> T,
    params: &HeavyHitterParams,
    xi: &SharedSeed,
) -> Result<HeavyHitters<T>> {
    params.validate()?;
    let u: f64 = xi.child("threshold").stream().random();
    let threshold = params.nu - params.eps + 2.0 * params.eps * u;
    let n = params.sample_count();
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for _ in 0..n {
        *counts.entry(oracle()).or_default() += 1;
    }
    let elements = counts
        .into_iter()
        .filter(|&(_, c)| c as f64 / n as f64 > threshold)
        .map(|(x, _)| x)
        .collect();
    Ok(HeavyHitters { elements, threshold, samples: n })
}
