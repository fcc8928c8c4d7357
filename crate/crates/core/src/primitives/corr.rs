//! Correlated sampling from shared randomness.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mdp::sample_index;
use crate::seed::{SharedSeed, Stream};

/// Default bound on the probability of hitting the proposal cap.
pub const DEFAULT_TRUNCATION: f64 = 1e-9;

/// Finite distribution over arbitrary elements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution<E> {
    support: Vec<E>,
    probs: Vec<f64>,
}

impl<E> DiscreteDistribution<E> {
    pub fn new(support: Vec<E>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != probs.len() {
            return Err(invalid("distribution needs a nonempty support with one probability per point"));
        }
        let probs = crate::mdp::normalize(probs).map_err(Error::InvalidParameter)?;
        Ok(Self { support, probs })
    }

    pub fn point(x: E) -> Self {
        Self { support: vec![x], probs: vec![1.0] }
    }

    pub fn uniform(support: Vec<E>) -> Result<Self> {
        let n = support.len();
        Self::new(support, vec![1.0 / n as f64; n])
    }

    pub fn support(&self) -> &[E] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }
}

/// Proposal cap `ceil(4 n ln(1/truncation))` for a domain of size `n`.
pub fn max_proposals(domain: u64, truncation: f64) -> u64 {
    (domain as f64 * (1.0 / truncation).ln() * 4.0).ceil() as u64
}

/// Shared-uniform rejection sampler over `0..domain`.
///
/// Proposals `(i, u)` with `i` uniform and `u` uniform on `[0, 1)` come from
/// a stream derived from `xi`; the first `i` with `u < mass(i)` is returned.
/// After [`max_proposals`] rejections `fallback` draws from a fresh substream,
/// which keeps the marginal exact.
pub fn correlated_index(
    domain: u64,
    mass: impl Fn(u64) -> f64,
    xi: &SharedSeed,
    truncation: f64,
    fallback: impl FnOnce(&mut Stream) -> u64,
) -> u64 {
    assert!(domain > 0, "empty domain");
    let mut proposals = xi.child("proposals").stream();
    for _ in 0..max_proposals(domain, truncation) {
        let i = proposals.random_range(0..domain);
        let u: f64 = proposals.random();
        if u < mass(i) {
            return i;
        }
    }
    fallback(&mut xi.child("fallback").stream())
}

/// Correlated draw of an index from a probability vector.
pub fn corr_samp_index(probs: &[f64], xi: &SharedSeed) -> usize {
    correlated_index(probs.len() as u64, |i| probs[i as usize], xi, DEFAULT_TRUNCATION, |rng| {
        sample_index(probs, rng) as u64
    }) as usize
}

pub fn corr_samp<'a, E>(p: &'a DiscreteDistribution<E>, xi: &SharedSeed) -> &'a E {
    &p.support[corr_samp_index(&p.probs, xi)]
}

/// Coordinate `i` is `corr_samp(ps[i], xi.split("coord", i))`.
pub fn prod_corr_samp_indices(ps: &[Vec<f64>], xi: &SharedSeed) -> Vec<usize> {
    ps.iter()
        .enumerate()
        .map(|(i, p)| corr_samp_index(p, &xi.split("coord", i as u64)))
        .collect()
}

pub fn prod_corr_samp<'a, E>(ps: &'a [DiscreteDistribution<E>], xi: &SharedSeed) -> Vec<&'a E> {
    ps.iter()
        .enumerate()
        .map(|(i, p)| corr_samp(p, &xi.split("coord", i as u64)))
        .collect()
}

/// One correlated draw from the product of `ps`, treating the product as a
/// single domain of size `prod |ps[i]|` (which must not exceed `cap`).
pub fn joint_corr_samp_indices(ps: &[Vec<f64>], xi: &SharedSeed, cap: usize) -> Result<Vec<usize>> {
    let size = ps.iter().map(|p| p.len() as f64).product::<f64>();
    if size > cap as f64 {
        return Err(Error::DomainCap { size, cap });
    }
    let radices: Vec<u64> = ps.iter().map(|p| p.len() as u64).collect();
    let decode = |mut index: u64| -> Vec<usize> {
        let mut digits = vec![0; radices.len()];
        for (d, &r) in digits.iter_mut().zip(&radices).rev() {
            *d = (index % r) as usize;
            index /= r;
        }
        digits
    };
    let encode = |digits: &[usize]| digits.iter().zip(&radices).fold(0u64, |acc, (&d, &r)| acc * r + d as u64);
    let mass = |index: u64| {
        decode(index).iter().zip(ps).map(|(&d, p)| p[d]).product::<f64>()
    };
    let index = correlated_index(size as u64, mass, xi, DEFAULT_TRUNCATION, |rng| {
        let digits: Vec<usize> = ps.iter().map(|p| sample_index(p, rng)).collect();
        encode(&digits)
    });
    Ok(decode(index))
}

/// Bernoulli product with means in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernoulliProduct {
    means: Vec<f64>,
}

impl BernoulliProduct {
    pub fn new(means: Vec<f64>) -> Result<Self> {
        if means.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(invalid("Bernoulli means must lie in [0, 1]"));
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

    fn coordinates(&self) -> Vec<Vec<f64>> {
        self.means.iter().map(|&m| vec![1.0 - m, m]).collect()
    }

    /// Correlated draw over all `2^n` outcomes at once.
    pub fn corr_samp_joint(&self, xi: &SharedSeed, cap: usize) -> Result<Vec<bool>> {
        Ok(joint_corr_samp_indices(&self.coordinates(), xi, cap)?.into_iter().map(|d| d == 1).collect())
    }

    /// Coordinate-wise correlated draw.
    pub fn corr_samp_product(&self, xi: &SharedSeed) -> Vec<bool> {
        prod_corr_samp_indices(&self.coordinates(), xi).into_iter().map(|d| d == 1).collect()
    }
}
