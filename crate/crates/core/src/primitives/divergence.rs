//! Distances between distributions.

use num::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Divergences<F> {
    pub tv: F,
    /// `KL(p || q)` in nats; infinite unless `p` is absolutely continuous w.r.t. `q`.
    pub kl: F,
    /// `chi^2(p || q)` over the support of `q`; infinite as for `kl`.
    pub chi2: F,
}

pub fn total_variation<F: Float>(p: &[F], q: &[F]) -> F {
    let half = F::from(0.5).unwrap();
    p.iter().zip(q).fold(F::zero(), |acc, (&a, &b)| acc + (a - b).abs()) * half
}

pub fn divergences<F: Float>(p: &[F], q: &[F]) -> Result<Divergences<F>> {
    if p.len() != q.len() {
        return Err(invalid("distributions must share a support"));
    }
    let mut kl = F::zero();
    let mut chi2 = F::zero();
    for (&a, &b) in p.iter().zip(q) {
        if b == F::zero() {
            if a > F::zero() {
                kl = F::infinity();
                chi2 = F::infinity();
            }
            continue;
        }
        if a > F::zero() {
            kl = kl + a * (a / b).ln();
        }
        chi2 = chi2 + (a - b) * (a - b) / b;
    }
    Ok(Divergences { tv: total_variation(p, q), kl, chi2 })
}

/// Square root of the chi-square bound on the TV distance between two
/// Bernoulli products.
pub fn bernoulli_product_tv_bound(mu1: &[f64], mu2: &[f64]) -> Result<f64> {
    if mu1.len() != mu2.len() {
        return Err(invalid("Bernoulli products must have equal length"));
    }
    let mut total = 0.0;
    for (&a, &b) in mu1.iter().zip(mu2) {
        let d2 = (a - b) * (a - b);
        if a > 0.0 {
            total += d2 / a;
        }
        if a < 1.0 {
            total += d2 / (1.0 - a);
        }
    }
    Ok(total.sqrt())
}

/// Exact TV between two Bernoulli products by enumerating all `2^n` outcomes.
pub fn bernoulli_product_tv(mu1: &[f64], mu2: &[f64]) -> Result<f64> {
    if mu1.len() != mu2.len() || mu1.len() > 24 {
        return Err(invalid("exact product TV needs equal lengths of at most 24"));
    }
    let n = mu1.len();
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let (mut p, mut q) = (1.0, 1.0);
        for i in 0..n {
            let bit = mask >> i & 1 == 1;
            p *= if bit { mu1[i] } else { 1.0 - mu1[i] };
            q *= if bit { mu2[i] } else { 1.0 - mu2[i] };
        }
        total += (p - q).abs();
    }
    Ok(total / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_distributions() {
        let d = divergences(&[0.2, 0.8], &[0.2, 0.8]).unwrap();
        assert_eq!((d.tv, d.kl, d.chi2), (0.0, 0.0, 0.0));
    }

    #[test]
    fn hand_computed_pair() {
        let d = divergences(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((d.tv - 0.5).abs() < 1e-15);
        assert!((d.kl - 2f64.ln()).abs() < 1e-15);
        assert!((d.chi2 - 1.0).abs() < 1e-15);
        let r = divergences(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert!(r.kl.is_infinite() && r.chi2.is_infinite());
    }

    #[test]
    fn works_in_single_precision() {
        let d = divergences(&[0.25f32, 0.75], &[0.5, 0.5]).unwrap();
        assert!((d.tv - 0.25).abs() < 1e-6);
    }

    #[test]
    fn bernoulli_bound_example() {
        assert!((bernoulli_product_tv_bound(&[0.5], &[0.6]).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(bernoulli_product_tv_bound(&[0.3, 0.9], &[0.3, 0.9]).unwrap(), 0.0);
        assert!((bernoulli_product_tv(&[0.5], &[0.6]).unwrap() - 0.1).abs() < 1e-12);
    }
}
