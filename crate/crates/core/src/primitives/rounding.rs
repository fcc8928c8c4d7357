//! Shared-randomness rounding of real vectors.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::seed::SharedSeed;

/// Rounding in a random rotated basis onto a randomly shifted grid.
///
/// The grid width `eps * sqrt(n) / (8 ln(4n / rho_target))` trades the
/// agreement probability for close inputs against accuracy. Outputs are
/// clamped into `[x - eps, x + eps]`, so the sup-norm error bound holds
/// unconditionally.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomizedRounding {
    pub rho_target: f64,
}

impl Default for RandomizedRounding {
    fn default() -> Self {
        Self { rho_target: 0.1 }
    }
}

impl RandomizedRounding {
    pub fn new(rho_target: f64) -> Result<Self> {
        if !(rho_target > 0.0 && rho_target < 1.0) {
            return Err(invalid("rho_target must lie in (0, 1)"));
        }
        Ok(Self { rho_target })
    }

    pub fn grid_width(&self, n: usize, eps: f64) -> f64 {
        let n = n as f64;
        eps * n.sqrt() / (8.0 * (4.0 * n / self.rho_target).ln())
    }

    pub fn round(&self, x: &[f64], eps: f64, xi: &SharedSeed) -> Result<Vec<f64>> {
        if !(eps > 0.0) {
            return Err(invalid("rounding accuracy must be positive"));
        }
        let n = x.len();
        if n == 0 {
            return Ok(Vec::new());
        }
        let q = rotation(n, xi);
        let w = self.grid_width(n, eps);
        let mut shifts = xi.child("shift").stream();
        let z = q.transpose() * DVector::from_column_slice(x);
        let rounded = z.map(|zi| {
            let alpha = shifts.random::<f64>() * w;
            alpha + w * ((zi - alpha) / w).round()
        });
        let y = q * rounded;
        Ok(x.iter().zip(y.iter()).map(|(&xi, &yi)| yi.clamp(xi - eps, xi + eps)).collect())
    }
}

/// Haar-distributed orthogonal matrix from QR of a Gaussian matrix.
fn rotation(n: usize, xi: &SharedSeed) -> DMatrix<f64> {
    let mut rng = xi.child("rotation").stream();
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// [`RandomizedRounding::round`] with the default `rho_target`.
pub fn rand_round(x: &[f64], eps: f64, xi: &SharedSeed) -> Result<Vec<f64>> {
    RandomizedRounding::default().round(x, eps, xi)
}

/// Rounds each coordinate to the nearest point of `alpha_i + k * eps / 2`,
/// with shifts `alpha_i` drawn uniformly from `xi`. Error is at most `eps / 4`.
pub fn coord_round(x: &[f64], eps: f64, xi: &SharedSeed) -> Result<Vec<f64>> {
    let mut rng = xi.child("shift").stream();
    let shifts: Vec<f64> = (0..x.len()).map(|_| rng.random::<f64>() * eps / 2.0).collect();
    coord_round_with_shifts(x, eps, &shifts)
}

/// [`coord_round`] with caller-chosen shifts.
pub fn coord_round_with_shifts(x: &[f64], eps: f64, shifts: &[f64]) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(invalid("rounding accuracy must be positive"));
    }
    if shifts.len() != x.len() {
        return Err(invalid("one shift per coordinate"));
    }
    let w = eps / 2.0;
    Ok(x.iter().zip(shifts).map(|(&v, &a)| a + w * ((v - a) / w).round()).collect())
}
