//! One-class SVM: RBF kernel, solved in the dual by a pairwise
//! (SMO-style) coordinate method on the max-violating pair.
//!
//! Dual problem: minimize ½ αᵀKα subject to 0 ≤ αᵢ ≤ 1/(νN), Σαᵢ = 1.
//! Anomaly score is ρ − Σᵢ αᵢ K(xᵢ, x), so higher = more anomalous and
//! the decision boundary sits at score 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Rng;

/// KKT tolerance on the max violating pair.
const KKT_TOL: f64 = 1e-4;
/// Box-boundary tolerance when classifying free support vectors.
const BOX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OcsvmModel {
    /// Training points with nonzero coefficient.
    pub support: Vec<Vec<f64>>,
    /// Coefficients matching `support`.
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub sigma: f64,
    pub nu: f64,
}

pub fn rbf_kernel(a: &[f64], b: &[f64], sigma: f64) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-sq / (2.0 * sigma * sigma)).exp()
}

/// Median pairwise Euclidean distance; 1.0 when degenerate (all points
/// coincide or a single point).
pub fn median_heuristic_sigma(rows: &[Vec<f64>]) -> f64 {
    let mut dists = Vec::new();
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            let d: f64 = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            dists.push(d);
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = dists[dists.len() / 2];
    if median > 0.0 {
        median
    } else {
        1.0
    }
}

/// Solves the dual to KKT tolerance 1e-4. The initial feasible point
/// spreads the unit mass over a seeded permutation, so ties in the
/// solver are broken deterministically per seed.
pub fn fit_ocsvm(train: &[Vec<f64>], nu: f64, sigma: f64, seed: u64) -> Result<OcsvmModel> {
    let n = train.len();
    if n == 0 {
        return Err(Error::argument("empty training set"));
    }
    let dim = train[0].len();
    if train.iter().any(|r| r.len() != dim) {
        return Err(Error::argument("training rows have inconsistent widths"));
    }
    if !(0.0 < nu && nu <= 1.0) {
        return Err(Error::argument(format!("nu = {nu} outside (0, 1]")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::argument(format!("sigma = {sigma} must be positive")));
    }

    let c = 1.0 / (nu * n as f64);

    // Dense kernel matrix; N stays small for this problem scale.
    let mut kernel = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = rbf_kernel(&train[i], &train[j], sigma);
            kernel[i * n + j] = v;
            kernel[j * n + i] = v;
        }
    }

    // Feasible start: fill ⌊νN⌋ permuted slots at the box bound, park the
    // leftover mass on the next slot.
    let mut alpha = vec![0.0; n];
    let mut perm: Vec<usize> = (0..n).collect();
    Rng::new(seed).shuffle(&mut perm);
    let full = (nu * n as f64).floor() as usize;
    let mut remaining = 1.0;
    for &i in perm.iter().take(full.min(n)) {
        alpha[i] = c;
        remaining -= c;
    }
    if remaining > 0.0 {
        let slot = perm[full.min(n - 1)];
        alpha[slot] = (alpha[slot] + remaining).min(c);
    }

    // Gradient of the objective: O = Kα.
    let mut grad = vec![0.0; n];
    for i in 0..n {
        grad[i] = (0..n).map(|j| kernel[i * n + j] * alpha[j]).sum();
    }

    let max_iter = 200_000.max(100 * n);
    let mut converged = false;
    let mut violation = f64::INFINITY;
    for _ in 0..max_iter {
        // Max-violating pair: the steepest feasible transfer direction.
        let mut up: Option<usize> = None;
        let mut low: Option<usize> = None;
        for i in 0..n {
            if alpha[i] < c - BOX_TOL && up.is_none_or(|u| grad[i] < grad[u]) {
                up = Some(i);
            }
            if alpha[i] > BOX_TOL && low.is_none_or(|l| grad[i] > grad[l]) {
                low = Some(i);
            }
        }
        // No index below the box bound means the feasible set is the
        // single point with every coefficient at the bound: optimal.
        let (Some(i), Some(j)) = (up, low) else {
            converged = true;
            break;
        };
        violation = grad[j] - grad[i];
        if violation <= KKT_TOL {
            converged = true;
            break;
        }
        let eta = kernel[i * n + i] + kernel[j * n + j] - 2.0 * kernel[i * n + j];
        let room = (c - alpha[i]).min(alpha[j]);
        let delta = if eta > 1e-12 {
            (violation / eta).min(room)
        } else {
            room
        };
        alpha[i] += delta;
        alpha[j] -= delta;
        // Snap to the box so constraint checks stay exact.
        alpha[i] = alpha[i].clamp(0.0, c);
        alpha[j] = alpha[j].clamp(0.0, c);
        for t in 0..n {
            grad[t] += delta * (kernel[t * n + i] - kernel[t * n + j]);
        }
    }
    if !converged && violation > KKT_TOL {
        return Err(Error::training(format!(
            "one-class SVM did not reach KKT tolerance {KKT_TOL}; final violation {violation:.3e}"
        )));
    }

    // ρ from free support vectors; fall back to the midpoint of the
    // feasible interval when every coefficient sits on the box.
    let free: Vec<usize> = (0..n)
        .filter(|&i| alpha[i] > BOX_TOL && alpha[i] < c - BOX_TOL)
        .collect();
    let rho = if !free.is_empty() {
        free.iter().map(|&i| grad[i]).sum::<f64>() / free.len() as f64
    } else {
        let hi = (0..n)
            .filter(|&i| alpha[i] > BOX_TOL)
            .map(|i| grad[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let lo = (0..n)
            .filter(|&i| alpha[i] < c - BOX_TOL)
            .map(|i| grad[i])
            .fold(f64::INFINITY, f64::min);
        if lo.is_finite() && hi.is_finite() {
            0.5 * (lo + hi)
        } else if hi.is_finite() {
            hi
        } else {
            lo
        }
    };

    // Keep only support vectors for scoring.
    let mut support = Vec::new();
    let mut sv_alpha = Vec::new();
    for i in 0..n {
        if alpha[i] > 0.0 {
            support.push(train[i].clone());
            sv_alpha.push(alpha[i]);
        }
    }
    Ok(OcsvmModel {
        support,
        alpha: sv_alpha,
        rho,
        sigma,
        nu,
    })
}

/// Anomaly score ρ − Σ αᵢ K(xᵢ, x).
pub fn ocsvm_score(model: &OcsvmModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.support[0].len() {
        return Err(Error::argument(format!(
            "query has dimension {}, model expects {}",
            x.len(),
            model.support[0].len()
        )));
    }
    let decision: f64 = model
        .support
        .iter()
        .zip(&model.alpha)
        .map(|(s, a)| a * rbf_kernel(s, x, model.sigma))
        .sum();
    Ok(model.rho - decision)
}
