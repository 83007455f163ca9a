//! Robust Covariance detector: minimum-covariance-determinant style
//! location/scatter estimate scored by Mahalanobis distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Cholesky, Matrix, Rng};

/// Restarts from random elemental subsets.
const RESTARTS: usize = 20;
/// Concentration-step cap per restart.
const MAX_CONCENTRATION_STEPS: usize = 30;
/// Diagonal floor, as a fraction of trace/dim.
const RIDGE_FLOOR: f64 = 1e-6;

/// Location/scatter estimate with its Cholesky factor kept alongside so
/// scoring never refactors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustCovModel {
    pub location: Vec<f64>,
    pub covariance: Matrix,
    /// Support fraction used by the fit.
    pub h: f64,
    chol: Cholesky,
}

impl RobustCovModel {
    /// Builds a model directly from a location and covariance; the
    /// covariance gets the same ridge floor the fit applies.
    pub fn from_moments(location: Vec<f64>, covariance: Matrix) -> Result<Self> {
        if covariance.rows() != location.len() || covariance.cols() != location.len() {
            return Err(Error::argument(format!(
                "covariance is {}x{}, location has dimension {}",
                covariance.rows(),
                covariance.cols(),
                location.len()
            )));
        }
        let mut cov = covariance;
        apply_ridge_floor(&mut cov);
        let chol = Cholesky::factor(&cov)?;
        Ok(RobustCovModel {
            location,
            covariance: cov,
            h: 1.0,
            chol,
        })
    }

    pub fn dim(&self) -> usize {
        self.location.len()
    }
}

fn apply_ridge_floor(cov: &mut Matrix) {
    let dim = cov.rows();
    let trace: f64 = (0..dim).map(|i| cov.get(i, i)).sum();
    // Degenerate all-zero scatter still needs a positive floor.
    let floor = (RIDGE_FLOOR * trace / dim as f64).max(RIDGE_FLOOR * 1e-6);
    cov.add_diagonal(floor);
}

fn mean_and_cov(rows: &[Vec<f64>], subset: &[usize], dim: usize) -> (Vec<f64>, Matrix) {
    let m = subset.len() as f64;
    let mut mean = vec![0.0; dim];
    for &i in subset {
        for (a, v) in mean.iter_mut().zip(&rows[i]) {
            *a += v / m;
        }
    }
    let mut cov = Matrix::zeros(dim, dim);
    for &i in subset {
        let row = &rows[i];
        for a in 0..dim {
            let da = row[a] - mean[a];
            for b in a..dim {
                let v = cov.get(a, b) + da * (row[b] - mean[b]) / m;
                cov.set(a, b, v);
            }
        }
    }
    for a in 0..dim {
        for b in 0..a {
            cov.set(a, b, cov.get(b, a));
        }
    }
    (mean, cov)
}

/// Squared Mahalanobis distance via one solve against the factored scatter.
fn sq_dist(chol: &Cholesky, location: &[f64], x: &[f64]) -> f64 {
    let v: Vec<f64> = x.iter().zip(location).map(|(a, b)| a - b).collect();
    let solved = chol.solve_vec(&v);
    v.iter().zip(&solved).map(|(a, b)| a * b).sum()
}

/// Indices of the `h_count` smallest squared distances under the current
/// estimate. Ties broken by index for determinism.
fn smallest_h(
    rows: &[Vec<f64>],
    chol: &Cholesky,
    location: &[f64],
    h_count: usize,
) -> Vec<usize> {
    let mut order: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| (sq_dist(chol, location, r), i))
        .collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    order.truncate(h_count);
    order.into_iter().map(|(_, i)| i).collect()
}

/// Fits a robust location/scatter estimate: from each random elemental
/// subset, concentration steps re-estimate on the `h*N` closest points
/// until the scatter's log-determinant stops decreasing; the best of all
/// restarts wins.
pub fn fit_robust_cov(rows: &[Vec<f64>], h: f64, seed: u64) -> Result<RobustCovModel> {
    let n = rows.len();
    let Some(first) = rows.first() else {
        return Err(Error::argument("empty training set"));
    };
    let dim = first.len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::argument("training rows have inconsistent widths"));
    }
    if !(0.5 < h && h <= 1.0) {
        return Err(Error::argument(format!(
            "support fraction {h} outside (0.5, 1]"
        )));
    }
    let h_count = ((h * n as f64).floor() as usize).min(n);
    if h_count < dim + 1 {
        return Err(Error::argument(format!(
            "support count {h_count} below dim+1 = {}",
            dim + 1
        )));
    }

    let mut rng = Rng::new(seed);
    let mut best: Option<(f64, Vec<f64>, Matrix)> = None;

    for _ in 0..RESTARTS {
        let elemental = rng.sample_indices(n, (dim + 1).min(n));
        let (mut mean, mut cov) = mean_and_cov(rows, &elemental, dim);
        apply_ridge_floor(&mut cov);
        let mut chol = Cholesky::factor(&cov)?;
        let mut log_det = chol.log_det();

        for _ in 0..MAX_CONCENTRATION_STEPS {
            let subset = smallest_h(rows, &chol, &mean, h_count);
            let (next_mean, mut next_cov) = mean_and_cov(rows, &subset, dim);
            apply_ridge_floor(&mut next_cov);
            let next_chol = Cholesky::factor(&next_cov)?;
            let next_log_det = next_chol.log_det();
            let improved = next_log_det < log_det - 1e-9;
            mean = next_mean;
            cov = next_cov;
            chol = next_chol;
            log_det = next_log_det;
            if !improved {
                break;
            }
        }

        let better = match &best {
            None => true,
            Some((best_det, _, _)) => log_det < *best_det,
        };
        if better {
            best = Some((log_det, mean, cov));
        }
    }

    let (_, location, covariance) = best.expect("at least one restart ran");
    let chol = Cholesky::factor(&covariance)?;
    Ok(RobustCovModel {
        location,
        covariance,
        h,
        chol,
    })
}

/// Mahalanobis distance `sqrt((x-mu)^T Sigma^{-1} (x-mu))`.
pub fn mahalanobis_score(model: &RobustCovModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.dim() {
        return Err(Error::argument(format!(
            "query has dimension {}, model expects {}",
            x.len(),
            model.dim()
        )));
    }
    Ok(sq_dist(&model.chol, &model.location, x).max(0.0).sqrt())
}
