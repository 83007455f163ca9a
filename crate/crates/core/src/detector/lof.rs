//! Local Outlier Factor against a fixed reference set.
//!
//! Conventions (they matter for exact oracle agreement):
//! * neighbor lists hold exactly `k` points, ordered by (distance, index);
//! * a reference point's own neighbors exclude itself;
//! * a query's neighbors are drawn from all references, so a query
//!   coinciding with a reference counts that reference at distance 0;
//! * local reachability density denominators are floored at 1e-12, so
//!   duplicated points yield large finite densities instead of division
//!   by zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LRD_FLOOR: f64 = 1e-12;

/// Reference vectors with their precomputed k-distances and local
/// reachability densities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LofModel {
    pub refs: Vec<Vec<f64>>,
    pub k: usize,
    k_dist: Vec<f64>,
    lrd: Vec<f64>,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// The k nearest of `refs` to `x`, ordered by (distance, index).
/// `exclude` skips one reference index (a point looking at itself).
fn k_nearest(refs: &[Vec<f64>], x: &[f64], k: usize, exclude: Option<usize>) -> Vec<(f64, usize)> {
    let mut order: Vec<(f64, usize)> = refs
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != exclude)
        .map(|(i, r)| (euclidean(x, r), i))
        .collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    order.truncate(k);
    order
}

/// Density from a neighbor list: 1 / mean reachability distance, where
/// reach(x, b) = max(k-distance(b), d(x, b)).
fn lrd_from_neighbors(neighbors: &[(f64, usize)], k_dist: &[f64]) -> f64 {
    let mean_reach = neighbors
        .iter()
        .map(|&(d, i)| d.max(k_dist[i]))
        .sum::<f64>()
        / neighbors.len() as f64;
    1.0 / mean_reach.max(LRD_FLOOR)
}

/// Builds the reference structure: per-point k-distance, then density.
pub fn fit_lof(train: &[Vec<f64>], k: usize) -> Result<LofModel> {
    let n = train.len();
    if n < 2 {
        return Err(Error::argument("LOF needs at least 2 reference points"));
    }
    let dim = train[0].len();
    if train.iter().any(|r| r.len() != dim) {
        return Err(Error::argument("training rows have inconsistent widths"));
    }
    if k < 1 || k >= n {
        return Err(Error::argument(format!(
            "k = {k} outside [1, {}] for {n} reference points",
            n - 1
        )));
    }
    let neighbor_lists: Vec<Vec<(f64, usize)>> = train
        .iter()
        .enumerate()
        .map(|(i, r)| k_nearest(train, r, k, Some(i)))
        .collect();
    let k_dist: Vec<f64> = neighbor_lists
        .iter()
        .map(|nb| nb.last().expect("k >= 1").0)
        .collect();
    let lrd: Vec<f64> = neighbor_lists
        .iter()
        .map(|nb| lrd_from_neighbors(nb, &k_dist))
        .collect();
    Ok(LofModel {
        refs: train.to_vec(),
        k,
        k_dist,
        lrd,
    })
}

/// LOF of a query against the references: mean neighbor density over the
/// query's own density. Inliers land near 1, outliers well above.
pub fn lof_score(model: &LofModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.refs[0].len() {
        return Err(Error::argument(format!(
            "query has dimension {}, references have {}",
            x.len(),
            model.refs[0].len()
        )));
    }
    let neighbors = k_nearest(&model.refs, x, model.k, None);
    let own = lrd_from_neighbors(&neighbors, &model.k_dist);
    let neighbor_mean = neighbors.iter().map(|&(_, i)| model.lrd[i]).sum::<f64>()
        / neighbors.len() as f64;
    Ok(neighbor_mean / own)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    /// Independent per-query recomputation, no shared precomputation.
    pub(crate) fn brute_force_lof(refs: &[Vec<f64>], k: usize, x: &[f64]) -> f64 {
        let d = |a: &[f64], b: &[f64]| -> f64 {
            a.iter()
                .zip(b)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt()
        };
        let knn = |point: &[f64], skip: Option<usize>| -> Vec<(f64, usize)> {
            let mut all: Vec<(f64, usize)> = refs
                .iter()
                .enumerate()
                .filter(|(i, _)| Some(*i) != skip)
                .map(|(i, r)| (d(point, r), i))
                .collect();
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            all.truncate(k);
            all
        };
        let k_dist = |i: usize| -> f64 { knn(&refs[i], Some(i)).last().unwrap().0 };
        let lrd = |neighbors: &[(f64, usize)]| -> f64 {
            let mean: f64 = neighbors
                .iter()
                .map(|&(dist, i)| dist.max(k_dist(i)))
                .sum::<f64>()
                / neighbors.len() as f64;
            1.0 / mean.max(1e-12)
        };
        let lrd_of_ref = |i: usize| -> f64 { lrd(&knn(&refs[i], Some(i))) };
        let q_neighbors = knn(x, None);
        let own = lrd(&q_neighbors);
        let mean_nb: f64 =
            q_neighbors.iter().map(|&(_, i)| lrd_of_ref(i)).sum::<f64>() / q_neighbors.len() as f64;
        mean_nb / own
    }

    fn grid_refs() -> Vec<Vec<f64>> {
        (0..5).map(|i| vec![i as f64]).collect()
    }

    #[test]
    fn uniform_grid_interior_point() {
        // In-sample score at the grid center; the value 5/6 comes from the
        // brute-force oracle under the stated conventions (the center's
        // density is 1, its neighbors average 5/6).
        let model = fit_lof(&grid_refs(), 2).unwrap();
        let s = lof_score(&model, &[2.0]).unwrap();
        assert!((s - 5.0 / 6.0).abs() < 1e-12, "{s}");
        assert!((s - brute_force_lof(&grid_refs(), 2, &[2.0])).abs() < 1e-12);
    }

    #[test]
    fn far_query_scores_as_outlier() {
        let refs: Vec<Vec<f64>> = (0..3).map(|i| vec![i as f64]).collect();
        let model = fit_lof(&refs, 2).unwrap();
        let s = lof_score(&model, &[10.0]).unwrap();
        assert!(s > 1.5, "{s}");
        // Frozen oracle value: mean(2/3, 1/2) * 8.5 = 119/24.
        assert!((s - 119.0 / 24.0).abs() < 1e-12, "{s}");
    }

    #[test]
    fn query_inside_dense_cluster_scores_near_one() {
        let mut rng = Rng::new(4);
        let refs: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)])
            .collect();
        let model = fit_lof(&refs, 5).unwrap();
        let s = lof_score(&model, &refs[10].clone()).unwrap();
        assert!((s - 1.0).abs() < 0.3, "{s}");
    }

    #[test]
    fn duplicate_points_stay_finite() {
        let refs = vec![vec![1.0], vec![1.0], vec![1.0], vec![2.0]];
        let model = fit_lof(&refs, 2).unwrap();
        let s = lof_score(&model, &[1.0]).unwrap();
        assert!(s.is_finite(), "{s}");
    }

    #[test]
    fn oracle_agreement_on_random_sets() {
        let mut rng = Rng::new(77);
        for trial in 0..20 {
            let n = 5 + (trial % 16) * 3;
            let k = 1 + trial % 4;
            let refs: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)])
                .collect();
            let model = fit_lof(&refs, k).unwrap();
            for _ in 0..5 {
                let q = vec![rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)];
                let fast = lof_score(&model, &q).unwrap();
                let slow = brute_force_lof(&refs, k, &q);
                assert!((fast - slow).abs() < 1e-9, "n={n} k={k}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn homogeneous_sample_scores_concentrate_near_one() {
        let mut rng = Rng::new(12);
        let refs: Vec<Vec<f64>> = (0..200)
            .map(|_| vec![rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)])
            .collect();
        let model = fit_lof(&refs, 10).unwrap();
        let in_band = refs
            .iter()
            .filter(|r| {
                let s = lof_score(&model, r).unwrap();
                (0.8..=1.3).contains(&s)
            })
            .count();
        assert!(in_band >= 180, "{in_band}/200 in [0.8, 1.3]");
    }

    #[test]
    fn invalid_k_rejected() {
        let refs = grid_refs();
        assert!(fit_lof(&refs, 0).is_err());
        assert!(fit_lof(&refs, 5).is_err());
        assert!(fit_lof(&refs[..1], 1).is_err());
    }
}
