//! Isolation Forest: random axis-parallel isolation trees, path-length
//! scoring normalized by the average unsuccessful-search depth c(ψ).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Rng;

const EULER_MASCHERONI: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum IsoNode {
    Internal {
        attribute: usize,
        split: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Training points that reached this node at termination.
        size: usize,
    },
}

/// One isolation tree stored as an arena; node 0 is the root.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsoTree {
    pub nodes: Vec<IsoNode>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsoForest {
    pub trees: Vec<IsoTree>,
    pub subsample: usize,
    /// Normalization constant c(subsample).
    pub c_psi: f64,
}

/// Average path length of an unsuccessful binary search over n points:
/// c(1) = 0, c(n) = 2·(ln(n−1) + γ) − 2(n−1)/n.
pub fn harmonic_c(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let m = (n - 1) as f64;
    2.0 * (m.ln() + EULER_MASCHERONI) - 2.0 * m / n as f64
}

/// Score from a mean path length: s = 2^(−mean / c(ψ)).
pub fn normalized_score(mean_path: f64, c_psi: f64) -> f64 {
    (-mean_path / c_psi).exp2()
}

fn build_node(
    rows: &[Vec<f64>],
    subset: &[usize],
    depth: usize,
    height_limit: usize,
    rng: &mut Rng,
    nodes: &mut Vec<IsoNode>,
) -> usize {
    if subset.len() <= 1 || depth >= height_limit {
        nodes.push(IsoNode::Leaf { size: subset.len() });
        return nodes.len() - 1;
    }
    // Split attributes must have distinct values inside this subset;
    // a subset constant on every attribute terminates as a leaf.
    let dim = rows[subset[0]].len();
    let mut candidates = Vec::new();
    let mut ranges = Vec::new();
    #[allow(clippy::needless_range_loop)] // `a` indexes a column across many rows
    for a in 0..dim {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &i in subset.iter() {
            min = min.min(rows[i][a]);
            max = max.max(rows[i][a]);
        }
        if max > min {
            candidates.push(a);
            ranges.push((min, max));
        }
    }
    if candidates.is_empty() {
        nodes.push(IsoNode::Leaf { size: subset.len() });
        return nodes.len() - 1;
    }
    let pick = rng.index(candidates.len());
    let attribute = candidates[pick];
    let (min, max) = ranges[pick];
    // Uniform in (min, max); the unit draw is in [0,1), so nudge a draw
    // of exactly 0 off the minimum to keep both children non-empty.
    let mut split = min + rng.next_f64() * (max - min);
    if split <= min {
        split = min + (max - min) * 0.5;
    }

    let slot = nodes.len();
    nodes.push(IsoNode::Leaf { size: 0 }); // placeholder, patched below
    let left_subset: Vec<usize> = subset.iter().copied().filter(|&i| rows[i][attribute] < split).collect();
    let right_subset: Vec<usize> = subset.iter().copied().filter(|&i| rows[i][attribute] >= split).collect();
    let left = build_node(rows, &left_subset, depth + 1, height_limit, rng, nodes);
    let right = build_node(rows, &right_subset, depth + 1, height_limit, rng, nodes);
    nodes[slot] = IsoNode::Internal {
        attribute,
        split,
        left,
        right,
    };
    slot
}

/// Grows `t` trees, each on an independent ψ-subsample drawn without
/// replacement, with height limit ⌈log₂ ψ⌉. Per-tree randomness comes
/// from child streams of the master seed.
pub fn fit_forest(rows: &[Vec<f64>], t: usize, psi: usize, seed: u64) -> Result<IsoForest> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::argument("empty training set"));
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::argument("training rows have inconsistent widths"));
    }
    if t < 1 {
        return Err(Error::argument("tree count must be at least 1"));
    }
    if psi < 2 {
        return Err(Error::argument("subsample size must be at least 2"));
    }
    if psi > n {
        return Err(Error::argument(format!(
            "subsample size {psi} exceeds training size {n}"
        )));
    }
    let height_limit = (psi as f64).log2().ceil() as usize;
    let mut trees = Vec::with_capacity(t);
    for tree_idx in 0..t {
        let mut rng = Rng::child(seed, tree_idx as u64);
        let subset = rng.sample_indices(n, psi);
        let mut nodes = Vec::new();
        build_node(rows, &subset, 0, height_limit, &mut rng, &mut nodes);
        trees.push(IsoTree { nodes });
    }
    Ok(IsoForest {
        trees,
        subsample: psi,
        c_psi: harmonic_c(psi),
    })
}

/// Edges traversed to x's leaf plus the c(size) adjustment for the
/// subtree the training subset would still have needed.
pub fn path_length(tree: &IsoTree, x: &[f64]) -> f64 {
    let mut node = 0;
    let mut depth = 0usize;
    loop {
        match &tree.nodes[node] {
            IsoNode::Leaf { size } => return depth as f64 + harmonic_c(*size),
            IsoNode::Internal {
                attribute,
                split,
                left,
                right,
            } => {
                node = if x[*attribute] < *split { *left } else { *right };
                depth += 1;
            }
        }
    }
}

/// s(x) = 2^(−E[h(x)]/c(ψ)), in (0, 1), higher = easier to isolate.
pub fn forest_score(forest: &IsoForest, x: &[f64]) -> f64 {
    let mean: f64 = forest
        .trees
        .iter()
        .map(|t| path_length(t, x))
        .sum::<f64>()
        / forest.trees.len() as f64;
    normalized_score(mean, forest.c_psi)
}
