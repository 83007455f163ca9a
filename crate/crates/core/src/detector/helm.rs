//! Hierarchical extreme learning machine: stacked ELM autoencoder
//! feature layers feeding a one-class ELM whose output approximates 1 on
//! normal data. Anomaly score is |1 − Y|; the threshold is a scaled
//! percentile of validation deviations.
//!
//! Every hidden layer has random, frozen input weights; only the output
//! weights β are solved, in closed form by ridge regression.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{derive_seed, percentile, ridge_solve, sigmoid_map, Matrix, Rng};

/// One ELM: random input weights/biases and the solved output weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElmLayer {
    /// L × d random input weights, each row scaled to unit length.
    pub w: Matrix,
    /// Per-node biases, length L.
    pub b: Vec<f64>,
    /// Ridge solution, L × target-dimension.
    pub beta: Matrix,
    pub width: usize,
    /// Largest |x·βᵀ| seen on the training data, fixed at fit time.
    /// Feature propagation squashes g(x·βᵀ/scale) so training
    /// projections span exactly the responsive range of the sigmoid;
    /// without it the projections saturate and the stacked features
    /// carry no gradation. Reference hierarchical-ELM implementations
    /// apply the same stabilization. 1.0 for the classifier layer,
    /// which never propagates.
    pub scale: f64,
}

/// Fitted HELM: the stacked feature layers and the one-class head.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HelmState {
    pub feature_layers: Vec<ElmLayer>,
    pub classifier: ElmLayer,
}

/// Per-sample decision against a threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelmPrediction {
    pub anomaly: bool,
    /// |1 − Y|.
    pub deviation: f64,
    /// deviation / Thrd; +∞ when Thrd = 0 and the deviation is nonzero.
    pub ratio: f64,
}

fn random_projection(width: usize, dim: usize, rng: &mut Rng) -> (Matrix, Vec<f64>) {
    let mut w = Matrix::zeros(width, dim);
    for r in 0..width {
        let mut row: Vec<f64> = (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut row {
                *v /= norm;
            }
        }
        for (c, v) in row.iter().enumerate() {
            w.set(r, c, *v);
        }
    }
    let b = (0..width).map(|_| rng.uniform(-1.0, 1.0)).collect();
    (w, b)
}

/// Hidden activations H[j,i] = g(W_i · x_j + b_i).
pub fn elm_forward(layer: &ElmLayer, x: &Matrix) -> Result<Matrix> {
    if x.cols() != layer.w.cols() {
        return Err(Error::argument(format!(
            "input has {} columns, layer expects {}",
            x.cols(),
            layer.w.cols()
        )));
    }
    let mut h = x.matmul_transpose(&layer.w)?;
    for r in 0..h.rows() {
        for c in 0..h.cols() {
            let v = h.get(r, c) + layer.b[c];
            h.set(r, c, crate::numerics::sigmoid(v));
        }
    }
    Ok(h)
}

/// Fits one autoencoding ELM layer: β reconstructs X from the random
/// hidden expansion; the propagated features are g(X βᵀ). Returns the
/// layer, the features for the next stage, and the mean squared
/// reconstruction error ‖Hβ − X‖²/N.
pub fn fit_elm_autoencoder(
    x: &Matrix,
    width: usize,
    c: f64,
    seed: u64,
) -> Result<(ElmLayer, Matrix, f64)> {
    if x.rows() == 0 {
        return Err(Error::argument("empty input matrix"));
    }
    if width == 0 {
        return Err(Error::argument("layer width must be positive"));
    }
    let mut rng = Rng::new(seed);
    let (w, b) = random_projection(width, x.cols(), &mut rng);
    let mut layer = ElmLayer {
        w,
        b,
        beta: Matrix::zeros(0, 0),
        width,
        scale: 1.0,
    };
    let h = elm_forward(&layer, x)?;
    layer.beta = ridge_solve(&h, x, c)?;
    let residual = h.matmul(&layer.beta)?.sub(x)?;
    let recon_error = residual.frobenius_norm().powi(2) / x.rows() as f64;
    let proj = x.matmul_transpose(&layer.beta)?;
    let max_abs = proj.data().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    layer.scale = if max_abs > 0.0 { max_abs } else { 1.0 };
    let features = sigmoid_map(&proj.map(|v| v / layer.scale));
    Ok((layer, features, recon_error))
}

/// Fits the one-class head: β maps hidden activations to the constant
/// target 1, so Y(x) = h(x)ᵀβ ≈ 1 on normal data.
pub fn fit_oneclass_elm(features: &Matrix, width: usize, c: f64, seed: u64) -> Result<ElmLayer> {
    if features.rows() == 0 {
        return Err(Error::argument("empty feature matrix"));
    }
    if width == 0 {
        return Err(Error::argument("layer width must be positive"));
    }
    let mut rng = Rng::new(seed);
    let (w, b) = random_projection(width, features.cols(), &mut rng);
    let mut layer = ElmLayer {
        w,
        b,
        beta: Matrix::zeros(0, 0),
        width,
        scale: 1.0,
    };
    let h = elm_forward(&layer, features)?;
    let ones = Matrix::from_vec(features.rows(), 1, vec![1.0; features.rows()])?;
    layer.beta = ridge_solve(&h, &ones, c)?;
    Ok(layer)
}

/// Propagates inputs through the stacked feature maps:
/// X ← g(X βᵀ / scale), with each layer's scale fixed at fit time.
pub fn propagate_features(state: &HelmState, x: &Matrix) -> Result<Matrix> {
    let mut features = x.clone();
    for layer in &state.feature_layers {
        if features.cols() != layer.beta.cols() {
            return Err(Error::argument(format!(
                "input has {} columns, feature layer expects {}",
                features.cols(),
                layer.beta.cols()
            )));
        }
        let proj = features.matmul_transpose(&layer.beta)?;
        features = sigmoid_map(&proj.map(|v| v / layer.scale));
    }
    Ok(features)
}

/// One-class outputs Y for each row of X.
pub fn helm_output(state: &HelmState, x: &Matrix) -> Result<Vec<f64>> {
    let features = propagate_features(state, x)?;
    let h = elm_forward(&state.classifier, &features)?;
    let y = h.matmul(&state.classifier.beta)?;
    Ok((0..y.rows()).map(|r| y.get(r, 0)).collect())
}

/// Fits the whole stack on normal training rows. Layer seeds are derived
/// from the master seed by position; the classifier gets its own tag.
pub fn fit_helm(
    x: &Matrix,
    feature_widths: &[usize],
    classifier_width: usize,
    c_feature: f64,
    c_classifier: f64,
    seed: u64,
) -> Result<HelmState> {
    if feature_widths.is_empty() {
        return Err(Error::argument("at least one feature layer is required"));
    }
    let mut features = x.clone();
    let mut feature_layers = Vec::with_capacity(feature_widths.len());
    for (i, &width) in feature_widths.iter().enumerate() {
        let (layer, next, _recon) =
            fit_elm_autoencoder(&features, width, c_feature, derive_seed(seed, i as u64))?;
        feature_layers.push(layer);
        features = next;
    }
    let classifier = fit_oneclass_elm(
        &features,
        classifier_width,
        c_classifier,
        derive_seed(seed, 0xC1A5),
    )?;
    Ok(HelmState {
        feature_layers,
        classifier,
    })
}

/// Thrd = γ · percentile_p(|1 − Y_valid|).
pub fn helm_threshold(y_valid: &[f64], p: f64, gamma: f64) -> Result<f64> {
    if y_valid.is_empty() {
        return Err(Error::argument("empty validation outputs"));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::argument(format!("gamma = {gamma} must be >= 0")));
    }
    let deviations: Vec<f64> = y_valid.iter().map(|y| (1.0 - y).abs()).collect();
    Ok(gamma * percentile(&deviations, p)?)
}

/// Labels each output against the threshold. The boundary case
/// deviation = Thrd stays normal; with Thrd = 0, zero deviations are
/// normal with ratio 0 and any nonzero deviation is anomalous with an
/// infinite ratio.
pub fn helm_predict(y_test: &[f64], thrd: f64) -> Vec<HelmPrediction> {
    y_test
        .iter()
        .map(|y| {
            let deviation = (1.0 - y).abs();
            HelmPrediction {
                anomaly: deviation > thrd,
                deviation,
                ratio: deviation_ratio(deviation, thrd),
            }
        })
        .collect()
}

/// Deviation expressed in threshold units, the quantity behind the
/// ratio plots: > 1 flags, < 1 clears. A zero threshold has no scale,
/// so nonzero deviations report +∞ and zero deviations report 0.
pub fn deviation_ratio(deviation: f64, thrd: f64) -> f64 {
    if thrd > 0.0 {
        deviation / thrd
    } else if deviation == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}
