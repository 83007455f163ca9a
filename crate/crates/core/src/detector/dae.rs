//! Deep autoencoder detector: symmetric multilayer perceptron trained to
//! reconstruct normal data; anomaly score is the reconstruction error.
//!
//! Hidden layers use the logistic activation, the output layer is
//! identity (inputs are standardized, so targets are unbounded). The
//! optimizer is mini-batch gradient descent with adaptive moment
//! estimates, written out explicitly below.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{sigmoid, Matrix, Rng};

/// Relative-error denominator floor in the gradient check; differences
/// below this scale are finite-difference noise, not gradient signal.
const CHECK_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSchedule {
    /// Zero epochs returns the freshly initialized network untouched.
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl TrainSchedule {
    pub fn with_seed(seed: u64) -> Self {
        TrainSchedule {
            epochs: 200,
            batch: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(Error::argument("batch size must be positive"));
        }
        let positive = [
            ("learning rate", self.learning_rate),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("epsilon", self.epsilon),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::argument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.beta1 >= 1.0 || self.beta2 >= 1.0 {
            return Err(Error::argument("moment decay rates must be below 1"));
        }
        Ok(())
    }
}

/// Symmetric autoencoder; layer l maps `sizes[l]` to `sizes[l+1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpAutoencoder {
    pub sizes: Vec<usize>,
    /// weights[l] has shape sizes[l+1] × sizes[l].
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
}

/// Expands encoder widths into the full mirrored size list:
/// input 68 with hidden [32, 8] becomes [68, 32, 8, 32, 68].
pub fn symmetric_sizes(input_dim: usize, encoder_hidden: &[usize]) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(encoder_hidden.len() * 2 + 1);
    sizes.push(input_dim);
    sizes.extend_from_slice(encoder_hidden);
    for &h in encoder_hidden.iter().rev().skip(1) {
        sizes.push(h);
    }
    sizes.push(input_dim);
    sizes
}

impl MlpAutoencoder {
    /// Glorot-uniform initialization, biases zero.
    pub fn new(sizes: &[usize], seed: u64) -> Result<Self> {
        if sizes.len() < 3 || sizes.len().is_multiple_of(2) {
            return Err(Error::argument(
                "layer sizes must be an odd-length list (encoder, bottleneck, decoder)",
            ));
        }
        if sizes.contains(&0) {
            return Err(Error::argument("layer sizes must be positive"));
        }
        let n = sizes.len();
        for i in 0..n {
            if sizes[i] != sizes[n - 1 - i] {
                return Err(Error::argument("encoder and decoder sizes must mirror"));
            }
        }
        let bottleneck = sizes[n / 2];
        if bottleneck >= sizes[0] {
            return Err(Error::argument(format!(
                "bottleneck {bottleneck} must be narrower than input {}",
                sizes[0]
            )));
        }
        let mut rng = Rng::new(seed);
        let mut weights = Vec::with_capacity(n - 1);
        let mut biases = Vec::with_capacity(n - 1);
        for l in 0..n - 1 {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut w = Matrix::zeros(fan_out, fan_in);
            for r in 0..fan_out {
                for c in 0..fan_in {
                    w.set(r, c, rng.uniform(-bound, bound));
                }
            }
            weights.push(w);
            biases.push(vec![0.0; fan_out]);
        }
        Ok(MlpAutoencoder {
            sizes: sizes.to_vec(),
            weights,
            biases,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    fn layer_count(&self) -> usize {
        self.weights.len()
    }

    /// Activations per layer; index 0 is the input itself.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layer_count() + 1);
        acts.push(x.to_vec());
        for l in 0..self.layer_count() {
            let prev = &acts[l];
            let w = &self.weights[l];
            let mut z: Vec<f64> = (0..w.rows())
                .map(|r| {
                    w.row(r).iter().zip(prev).map(|(a, b)| a * b).sum::<f64>() + self.biases[l][r]
                })
                .collect();
            if l != self.layer_count() - 1 {
                for v in &mut z {
                    *v = sigmoid(*v);
                }
            }
            acts.push(z);
        }
        acts
    }

    /// Per-layer gradients of the reconstruction loss at one sample.
    fn backward(&self, acts: &[Vec<f64>]) -> (Vec<Matrix>, Vec<Vec<f64>>) {
        let x = &acts[0];
        let out = acts.last().expect("forward output");
        let d_out = out.len() as f64;
        // d(mean squared error)/d(out).
        let mut delta: Vec<f64> = out.iter().zip(x).map(|(o, t)| 2.0 * (o - t) / d_out).collect();
        let mut grad_w: Vec<Matrix> = self
            .weights
            .iter()
            .map(|w| Matrix::zeros(w.rows(), w.cols()))
            .collect();
        let mut grad_b: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();
        for l in (0..self.layer_count()).rev() {
            let prev = &acts[l];
            for (r, d) in delta.iter().enumerate() {
                grad_b[l][r] = *d;
                for (c, p) in prev.iter().enumerate() {
                    grad_w[l].set(r, c, d * p);
                }
            }
            if l > 0 {
                let w = &self.weights[l];
                let mut next = vec![0.0; w.cols()];
                for (r, d) in delta.iter().enumerate() {
                    for (c, n) in next.iter_mut().enumerate() {
                        *n += w.get(r, c) * d;
                    }
                }
                // Logistic derivative via the already-computed activation.
                for (n, a) in next.iter_mut().zip(prev) {
                    *n *= a * (1.0 - a);
                }
                delta = next;
            }
        }
        (grad_w, grad_b)
    }
}

/// Mean squared reconstruction error for one input.
pub fn reconstruction_score(model: &MlpAutoencoder, x: &[f64]) -> Result<f64> {
    if x.len() != model.input_dim() {
        return Err(Error::argument(format!(
            "input has dimension {}, network expects {}",
            x.len(),
            model.input_dim()
        )));
    }
    let acts = model.forward(x);
    let out = acts.last().expect("forward output");
    Ok(out.iter().zip(x).map(|(o, t)| (o - t) * (o - t)).sum::<f64>() / x.len() as f64)
}

fn mean_loss(model: &MlpAutoencoder, rows: &[Vec<f64>]) -> f64 {
    rows.iter()
        .map(|r| reconstruction_score(model, r).expect("dimensions checked"))
        .sum::<f64>()
        / rows.len() as f64
}

/// Trains by mini-batch gradient descent with adaptive moments:
/// m ← β₁m + (1−β₁)g, v ← β₂v + (1−β₂)g², bias-corrected by step count,
/// θ ← θ − lr·m̂/(√v̂ + ε). Returns the network and the training-loss
/// trajectory (initial loss, then one entry per epoch).
pub fn train_dae(
    rows: &[Vec<f64>],
    encoder_hidden: &[usize],
    schedule: &TrainSchedule,
) -> Result<(MlpAutoencoder, Vec<f64>)> {
    let Some(first) = rows.first() else {
        return Err(Error::argument("empty training set"));
    };
    let dim = first.len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::argument("training rows have inconsistent widths"));
    }
    schedule.validate()?;
    let sizes = symmetric_sizes(dim, encoder_hidden);
    let mut model = MlpAutoencoder::new(&sizes, schedule.seed)?;
    let mut rng = Rng::child(schedule.seed, 1);

    let mut m_w: Vec<Matrix> = model
        .weights
        .iter()
        .map(|w| Matrix::zeros(w.rows(), w.cols()))
        .collect();
    let mut v_w = m_w.clone();
    let mut m_b: Vec<Vec<f64>> = model.biases.iter().map(|b| vec![0.0; b.len()]).collect();
    let mut v_b = m_b.clone();
    let mut step = 0u32;

    let mut losses = vec![mean_loss(&model, rows)];
    let mut order: Vec<usize> = (0..rows.len()).collect();
    for _ in 0..schedule.epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(schedule.batch) {
            let scale = 1.0 / batch.len() as f64;
            let mut g_w: Vec<Matrix> = model
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect();
            let mut g_b: Vec<Vec<f64>> = model.biases.iter().map(|b| vec![0.0; b.len()]).collect();
            for &i in batch {
                let acts = model.forward(&rows[i]);
                let (gw, gb) = model.backward(&acts);
                for l in 0..g_w.len() {
                    for (acc, g) in g_w[l].data_mut().iter_mut().zip(gw[l].data()) {
                        *acc += g * scale;
                    }
                    for (acc, g) in g_b[l].iter_mut().zip(&gb[l]) {
                        *acc += g * scale;
                    }
                }
            }
            step += 1;
            let c1 = 1.0 - schedule.beta1.powi(step as i32);
            let c2 = 1.0 - schedule.beta2.powi(step as i32);
            for l in 0..g_w.len() {
                adam_update(
                    model.weights[l].data_mut(),
                    g_w[l].data(),
                    m_w[l].data_mut(),
                    v_w[l].data_mut(),
                    schedule,
                    c1,
                    c2,
                );
                adam_update(
                    &mut model.biases[l],
                    &g_b[l],
                    &mut m_b[l],
                    &mut v_b[l],
                    schedule,
                    c1,
                    c2,
                );
            }
        }
        let loss = mean_loss(&model, rows);
        if !loss.is_finite() {
            return Err(Error::training(format!(
                "reconstruction loss diverged to {loss} after {} epochs",
                losses.len()
            )));
        }
        losses.push(loss);
    }
    Ok((model, losses))
}

fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    s: &TrainSchedule,
    c1: f64,
    c2: f64,
) {
    for i in 0..params.len() {
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * grads[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * grads[i] * grads[i];
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        params[i] -= s.learning_rate * m_hat / (v_hat.sqrt() + s.epsilon);
    }
}

/// Compares analytic gradients to central finite differences (step 1e-5)
/// on a seeded random subset of parameters; returns the max relative
/// error, with a denominator floor so zero-gradient parameters compare
/// cleanly (both-zero differences count as 0).
pub fn gradient_check(model: &MlpAutoencoder, x: &[f64], seed: u64) -> Result<f64> {
    if x.len() != model.input_dim() {
        return Err(Error::argument(format!(
            "input has dimension {}, network expects {}",
            x.len(),
            model.input_dim()
        )));
    }
    let acts = model.forward(x);
    let (gw, gb) = model.backward(&acts);

    // Flatten parameter coordinates: (layer, weight-vs-bias, index).
    let mut coords = Vec::new();
    for l in 0..model.layer_count() {
        for i in 0..model.weights[l].data().len() {
            coords.push((l, false, i));
        }
        for i in 0..model.biases[l].len() {
            coords.push((l, true, i));
        }
    }
    let mut rng = Rng::new(seed);
    rng.shuffle(&mut coords);
    coords.truncate(40);

    let step = 1e-5;
    let mut max_rel: f64 = 0.0;
    let mut probe = model.clone();
    for (l, is_bias, i) in coords {
        let analytic = if is_bias { gb[l][i] } else { gw[l].data()[i] };
        let original = if is_bias {
            probe.biases[l][i]
        } else {
            probe.weights[l].data()[i]
        };
        let eval = |value: f64, probe: &mut MlpAutoencoder| -> f64 {
            if is_bias {
                probe.biases[l][i] = value;
            } else {
                probe.weights[l].data_mut()[i] = value;
            }
            reconstruction_score(probe, x).expect("dimension unchanged")
        };
        let plus = eval(original + step, &mut probe);
        let minus = eval(original - step, &mut probe);
        eval(original, &mut probe);
        let numeric = (plus - minus) / (2.0 * step);
        let diff = (analytic - numeric).abs();
        let rel = if diff == 0.0 {
            0.0
        } else {
            diff / analytic.abs().max(numeric.abs()).max(CHECK_FLOOR)
        };
        max_rel = max_rel.max(rel);
    }
    Ok(max_rel)
}
