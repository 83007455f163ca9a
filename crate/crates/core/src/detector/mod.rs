//! Shared detector lifecycle: fit on normal-only training features,
//! calibrate a decision threshold on validation scores, predict labels.
//!
//! All six detectors expose scores with the same orientation — higher
//! means more anomalous — so thresholding and evaluation never branch on
//! the model family. The decision rule is strict: a score exactly equal
//! to the threshold stays normal.

pub mod dae;
pub mod helm;
pub mod iforest;
pub mod lof;
pub mod ocsvm;
pub mod robust_cov;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{FaultType, Label};
use crate::error::{Error, Result};
use crate::features::{apply_scaler, fit_scaler, FeatureVector, Scaler};
use crate::numerics::{percentile, Matrix};

/// Container schema version for saved models. Bump on breaking layout
/// changes; load refuses mismatched versions.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// The six model families, in the order results are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    RobustCov,
    Lof,
    Ocsvm,
    #[serde(rename = "iforest")]
    IsolationForest,
    Dae,
    Helm,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 6] = [
        DetectorKind::RobustCov,
        DetectorKind::Lof,
        DetectorKind::Ocsvm,
        DetectorKind::IsolationForest,
        DetectorKind::Dae,
        DetectorKind::Helm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::RobustCov => "robust-cov",
            DetectorKind::Lof => "lof",
            DetectorKind::Ocsvm => "ocsvm",
            DetectorKind::IsolationForest => "iforest",
            DetectorKind::Dae => "dae",
            DetectorKind::Helm => "helm",
        }
    }

    pub fn parse(name: &str) -> Result<DetectorKind> {
        DetectorKind::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| {
                Error::argument(format!(
                    "unknown detector {name:?}; expected one of robust-cov, lof, ocsvm, iforest, dae, helm"
                ))
            })
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the decision threshold is derived from validation scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdPolicy {
    /// Thrd = γ · percentile_p(validation scores), validation normal-only.
    PercentileGamma { p: f64, gamma: f64 },
    /// Thrd maximizing F1 on a validation set that includes labeled
    /// anomalies; candidates are midpoints of adjacent distinct scores.
    BestF1,
}

/// Hyperparameters, one variant per model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorParams {
    RobustCov {
        support_fraction: f64,
    },
    Lof {
        k: usize,
    },
    Ocsvm {
        nu: f64,
        /// RBF width; omit to use the median pairwise training distance.
        sigma: Option<f64>,
    },
    #[serde(rename = "iforest")] // match the reporting name, not the variant
    IsolationForest {
        trees: usize,
        /// Per-tree subsample size, capped at the training-set size.
        subsample: usize,
    },
    Dae {
        /// Encoder widths down to the bottleneck; the decoder mirrors them.
        hidden: Vec<usize>,
        epochs: usize,
        batch: usize,
        learning_rate: f64,
    },
    Helm {
        feature_widths: Vec<usize>,
        classifier_width: usize,
        c_feature: f64,
        c_classifier: f64,
    },
}

impl DetectorParams {
    pub fn kind(&self) -> DetectorKind {
        match self {
            DetectorParams::RobustCov { .. } => DetectorKind::RobustCov,
            DetectorParams::Lof { .. } => DetectorKind::Lof,
            DetectorParams::Ocsvm { .. } => DetectorKind::Ocsvm,
            DetectorParams::IsolationForest { .. } => DetectorKind::IsolationForest,
            DetectorParams::Dae { .. } => DetectorKind::Dae,
            DetectorParams::Helm { .. } => DetectorKind::Helm,
        }
    }
}

/// Everything needed to reproduce a fit: seed, scaling switch, threshold
/// policy, and the family-specific hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub seed: u64,
    pub standardize: bool,
    pub policy: ThresholdPolicy,
    pub params: DetectorParams,
}

impl DetectorConfig {
    pub fn kind(&self) -> DetectorKind {
        self.params.kind()
    }

    /// Defaults per family. Distance- and reconstruction-based models
    /// standardize; Isolation Forest is scale-free and does not. The
    /// percentile policy keeps γ = 1 wherever scores can be negative or
    /// are bounded in (0,1), where scaling the percentile is meaningless;
    /// HELM's deviation scores are unbounded above, so it keeps the
    /// traditional safety margin γ > 1.
    pub fn default_for(kind: DetectorKind, seed: u64) -> DetectorConfig {
        let p95 = ThresholdPolicy::PercentileGamma {
            p: 95.0,
            gamma: 1.0,
        };
        match kind {
            DetectorKind::RobustCov => DetectorConfig {
                seed,
                standardize: true,
                policy: p95,
                params: DetectorParams::RobustCov {
                    support_fraction: 0.75,
                },
            },
            DetectorKind::Lof => DetectorConfig {
                seed,
                standardize: true,
                policy: p95,
                params: DetectorParams::Lof { k: 20 },
            },
            DetectorKind::Ocsvm => DetectorConfig {
                seed,
                standardize: true,
                policy: p95,
                params: DetectorParams::Ocsvm {
                    nu: 0.05,
                    sigma: None,
                },
            },
            DetectorKind::IsolationForest => DetectorConfig {
                seed,
                standardize: false,
                policy: p95,
                params: DetectorParams::IsolationForest {
                    trees: 100,
                    subsample: 256,
                },
            },
            DetectorKind::Dae => DetectorConfig {
                seed,
                standardize: true,
                policy: ThresholdPolicy::BestF1,
                params: DetectorParams::Dae {
                    hidden: vec![32, 8],
                    epochs: 200,
                    batch: 32,
                    learning_rate: 1e-3,
                },
            },
            DetectorKind::Helm => DetectorConfig {
                seed,
                standardize: true,
                policy: ThresholdPolicy::PercentileGamma {
                    p: 99.0,
                    gamma: 1.2,
                },
                params: DetectorParams::Helm {
                    feature_widths: vec![64, 64],
                    classifier_width: 256,
                    c_feature: 1e4,
                    c_classifier: 1e2,
                },
            },
        }
    }
}

/// Fitted model state, one variant per family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelState {
    RobustCov(robust_cov::RobustCovModel),
    Lof(lof::LofModel),
    Ocsvm(ocsvm::OcsvmModel),
    #[serde(rename = "iforest")]
    IsolationForest(iforest::IsoForest),
    Dae(dae::MlpAutoencoder),
    Helm(helm::HelmState),
}

/// A fitted model before threshold calibration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedDetector {
    pub config: DetectorConfig,
    pub scaler: Option<Scaler>,
    pub state: ModelState,
}

/// A calibrated model ready to label test samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedDetector {
    pub detector: TrainedDetector,
    pub threshold: f64,
}

/// Per-sample outcome: raw score plus predicted and true labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub cycle: usize,
    pub score: f64,
    pub predicted: Label,
    pub truth: Label,
    pub fault: FaultType,
}

fn training_rows(train: &[FeatureVector]) -> Result<Vec<Vec<f64>>> {
    if train.is_empty() {
        return Err(Error::argument("training set is empty"));
    }
    if let Some(bad) = train.iter().find(|f| f.label == Label::Anomaly) {
        return Err(Error::argument(format!(
            "training set must contain only normal samples; cycle {} is labeled anomaly",
            bad.cycle
        )));
    }
    Ok(train.iter().map(|f| f.values.clone()).collect())
}

impl TrainedDetector {
    /// Fits the configured model on normal-only training vectors. Labels
    /// are only checked, never used by the model itself.
    pub fn fit(config: &DetectorConfig, train: &[FeatureVector]) -> Result<TrainedDetector> {
        let mut rows = training_rows(train)?;
        let scaler = if config.standardize {
            let s = fit_scaler(&rows)?;
            for row in &mut rows {
                *row = apply_scaler(&s, row)?;
            }
            Some(s)
        } else {
            None
        };
        let state = match &config.params {
            DetectorParams::RobustCov { support_fraction } => ModelState::RobustCov(
                robust_cov::fit_robust_cov(&rows, *support_fraction, config.seed)?,
            ),
            DetectorParams::Lof { k } => ModelState::Lof(lof::fit_lof(&rows, *k)?),
            DetectorParams::Ocsvm { nu, sigma } => {
                let sigma = sigma.unwrap_or_else(|| ocsvm::median_heuristic_sigma(&rows));
                ModelState::Ocsvm(ocsvm::fit_ocsvm(&rows, *nu, sigma, config.seed)?)
            }
            DetectorParams::IsolationForest { trees, subsample } => {
                let psi = (*subsample).min(rows.len());
                ModelState::IsolationForest(iforest::fit_forest(&rows, *trees, psi, config.seed)?)
            }
            DetectorParams::Dae {
                hidden,
                epochs,
                batch,
                learning_rate,
            } => {
                let schedule = dae::TrainSchedule {
                    epochs: *epochs,
                    batch: *batch,
                    learning_rate: *learning_rate,
                    ..dae::TrainSchedule::with_seed(config.seed)
                };
                let (model, _losses) = dae::train_dae(&rows, hidden, &schedule)?;
                ModelState::Dae(model)
            }
            DetectorParams::Helm {
                feature_widths,
                classifier_width,
                c_feature,
                c_classifier,
            } => {
                let x = Matrix::from_rows(&rows)?;
                ModelState::Helm(helm::fit_helm(
                    &x,
                    feature_widths,
                    *classifier_width,
                    *c_feature,
                    *c_classifier,
                    config.seed,
                )?)
            }
        };
        Ok(TrainedDetector {
            config: config.clone(),
            scaler,
            state,
        })
    }

    /// Raw anomaly score for one feature vector; higher = more anomalous.
    pub fn raw_score(&self, values: &[f64]) -> Result<f64> {
        let scaled;
        let v: &[f64] = match &self.scaler {
            Some(s) => {
                scaled = apply_scaler(s, values)?;
                &scaled
            }
            None => values,
        };
        match &self.state {
            ModelState::RobustCov(m) => robust_cov::mahalanobis_score(m, v),
            ModelState::Lof(m) => lof::lof_score(m, v),
            ModelState::Ocsvm(m) => ocsvm::ocsvm_score(m, v),
            ModelState::IsolationForest(m) => Ok(iforest::forest_score(m, v)),
            ModelState::Dae(m) => dae::reconstruction_score(m, v),
            ModelState::Helm(m) => {
                let x = Matrix::from_rows(std::slice::from_ref(&v.to_vec()))?;
                let y = helm::helm_output(m, &x)?;
                Ok((1.0 - y[0]).abs())
            }
        }
    }

    pub fn scores(&self, samples: &[FeatureVector]) -> Result<Vec<f64>> {
        samples.iter().map(|f| self.raw_score(&f.values)).collect()
    }

    /// Derives the decision threshold from validation scores according to
    /// the configured policy and returns the calibrated detector.
    pub fn calibrate(&self, validation: &[FeatureVector]) -> Result<FittedDetector> {
        let scores = self.scores(validation)?;
        let threshold = match self.config.policy {
            ThresholdPolicy::PercentileGamma { p, gamma } => {
                if let Some(bad) = validation.iter().find(|f| f.label == Label::Anomaly) {
                    return Err(Error::argument(format!(
                        "percentile calibration requires normal-only validation; cycle {} is labeled anomaly",
                        bad.cycle
                    )));
                }
                percentile_gamma_threshold(&scores, p, gamma)?
            }
            ThresholdPolicy::BestF1 => {
                if !validation.iter().any(|f| f.label == Label::Anomaly) {
                    return Err(Error::argument(
                        "best-f1 calibration requires at least one labeled anomaly in validation",
                    ));
                }
                let truths: Vec<Label> = validation.iter().map(|f| f.label).collect();
                best_f1_threshold(&scores, &truths)?
            }
        };
        if !threshold.is_finite() {
            return Err(Error::data(format!(
                "calibration produced a non-finite threshold {threshold}"
            )));
        }
        Ok(FittedDetector {
            detector: self.clone(),
            threshold,
        })
    }
}

impl FittedDetector {
    pub fn kind(&self) -> DetectorKind {
        self.detector.config.kind()
    }

    /// Labels each sample: anomaly iff score > threshold (strictly).
    pub fn predict(&self, test: &[FeatureVector]) -> Result<Vec<ScoreReport>> {
        test.iter()
            .map(|f| {
                let score = self.detector.raw_score(&f.values)?;
                let predicted = if score > self.threshold {
                    Label::Anomaly
                } else {
                    Label::Normal
                };
                Ok(ScoreReport {
                    cycle: f.cycle,
                    score,
                    predicted,
                    truth: f.label,
                    fault: f.fault,
                })
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let container = ModelContainer {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        };
        serde_json::to_string_pretty(&container)
            .map_err(|e| Error::serialization(format!("encoding model: {e}")))
    }

    pub fn from_json(text: &str) -> Result<FittedDetector> {
        let probe: VersionProbe = serde_json::from_str(text)
            .map_err(|e| Error::serialization(format!("reading model container: {e}")))?;
        if probe.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::serialization(format!(
                "model container has format version {}, this build supports {}",
                probe.format_version, MODEL_FORMAT_VERSION
            )));
        }
        let container: ModelContainer = serde_json::from_str(text)
            .map_err(|e| Error::serialization(format!("decoding model: {e}")))?;
        Ok(container.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)
            .map_err(|e| Error::io(format!("model file {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<FittedDetector> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("model file {}", path.display()), e))?;
        FittedDetector::from_json(&text)
    }
}

/// Versioned on-disk wrapper. JSON keeps f64 round-trips bit-exact, which
/// the load/predict reproducibility guarantee depends on.
#[derive(Serialize, Deserialize)]
struct ModelContainer {
    format_version: u32,
    #[serde(flatten)]
    model: FittedDetector,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

/// Thrd = γ · percentile_p(scores); nearest-rank percentile.
pub fn percentile_gamma_threshold(scores: &[f64], p: f64, gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::argument(format!("gamma = {gamma} must be >= 0")));
    }
    Ok(gamma * percentile(scores, p)?)
}

/// Chooses the threshold maximizing F1 (anomaly = positive) over the
/// midpoints of adjacent distinct sorted scores, under the strict rule
/// `score > threshold → anomaly`. Ties prefer the lower threshold. When
/// every score is identical there are no midpoints and the common score
/// is returned (labeling everything normal).
pub fn best_f1_threshold(scores: &[f64], truths: &[Label]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::argument("empty validation scores"));
    }
    if scores.len() != truths.len() {
        return Err(Error::argument(format!(
            "{} scores but {} labels",
            scores.len(),
            truths.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::data("non-finite validation score"));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    sorted.dedup();
    if sorted.len() == 1 {
        return Ok(sorted[0]);
    }
    let f1_at = |t: f64| -> f64 {
        let mut tp = 0u64;
        let mut fp = 0u64;
        let mut fn_ = 0u64;
        for (s, truth) in scores.iter().zip(truths) {
            let predicted_anomaly = *s > t;
            match (predicted_anomaly, truth) {
                (true, Label::Anomaly) => tp += 1,
                (true, Label::Normal) => fp += 1,
                (false, Label::Anomaly) => fn_ += 1,
                (false, Label::Normal) => {}
            }
        }
        if tp == 0 {
            return 0.0;
        }
        2.0 * tp as f64 / (2.0 * tp as f64 + fp as f64 + fn_ as f64)
    };
    let mut best_t = f64::NAN;
    let mut best_f1 = f64::NEG_INFINITY;
    for pair in sorted.windows(2) {
        let t = 0.5 * (pair[0] + pair[1]);
        let f1 = f1_at(t);
        // Strictly-greater keeps the lowest threshold on ties: candidates
        // ascend, so the first of an equal run wins.
        if f1 > best_f1 {
            best_f1 = f1;
            best_t = t;
        }
    }
    Ok(best_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;
    use proptest::prelude::*;

    fn feature(cycle: usize, label: Label, fault: FaultType, values: Vec<f64>) -> FeatureVector {
        FeatureVector {
            cycle,
            label,
            fault,
            values,
        }
    }

    /// Two gaussian-ish blobs: normals near the origin, anomalies shifted.
    fn toy_features(
        n_normal: usize,
        n_anomaly: usize,
        dim: usize,
        seed: u64,
    ) -> Vec<FeatureVector> {
        let mut rng = Rng::new(seed);
        let mut out = Vec::new();
        for i in 0..n_normal {
            let values: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
            out.push(feature(i, Label::Normal, FaultType::None, values));
        }
        for i in 0..n_anomaly {
            let values: Vec<f64> = (0..dim).map(|_| 6.0 + rng.normal()).collect();
            out.push(feature(
                n_normal + i,
                Label::Anomaly,
                FaultType::Severe,
                values,
            ));
        }
        out
    }

    /// Small configs so the full lifecycle matrix stays fast.
    fn small_config(kind: DetectorKind, seed: u64) -> DetectorConfig {
        let mut config = DetectorConfig::default_for(kind, seed);
        config.params = match config.params {
            DetectorParams::Lof { .. } => DetectorParams::Lof { k: 5 },
            DetectorParams::IsolationForest { .. } => DetectorParams::IsolationForest {
                trees: 25,
                subsample: 64,
            },
            DetectorParams::Dae { .. } => DetectorParams::Dae {
                hidden: vec![4, 2],
                epochs: 15,
                batch: 16,
                learning_rate: 1e-3,
            },
            DetectorParams::Helm { .. } => DetectorParams::Helm {
                feature_widths: vec![16],
                classifier_width: 64,
                c_feature: 1e4,
                c_classifier: 1e2,
            },
            other => other,
        };
        config
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in DetectorKind::ALL {
            assert_eq!(DetectorKind::parse(kind.name()).unwrap(), kind);
        }
        assert!(DetectorKind::parse("svm").is_err());
    }

    #[test]
    fn defaults_follow_the_policy_table() {
        for kind in DetectorKind::ALL {
            let config = DetectorConfig::default_for(kind, 7);
            assert_eq!(config.kind(), kind);
            assert_eq!(
                config.standardize,
                kind != DetectorKind::IsolationForest,
                "{kind}"
            );
            match (kind, config.policy) {
                (DetectorKind::Dae, ThresholdPolicy::BestF1) => {}
                (DetectorKind::Helm, ThresholdPolicy::PercentileGamma { p, gamma }) => {
                    assert_eq!(p, 99.0);
                    assert_eq!(gamma, 1.2);
                }
                (_, ThresholdPolicy::PercentileGamma { p, gamma }) => {
                    assert_eq!(p, 95.0);
                    assert_eq!(gamma, 1.0);
                }
                (k, policy) => panic!("unexpected policy {policy:?} for {k}"),
            }
        }
    }

    #[test]
    fn percentile_threshold_worked_examples() {
        let t = percentile_gamma_threshold(&[0.0, 0.1, 0.1, 0.5], 75.0, 2.0).unwrap();
        assert!((t - 0.2).abs() < 1e-12);
        assert_eq!(
            percentile_gamma_threshold(&[0.0, 0.0, 0.0], 95.0, 1.5).unwrap(),
            0.0
        );
        assert_eq!(
            percentile_gamma_threshold(&[3.0, 1.0], 100.0, 0.0).unwrap(),
            0.0
        );
        assert!(percentile_gamma_threshold(&[1.0], 95.0, -0.5).is_err());
        assert!(percentile_gamma_threshold(&[], 95.0, 1.0).is_err());
    }

    #[test]
    fn best_f1_finds_the_separating_midpoint() {
        let scores = [1.0, 2.0, 3.0, 10.0, 11.0];
        let truths = [
            Label::Normal,
            Label::Normal,
            Label::Normal,
            Label::Anomaly,
            Label::Anomaly,
        ];
        let t = best_f1_threshold(&scores, &truths).unwrap();
        assert!((t - 6.5).abs() < 1e-12, "{t}");
    }

    #[test]
    fn best_f1_ties_take_the_lower_threshold() {
        // All-normal labels give F1 = 0 at every candidate; the first
        // (lowest) midpoint wins.
        let scores = [1.0, 2.0, 3.0];
        let truths = [Label::Normal; 3];
        assert_eq!(best_f1_threshold(&scores, &truths).unwrap(), 1.5);
    }

    #[test]
    fn best_f1_identical_scores_fall_back_to_common_value() {
        let scores = [5.0; 4];
        let truths = [
            Label::Normal,
            Label::Anomaly,
            Label::Normal,
            Label::Anomaly,
        ];
        assert_eq!(best_f1_threshold(&scores, &truths).unwrap(), 5.0);
    }

    #[test]
    fn best_f1_rejects_bad_input() {
        assert!(best_f1_threshold(&[], &[]).is_err());
        assert!(best_f1_threshold(&[1.0], &[Label::Normal, Label::Normal]).is_err());
        assert!(best_f1_threshold(&[f64::NAN], &[Label::Normal]).is_err());
    }

    #[test]
    fn anomaly_in_training_set_is_rejected() {
        let mut train = toy_features(10, 0, 3, 1);
        train[4].label = Label::Anomaly;
        let config = small_config(DetectorKind::Lof, 1);
        let err = TrainedDetector::fit(&config, &train).unwrap_err();
        assert!(err.to_string().contains("cycle 4"), "{err}");
    }

    #[test]
    fn percentile_calibration_rejects_anomalies_in_validation() {
        let train = toy_features(30, 0, 3, 2);
        let validation = toy_features(10, 1, 3, 3);
        let config = small_config(DetectorKind::Lof, 2);
        let model = TrainedDetector::fit(&config, &train).unwrap();
        assert!(model.calibrate(&validation).is_err());
    }

    #[test]
    fn best_f1_calibration_requires_an_anomaly() {
        let train = toy_features(40, 0, 3, 4);
        let normals_only = toy_features(10, 0, 3, 5);
        let config = small_config(DetectorKind::Dae, 4);
        let model = TrainedDetector::fit(&config, &train).unwrap();
        assert!(model.calibrate(&normals_only).is_err());
    }

    #[test]
    fn boundary_score_stays_normal() {
        let train = toy_features(30, 0, 3, 6);
        let config = small_config(DetectorKind::RobustCov, 6);
        let model = TrainedDetector::fit(&config, &train).unwrap();
        let probe = toy_features(1, 0, 3, 7);
        let score = model.raw_score(&probe[0].values).unwrap();
        let fitted = FittedDetector {
            detector: model,
            threshold: score,
        };
        let reports = fitted.predict(&probe).unwrap();
        assert_eq!(reports[0].score, score);
        assert_eq!(reports[0].predicted, Label::Normal);
    }

    #[test]
    fn empty_test_set_gives_empty_report() {
        let train = toy_features(30, 0, 3, 8);
        let config = small_config(DetectorKind::Lof, 8);
        let fitted = TrainedDetector::fit(&config, &train)
            .unwrap()
            .calibrate(&toy_features(10, 0, 3, 9))
            .unwrap();
        assert!(fitted.predict(&[]).unwrap().is_empty());
    }

    #[test]
    fn lifecycle_is_deterministic_for_every_kind() {
        let train = toy_features(60, 0, 4, 10);
        let normal_validation = toy_features(20, 0, 4, 11);
        let mixed_validation = toy_features(16, 4, 4, 12);
        let test = toy_features(10, 5, 4, 13);
        for kind in DetectorKind::ALL {
            let config = small_config(kind, 99);
            let validation = if config.policy == ThresholdPolicy::BestF1 {
                &mixed_validation
            } else {
                &normal_validation
            };
            let run = || {
                let fitted = TrainedDetector::fit(&config, &train)
                    .unwrap()
                    .calibrate(validation)
                    .unwrap();
                let reports = fitted.predict(&test).unwrap();
                (fitted.threshold, reports)
            };
            let (t1, r1) = run();
            let (t2, r2) = run();
            assert_eq!(t1.to_bits(), t2.to_bits(), "{kind} threshold");
            assert_eq!(r1, r2, "{kind} reports");
        }
    }

    #[test]
    fn severe_anomalies_score_above_normals_for_every_kind() {
        // Uses the full synthetic pipeline (sensor cycles → 68 features)
        // so the anomalies look like real fault signatures — a handful of
        // shifted attributes — rather than uniformly extreme vectors.
        // Robust covariance needs support ≥ dim+1 = 69 points, so train
        // on 120 normals.
        let dataset = crate::dataset::generate_synthetic(140, 0, 20, 41);
        let features = crate::features::extract_all(&dataset.cycles).unwrap();
        let (normals, anomalies): (Vec<_>, Vec<_>) = features
            .into_iter()
            .partition(|f| f.label == Label::Normal);
        let train: Vec<FeatureVector> = normals[..120].to_vec();
        let probe_normals = &normals[120..];
        for kind in DetectorKind::ALL {
            let config = small_config(kind, 21);
            let model = TrainedDetector::fit(&config, &train).unwrap();
            let normal_scores = model.scores(probe_normals).unwrap();
            let anomaly_scores = model.scores(&anomalies).unwrap();
            let normal_mean: f64 =
                normal_scores.iter().sum::<f64>() / normal_scores.len() as f64;
            let anomaly_mean: f64 =
                anomaly_scores.iter().sum::<f64>() / anomaly_scores.len() as f64;
            assert!(
                anomaly_mean > normal_mean,
                "{kind}: anomalies {anomaly_mean} vs normals {normal_mean}"
            );
        }
    }

    #[test]
    fn raising_the_threshold_never_adds_anomalies() {
        let train = toy_features(40, 0, 3, 16);
        let test = toy_features(15, 15, 3, 17);
        let config = small_config(DetectorKind::IsolationForest, 16);
        let model = TrainedDetector::fit(&config, &train).unwrap();
        let scores = model.scores(&test).unwrap();
        let count_at = |t: f64| {
            FittedDetector {
                detector: model.clone(),
                threshold: t,
            }
            .predict(&test)
            .unwrap()
            .iter()
            .filter(|r| r.predicted == Label::Anomaly)
            .count()
        };
        let mut thresholds: Vec<f64> = scores.clone();
        thresholds.push(0.0);
        thresholds.push(1.0);
        thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let counts: Vec<usize> = thresholds.iter().map(|&t| count_at(t)).collect();
        for pair in counts.windows(2) {
            assert!(pair[0] >= pair[1]);
        }
    }

    #[test]
    fn save_load_round_trip_reproduces_predictions() {
        let train = toy_features(50, 0, 4, 18);
        let normal_validation = toy_features(15, 0, 4, 19);
        let mixed_validation = toy_features(12, 4, 4, 19);
        let test = toy_features(8, 8, 4, 20);
        let dir = tempfile::tempdir().unwrap();
        for kind in DetectorKind::ALL {
            let config = small_config(kind, 33);
            let validation = if config.policy == ThresholdPolicy::BestF1 {
                &mixed_validation
            } else {
                &normal_validation
            };
            let fitted = TrainedDetector::fit(&config, &train)
                .unwrap()
                .calibrate(validation)
                .unwrap();
            let path = dir.path().join(format!("{kind}.json"));
            fitted.save(&path).unwrap();
            let loaded = FittedDetector::load(&path).unwrap();
            assert_eq!(loaded.threshold.to_bits(), fitted.threshold.to_bits());
            assert_eq!(loaded.detector.config, fitted.detector.config);
            let original = fitted.predict(&test).unwrap();
            let reloaded = loaded.predict(&test).unwrap();
            assert_eq!(original, reloaded, "{kind}");
            for (a, b) in original.iter().zip(&reloaded) {
                assert_eq!(a.score.to_bits(), b.score.to_bits(), "{kind}");
            }
        }
    }

    #[test]
    fn version_mismatch_is_reported_by_number() {
        let train = toy_features(30, 0, 3, 22);
        let config = small_config(DetectorKind::Lof, 22);
        let fitted = TrainedDetector::fit(&config, &train)
            .unwrap()
            .calibrate(&toy_features(10, 0, 3, 23))
            .unwrap();
        let mut value: serde_json::Value = serde_json::from_str(&fitted.to_json().unwrap()).unwrap();
        value["format_version"] = serde_json::json!(99);
        let err = FittedDetector::from_json(&value.to_string()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("99") && msg.contains('1'), "{msg}");
    }

    #[test]
    fn malformed_model_file_is_a_serialization_error() {
        assert!(FittedDetector::from_json("{not json").is_err());
        let missing = FittedDetector::load(Path::new("/nonexistent/model.json"));
        assert!(matches!(missing.unwrap_err(), Error::Io { .. }));
    }

    proptest! {
        #[test]
        fn best_f1_threshold_lies_within_score_range(
            scores in proptest::collection::vec(-100.0f64..100.0, 1..30),
            flags in proptest::collection::vec(proptest::bool::ANY, 30),
        ) {
            let truths: Vec<Label> = scores
                .iter()
                .zip(&flags)
                .map(|(_, &a)| if a { Label::Anomaly } else { Label::Normal })
                .collect();
            let t = best_f1_threshold(&scores, &truths).unwrap();
            let lo = scores.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(t >= lo && t <= hi);
        }

        #[test]
        fn gamma_scales_percentile_thresholds_monotonically(
            scores in proptest::collection::vec(0.0f64..50.0, 1..40),
            g1 in 0.0f64..3.0,
            g2 in 0.0f64..3.0,
        ) {
            let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
            let t_lo = percentile_gamma_threshold(&scores, 95.0, lo).unwrap();
            let t_hi = percentile_gamma_threshold(&scores, 95.0, hi).unwrap();
            prop_assert!(t_lo <= t_hi);
        }
    }
}
