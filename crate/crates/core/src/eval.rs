//! Split protocol, confusion counting, the benchmark metric set, and the
//! cross-model comparison harness.
//!
//! The split is semi-supervised by construction: train and validation
//! hold normals only, every anomaly lands in the test set except for the
//! small labeled batch routed to the best-F1 validation pool. One split
//! feeds all detectors in a comparison so the table rows are measured on
//! identical data.

use serde::{Deserialize, Serialize};

use crate::dataset::{FaultType, Label};
use crate::detector::helm::deviation_ratio;
use crate::detector::{
    DetectorConfig, DetectorKind, ScoreReport, ThresholdPolicy, TrainedDetector,
};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::numerics::rng::{derive_seed, Rng};

/// How to carve a labeled feature corpus into train / validation / test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Fraction of the normal cycles used for training.
    pub train_fraction: f64,
    /// Fraction of the normal cycles used for threshold calibration.
    pub valid_fraction: f64,
    /// Shuffle seed; the split is a pure function of (corpus, spec).
    pub seed: u64,
    /// Labeled anomalies moved from the test set into the best-F1
    /// calibration pool. Detectors calibrated on normal-only scores
    /// never see them.
    pub dae_valid_anomalies: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.70,
            valid_fraction: 0.15,
            seed: 0,
            dae_valid_anomalies: 20,
        }
    }
}

/// Output of [`split`]. Each part owns its feature vectors; membership
/// is disjoint by cycle index except that `dae_validation` extends
/// `validation` with labeled anomalies.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    /// Normal cycles only.
    pub train: Vec<FeatureVector>,
    /// Normal cycles only; percentile-style calibration scores these.
    pub validation: Vec<FeatureVector>,
    /// `validation` plus the routed labeled anomalies, for best-F1
    /// calibration.
    pub dae_validation: Vec<FeatureVector>,
    /// Remaining normals plus all remaining anomalies.
    pub test: Vec<FeatureVector>,
}

impl Split {
    pub fn summary(&self) -> SplitSummary {
        SplitSummary {
            train: self.train.len(),
            validation: self.validation.len(),
            dae_validation: self.dae_validation.len(),
            test: self.test.len(),
        }
    }
}

/// Set sizes, echoed into output headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub train: usize,
    pub validation: usize,
    pub dae_validation: usize,
    pub test: usize,
}

const NORMAL_SHUFFLE_TAG: u64 = 0x51;
const ANOMALY_SHUFFLE_TAG: u64 = 0x52;

/// Partitions the corpus: normals are shuffled by the spec seed and cut
/// at `⌊train_fraction·N⌋` and `⌊valid_fraction·N⌋`; the remainder joins
/// the test set together with the anomalies not routed to the best-F1
/// pool. Routed anomalies alternate weak/severe so the pool sees both
/// grades whenever both exist. Every output set is sorted by cycle
/// index, so downstream order never depends on the shuffle.
pub fn split(features: &[FeatureVector], spec: &SplitSpec) -> Result<Split> {
    for (name, f) in [
        ("train_fraction", spec.train_fraction),
        ("valid_fraction", spec.valid_fraction),
    ] {
        if !f.is_finite() || f <= 0.0 {
            return Err(Error::argument(format!(
                "{name} must be positive and finite, got {f}"
            )));
        }
    }
    let sum = spec.train_fraction + spec.valid_fraction;
    if sum > 1.0 {
        return Err(Error::argument(format!(
            "train and validation fractions sum to {sum}, must be at most 1"
        )));
    }

    let mut normals: Vec<&FeatureVector> = Vec::new();
    let mut anomalies: Vec<&FeatureVector> = Vec::new();
    for f in features {
        match f.label {
            Label::Normal => normals.push(f),
            Label::Anomaly => anomalies.push(f),
        }
    }

    let n_train = (spec.train_fraction * normals.len() as f64).floor() as usize;
    let n_valid = (spec.valid_fraction * normals.len() as f64).floor() as usize;
    if n_train == 0 || n_valid == 0 {
        return Err(Error::argument(format!(
            "{} normal cycles are too few for fractions ({}, {}): train {n_train}, validation {n_valid}",
            normals.len(),
            spec.train_fraction,
            spec.valid_fraction
        )));
    }
    if spec.dae_valid_anomalies > 0 && spec.dae_valid_anomalies >= anomalies.len() {
        return Err(Error::argument(format!(
            "routing {} anomalies to the best-F1 pool would leave the test set with {} of {}",
            spec.dae_valid_anomalies,
            anomalies.len().saturating_sub(spec.dae_valid_anomalies),
            anomalies.len()
        )));
    }

    Rng::child(spec.seed, NORMAL_SHUFFLE_TAG).shuffle(&mut normals);
    Rng::child(spec.seed, ANOMALY_SHUFFLE_TAG).shuffle(&mut anomalies);

    let train: Vec<FeatureVector> = normals[..n_train].iter().map(|f| (*f).clone()).collect();
    let validation: Vec<FeatureVector> = normals[n_train..n_train + n_valid]
        .iter()
        .map(|f| (*f).clone())
        .collect();
    let test_normals = &normals[n_train + n_valid..];

    // Alternate the two fault grades, draining whichever remains once
    // the other runs out.
    let mut weak: Vec<&FeatureVector> = Vec::new();
    let mut severe: Vec<&FeatureVector> = Vec::new();
    for f in &anomalies {
        match f.fault {
            FaultType::Weak => weak.push(f),
            _ => severe.push(f),
        }
    }
    let mut routed: Vec<&FeatureVector> = Vec::new();
    let (mut wi, mut si) = (0, 0);
    while routed.len() < spec.dae_valid_anomalies {
        let want_weak = routed.len().is_multiple_of(2);
        if (want_weak && wi < weak.len()) || si >= severe.len() {
            routed.push(weak[wi]);
            wi += 1;
        } else {
            routed.push(severe[si]);
            si += 1;
        }
    }

    let mut dae_validation = validation.clone();
    dae_validation.extend(routed.iter().map(|f| (*f).clone()));

    let mut test: Vec<FeatureVector> = test_normals.iter().map(|f| (*f).clone()).collect();
    test.extend(weak[wi..].iter().map(|f| (*f).clone()));
    test.extend(severe[si..].iter().map(|f| (*f).clone()));

    let mut out = Split {
        train,
        validation,
        dae_validation,
        test,
    };
    for part in [
        &mut out.train,
        &mut out.validation,
        &mut out.dae_validation,
        &mut out.test,
    ] {
        part.sort_by_key(|f| f.cycle);
    }
    Ok(out)
}

/// Test-set tallies; the anomaly class is positive throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.false_negatives + self.true_negatives
    }
}

/// Tallies predictions against ground truth, pairwise.
pub fn confusion(predictions: &[Label], truths: &[Label]) -> Result<ConfusionCounts> {
    if predictions.len() != truths.len() {
        return Err(Error::argument(format!(
            "{} predictions against {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    let mut counts = ConfusionCounts::default();
    for (p, t) in predictions.iter().zip(truths) {
        match (p, t) {
            (Label::Anomaly, Label::Anomaly) => counts.true_positives += 1,
            (Label::Anomaly, Label::Normal) => counts.false_positives += 1,
            (Label::Normal, Label::Anomaly) => counts.false_negatives += 1,
            (Label::Normal, Label::Normal) => counts.true_negatives += 1,
        }
    }
    Ok(counts)
}

/// [`confusion`] over per-sample score reports.
pub fn confusion_from_reports(reports: &[ScoreReport]) -> ConfusionCounts {
    let predictions: Vec<Label> = reports.iter().map(|r| r.predicted).collect();
    let truths: Vec<Label> = reports.iter().map(|r| r.truth).collect();
    // Lengths match by construction.
    confusion(&predictions, &truths).expect("paired reports")
}

/// One comparison-table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub model: String,
    pub acc: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub precision: f64,
    pub f1: f64,
}

/// Derives the metric set from confusion counts. Empty denominators
/// yield 0 by convention (precision with no flagged samples, TPR with
/// no true anomalies, FPR with no true normals, F1 with no true
/// positives) so degenerate test sets stay representable.
pub fn metrics(model: impl Into<String>, counts: &ConfusionCounts) -> Result<MetricRow> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::argument("confusion counts are all zero"));
    }
    let (tp, fp, fn_, tn) = (
        counts.true_positives as f64,
        counts.false_positives as f64,
        counts.false_negatives as f64,
        counts.true_negatives as f64,
    );
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    Ok(MetricRow {
        model: model.into(),
        acc: (tp + tn) / total as f64,
        tpr: ratio(tp, tp + fn_),
        fpr: ratio(fp, fp + tn),
        precision: ratio(tp, tp + fp),
        // Equals the harmonic mean of precision and recall wherever
        // that is defined, and 0 on the conventional boundary.
        f1: ratio(2.0 * tp, 2.0 * tp + fp + fn_),
    })
}

/// One test sample's deviation in threshold units, for the ratio plots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRecord {
    pub cycle: usize,
    pub fault: FaultType,
    pub ratio: f64,
}

/// Everything measured for one detector that ran to completion.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutcome {
    pub row: MetricRow,
    pub counts: ConfusionCounts,
    pub threshold: f64,
    pub reports: Vec<ScoreReport>,
}

/// Per-detector result inside a comparison. A failed fit or calibration
/// is recorded here as its error message; it never aborts the others.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelResult {
    pub kind: DetectorKind,
    pub outcome: std::result::Result<ModelOutcome, String>,
}

/// Full cross-model comparison on one split.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub split: SplitSummary,
    /// In report order, one entry per requested detector.
    pub outcomes: Vec<ModelResult>,
    /// Test-set deviation ratios from the one-class ELM stack, when it
    /// ran; the fault grade comes along for the overlap analysis.
    pub helm_ratios: Vec<RatioRecord>,
}

/// Default configurations for all six detectors in report order, each
/// on its own seed stream derived from the master seed. Derived seeds
/// stay within the signed-64-bit range so they survive a round trip
/// through configuration files, whose integers are signed.
pub fn default_configs(master_seed: u64) -> Vec<DetectorConfig> {
    DetectorKind::ALL
        .iter()
        .enumerate()
        .map(|(i, &kind)| {
            let seed = derive_seed(master_seed, i as u64) & (i64::MAX as u64);
            DetectorConfig::default_for(kind, seed)
        })
        .collect()
}

/// Fits, calibrates, and evaluates every configured detector on the
/// identical split. Percentile-calibrated detectors score the
/// normal-only validation set; best-F1 detectors score the pool with
/// labeled anomalies. Detector failures are isolated per model.
pub fn compare(
    features: &[FeatureVector],
    configs: &[DetectorConfig],
    spec: &SplitSpec,
) -> Result<Comparison> {
    if configs.is_empty() {
        return Err(Error::argument("no detector configurations given"));
    }
    let mut ordered: Vec<&DetectorConfig> = Vec::new();
    for kind in DetectorKind::ALL {
        let mut matching = configs.iter().filter(|c| c.kind() == kind);
        if let Some(config) = matching.next() {
            if matching.next().is_some() {
                return Err(Error::argument(format!(
                    "duplicate configuration for detector {kind}"
                )));
            }
            ordered.push(config);
        }
    }

    let parts = split(features, spec)?;
    let mut outcomes = Vec::with_capacity(ordered.len());
    let mut helm_ratios = Vec::new();
    for config in ordered {
        let kind = config.kind();
        let outcome = run_one(config, &parts);
        if kind == DetectorKind::Helm {
            if let Ok(out) = &outcome {
                helm_ratios = out
                    .reports
                    .iter()
                    .map(|r| RatioRecord {
                        cycle: r.cycle,
                        fault: r.fault,
                        ratio: deviation_ratio(r.score, out.threshold),
                    })
                    .collect();
            }
        }
        outcomes.push(ModelResult {
            kind,
            outcome: outcome.map_err(|e| e.to_string()),
        });
    }

    Ok(Comparison {
        split: parts.summary(),
        outcomes,
        helm_ratios,
    })
}

/// The validation pool a policy calibrates on: best-F1 needs the
/// labeled anomalies, percentile calibration must never see them.
pub fn calibration_set<'a>(policy: &ThresholdPolicy, parts: &'a Split) -> &'a [FeatureVector] {
    match policy {
        ThresholdPolicy::BestF1 => &parts.dae_validation,
        ThresholdPolicy::PercentileGamma { .. } => &parts.validation,
    }
}

fn run_one(config: &DetectorConfig, parts: &Split) -> Result<ModelOutcome> {
    let trained = TrainedDetector::fit(config, &parts.train)?;
    let fitted = trained.calibrate(calibration_set(&config.policy, parts))?;
    let reports = fitted.predict(&parts.test)?;
    let counts = confusion_from_reports(&reports);
    let row = metrics(config.kind().name(), &counts)?;
    Ok(ModelOutcome {
        row,
        counts,
        threshold: fitted.threshold,
        reports,
    })
}

impl Comparison {
    /// Rows of the detectors that succeeded, in report order.
    pub fn metric_rows(&self) -> Vec<MetricRow> {
        self.outcomes
            .iter()
            .filter_map(|m| m.outcome.as_ref().ok().map(|o| o.row.clone()))
            .collect()
    }

    /// `(model, counts)` for the detectors that succeeded.
    pub fn confusion_entries(&self) -> Vec<(String, ConfusionCounts)> {
        self.outcomes
            .iter()
            .filter_map(|m| {
                m.outcome
                    .as_ref()
                    .ok()
                    .map(|o| (m.kind.name().to_string(), o.counts))
            })
            .collect()
    }

    /// `(kind, message)` for the detectors that failed.
    pub fn failures(&self) -> Vec<(DetectorKind, &str)> {
        self.outcomes
            .iter()
            .filter_map(|m| m.outcome.as_ref().err().map(|e| (m.kind, e.as_str())))
            .collect()
    }
}

/// Aligned text table, three decimals, for terminal output.
pub fn metric_table(rows: &[MetricRow]) -> String {
    let name_width = rows
        .iter()
        .map(|r| r.model.len())
        .chain(std::iter::once("model".len()))
        .max()
        .unwrap_or(5);
    let mut out = format!(
        "{:<name_width$}  {:>6}  {:>6}  {:>6}  {:>9}  {:>6}\n",
        "model", "ACC", "TPR", "FPR", "precision", "F1"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<name_width$}  {:>6.3}  {:>6.3}  {:>6.3}  {:>9.3}  {:>6.3}\n",
            r.model, r.acc, r.tpr, r.fpr, r.precision, r.f1
        ));
    }
    out
}

/// Comma-separated metric rows at full float precision.
pub fn metric_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from("model,acc,tpr,fpr,precision,f1\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.model, r.acc, r.tpr, r.fpr, r.precision, r.f1
        ));
    }
    out
}

/// Comma-separated confusion counts, one row per model.
pub fn confusion_csv(entries: &[(String, ConfusionCounts)]) -> String {
    let mut out = String::from("model,tp,fp,fn,tn\n");
    for (model, c) in entries {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            model, c.true_positives, c.false_positives, c.false_negatives, c.true_negatives
        ));
    }
    out
}

/// Comma-separated deviation ratios for the separation/overlap plots.
pub fn ratio_csv(records: &[RatioRecord]) -> String {
    let mut out = String::from("cycle,fault,ratio\n");
    for r in records {
        out.push_str(&format!("{},{},{}\n", r.cycle, r.fault, r.ratio));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_synthetic;
    use crate::detector::DetectorParams;
    use crate::features::extract_all;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn toy_corpus(n_normal: usize, n_weak: usize, n_severe: usize) -> Vec<FeatureVector> {
        let mut out = Vec::new();
        for i in 0..n_normal + n_weak + n_severe {
            let (label, fault) = if i < n_normal {
                (Label::Normal, FaultType::None)
            } else if i < n_normal + n_weak {
                (Label::Anomaly, FaultType::Weak)
            } else {
                (Label::Anomaly, FaultType::Severe)
            };
            out.push(FeatureVector {
                cycle: i,
                label,
                fault,
                values: vec![i as f64, 1.0, -1.0],
            });
        }
        out
    }

    fn cycles(part: &[FeatureVector]) -> BTreeSet<usize> {
        part.iter().map(|f| f.cycle).collect()
    }

    #[test]
    fn split_cuts_100_normals_at_70_15_15() {
        let corpus = toy_corpus(100, 25, 25);
        let spec = SplitSpec {
            dae_valid_anomalies: 0,
            ..SplitSpec::default()
        };
        let parts = split(&corpus, &spec).unwrap();
        assert_eq!(parts.train.len(), 70);
        assert_eq!(parts.validation.len(), 15);
        assert_eq!(parts.dae_validation.len(), 15);
        assert_eq!(parts.test.len(), 15 + 50);
    }

    #[test]
    fn routed_anomalies_move_from_test_to_the_best_f1_pool() {
        let corpus = toy_corpus(100, 25, 25);
        let parts = split(&corpus, &SplitSpec::default()).unwrap();
        assert_eq!(parts.dae_validation.len(), 15 + 20);
        assert_eq!(parts.test.len(), 15 + 30);
        let routed: Vec<&FeatureVector> = parts
            .dae_validation
            .iter()
            .filter(|f| f.label == Label::Anomaly)
            .collect();
        assert_eq!(routed.len(), 20);
        // Both grades present: alternation guarantees it while both last.
        assert!(routed.iter().any(|f| f.fault == FaultType::Weak));
        assert!(routed.iter().any(|f| f.fault == FaultType::Severe));
    }

    #[test]
    fn split_rejects_bad_specs() {
        let corpus = toy_corpus(100, 10, 10);
        let cases = [
            SplitSpec {
                train_fraction: 0.9,
                valid_fraction: 0.2,
                ..SplitSpec::default()
            },
            SplitSpec {
                train_fraction: 0.0,
                ..SplitSpec::default()
            },
            SplitSpec {
                valid_fraction: -0.1,
                ..SplitSpec::default()
            },
            // 20 routed anomalies but only 20 exist: test would get none.
            SplitSpec::default(),
        ];
        for spec in cases {
            assert!(split(&corpus, &spec).is_err(), "{spec:?}");
        }
        // Fractions that floor to an empty part are rejected too.
        let tiny = toy_corpus(5, 3, 3);
        assert!(split(&tiny, &SplitSpec { dae_valid_anomalies: 0, ..SplitSpec::default() }).is_err());
    }

    #[test]
    fn same_seed_reproduces_the_split_and_seeds_differ() {
        let corpus = toy_corpus(60, 15, 15);
        let spec = SplitSpec {
            seed: 7,
            dae_valid_anomalies: 4,
            ..SplitSpec::default()
        };
        let a = split(&corpus, &spec).unwrap();
        let b = split(&corpus, &spec).unwrap();
        assert_eq!(a, b);
        let c = split(&corpus, &SplitSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(cycles(&a.train), cycles(&c.train));
    }

    proptest! {
        #[test]
        fn split_never_leaks(
            n_normal in 30usize..90,
            n_weak in 0usize..20,
            n_severe in 0usize..20,
            routed in 0usize..10,
            seed in 0u64..1000,
        ) {
            let n_anomaly = n_weak + n_severe;
            prop_assume!(routed == 0 || routed < n_anomaly);
            let corpus = toy_corpus(n_normal, n_weak, n_severe);
            let spec = SplitSpec { seed, dae_valid_anomalies: routed, ..SplitSpec::default() };
            let parts = split(&corpus, &spec).unwrap();

            let train = cycles(&parts.train);
            let valid = cycles(&parts.validation);
            let test = cycles(&parts.test);
            let dae = cycles(&parts.dae_validation);

            prop_assert!(train.is_disjoint(&valid));
            prop_assert!(train.is_disjoint(&test));
            prop_assert!(valid.is_disjoint(&test));
            prop_assert!(dae.is_disjoint(&test));
            prop_assert!(dae.is_superset(&valid));

            prop_assert!(parts.train.iter().all(|f| f.label == Label::Normal));
            prop_assert!(parts.validation.iter().all(|f| f.label == Label::Normal));

            // Every cycle is accounted for exactly once.
            let mut seen: Vec<usize> = Vec::new();
            seen.extend(&train);
            seen.extend(&valid);
            seen.extend(dae.difference(&valid));
            seen.extend(&test);
            seen.sort_unstable();
            let all: Vec<usize> = (0..corpus.len()).collect();
            prop_assert_eq!(seen, all);

            prop_assert_eq!(parts.train.len(), (0.70 * n_normal as f64).floor() as usize);
            prop_assert_eq!(parts.validation.len(), (0.15 * n_normal as f64).floor() as usize);
            prop_assert_eq!(parts.dae_validation.len(), parts.validation.len() + routed);
        }
    }

    #[test]
    fn confusion_enumerates_the_four_cells() {
        use Label::{Anomaly as A, Normal as N};
        let counts = confusion(&[A, A, N, N], &[A, N, A, N]).unwrap();
        assert_eq!(
            counts,
            ConfusionCounts {
                true_positives: 1,
                false_positives: 1,
                false_negatives: 1,
                true_negatives: 1,
            }
        );
        assert_eq!(counts.total(), 4);

        let perfect = confusion(&[A, N, A], &[A, N, A]).unwrap();
        assert_eq!(perfect.false_positives, 0);
        assert_eq!(perfect.false_negatives, 0);

        let all_flagged = confusion(&[A, A, A], &[A, N, A]).unwrap();
        assert_eq!(all_flagged.false_negatives, 0);
        assert_eq!(all_flagged.true_negatives, 0);

        assert!(confusion(&[A], &[A, N]).is_err());
    }

    #[test]
    fn metrics_match_the_hand_worked_tallies() {
        let counts = ConfusionCounts {
            true_positives: 90,
            false_negatives: 10,
            false_positives: 5,
            true_negatives: 95,
        };
        let row = metrics("demo", &counts).unwrap();
        assert!((row.acc - 0.925).abs() < 1e-12);
        assert!((row.tpr - 0.9).abs() < 1e-12);
        assert!((row.fpr - 0.05).abs() < 1e-12);
        assert!((row.precision - 18.0 / 19.0).abs() < 1e-12);
        assert!((row.f1 - 12.0 / 13.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_and_degenerate_tallies_follow_the_conventions() {
        let perfect = ConfusionCounts {
            true_positives: 40,
            true_negatives: 60,
            ..ConfusionCounts::default()
        };
        let row = metrics("perfect", &perfect).unwrap();
        assert_eq!(row.acc, 1.0);
        assert_eq!(row.fpr, 0.0);
        assert_eq!(row.f1, 1.0);

        // All-normal truth, nothing flagged: every ratio bottoms out at 0.
        let inert = ConfusionCounts {
            true_negatives: 5,
            ..ConfusionCounts::default()
        };
        let row = metrics("inert", &inert).unwrap();
        assert_eq!(row.acc, 1.0);
        assert_eq!((row.tpr, row.fpr, row.precision, row.f1), (0.0, 0.0, 0.0, 0.0));

        assert!(metrics("empty", &ConfusionCounts::default()).is_err());
    }

    proptest! {
        #[test]
        fn f1_is_the_harmonic_mean_of_precision_and_recall(
            tp in 0usize..400,
            fp in 0usize..400,
            fn_ in 0usize..400,
            tn in 0usize..400,
        ) {
            let counts = ConfusionCounts {
                true_positives: tp,
                false_positives: fp,
                false_negatives: fn_,
                true_negatives: tn,
            };
            prop_assume!(counts.total() > 0);
            let row = metrics("m", &counts).unwrap();
            prop_assert!((row.acc - (tp + tn) as f64 / counts.total() as f64).abs() < 1e-12);
            for v in [row.acc, row.tpr, row.fpr, row.precision, row.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            if row.precision + row.tpr > 0.0 {
                let harmonic = 2.0 * row.precision * row.tpr / (row.precision + row.tpr);
                prop_assert!((row.f1 - harmonic).abs() < 1e-12);
            } else {
                prop_assert_eq!(row.f1, 0.0);
            }
        }
    }

    /// The full benchmark on the default synthetic corpus. Gates the
    /// pipeline wiring: every detector must clear F1 ≥ 0.9 here.
    #[test]
    fn compare_runs_all_six_detectors_on_synthetic_data() {
        use crate::dataset::{
            DEFAULT_SYNTHETIC_NORMAL, DEFAULT_SYNTHETIC_SEVERE, DEFAULT_SYNTHETIC_WEAK,
        };
        let data = generate_synthetic(
            DEFAULT_SYNTHETIC_NORMAL,
            DEFAULT_SYNTHETIC_WEAK,
            DEFAULT_SYNTHETIC_SEVERE,
            9,
        );
        let features = extract_all(&data.cycles).unwrap();
        let spec = SplitSpec {
            seed: 9,
            ..SplitSpec::default()
        };
        let result = compare(&features, &default_configs(9), &spec).unwrap();

        assert_eq!(result.split.train, 294);
        assert_eq!(result.split.validation, 63);
        assert_eq!(result.split.dae_validation, 83);
        assert_eq!(result.split.test, 63 + 80);

        let kinds: Vec<DetectorKind> = result.outcomes.iter().map(|m| m.kind).collect();
        assert_eq!(kinds, DetectorKind::ALL.to_vec());
        for m in &result.outcomes {
            let out = m.outcome.as_ref().unwrap_or_else(|e| panic!("{}: {e}", m.kind));
            for v in [out.row.acc, out.row.tpr, out.row.fpr, out.row.precision, out.row.f1] {
                assert!((0.0..=1.0).contains(&v), "{}: {v}", m.kind);
            }
            assert_eq!(out.counts.total(), result.split.test);
            assert!(
                out.row.f1 >= 0.9,
                "{} fell below the smoke bar: F1 = {}",
                m.kind,
                out.row.f1
            );
        }

        assert_eq!(result.helm_ratios.len(), result.split.test);
        assert!(result.helm_ratios.iter().all(|r| r.ratio >= 0.0));
    }

    #[test]
    fn compare_is_reproducible_and_isolates_failures() {
        let data = generate_synthetic(80, 10, 10, 3);
        let features = extract_all(&data.cycles).unwrap();
        let spec = SplitSpec {
            seed: 3,
            dae_valid_anomalies: 0,
            ..SplitSpec::default()
        };
        // A k of zero cannot fit; the other detector still reports.
        let configs = vec![
            DetectorConfig {
                params: DetectorParams::Lof { k: 0 },
                ..DetectorConfig::default_for(DetectorKind::Lof, 3)
            },
            DetectorConfig::default_for(DetectorKind::IsolationForest, 3),
        ];
        let a = compare(&features, &configs, &spec).unwrap();
        assert_eq!(a.outcomes.len(), 2);
        // Report order, not input order.
        assert_eq!(a.outcomes[0].kind, DetectorKind::Lof);
        assert_eq!(a.outcomes[1].kind, DetectorKind::IsolationForest);
        assert!(a.outcomes[0].outcome.is_err());
        assert!(a.outcomes[1].outcome.is_ok());
        assert_eq!(a.failures().len(), 1);
        assert!(a.helm_ratios.is_empty());

        let b = compare(&features, &configs, &spec).unwrap();
        assert_eq!(a, b);

        let dup = vec![configs[1].clone(), configs[1].clone()];
        assert!(compare(&features, &dup, &spec).is_err());
        assert!(compare(&features, &[], &spec).is_err());
    }

    #[test]
    fn default_configs_cover_all_kinds_on_distinct_seeds() {
        let configs = default_configs(11);
        let kinds: Vec<DetectorKind> = configs.iter().map(|c| c.kind()).collect();
        assert_eq!(kinds, DetectorKind::ALL.to_vec());
        let seeds: BTreeSet<u64> = configs.iter().map(|c| c.seed).collect();
        assert_eq!(seeds.len(), configs.len());
    }

    #[test]
    fn renderers_emit_the_documented_headers() {
        let rows = vec![MetricRow {
            model: "iforest".into(),
            acc: 0.925,
            tpr: 0.9,
            fpr: 0.05,
            precision: 18.0 / 19.0,
            f1: 12.0 / 13.0,
        }];
        let table = metric_table(&rows);
        assert!(table.starts_with("model"));
        assert!(table.contains("iforest"));
        assert!(table.contains("0.925"));

        let csv = metric_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("model,acc,tpr,fpr,precision,f1"));
        assert_eq!(
            lines.next(),
            Some("iforest,0.925,0.9,0.05,0.9473684210526315,0.9230769230769231")
        );

        let counts = ConfusionCounts {
            true_positives: 9,
            false_positives: 1,
            false_negatives: 2,
            true_negatives: 8,
        };
        let ccsv = confusion_csv(&[("iforest".to_string(), counts)]);
        assert_eq!(ccsv, "model,tp,fp,fn,tn\niforest,9,1,2,8\n");

        let rcsv = ratio_csv(&[
            RatioRecord { cycle: 3, fault: FaultType::Severe, ratio: 1.5 },
            RatioRecord { cycle: 4, fault: FaultType::None, ratio: 0.25 },
        ]);
        assert_eq!(rcsv, "cycle,fault,ratio\n3,severe,1.5\n4,none,0.25\n");
    }
}
