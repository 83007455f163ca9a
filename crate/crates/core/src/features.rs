//! Per-cycle statistical features and exploration helpers.
//!
//! Each cycle is reduced to 68 attributes: the 17 sensors in canonical
//! order, each replaced by (mean, variance, skewness, kurtosis). The
//! scaler, correlation, and histogram helpers operate on generic-width
//! rows so they apply equally to toy data and full feature tables.

use serde::{Deserialize, Serialize};

use crate::dataset::{fault_type, leakage_label, Cycle, FaultType, Label, SENSORS};
use crate::error::{Error, Result};
use crate::numerics::{moments, Matrix, VARIANCE_EPSILON};

/// Statistics computed per channel, in attribute order.
pub const STAT_NAMES: [&str; 4] = ["mean", "variance", "skewness", "kurtosis"];

/// Number of attributes per cycle.
pub const FEATURE_DIM: usize = SENSORS.len() * STAT_NAMES.len();

/// One cycle reduced to its 68 attributes plus ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Cycle index within the source dataset.
    pub cycle: usize,
    pub label: Label,
    pub fault: FaultType,
    /// Length [`FEATURE_DIM`], ordered sensor-major: PS1 mean, PS1
    /// variance, PS1 skewness, PS1 kurtosis, PS2 mean, ...
    pub values: Vec<f64>,
}

/// Attribute names in column order, `<sensor>_<stat>`.
pub fn attribute_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_DIM);
    for sensor in &SENSORS {
        for stat in STAT_NAMES {
            names.push(format!("{}_{stat}", sensor.id));
        }
    }
    names
}

/// Reduces one cycle to its feature vector. Each channel contributes
/// exactly its own four attributes, so the map is per-channel local.
pub fn extract_features(cycle: &Cycle) -> Result<FeatureVector> {
    let label = leakage_label(cycle)?;
    let fault = fault_type(cycle)?;
    let mut values = Vec::with_capacity(FEATURE_DIM);
    for (s, spec) in SENSORS.iter().enumerate() {
        let m = moments(&cycle.channels[s]).map_err(|e| {
            Error::data(format!("cycle {}, sensor {}: {e}", cycle.index, spec.id))
        })?;
        values.extend_from_slice(&[m.mean, m.variance, m.skewness, m.kurtosis]);
    }
    Ok(FeatureVector {
        cycle: cycle.index,
        label,
        fault,
        values,
    })
}

/// Extracts the whole dataset in cycle order.
pub fn extract_all(cycles: &[Cycle]) -> Result<Vec<FeatureVector>> {
    cycles.iter().map(extract_features).collect()
}

/// Per-attribute standardization parameters (population deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    /// Population standard deviation; attributes with deviation below
    /// the variance epsilon are stored as 1 so scaling maps them to 0.
    pub dev: Vec<f64>,
}

impl Scaler {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

fn check_rows(rows: &[Vec<f64>]) -> Result<usize> {
    let Some(first) = rows.first() else {
        return Err(Error::argument("empty training set"));
    };
    let dim = first.len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::argument(format!(
                "row {i} has {} attributes, expected {dim}",
                row.len()
            )));
        }
    }
    Ok(dim)
}

/// Fits per-attribute mean and population deviation over the rows.
pub fn fit_scaler(rows: &[Vec<f64>]) -> Result<Scaler> {
    let dim = check_rows(rows)?;
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut dev = vec![0.0; dim];
    for row in rows {
        for ((d, v), m) in dev.iter_mut().zip(row).zip(&mean) {
            *d += (v - m) * (v - m);
        }
    }
    for d in &mut dev {
        *d = (*d / n).sqrt();
        if *d < VARIANCE_EPSILON.sqrt() {
            *d = 1.0;
        }
    }
    Ok(Scaler { mean, dev })
}

/// Applies `(v - mean) / dev` attribute-wise.
pub fn apply_scaler(scaler: &Scaler, values: &[f64]) -> Result<Vec<f64>> {
    if values.len() != scaler.dim() {
        return Err(Error::argument(format!(
            "vector has {} attributes, scaler expects {}",
            values.len(),
            scaler.dim()
        )));
    }
    Ok(values
        .iter()
        .zip(&scaler.mean)
        .zip(&scaler.dev)
        .map(|((v, m), d)| (v - m) / d)
        .collect())
}

/// Pearson correlation matrix over the rows' attributes. Attributes with
/// zero deviation correlate 0 with everything (diagonal stays 1).
pub fn correlation_matrix(rows: &[Vec<f64>]) -> Result<Matrix> {
    let dim = check_rows(rows)?;
    if rows.len() < 2 {
        return Err(Error::argument("correlation needs at least 2 rows"));
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / n;
        }
    }
    // Centered column norms; zero-deviation columns flagged by norm 0.
    let mut norm = vec![0.0; dim];
    for row in rows {
        for ((s, v), m) in norm.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    for s in &mut norm {
        *s = s.sqrt();
    }
    let mut out = Matrix::identity(dim);
    for a in 0..dim {
        for b in (a + 1)..dim {
            let r = if norm[a] <= 0.0 || norm[b] <= 0.0 {
                0.0
            } else {
                let mut dot = 0.0;
                for row in rows {
                    dot += (row[a] - mean[a]) * (row[b] - mean[b]);
                }
                (dot / (norm[a] * norm[b])).clamp(-1.0, 1.0)
            };
            out.set(a, b, r);
            out.set(b, a, r);
        }
    }
    Ok(out)
}

/// Equal-width histogram of one attribute over `[min, max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` edges; first is the minimum, last the maximum.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Bins attribute `attribute` of the rows into `bins` equal-width bins.
/// The last bin includes the maximum; a degenerate range (all values
/// equal) puts every sample in the first bin.
pub fn histogram(rows: &[Vec<f64>], attribute: usize, bins: usize) -> Result<Histogram> {
    let dim = check_rows(rows)?;
    if attribute >= dim {
        return Err(Error::argument(format!(
            "attribute {attribute} out of range for {dim} attributes"
        )));
    }
    if bins == 0 {
        return Err(Error::argument("bin count must be at least 1"));
    }
    let values: Vec<f64> = rows.iter().map(|r| r[attribute]).collect();
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = (max - min) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in &values {
        let idx = if width > 0.0 {
            (((v - min) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    let edges = (0..=bins)
        .map(|i| {
            if i == bins {
                max
            } else {
                min + width * i as f64
            }
        })
        .collect();
    Ok(Histogram { edges, counts })
}

/// Renders the feature table as comma-separated text with a header row.
pub fn feature_table_csv(features: &[FeatureVector]) -> String {
    let mut out = String::from("cycle,label,fault");
    for name in attribute_names() {
        out.push(',');
        out.push_str(&name);
    }
    out.push('\n');
    for f in features {
        out.push_str(&format!("{},{},{}", f.cycle, f.label, f.fault));
        for v in &f.values {
            out.push(',');
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, Conditions};
    use proptest::prelude::*;

    fn test_cycle() -> Cycle {
        let mut channels: Vec<Vec<f64>> = SENSORS
            .iter()
            .map(|s| {
                (0..s.rate.samples_per_cycle())
                    .map(|i| (i % 7) as f64 * 0.25 + 1.0)
                    .collect()
            })
            .collect();
        // TS1 constant, PS1 alternating 0/1 for the worked examples.
        channels[9] = vec![40.0; 60];
        channels[0] = (0..6000).map(|i| (i % 2) as f64).collect();
        Cycle {
            index: 3,
            channels,
            conditions: Conditions {
                cool: 100,
                valv: 100,
                pump: 0,
                hydr: 130,
                stab: 0,
            },
        }
    }

    #[test]
    fn vector_length_and_metadata() {
        let f = extract_features(&test_cycle()).unwrap();
        assert_eq!(f.values.len(), 68);
        assert_eq!(f.cycle, 3);
        assert_eq!(f.label, Label::Normal);
        assert_eq!(f.fault, FaultType::None);
        assert!(f.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn constant_channel_block() {
        let f = extract_features(&test_cycle()).unwrap();
        // TS1 is sensor 9; its block starts at attribute 36.
        assert_eq!(&f.values[36..40], &[40.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn alternating_channel_block() {
        let f = extract_features(&test_cycle()).unwrap();
        let block = &f.values[0..4];
        assert!((block[0] - 0.5).abs() < 1e-12);
        assert!((block[1] - 0.25).abs() < 1e-12);
        assert!(block[2].abs() < 1e-12);
        assert!((block[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extraction_is_per_channel_local() {
        let base = test_cycle();
        let mut altered = base.clone();
        // FS2 is sensor 8; attributes 32..36.
        for v in altered.channels[8].iter_mut() {
            *v += 3.5;
        }
        let fa = extract_features(&base).unwrap();
        let fb = extract_features(&altered).unwrap();
        for a in 0..FEATURE_DIM {
            let same = fa.values[a] == fb.values[a];
            if (32..36).contains(&a) {
                // Mean must move; higher moments of a shifted series match.
                if a == 32 {
                    assert!(!same);
                }
            } else {
                assert!(same, "attribute {a} changed");
            }
        }
    }

    #[test]
    fn attribute_names_are_column_stable() {
        let names = attribute_names();
        assert_eq!(names.len(), 68);
        assert_eq!(names[0], "PS1_mean");
        assert_eq!(names[3], "PS1_kurtosis");
        assert_eq!(names[4], "PS2_mean");
        assert_eq!(names[67], "SE_kurtosis");
    }

    #[test]
    fn scaler_single_attribute_example() {
        let scaler = fit_scaler(&[vec![2.0], vec![4.0]]).unwrap();
        assert_eq!(scaler.mean, vec![3.0]);
        assert_eq!(scaler.dev, vec![1.0]);
        assert_eq!(apply_scaler(&scaler, &[2.0]).unwrap(), vec![-1.0]);
    }

    #[test]
    fn scaler_constant_attribute_maps_to_zero() {
        let rows = vec![vec![7.0, 1.0], vec![7.0, 3.0], vec![7.0, 5.0]];
        let scaler = fit_scaler(&rows).unwrap();
        for row in &rows {
            assert_eq!(apply_scaler(&scaler, row).unwrap()[0], 0.0);
        }
    }

    #[test]
    fn scaler_maps_train_mean_to_zero() {
        let rows = vec![vec![1.0, 10.0], vec![3.0, 30.0], vec![5.0, 20.0]];
        let scaler = fit_scaler(&rows).unwrap();
        let scaled = apply_scaler(&scaler, &scaler.mean.clone()).unwrap();
        assert!(scaled.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn scaler_rejects_empty_and_ragged() {
        assert!(fit_scaler(&[]).is_err());
        assert!(fit_scaler(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        let scaler = fit_scaler(&[vec![1.0, 2.0]]).unwrap();
        assert!(apply_scaler(&scaler, &[1.0]).is_err());
    }

    #[test]
    fn scaler_idempotent_on_scaled_data() {
        let ds = generate_synthetic(40, 0, 0, 11);
        let rows: Vec<Vec<f64>> = extract_all(&ds.cycles)
            .unwrap()
            .into_iter()
            .map(|f| f.values)
            .collect();
        let scaler = fit_scaler(&rows).unwrap();
        let scaled: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| apply_scaler(&scaler, r).unwrap())
            .collect();
        let rescaler = fit_scaler(&scaled).unwrap();
        for (m, d) in rescaler.mean.iter().zip(&rescaler.dev) {
            assert!(m.abs() < 1e-6, "mean {m}");
            assert!((d - 1.0).abs() < 1e-6 || *d == 1.0, "dev {d}");
        }
    }

    #[test]
    fn correlation_exact_linear_dependence() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        let m = correlation_matrix(&rows).unwrap();
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.get(1, 1), 1.0);
        assert!((m.get(0, 1) - 1.0).abs() < 1e-12);
        assert!((m.get(1, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_negation_is_minus_one() {
        let rows = vec![vec![1.0, -1.0], vec![2.0, -2.0], vec![5.0, -5.0]];
        let m = correlation_matrix(&rows).unwrap();
        assert!((m.get(0, 1) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_constant_attribute_is_zero() {
        let rows = vec![vec![4.0, 1.0], vec![4.0, 2.0], vec![4.0, 3.0]];
        let m = correlation_matrix(&rows).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.get(0, 0), 1.0);
    }

    #[test]
    fn correlation_requires_two_rows() {
        assert!(correlation_matrix(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn histogram_worked_examples() {
        let rows: Vec<Vec<f64>> = [0.0, 1.0, 2.0, 3.0].iter().map(|v| vec![*v]).collect();
        let h = histogram(&rows, 0, 2).unwrap();
        assert_eq!(h.counts, vec![2, 2]);
        assert_eq!(h.edges, vec![0.0, 1.5, 3.0]);

        let same: Vec<Vec<f64>> = (0..4).map(|_| vec![2.5]).collect();
        let h = histogram(&same, 0, 2).unwrap();
        assert_eq!(h.counts.iter().sum::<usize>(), 4);
        assert_eq!(h.counts[0], 4);
    }

    #[test]
    fn histogram_rejects_bad_arguments() {
        assert!(histogram(&[], 0, 2).is_err());
        assert!(histogram(&[vec![1.0]], 0, 0).is_err());
        assert!(histogram(&[vec![1.0]], 5, 2).is_err());
    }

    #[test]
    fn csv_header_and_shape() {
        let ds = generate_synthetic(2, 1, 0, 3);
        let features = extract_all(&ds.cycles).unwrap();
        let csv = feature_table_csv(&features);
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("cycle,label,fault,PS1_mean,PS1_variance"));
        assert_eq!(header.split(',').count(), 71);
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 3);
        assert!(rows[2].starts_with("2,anomaly,weak,"));
        for row in rows {
            assert_eq!(row.split(',').count(), 71);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn correlation_entries_bounded_and_symmetric(
            seed in 0u64..1000,
            n in 3usize..12,
            dim in 2usize..6,
        ) {
            let mut rng = crate::numerics::Rng::new(seed);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dim).map(|_| rng.uniform(-5.0, 5.0)).collect())
                .collect();
            let m = correlation_matrix(&rows).unwrap();
            for a in 0..dim {
                prop_assert_eq!(m.get(a, a), 1.0);
                for b in 0..dim {
                    prop_assert!(m.get(a, b) >= -1.0 && m.get(a, b) <= 1.0);
                    prop_assert!((m.get(a, b) - m.get(b, a)).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn histogram_counts_sum_to_samples(
            seed in 0u64..1000,
            n in 1usize..40,
            bins in 1usize..10,
        ) {
            let mut rng = crate::numerics::Rng::new(seed);
            let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.uniform(-3.0, 3.0)]).collect();
            let h = histogram(&rows, 0, bins).unwrap();
            prop_assert_eq!(h.counts.iter().sum::<usize>(), n);
            prop_assert_eq!(h.edges.len(), bins + 1);
        }

        #[test]
        fn scaled_train_attributes_centered(
            seed in 0u64..1000,
            n in 2usize..20,
        ) {
            let mut rng = crate::numerics::Rng::new(seed);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..4).map(|_| rng.uniform(-10.0, 10.0)).collect())
                .collect();
            let scaler = fit_scaler(&rows).unwrap();
            let scaled: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| apply_scaler(&scaler, r).unwrap())
                .collect();
            for a in 0..4 {
                let mean: f64 = scaled.iter().map(|r| r[a]).sum::<f64>() / n as f64;
                prop_assert!(mean.abs() < 1e-9);
            }
        }
    }
}
