//! Moment statistics and the nearest-rank percentile.

use crate::error::{Error, Result};

/// Threshold below which a variance is treated as zero when deciding
/// whether skewness and kurtosis are defined.
pub const VARIANCE_EPSILON: f64 = 1e-12;

/// Population moments of a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    /// Population variance (divide by n).
    pub variance: f64,
    /// m3 / m2^(3/2); zero when the variance is below [`VARIANCE_EPSILON`].
    pub skewness: f64,
    /// Non-excess kurtosis m4 / m2^2; zero when the variance is below
    /// [`VARIANCE_EPSILON`].
    pub kurtosis: f64,
}

/// Population moments of a non-empty series of finite values.
///
/// Two-pass computation: mean first, then central moments, which keeps
/// the translation behaviour stable.
pub fn moments(series: &[f64]) -> Result<Moments> {
    if series.is_empty() {
        return Err(Error::argument("moments of an empty series"));
    }
    if let Some(pos) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::data(format!(
            "non-finite value at position {pos} in series"
        )));
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in series {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let (skewness, kurtosis) = if m2 < VARIANCE_EPSILON {
        (0.0, 0.0)
    } else {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    };
    Ok(Moments {
        mean,
        variance: m2,
        skewness,
        kurtosis,
    })
}

/// Nearest-rank percentile: sort ascending and take the element at the
/// 1-based index `ceil(p/100 * n)`.
///
/// `p` must lie in `(0, 100]`; `p = 100` returns the maximum. The rank is
/// snapped to the nearest integer when within 1e-9 before rounding up, so
/// inputs like `p = 99, n = 100` hit index 99 despite binary rounding.
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::argument("percentile of an empty sequence"));
    }
    if !(p > 0.0 && p <= 100.0) {
        return Err(Error::argument(format!(
            "percentile p must be in (0, 100], got {p}"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in percentile"));
    let n = sorted.len();
    let rank = p / 100.0 * n as f64;
    let snapped = if (rank - rank.round()).abs() < 1e-9 {
        rank.round()
    } else {
        rank.ceil()
    };
    let idx = (snapped as usize).max(1).min(n);
    Ok(sorted[idx - 1])
}
