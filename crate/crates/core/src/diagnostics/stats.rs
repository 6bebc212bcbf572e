//! Small sample-statistics helpers used by the diagnostics.

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; needs at least two values.
pub fn sample_variance(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(Error::InvalidInput("sample variance needs at least 2 values".into()));
    }
    let m = mean(xs);
    Ok(xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64)
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> Result<f64> {
    Ok((sample_variance(xs)? / xs.len() as f64).sqrt())
}

/// Shape summary of a sample: moment ratios use central population moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    /// Unbiased variance.
    pub variance: f64,
    pub skewness: f64,
    /// `m4 / m2^2`; 3 for a normal law.
    pub kurtosis: f64,
}

impl Moments {
    pub fn excess_kurtosis(&self) -> f64 {
        self.kurtosis - 3.0
    }
}

pub fn moments(xs: &[f64]) -> Result<Moments> {
    if xs.len() < 3 {
        return Err(Error::InvalidInput(format!("shape statistics need at least 3 values, got {}", xs.len())));
    }
    let n = xs.len() as f64;
    let m = mean(xs);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in xs {
        let c = x - m;
        let c2 = c * c;
        m2 += c2;
        m3 += c2 * c;
        m4 += c2 * c2;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    if m2 == 0.0 {
        return Err(Error::InvalidInput("shape statistics of a constant sample are undefined".into()));
    }
    Ok(Moments {
        mean: m,
        variance: m2 * n / (n - 1.0),
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2),
    })
}

/// Lag-batched standard error of the mean of a correlated series.
///
/// The series is cut into `batches` contiguous blocks and the block means are
/// treated as independent.
pub fn batch_means_stderr(xs: &[f64], batches: usize) -> Result<f64> {
    if batches < 2 || xs.len() < batches {
        return Err(Error::InvalidInput("batch means need at least 2 non-empty batches".into()));
    }
    let size = xs.len() / batches;
    let means: Vec<f64> = (0..batches).map(|b| mean(&xs[b * size..(b + 1) * size])).collect();
    standard_error(&means)
}
