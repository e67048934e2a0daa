//! Small numerical helpers shared by the volume, model and axiom code.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vector norm used for distances between volumes and between heatmaps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
}

impl Norm {
    pub fn p(self) -> u32 {
        match self {
            Norm::L1 => 1,
            Norm::L2 => 2,
        }
    }
}

/// `(sum |a_i - b_i|^p)^(1/p)` accumulated in f64.
pub fn lp_distance<A, B>(a: &[A], b: &[B], norm: Norm) -> Result<f64>
where
    A: Copy + Into<f64>,
    B: Copy + Into<f64>,
{
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "lp_distance on slices of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    let pairs = a.iter().zip(b).map(|(&x, &y)| x.into() - y.into());
    Ok(match norm {
        Norm::L1 => pairs.map(f64::abs).sum(),
        Norm::L2 => pairs.map(|d| d * d).sum::<f64>().sqrt(),
    })
}

/// Percentile of `values` for `p` in `[0, 100]`.
///
/// Uses linear interpolation between order statistics: with the values sorted
/// ascending as `x[0..n]`, let `h = (n - 1) * p / 100`; the result is
/// `x[floor(h)] + (h - floor(h)) * (x[floor(h) + 1] - x[floor(h)])`.
pub fn percentile(values: &[f32], p: f64) -> Result<f64> {
    let mut sorted: Vec<f64> = values.iter().map(|&v| v as f64).collect();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, p)
}

pub fn percentile_sorted(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::InvalidArgument("percentile of empty input".into()));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("percentile {p} outside [0, 100]")));
    }
    let h = (sorted.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Sample Pearson correlation, computed with a single-pass Welford update.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "pearson needs two equal-length inputs of length >= 2 (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    let (mut mean_a, mut mean_b) = (0.0, 0.0);
    let (mut m2_a, mut m2_b, mut co) = (0.0, 0.0, 0.0);
    for (i, (&x, &y)) in a.iter().zip(b).enumerate() {
        let n = (i + 1) as f64;
        let dx = x - mean_a;
        mean_a += dx / n;
        let dy = y - mean_b;
        mean_b += dy / n;
        m2_a += dx * (x - mean_a);
        m2_b += dy * (y - mean_b);
        co += dx * (y - mean_b);
    }
    if m2_a <= 0.0 || m2_b <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((co / (m2_a.sqrt() * m2_b.sqrt())).clamp(-1.0, 1.0))
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard error of the mean (sample standard deviation over sqrt(n)); zero for n < 2.
pub fn standard_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}
