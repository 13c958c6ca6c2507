//! Coherence, restricted-isometry estimates and measurement-count rules.

use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SensingMatrix;
use crate::error::{invalid, Result};
use crate::rng::{stream_rng, Stream};

/// Largest absolute inner product between two distinct normalized columns.
pub fn mutual_coherence(matrix: &SensingMatrix) -> Result<f64> {
    let n = matrix.n();
    if n < 2 {
        return invalid("coherence needs at least two columns");
    }
    let mut a = matrix.to_dense();
    for (j, mut col) in a.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 {
            return invalid(format!("column {j} is zero"));
        }
        col /= norm;
    }
    let gram = a.transpose() * &a;
    let mut mu = 0.0f64;
    for j in 0..n {
        for i in 0..j {
            mu = mu.max(gram[(i, j)].abs());
        }
    }
    Ok(mu.min(1.0))
}

/// Monte-Carlo lower bound on the order-`k` restricted isometry constant.
///
/// Samples `trials` random `k`-sparse unit vectors `u` and returns the
/// largest `|‖Φu‖² − 1|` seen. The true constant is at least this large.
pub fn rip_estimate(matrix: &SensingMatrix, k: usize, trials: usize, seed: u64) -> Result<f64> {
    let n = matrix.n();
    if k == 0 || k > n {
        return invalid(format!("k = {k} outside [1, {n}]"));
    }
    if trials == 0 {
        return invalid("at least one trial is required");
    }
    let dense = matrix.to_dense();
    let mut rng = stream_rng(seed, Stream::Search);
    let mut worst = 0.0f64;
    let mut y = vec![0.0; matrix.m()];
    for _ in 0..trials {
        let support = index::sample(&mut rng, n, k);
        let vals: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        y.iter_mut().for_each(|v| *v = 0.0);
        for (j, v) in support.iter().zip(&vals) {
            let w = v / norm;
            for (yi, a) in y.iter_mut().zip(dense.column(j).iter()) {
                *yi += a * w;
            }
        }
        let e: f64 = y.iter().map(|v| v * v).sum();
        worst = worst.max((e - 1.0).abs());
    }
    Ok(worst)
}

/// Measurement-count heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementRule {
    /// `ceil(c · k · ln(n/k))`.
    KLogNOverK,
    /// `ceil(c · ln(n/k))`, independent of `k` apart from the ratio.
    LogNOverK,
}

/// Number of measurements suggested by `rule`, clamped to `[1, n]`.
///
/// A fully dense signal (`k = n`) always needs all `n` samples.
pub fn required_measurements(n: usize, k: usize, rule: MeasurementRule, constant: f64) -> Result<usize> {
    if k == 0 || k > n {
        return invalid(format!("k = {k} outside [1, {n}]"));
    }
    if k == n {
        return Ok(n);
    }
    let l = (n as f64 / k as f64).ln();
    let raw = match rule {
        MeasurementRule::KLogNOverK => constant * k as f64 * l,
        MeasurementRule::LogNOverK => constant * l,
    };
    let m = if raw.is_finite() { raw.ceil().max(0.0) as usize } else { n };
    Ok(m.clamp(1, n))
}
