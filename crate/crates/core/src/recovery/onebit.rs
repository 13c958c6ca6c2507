//! One-bit compressive sensing: sign quantizer and binary iterative hard
//! thresholding (BIHT).

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{top_k, RecoveryResult, SolverOpts};
use crate::error::{invalid, Result};
use crate::linalg::norm2;
use crate::sensing::{MeasurementVector, SensingMatrix};

/// Measurement signs, every entry `±1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignVector {
    signs: Vec<i8>,
}

impl SignVector {
    pub fn from_signs(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|s| *s != 1 && *s != -1) {
            return invalid("sign vector entries must be +1 or -1");
        }
        Ok(Self { signs })
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.signs.iter().map(|&s| s as f64).collect()
    }
}

fn sign(v: f64) -> i8 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

/// `sign(y)` with `sign(0) = +1`.
pub fn one_bit_quantize(y: &MeasurementVector) -> Result<SignVector> {
    if y.is_empty() {
        return invalid("cannot quantize an empty measurement vector");
    }
    Ok(SignVector { signs: y.values.iter().map(|&v| sign(v)).collect() })
}

/// Number of measurements whose sign under `A x` disagrees with `signs`.
pub fn sign_mismatches(a: &SensingMatrix, x: &[f64], signs: &SignVector) -> Result<usize> {
    let ax = a.apply(x)?;
    Ok(ax.iter().zip(signs.signs()).filter(|(v, s)| sign(**v) != **s).count())
}

/// Binary iterative hard thresholding.
///
/// Gradient steps on the one-sided sign-consistency loss followed by keeping
/// the `k` largest entries. Iterates are left unnormalized, starting from
/// the thresholded back-projection; the step is `1/m` relative to a matrix
/// with unit-variance entries. The iterate with the fewest sign mismatches
/// is returned, scaled to unit norm; the objective trace records the best
/// mismatch count so far.
pub fn biht_recover(signs: &SignVector, a: &SensingMatrix, k: usize, opts: SolverOpts) -> Result<RecoveryResult> {
    let (m, n) = (a.m(), a.n());
    if signs.len() != m {
        return invalid(format!("sign vector length {} does not match m = {m}", signs.len()));
    }
    if k == 0 {
        return invalid("BIHT needs k >= 1");
    }
    if k > n {
        return invalid(format!("k = {k} exceeds n = {n}"));
    }
    let start = Instant::now();
    let s = signs.as_f64();
    let mean_col = (0..n).map(|j| norm2(&a.column(j))).sum::<f64>() / n as f64;
    let step = if mean_col > 0.0 { (m as f64).sqrt() / (m as f64 * mean_col) } else { 1.0 };

    let threshold = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for i in top_k(v, k) {
            out[i] = v[i];
        }
        out
    };
    let mismatches = |x: &[f64]| -> Result<(usize, Vec<f64>)> {
        let ax = a.apply(x)?;
        let d = ax.iter().zip(&s).filter(|(v, si)| sign(**v) as f64 != **si).count();
        Ok((d, ax))
    };

    let mut x: Vec<f64> = threshold(&a.apply_transpose(&s)?).iter().map(|v| step * v).collect();
    if norm2(&x) == 0.0 {
        x[0] = 1.0;
    }
    let (mut best_d, mut ax) = mismatches(&x)?;
    let mut best = x.clone();
    let mut trace = vec![best_d as f64];
    let mut iterations = 0;

    while iterations < opts.max_iter && best_d > 0 {
        iterations += 1;
        let diff: Vec<f64> = s.iter().zip(&ax).map(|(si, v)| 0.5 * (si - sign(*v) as f64)).collect();
        let g = a.apply_transpose(&diff)?;
        let cand: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi + step * gi).collect();
        x = threshold(&cand);
        if norm2(&x) == 0.0 {
            break;
        }
        let (d, ax_new) = mismatches(&x)?;
        ax = ax_new;
        if d < best_d {
            best_d = d;
            best = x.clone();
        }
        trace.push(best_d as f64);
    }

    let nrm = norm2(&best);
    best.iter_mut().for_each(|v| *v /= nrm);
    Ok(RecoveryResult {
        x_hat: best,
        iterations,
        measurements_used: m,
        converged: best_d == 0,
        recovery_time: start.elapsed(),
        objective_trace: trace,
        notes: Vec::new(),
    })
}
