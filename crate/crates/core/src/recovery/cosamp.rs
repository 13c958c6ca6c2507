//! Compressive sampling matching pursuit.

use std::time::Instant;

use super::{check_dims, solve_on_support, top_k, RecoveryResult, SolverNote, SolverOpts};
use crate::error::{invalid, Result};
use crate::linalg::norm2;
use crate::sensing::{MeasurementVector, SensingMatrix};

/// CoSaMP with a `k`-term estimate.
///
/// Each pass merges the `2k` strongest proxy entries with the current
/// support, solves least squares there and prunes back to `k`. Stops when
/// `‖r‖ ≤ opts.tol·‖y‖`, when the residual stops shrinking, or at
/// `opts.max_iter`. Outside `k ≤ m/2` a regime warning is recorded.
pub fn cosamp(y: &MeasurementVector, a: &SensingMatrix, k: usize, opts: SolverOpts) -> Result<RecoveryResult> {
    check_dims(y, a)?;
    let (m, n) = (a.m(), a.n());
    if k == 0 || k > n {
        return invalid(format!("k = {k} outside [1, {n}]"));
    }
    let start = Instant::now();
    let mut notes = Vec::new();
    if 2 * k > m {
        notes.push(SolverNote::RegimeWarning(format!("k = {k} exceeds m/2 = {}", m / 2)));
        log::warn!("cosamp: k = {k} outside the k <= m/2 working regime");
    }
    let ynorm = norm2(&y.values);
    if ynorm == 0.0 {
        let mut res = RecoveryResult::zeros(n, m, 1);
        res.notes = notes;
        res.recovery_time = start.elapsed();
        return Ok(res);
    }
    let dense = a.to_dense();
    let tol = opts.tol * ynorm;

    let mut x = vec![0.0; n];
    let mut residual = y.values.clone();
    let mut rnorm = ynorm;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        iterations += 1;
        let proxy = a.apply_transpose(&residual)?;
        let mut merged = top_k(&proxy, 2 * k);
        merged.extend(x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i));
        merged.sort_unstable();
        merged.dedup();
        // Least squares needs at most m columns; keep the strongest proxies.
        if merged.len() > m {
            let scores: Vec<f64> =
                merged.iter().map(|&j| proxy[j].abs() + if x[j] != 0.0 { f64::MAX / 2.0 } else { 0.0 }).collect();
            merged = top_k(&scores, m).into_iter().map(|i| merged[i]).collect();
        }
        let (b, ridged) = solve_on_support(&dense, &merged, &y.values)?;
        if ridged && !notes.contains(&SolverNote::RidgeStabilized) {
            notes.push(SolverNote::RidgeStabilized);
        }
        let keep = top_k(&b, k);
        let mut x_new = vec![0.0; n];
        for i in keep {
            x_new[merged[i]] = b[i];
        }
        let ax = a.apply(&x_new)?;
        let r_new: Vec<f64> = y.values.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let rn = norm2(&r_new);
        if rn >= rnorm * (1.0 - 1e-12) && iterations > 1 {
            // No progress: keep the previous estimate.
            trace.push(rnorm);
            converged = rnorm <= tol;
            break;
        }
        x = x_new;
        residual = r_new;
        rnorm = rn;
        trace.push(rnorm);
        if rnorm <= tol {
            converged = true;
            break;
        }
    }

    Ok(RecoveryResult {
        x_hat: x,
        iterations,
        measurements_used: m,
        converged,
        recovery_time: start.elapsed(),
        objective_trace: trace,
        notes,
    })
}
