//! Orthogonal matching pursuit with an incrementally orthogonalized basis.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{check_dims, solve_on_support, RecoveryResult, SolverNote};
use crate::error::{invalid, Result};
use crate::linalg::{dot, norm2};
use crate::sensing::{MeasurementVector, SensingMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingRule {
    /// Select exactly this many atoms (fewer if the residual vanishes first).
    Sparsity(usize),
    /// Stop once `‖r‖₂ ≤ tol`, selecting at most `max_atoms`.
    Residual { tol: f64, max_atoms: usize },
}

/// Greedy recovery: pick the column most correlated with the residual,
/// re-fit by least squares on the selected set, repeat.
///
/// The objective trace holds `‖r‖₂` after every selection.
pub fn omp(y: &MeasurementVector, a: &SensingMatrix, rule: StoppingRule) -> Result<RecoveryResult> {
    check_dims(y, a)?;
    let (m, n) = (a.m(), a.n());
    let (max_atoms, tol) = match rule {
        StoppingRule::Sparsity(k) => {
            if k > m {
                return invalid(format!("target sparsity {k} exceeds m = {m}"));
            }
            (k, 0.0)
        }
        StoppingRule::Residual { tol, max_atoms } => {
            if !(tol >= 0.0) {
                return invalid("residual tolerance must be nonnegative");
            }
            (max_atoms.min(m), tol)
        }
    };
    let start = Instant::now();
    let dense = a.to_dense();
    let col_norms: Vec<f64> = dense.column_iter().map(|c| c.norm()).collect();
    let ynorm = norm2(&y.values);
    // Exact-fit floor so a noiseless run stops once the residual is round-off.
    let floor = tol.max(1e-13 * ynorm);

    let mut residual = y.values.clone();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut support: Vec<usize> = Vec::new();
    let mut excluded = vec![false; n];
    let mut notes = Vec::new();
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut rnorm = ynorm;

    while support.len() < max_atoms && rnorm > floor {
        iterations += 1;
        let corr = a.apply_transpose(&residual)?;
        let pick = (0..n)
            .filter(|&j| !excluded[j] && col_norms[j] > 0.0)
            .map(|j| (j, corr[j].abs() / col_norms[j]))
            .fold(None::<(usize, f64)>, |best, (j, c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((j, c)),
            });
        let Some((j, _)) = pick else { break };
        excluded[j] = true;

        // Two passes of Gram-Schmidt keep the basis orthonormal to round-off.
        let mut q: Vec<f64> = dense.column(j).iter().copied().collect();
        for _ in 0..2 {
            for b in &basis {
                let p = dot(b, &q);
                q.iter_mut().zip(b).for_each(|(qi, bi)| *qi -= p * bi);
            }
        }
        let qn = norm2(&q);
        if qn <= 1e-10 * col_norms[j] {
            notes.push(SolverNote::DependentColumnSkipped(j));
            log::warn!("omp: column {j} is dependent on the selected set, skipped");
            if iterations > 2 * m + n {
                break;
            }
            continue;
        }
        q.iter_mut().for_each(|v| *v /= qn);
        let p = dot(&q, &residual);
        residual.iter_mut().zip(&q).for_each(|(r, qi)| *r -= p * qi);
        basis.push(q);
        support.push(j);
        rnorm = norm2(&residual).min(rnorm);
        trace.push(rnorm);
    }

    let mut x_hat = vec![0.0; n];
    let (coef, ridged) = solve_on_support(&dense, &support, &y.values)?;
    if ridged {
        notes.push(SolverNote::RidgeStabilized);
    }
    for (&j, c) in support.iter().zip(coef) {
        x_hat[j] = c;
    }
    Ok(RecoveryResult {
        x_hat,
        iterations,
        measurements_used: m,
        converged: rnorm <= floor || support.len() == max_atoms,
        recovery_time: start.elapsed(),
        objective_trace: trace,
        notes,
    })
}
