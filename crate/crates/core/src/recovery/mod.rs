//! Sparse recovery from compressed measurements.
//!
//! All solvers take a [`MeasurementVector`] and the [`SensingMatrix`] that
//! produced it and return a length-`n` estimate together with iteration
//! counts, wall time and a per-iteration objective trace.

mod bayes;
mod bp;
mod cosamp;
mod omp;
mod onebit;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::sensing::{MeasurementVector, SensingMatrix};

pub use bayes::{bayesian_recover, BayesOpts, BayesianResult};
pub use bp::{basis_pursuit, blind_penalty};
pub use cosamp::cosamp;
pub use omp::{omp, StoppingRule};
pub use onebit::{biht_recover, one_bit_quantize, sign_mismatches, SignVector};

/// Iteration limits shared by the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOpts {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for SolverOpts {
    fn default() -> Self {
        Self { max_iter: 5000, tol: 1e-8 }
    }
}

impl SolverOpts {
    pub fn new(max_iter: usize, tol: f64) -> Self {
        Self { max_iter, tol }
    }
}

/// Non-fatal events a solver wants the caller to know about.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverNote {
    DependentColumnSkipped(usize),
    RegimeWarning(String),
    RidgeStabilized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub x_hat: Vec<f64>,
    pub iterations: usize,
    pub measurements_used: usize,
    pub converged: bool,
    pub recovery_time: Duration,
    pub objective_trace: Vec<f64>,
    pub notes: Vec<SolverNote>,
}

impl RecoveryResult {
    fn zeros(n: usize, m: usize, iterations: usize) -> Self {
        Self {
            x_hat: vec![0.0; n],
            iterations,
            measurements_used: m,
            converged: true,
            recovery_time: Duration::ZERO,
            objective_trace: vec![0.0; iterations],
            notes: Vec::new(),
        }
    }

    /// Indices of the nonzero entries of the estimate.
    pub fn support(&self) -> Vec<usize> {
        self.x_hat.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    #[serde(alias = "bp", alias = "bpd")]
    BasisPursuit,
    Omp,
    Cosamp,
    #[serde(alias = "rvm", alias = "sbl")]
    Bayesian,
    Biht,
}

impl Solver {
    pub fn as_str(self) -> &'static str {
        match self {
            Solver::BasisPursuit => "basis_pursuit",
            Solver::Omp => "omp",
            Solver::Cosamp => "cosamp",
            Solver::Bayesian => "bayesian",
            Solver::Biht => "biht",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "basis_pursuit" | "bp" | "bpd" => Ok(Solver::BasisPursuit),
            "omp" => Ok(Solver::Omp),
            "cosamp" => Ok(Solver::Cosamp),
            "bayesian" | "rvm" | "sbl" => Ok(Solver::Bayesian),
            "biht" => Ok(Solver::Biht),
            other => invalid(format!("unknown solver `{other}`")),
        }
    }
}

fn check_dims(y: &MeasurementVector, a: &SensingMatrix) -> Result<()> {
    if y.len() != a.m() {
        return invalid(format!("measurement length {} does not match m = {}", y.len(), a.m()));
    }
    Ok(())
}

/// Least squares on the columns in `support`, falling back to a ridged normal
/// equation when the column set is rank deficient.
fn solve_on_support(dense: &DMatrix<f64>, support: &[usize], y: &[f64]) -> Result<(Vec<f64>, bool)> {
    if support.is_empty() {
        return Ok((Vec::new(), false));
    }
    let sub = dense.select_columns(support);
    match linalg::lstsq(&sub, y) {
        Ok(c) => Ok((c, false)),
        Err(Error::IllConditioned(_)) => {
            let g = sub.transpose() * &sub;
            let h = sub.transpose() * DVector::from_column_slice(y);
            let (chol, _) = linalg::cholesky_ridged(g)?;
            Ok((chol.solve(&h).as_slice().to_vec(), true))
        }
        Err(e) => Err(e),
    }
}

/// Indices of the `k` largest magnitudes, ties broken by lower index.
fn top_k(v: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    let k = k.min(v.len());
    if k == 0 {
        return Vec::new();
    }
    let cmp = |a: &usize, b: &usize| v[*b].abs().total_cmp(&v[*a].abs()).then(a.cmp(b));
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_unstable();
    idx
}
