use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind, RecoveryParams};
use crate::error::{invalid, Result};
use crate::linalg::norm2;
use crate::par::map_indexed;
use crate::recovery::{
    basis_pursuit, bayesian_recover, biht_recover, blind_penalty, cosamp, omp, one_bit_quantize, sign_mismatches,
    Solver, SolverOpts, StoppingRule,
};
use crate::rng::trial_seed;
use crate::sensing::{build_matrix, compress, MeasurementVector, Scheme, SensingMatrix};
use crate::signal::{evaluate_metrics_lenient, gen_sparse_signal, MetricBundle};

/// Output of one solver run inside a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub x_hat: Vec<f64>,
    /// Sign disagreements between `Ax̂` and the measurements.
    pub hamming: usize,
    pub recovery_time: Duration,
}

/// Run `solver` on `y` the way the sweep does. `k` is the true sparsity,
/// used only by the solvers that require it (CoSaMP, BIHT).
pub fn solve(
    solver: Solver,
    y: &MeasurementVector,
    a: &SensingMatrix,
    k: usize,
    p: &RecoveryParams,
) -> Result<SolveOutcome> {
    let start = Instant::now();
    let x_hat = match solver {
        Solver::BasisPursuit => {
            let z = match p.bp_penalty {
                Some(z) => z,
                None => blind_penalty(y, a)?,
            };
            basis_pursuit(y, a, z, SolverOpts::new(p.bp_max_iter, p.bp_tol))?.x_hat
        }
        Solver::Omp => {
            let rule = StoppingRule::Residual { tol: p.omp_residual * norm2(&y.values), max_atoms: (a.m() / 2).max(1) };
            omp(y, a, rule)?.x_hat
        }
        Solver::Cosamp => cosamp(y, a, k, SolverOpts::new(p.cosamp_max_iter, p.cosamp_tol))?.x_hat,
        Solver::Bayesian => bayesian_recover(y, a, p.bayes)?.base.x_hat,
        Solver::Biht => {
            let signs = one_bit_quantize(y)?;
            biht_recover(&signs, a, k, SolverOpts::new(p.biht_max_iter, 0.0))?.x_hat
        }
    };
    let recovery_time = start.elapsed();
    let signs = one_bit_quantize(y)?;
    let hamming = sign_mismatches(a, &x_hat, &signs)?;
    Ok(SolveOutcome { x_hat, hamming, recovery_time })
}

/// Means over the successful trials of one sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryCell {
    pub solver: Solver,
    pub scheme: Scheme,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    #[serde(with = "crate::io::float_token_serde")]
    pub snr_db: f64,
    pub trials: usize,
    #[serde(with = "crate::io::float_token_serde")]
    pub mean_re: f64,
    #[serde(with = "crate::io::float_token_serde")]
    pub mean_mse: f64,
    #[serde(with = "crate::io::float_token_serde")]
    pub mean_cc: f64,
    #[serde(with = "crate::io::float_token_serde")]
    pub mean_rsnr: f64,
    pub mean_hd: f64,
    pub mean_tr_ms: f64,
    pub mean_tp_ms: f64,
    /// Trials whose solver returned an error; excluded from the means.
    #[serde(default)]
    pub failures: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub cells: Vec<RecoveryCell>,
}

impl RecoveryReport {
    pub fn cell(&self, solver: Solver, n: usize, k: usize, m: usize, snr_db: f64) -> Option<&RecoveryCell> {
        self.cells.iter().find(|c| c.solver == solver && c.n == n && c.k == k && c.m == m && c.snr_db == snr_db)
    }
}

struct TrialRecord {
    metrics: MetricBundle,
    hamming: usize,
    tr: Duration,
    tp: Duration,
}

/// Measurement noise variance `P_x/(m·γ)` for a signal of mean power
/// `P_x = ‖x‖²/n` at `snr_db`.
pub fn measurement_noise_variance(x_power: f64, m: usize, snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        x_power / (m as f64 * 10f64.powf(snr_db / 10.0))
    }
}

/// Sweep `samples_n × sparsity_k × M × snr × solvers`.
///
/// Trial `i` of every cell uses seed `base_seed ^ i` for the signal, the
/// matrix and the noise, so cells differ only in the swept parameter.
/// BIHT is scored against the unit-norm direction of the planted signal.
/// Timing columns are zero unless `timing` is set.
pub fn run_recovery_mc(cfg: &ExperimentConfig) -> Result<RecoveryReport> {
    if cfg.experiment_kind != ExperimentKind::RecoveryMc {
        return invalid("config is not a recovery_mc experiment");
    }
    cfg.validate()?;
    let p = &cfg.recovery;
    let mut report = RecoveryReport::default();
    for &n in &cfg.samples_n {
        for &k in &cfg.sparsity_k {
            for m in cfg.measurements_for(n)? {
                for &snr in &cfg.snr_grid_db {
                    for &solver in &cfg.solvers {
                        let run = |i: usize| -> Result<TrialRecord> {
                            let seed = trial_seed(cfg.base_seed, i as u64);
                            let start = Instant::now();
                            let x = gen_sparse_signal(n, k, p.amplitude_law, seed)?;
                            let a = build_matrix(cfg.matrix_scheme, m, n, seed, &cfg.matrix_options)?;
                            let energy: f64 = x.samples().iter().map(|v| v * v).sum();
                            let y = compress(&a, x.samples(), measurement_noise_variance(x.power(), m, snr), seed)?;
                            let out = solve(solver, &y, &a, k, p)?;
                            let tp = start.elapsed();
                            let truth: Vec<f64> = if solver == Solver::Biht && energy > 0.0 {
                                x.samples().iter().map(|v| v / energy.sqrt()).collect()
                            } else {
                                x.samples().to_vec()
                            };
                            let metrics = evaluate_metrics_lenient(&truth, &out.x_hat, None, None, p.zero_tol)?;
                            Ok(TrialRecord { metrics, hamming: out.hamming, tr: out.recovery_time, tp })
                        };
                        let records = map_indexed(cfg.execution, cfg.trials, run);
                        let ok: Vec<&TrialRecord> = records.iter().filter_map(|r| r.as_ref().ok()).collect();
                        let failures = records.len() - ok.len();
                        if let Some(Err(e)) = records.iter().find(|r| r.is_err()) {
                            log::warn!("{solver} n={n} k={k} m={m} snr={snr}: {failures} trials failed, first: {e}");
                        }
                        let mean = |f: &dyn Fn(&TrialRecord) -> f64| {
                            if ok.is_empty() {
                                f64::NAN
                            } else {
                                ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
                            }
                        };
                        let ms = |d: Duration| if cfg.timing { d.as_secs_f64() * 1e3 } else { 0.0 };
                        report.cells.push(RecoveryCell {
                            solver,
                            scheme: cfg.matrix_scheme,
                            n,
                            k,
                            m,
                            snr_db: snr,
                            trials: cfg.trials,
                            mean_re: mean(&|r| r.metrics.recovery_error),
                            mean_mse: mean(&|r| r.metrics.mse),
                            mean_cc: mean(&|r| r.metrics.correlation),
                            mean_rsnr: mean(&|r| r.metrics.rsnr),
                            mean_hd: mean(&|r| r.hamming as f64),
                            mean_tr_ms: mean(&|r| ms(r.tr)),
                            mean_tp_ms: mean(&|r| ms(r.tp)),
                            failures,
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(ExperimentKind::RecoveryMc);
        c.samples_n = vec![128];
        c.sparsity_k = vec![5];
        c.measurements_m = vec![60];
        c.matrix_scheme = Scheme::Gaussian;
        c.trials = 6;
        c
    }

    #[test]
    fn noiseless_greedy_cells_are_exact() {
        let mut c = small();
        c.snr_grid_db = vec![f64::INFINITY];
        c.solvers = vec![Solver::Omp, Solver::Cosamp];
        let r = run_recovery_mc(&c).unwrap();
        assert_eq!(r.cells.len(), 2);
        for cell in &r.cells {
            assert!(cell.mean_re < 1e-6, "{cell:?}");
            assert_eq!(cell.failures, 0);
            assert_eq!(cell.mean_tr_ms, 0.0);
        }
    }

    #[test]
    fn error_drops_with_snr() {
        let mut c = small();
        c.snr_grid_db = vec![-5.0, 20.0];
        c.solvers = vec![Solver::Bayesian];
        let r = run_recovery_mc(&c).unwrap();
        assert!(r.cells[1].mean_re < r.cells[0].mean_re);
    }

    #[test]
    fn biht_scored_on_direction() {
        let mut c = small();
        c.snr_grid_db = vec![f64::INFINITY];
        c.solvers = vec![Solver::Biht];
        let r = run_recovery_mc(&c).unwrap();
        assert!(r.cells[0].mean_cc > 0.6, "{:?}", r.cells[0]);
    }

    #[test]
    fn timing_columns_filled_on_request() {
        let mut c = small();
        c.timing = true;
        c.solvers = vec![Solver::Omp];
        let r = run_recovery_mc(&c).unwrap();
        assert!(r.cells[0].mean_tp_ms > 0.0);
    }

    #[test]
    fn noise_variance_convention() {
        assert_eq!(measurement_noise_variance(10.0, 5, 0.0), 2.0);
        assert_eq!(measurement_noise_variance(10.0, 5, f64::INFINITY), 0.0);
    }
}
