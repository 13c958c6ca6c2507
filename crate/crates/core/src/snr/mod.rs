//! Blind SNR estimation from the eigenvalues of a smoothed sample covariance.
//!
//! Pipeline: time-shifted data matrix, covariance eigenvalues, MDL split into
//! signal and noise groups, Marchenko–Pastur fit of the noise group over a
//! grid of candidate variances, then `γ̂ = (P̂_t − σ̂²)/σ̂²`.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::par::{map_indexed, Execution};
use crate::rng::{stream_rng, Stream};

/// Reported SNR when the estimated signal power is not positive.
pub const SNR_FLOOR_DB: f64 = -40.0;
/// Points per Marchenko–Pastur support discretization.
pub const MP_POINTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrEstimate {
    pub snr_db: f64,
    pub noise_variance_hat: f64,
    pub total_power_hat: f64,
    pub mdl_order: usize,
    pub smoothing_l: usize,
    pub grid_k: usize,
    pub goodness_d: f64,
    /// `(lower, upper)` noise-variance bracket searched by the fit.
    pub bracket: (f64, f64),
    /// `snr_db` was clamped to [`SNR_FLOOR_DB`].
    pub floored: bool,
}

/// `L × (N−L+1)` matrix whose row `i` is the input delayed by `i` samples.
pub fn data_matrix(samples: &[Complex64], l: usize) -> Result<DMatrix<Complex64>> {
    if l < 2 {
        return invalid("smoothing factor L must be at least 2");
    }
    if samples.len() < 2 * l {
        return invalid(format!("need at least {} samples for L = {l}, got {}", 2 * l, samples.len()));
    }
    let cols = samples.len() - l + 1;
    Ok(DMatrix::from_fn(l, cols, |i, j| samples[j + l - 1 - i]))
}

/// `R = XXᴴ/N'` and its eigenvalues in descending order.
pub fn covariance_eigenvalues(samples: &[Complex64], l: usize) -> Result<Vec<f64>> {
    let x = data_matrix(samples, l)?;
    let r = &x * x.adjoint() / Complex64::new(x.ncols() as f64, 0.0);
    let mut eig: Vec<f64> = r.symmetric_eigenvalues().iter().map(|v| v.max(0.0)).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok(eig)
}

/// MDL cost of splitting after the `m` largest eigenvalues.
pub fn mdl_cost(eigenvalues: &[f64], m: usize, n: usize) -> f64 {
    let l = eigenvalues.len();
    let tail = &eigenvalues[m..];
    let len = (l - m) as f64;
    let floor = 1e-15 * eigenvalues[0].max(1.0);
    let reg = |v: f64| if v > 0.0 { v } else { floor };
    let log_geo = tail.iter().map(|&v| reg(v).ln()).sum::<f64>() / len;
    let arith = tail.iter().map(|&v| reg(v)).sum::<f64>() / len;
    let nf = n as f64;
    -len * nf * (log_geo - arith.ln()) + 0.5 * m as f64 * (2.0 * l as f64 - m as f64) * nf.ln()
}

/// Number of signal eigenvalues by minimum description length.
///
/// Zero entries in a tail are replaced by `1e-15·max(λ₁, 1)`. Ties pick the
/// smaller order.
pub fn mdl_order(eigenvalues: &[f64], n: usize) -> Result<usize> {
    if eigenvalues.is_empty() {
        return invalid("no eigenvalues");
    }
    if eigenvalues.iter().any(|v| !(*v >= 0.0)) {
        return invalid("eigenvalues must be nonnegative");
    }
    if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
        return invalid("eigenvalues must be sorted in descending order");
    }
    if n < eigenvalues.len() {
        return invalid("N must be at least L");
    }
    let mut best = (0, f64::INFINITY);
    for m in 0..eigenvalues.len() {
        let c = mdl_cost(eigenvalues, m, n);
        if c < best.1 {
            best = (m, c);
        }
    }
    Ok(best.0)
}

/// Marchenko–Pastur density for aspect ratio `c ∈ (0, 1)` and entry variance `sigma2`.
pub fn mp_density(v: f64, c: f64, sigma2: f64) -> f64 {
    let (a, b) = mp_support(c, sigma2);
    if v <= a || v >= b {
        return 0.0;
    }
    ((b - v) * (v - a)).sqrt() / (2.0 * PI * sigma2 * c * v)
}

pub fn mp_support(c: f64, sigma2: f64) -> (f64, f64) {
    let r = c.sqrt();
    (sigma2 * (1.0 - r).powi(2), sigma2 * (1.0 + r).powi(2))
}

/// Support grid and CDF by trapezoidal integration, normalized to end at 1.
fn mp_cdf_grid(c: f64, sigma2: f64) -> (Vec<f64>, Vec<f64>) {
    let (a, b) = mp_support(c, sigma2);
    let h = (b - a) / (MP_POINTS - 1) as f64;
    let t: Vec<f64> = (0..MP_POINTS).map(|i| a + h * i as f64).collect();
    let dens: Vec<f64> = t.iter().map(|&v| mp_density(v, c, sigma2)).collect();
    let mut cdf = vec![0.0; MP_POINTS];
    for i in 1..MP_POINTS {
        cdf[i] = cdf[i - 1] + 0.5 * h * (dens[i] + dens[i - 1]);
    }
    let total = cdf[MP_POINTS - 1];
    if total > 0.0 {
        cdf.iter_mut().for_each(|v| *v /= total);
    }
    (t, cdf)
}

/// Result of the Marchenko–Pastur fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpFit {
    pub sigma2: f64,
    pub goodness: f64,
    pub bracket: (f64, f64),
}

/// Fit the noise variance to the noise-group eigenvalues.
///
/// The bracket is `[λ_L/(1−√c)², λ_{M̂+1}/(1+√c)²]` with `c = L/N`, swapped if
/// reversed. `K` candidates spaced evenly across it are scored by the ℓ₂
/// distance between the empirical CDF of `noise_eigs` and the MP CDF with
/// ratio `(1 − M̂/L)c`, both sampled on the candidate's support. Scores
/// within a relative 1e-9 of the best so far count as ties and keep the
/// earlier candidate.
pub fn mp_fit(noise_eigs: &[f64], l: usize, n: usize, m_hat: usize, k: usize) -> Result<MpFit> {
    if noise_eigs.is_empty() {
        return invalid("noise group is empty");
    }
    if k < 2 {
        return invalid("grid size K must be at least 2");
    }
    let c = l as f64 / n as f64;
    if !(c > 0.0 && c < 1.0) {
        return invalid(format!("c = L/N = {c} outside (0, 1)"));
    }
    let r = c.sqrt();
    let largest = noise_eigs[0];
    let smallest = noise_eigs[noise_eigs.len() - 1];
    let mut lo = smallest / (1.0 - r).powi(2);
    let mut hi = largest / (1.0 + r).powi(2);
    if lo > hi {
        log::warn!("noise variance bracket reversed ({lo} > {hi}); swapping");
        std::mem::swap(&mut lo, &mut hi);
    }
    let beta = m_hat as f64 / l as f64;
    let ratio = (1.0 - beta) * c;
    let cnt = noise_eigs.len() as f64;

    let mut best = MpFit { sigma2: lo, goodness: f64::INFINITY, bracket: (lo, hi) };
    for i in 0..k {
        let pi_k = lo + (hi - lo) * i as f64 / (k - 1) as f64;
        if !(pi_k > 0.0) {
            continue;
        }
        let (t, cdf) = mp_cdf_grid(ratio, pi_k);
        let d2: f64 = t
            .iter()
            .zip(&cdf)
            .map(|(&tv, &f)| {
                let e = noise_eigs.iter().filter(|&&v| v <= tv).count() as f64 / cnt;
                (e - f).powi(2)
            })
            .sum();
        let d = d2.sqrt();
        // Relative slack so that ties resolve the same way at any input scale.
        if d < best.goodness * (1.0 - 1e-9) {
            best.sigma2 = pi_k;
            best.goodness = d;
        }
    }
    if !best.goodness.is_finite() {
        // Degenerate bracket at zero: all noise eigenvalues vanish.
        best.goodness = 0.0;
        best.sigma2 = hi.max(f64::MIN_POSITIVE);
    }
    Ok(best)
}

/// Blind SNR estimate with smoothing factor `l` and fit grid size `k`.
pub fn estimate_snr(samples: &[Complex64], l: usize, k: usize) -> Result<SnrEstimate> {
    let eig = covariance_eigenvalues(samples, l)?;
    let n_cols = samples.len() - l + 1;
    let total = eig.iter().sum::<f64>() / l as f64;
    if total <= 0.0 {
        return invalid("zero-power input");
    }
    let m_hat = mdl_order(&eig, n_cols)?;
    let fit = mp_fit(&eig[m_hat..], l, n_cols, m_hat, k)?;
    let signal = total - fit.sigma2;
    let (snr_db, floored) = if signal > 0.0 {
        let db = 10.0 * (signal / fit.sigma2).log10();
        if db < SNR_FLOOR_DB {
            (SNR_FLOOR_DB, true)
        } else {
            (db, false)
        }
    } else {
        (SNR_FLOOR_DB, true)
    };
    Ok(SnrEstimate {
        snr_db,
        noise_variance_hat: fit.sigma2,
        total_power_hat: total,
        mdl_order: m_hat,
        smoothing_l: l,
        grid_k: k,
        goodness_d: fit.goodness,
        bracket: fit.bracket,
        floored,
    })
}

pub fn estimate_snr_real(samples: &[f64], l: usize, k: usize) -> Result<SnrEstimate> {
    let c: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    estimate_snr(&c, l, k)
}

/// What the swarm minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsoFitness {
    /// Marchenko–Pastur goodness of fit; needs no ground truth.
    Goodness,
    /// `|γ̂ − γ|` in dB against a known SNR, for calibration runs.
    Supervised { true_snr_db: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsoOpts {
    pub swarm: usize,
    pub iters: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub fitness: PsoFitness,
    pub execution: Execution,
}

impl Default for PsoOpts {
    fn default() -> Self {
        Self {
            swarm: 8,
            iters: 20,
            inertia: 0.72,
            cognitive: 1.49,
            social: 1.49,
            fitness: PsoFitness::Goodness,
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoResult {
    pub l_star: usize,
    pub k_star: usize,
    pub best_fitness: f64,
    /// Global-best fitness after each iteration (index 0 is the initial swarm).
    pub trace: Vec<f64>,
}

/// Fitness of one `(L, K)` pair; infeasible pairs score `+∞`.
pub fn pso_fitness(samples: &[Complex64], l: usize, k: usize, fitness: PsoFitness) -> f64 {
    match estimate_snr(samples, l, k) {
        Ok(est) => match fitness {
            PsoFitness::Goodness => est.goodness_d,
            PsoFitness::Supervised { true_snr_db } => (est.snr_db - true_snr_db).abs(),
        },
        Err(_) => f64::INFINITY,
    }
}

/// Global-best particle swarm over integer `(L, K)`.
///
/// Positions are continuous and rounded for evaluation; velocities are
/// clamped to the width of each range. The global best only moves on strict
/// improvement, earliest particle first.
pub fn pso_tune(
    samples: &[Complex64],
    l_bounds: RangeInclusive<usize>,
    k_bounds: RangeInclusive<usize>,
    opts: PsoOpts,
    seed: u64,
) -> Result<PsoResult> {
    let (l_lo, l_hi) = (*l_bounds.start(), *l_bounds.end());
    let (k_lo, k_hi) = (*k_bounds.start(), *k_bounds.end());
    if l_lo > l_hi || k_lo > k_hi {
        return invalid("empty search range");
    }
    if l_lo < 2 || k_lo < 2 {
        return invalid("L and K must be at least 2");
    }
    if 2 * l_hi > samples.len() {
        return invalid(format!("L up to {l_hi} needs at least {} samples", 2 * l_hi));
    }
    if opts.swarm < 2 || opts.iters == 0 {
        return invalid("swarm needs at least 2 particles and 1 iteration");
    }
    let lo = [l_lo as f64, k_lo as f64];
    let hi = [l_hi as f64, k_hi as f64];
    let vmax = [hi[0] - lo[0], hi[1] - lo[1]];
    let mut rng = stream_rng(seed, Stream::Search);

    let mut pos: Vec<[f64; 2]> =
        (0..opts.swarm).map(|_| [rng.random_range(lo[0]..=hi[0]), rng.random_range(lo[1]..=hi[1])]).collect();
    let mut vel: Vec<[f64; 2]> = (0..opts.swarm)
        .map(|_| [rng.random_range(-vmax[0]..=vmax[0]) * 0.5, rng.random_range(-vmax[1]..=vmax[1]) * 0.5])
        .collect();
    let round = |p: &[f64; 2]| (p[0].round() as usize, p[1].round() as usize);
    let eval = |pos: &[[f64; 2]]| -> Vec<f64> {
        map_indexed(opts.execution, pos.len(), |i| {
            let (l, k) = round(&pos[i]);
            pso_fitness(samples, l, k, opts.fitness)
        })
    };

    let fit = eval(&pos);
    let mut pbest = pos.clone();
    let mut pbest_f = fit.clone();
    let mut g = 0;
    for i in 1..opts.swarm {
        if pbest_f[i] < pbest_f[g] {
            g = i;
        }
    }
    let mut gbest = pbest[g];
    let mut gbest_f = pbest_f[g];
    let mut trace = vec![gbest_f];

    for _ in 0..opts.iters {
        for i in 0..opts.swarm {
            for d in 0..2 {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let v = opts.inertia * vel[i][d]
                    + opts.cognitive * r1 * (pbest[i][d] - pos[i][d])
                    + opts.social * r2 * (gbest[d] - pos[i][d]);
                vel[i][d] = v.clamp(-vmax[d], vmax[d]);
                pos[i][d] = (pos[i][d] + vel[i][d]).clamp(lo[d], hi[d]);
            }
        }
        let fit = eval(&pos);
        for i in 0..opts.swarm {
            if fit[i] < pbest_f[i] {
                pbest[i] = pos[i];
                pbest_f[i] = fit[i];
            }
        }
        for i in 0..opts.swarm {
            if pbest_f[i] < gbest_f {
                gbest = pbest[i];
                gbest_f = pbest_f[i];
            }
        }
        trace.push(gbest_f);
    }
    let (l_star, k_star) = round(&gbest);
    Ok(PsoResult { l_star, k_star, best_fitness: gbest_f, trace })
}

/// Complex exponential at normalized frequency `freq` with power `10^(snr_db/10)`
/// plus unit-variance circular noise; used by tests and the CLI demo input.
pub fn synthetic_tone(n: usize, snr_db: f64, freq: f64, seed: u64) -> Vec<Complex64> {
    let amp = 10f64.powf(snr_db / 20.0);
    let mut rng = stream_rng(seed, Stream::Signal);
    let phase: f64 = rng.random_range(0.0..2.0 * PI);
    let mut noise = stream_rng(seed, Stream::Noise);
    (0..n)
        .map(|i| {
            Complex64::from_polar(amp, 2.0 * PI * freq * i as f64 + phase)
                + crate::signal::complex_gaussian(&mut noise, 1.0)
        })
        .collect()
}
