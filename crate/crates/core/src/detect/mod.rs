//! Narrowband occupancy detectors, threshold rules and closed-form ROC.
//!
//! Every detector returns a [`DetectionOutcome`] holding the test statistic,
//! the threshold it was compared against and the resulting decision. Energy,
//! autocorrelation, matched-filter and compressive detectors declare the band
//! occupied when `T ≥ λ`; the Euclidean and wavelet detectors declare it idle
//! when `T ≥ λ`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::sensing::{MeasurementVector, SensingMatrix};
use crate::signal::{complex_gaussian, NoisySignal, PilotSignal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Technique {
    Energy,
    #[serde(alias = "autocorrelation")]
    Autocorr,
    #[serde(alias = "euclidean")]
    Euclid,
    Wavelet,
    #[serde(alias = "matched", alias = "mf")]
    MatchedFilter,
    Compressive,
}

impl Technique {
    pub const NARROWBAND: [Technique; 5] =
        [Technique::Energy, Technique::Autocorr, Technique::Euclid, Technique::Wavelet, Technique::MatchedFilter];

    pub fn as_str(self) -> &'static str {
        match self {
            Technique::Energy => "energy",
            Technique::Autocorr => "autocorr",
            Technique::Euclid => "euclid",
            Technique::Wavelet => "wavelet",
            Technique::MatchedFilter => "matched_filter",
            Technique::Compressive => "compressive",
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "energy" => Ok(Technique::Energy),
            "autocorr" | "autocorrelation" => Ok(Technique::Autocorr),
            "euclid" | "euclidean" => Ok(Technique::Euclid),
            "wavelet" => Ok(Technique::Wavelet),
            "matched_filter" | "matched" | "mf" => Ok(Technique::MatchedFilter),
            "compressive" => Ok(Technique::Compressive),
            other => invalid(format!("unknown technique '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Occupied,
    Idle,
}

impl Decision {
    pub fn is_occupied(self) -> bool {
        self == Decision::Occupied
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Occupied => "occupied",
            Decision::Idle => "idle",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionOutcome {
    pub statistic: f64,
    pub threshold: f64,
    pub decision: Decision,
    pub technique: Technique,
}

impl DetectionOutcome {
    fn occupied_if_above(technique: Technique, statistic: f64, threshold: f64) -> Self {
        let decision = if statistic >= threshold { Decision::Occupied } else { Decision::Idle };
        Self { statistic, threshold, decision, technique }
    }

    fn idle_if_above(technique: Technique, statistic: f64, threshold: f64) -> Self {
        let decision = if statistic >= threshold { Decision::Idle } else { Decision::Occupied };
        Self { statistic, threshold, decision, technique }
    }
}

/// One operating point. `pmd = 1 − pd`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub pd: f64,
    pub pfa: f64,
    pub pmd: f64,
    pub threshold: f64,
    pub snr_db: f64,
    /// Set when the formula is used outside its approximation regime.
    pub regime_warning: bool,
}

fn nonempty(y: &NoisySignal, min: usize) -> Result<()> {
    if y.len() < min {
        return invalid(format!("need at least {min} samples, got {}", y.len()));
    }
    Ok(())
}

/// `T = Σ|y(n)|²`.
pub fn energy_detect(y: &NoisySignal, lambda: f64) -> Result<DetectionOutcome> {
    nonempty(y, 1)?;
    let t = y.samples.iter().map(|s| s.norm_sqr()).sum();
    Ok(DetectionOutcome::occupied_if_above(Technique::Energy, t, lambda))
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Gaussian tail probability `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return 1.0;
    }
    std_normal().sf(x)
}

/// `Q⁻¹(p)` for `p ∈ (0, 1)`.
pub fn q_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return invalid(format!("probability {p} outside (0, 1)"));
    }
    let d = std_normal();
    let mut x = -d.inverse_cdf(p);
    // Newton polish: the library inverse is only good to ~1e-11.
    for _ in 0..2 {
        let pdf = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        if pdf > 0.0 {
            x += (d.sf(x) - p) / pdf;
        }
    }
    Ok(x)
}

/// Energy threshold for a target false-alarm rate under the Gaussian
/// approximation: `λ = (Q⁻¹(pfa)·√(2n) + n)·δ_w²`.
pub fn energy_threshold(pfa_target: f64, n: usize, noise_variance: f64) -> Result<f64> {
    let q = q_inverse(pfa_target)?;
    if n == 0 {
        return invalid("n must be positive");
    }
    let nf = n as f64;
    Ok((q * (2.0 * nf).sqrt() + nf) * noise_variance)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RocTechnique {
    Energy,
    MatchedFilter,
}

/// Below this many samples the energy statistic is far from Gaussian.
pub const ENERGY_GAUSSIAN_MIN_N: usize = 250;

/// Closed-form `(Pd, Pfa)` at threshold `lambda`.
///
/// Energy: real samples, `n` of them, noise variance `δ_w²` and signal
/// variance `γ·δ_w²`; `snr_db` is required. Matched filter:
/// `Pd = Q((λ−E)/√(Eδ²))`, `Pfa = Q(λ/√(Eδ²))` where `δ²` is the noise
/// variance of the real part of the correlation (half the total for circular
/// complex noise); `pilot_energy` is required.
pub fn closed_form_roc(
    technique: RocTechnique,
    n: usize,
    noise_variance: f64,
    snr_db: Option<f64>,
    pilot_energy: Option<f64>,
    lambda: f64,
) -> Result<RocPoint> {
    if !(noise_variance > 0.0) {
        return invalid("noise variance must be positive");
    }
    let (pd, pfa, warn, snr) = match technique {
        RocTechnique::Energy => {
            let Some(snr_db) = snr_db else { return invalid("energy ROC needs snr_db") };
            if n == 0 {
                return invalid("n must be positive");
            }
            let warn = n <= ENERGY_GAUSSIAN_MIN_N;
            if warn {
                log::warn!("energy ROC with n = {n}: Gaussian approximation is poor");
            }
            let nf = n as f64;
            let total = noise_variance * (1.0 + 10f64.powf(snr_db / 10.0));
            let pd = q_function((lambda - nf * total) / (2.0 * nf * total * total).sqrt());
            let pfa = q_function((lambda - nf * noise_variance) / (2.0 * nf * noise_variance.powi(2)).sqrt());
            (pd, pfa, warn, snr_db)
        }
        RocTechnique::MatchedFilter => {
            let Some(e) = pilot_energy.filter(|e| *e > 0.0) else {
                return invalid("matched-filter ROC needs a positive pilot energy");
            };
            let sd = (e * noise_variance).sqrt();
            let snr = snr_db.unwrap_or(f64::NAN);
            (q_function((lambda - e) / sd), q_function(lambda / sd), false, snr)
        }
    };
    Ok(RocPoint { pd, pfa, pmd: 1.0 - pd, threshold: lambda, snr_db: snr, regime_warning: warn })
}

/// Biased sample autocorrelation `R(l) = (1/N) Σ y(n+l)·y*(n)` for `l = 0..=max_lag`.
pub fn autocorrelation(y: &[Complex64], max_lag: usize) -> Vec<Complex64> {
    let n = y.len();
    (0..=max_lag)
        .map(|l| {
            if l >= n {
                return Complex64::new(0.0, 0.0);
            }
            let s: Complex64 = (0..n - l).map(|i| y[i + l] * y[i].conj()).sum();
            s / n as f64
        })
        .collect()
}

fn zero_power(r0: f64) -> Result<()> {
    if r0 <= 0.0 {
        return invalid("zero-power input");
    }
    Ok(())
}

/// Normalized lag-one autocorrelation `|R(1)|/R(0)`; occupied when it
/// reaches `margin_lambda`.
pub fn autocorr_detect(y: &NoisySignal, margin_lambda: f64) -> Result<DetectionOutcome> {
    nonempty(y, 2)?;
    let r = autocorrelation(&y.samples, 1);
    zero_power(r[0].re)?;
    let t = r[1].norm() / r[0].re;
    Ok(DetectionOutcome::occupied_if_above(Technique::Autocorr, t, margin_lambda))
}

/// Default lag window of the Euclidean detector.
pub const EUCLID_DEFAULT_LAGS: usize = 64;

/// Triangle `1 − 2|e|/M` over lags `e = −M/2..=M/2`.
pub fn reference_triangle(lag_count: usize) -> Vec<f64> {
    let half = (lag_count / 2) as i64;
    (-half..=half).map(|e| 1.0 - 2.0 * e.abs() as f64 / lag_count as f64).collect()
}

/// Distance between the normalized autocorrelation over lags `−M/2..=M/2`
/// and the reference triangle. Idle when the distance reaches `lambda`.
pub fn euclid_detect(y: &NoisySignal, lambda: f64, lag_count: usize) -> Result<DetectionOutcome> {
    if lag_count < 2 || !lag_count.is_multiple_of(2) {
        return invalid(format!("lag count must be even and at least 2, got {lag_count}"));
    }
    if y.len() <= lag_count {
        return invalid(format!("need more than {lag_count} samples, got {}", y.len()));
    }
    let half = lag_count / 2;
    let r = autocorrelation(&y.samples, half);
    zero_power(r[0].re)?;
    let reference = reference_triangle(lag_count);
    // R(−l) = R(l)*, so the real part is symmetric.
    let d2: f64 = (0..=lag_count)
        .map(|i| {
            let l = i.abs_diff(half);
            let v = r[l].re / r[0].re;
            (v - reference[i]).powi(2)
        })
        .sum();
    Ok(DetectionOutcome::idle_if_above(Technique::Euclid, d2.sqrt(), lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaveletOpts {
    /// Scale of the Mexican-hat wavelet, in frequency bins.
    pub scale: f64,
    /// Declare occupied (instead of idle) when the edge reaches the threshold.
    pub invert: bool,
}

impl Default for WaveletOpts {
    fn default() -> Self {
        Self { scale: 4.0, invert: false }
    }
}

/// Mexican-hat mother wavelet with unit L2 norm.
pub fn mexican_hat(t: f64) -> f64 {
    let c = 2.0 / (3f64.sqrt() * PI.powf(0.25));
    c * (1.0 - t * t) * (-0.5 * t * t).exp()
}

/// `|FFT(y)|²/N` over all `N` bins.
pub fn periodogram(y: &[Complex64]) -> Vec<f64> {
    let n = y.len();
    let mut buf = y.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.iter().map(|c| c.norm_sqr() / n as f64).collect()
}

/// Single-scale continuous wavelet transform of a sequence, zero outside
/// its ends: `W(b) = a^{-1/2} Σ_f p(f)·ψ((f−b)/a)`.
pub fn cwt_single_scale(p: &[f64], scale: f64) -> Vec<f64> {
    let norm = scale.sqrt().recip();
    (0..p.len())
        .map(|b| {
            let s: f64 = p.iter().enumerate().map(|(f, v)| v * mexican_hat((f as f64 - b as f64) / scale)).sum();
            norm * s
        })
        .collect()
}

/// Wavelet edge detector on the periodogram.
///
/// The statistic is the largest absolute transform coefficient. By default
/// the band is declared idle when it reaches `lambda`; `opts.invert` flips
/// that rule.
pub fn wavelet_detect(y: &NoisySignal, lambda: f64, opts: WaveletOpts) -> Result<DetectionOutcome> {
    nonempty(y, 16)?;
    if !(opts.scale > 0.0) {
        return invalid("wavelet scale must be positive");
    }
    let w = cwt_single_scale(&periodogram(&y.samples), opts.scale);
    let t = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(if opts.invert {
        DetectionOutcome::occupied_if_above(Technique::Wavelet, t, lambda)
    } else {
        DetectionOutcome::idle_if_above(Technique::Wavelet, t, lambda)
    })
}

/// `Re Σ y(n)·x_p*(n)`.
pub fn pilot_correlation(y: &[Complex64], pilot: &PilotSignal) -> Result<Complex64> {
    if y.len() != pilot.len() {
        return invalid(format!("signal length {} does not match pilot length {}", y.len(), pilot.len()));
    }
    Ok(y.iter().zip(pilot.samples()).map(|(a, b)| a * b.conj()).sum())
}

pub fn matched_filter_detect(y: &NoisySignal, pilot: &PilotSignal, lambda: f64) -> Result<DetectionOutcome> {
    let t = pilot_correlation(&y.samples, pilot)?.re;
    Ok(DetectionOutcome::occupied_if_above(Technique::MatchedFilter, t, lambda))
}

/// Default number of quiet-time draws averaged into one threshold.
pub const QUIET_TIME_DEFAULT_RUNS: usize = 32;

/// Quiet-time threshold from recorded noise.
///
/// `noise` holds `averaging_runs` consecutive noise-only records of the
/// pilot's length; the threshold is `factor_k` times the mean of
/// `|Σ w(n)·x_p*(n)|` over the records.
pub fn quiet_time_threshold(
    noise: &[Complex64],
    pilot: &PilotSignal,
    factor_k: f64,
    averaging_runs: usize,
) -> Result<f64> {
    if !(factor_k > 0.0) {
        return invalid("threshold factor must be positive");
    }
    if averaging_runs == 0 {
        return invalid("averaging_runs must be at least 1");
    }
    let n = pilot.len();
    if noise.len() != n * averaging_runs {
        return invalid(format!("expected {} noise samples, got {}", n * averaging_runs, noise.len()));
    }
    let mut sum = 0.0;
    for rec in noise.chunks(n) {
        sum += pilot_correlation(rec, pilot)?.norm();
    }
    Ok(factor_k * sum / averaging_runs as f64)
}

/// Quiet-time threshold with the noise drawn internally: circular complex
/// Gaussian with total variance `noise_variance`, from the quiet-time stream
/// of `seed`.
pub fn quiet_time_threshold_seeded(
    noise_variance: f64,
    pilot: &PilotSignal,
    factor_k: f64,
    averaging_runs: usize,
    seed: u64,
) -> Result<f64> {
    if !(noise_variance >= 0.0) {
        return invalid("noise variance must be nonnegative");
    }
    let mut rng = stream_rng(seed, Stream::QuietTime);
    let noise: Vec<Complex64> =
        (0..pilot.len() * averaging_runs.max(1)).map(|_| complex_gaussian(&mut rng, noise_variance)).collect();
    quiet_time_threshold(&noise, pilot, factor_k, averaging_runs)
}

/// Detector working directly on compressed measurements:
/// `T = yᵀ(ΩΩᵀ)⁻¹ΩS`.
pub fn compressive_detect(
    y: &MeasurementVector,
    omega: &SensingMatrix,
    template: &[f64],
    lambda: f64,
) -> Result<DetectionOutcome> {
    let (m, n) = (omega.m(), omega.n());
    if y.len() != m {
        return invalid(format!("measurement length {} does not match m = {m}", y.len()));
    }
    if template.len() != n {
        return invalid(format!("template length {} does not match n = {n}", template.len()));
    }
    let t = compressive_statistic(&y.values, omega, template)?;
    Ok(DetectionOutcome::occupied_if_above(Technique::Compressive, t, lambda))
}

fn compressive_statistic(y: &[f64], omega: &SensingMatrix, template: &[f64]) -> Result<f64> {
    let z = compressive_weights(omega, template)?;
    Ok(y.iter().zip(&z).map(|(a, b)| a * b).sum())
}

/// Weights `z = (ΩΩᵀ)⁻¹ΩS`, so that the compressive statistic is `yᵀz`.
/// Under noise-only measurements with variance `σ²` the statistic has
/// variance `σ²‖z‖²`.
pub fn compressive_weights(omega: &SensingMatrix, template: &[f64]) -> Result<Vec<f64>> {
    if template.len() != omega.n() {
        return invalid(format!("template length {} does not match n = {}", template.len(), omega.n()));
    }
    let dense = omega.to_dense();
    let gram: DMatrix<f64> = &dense * dense.transpose();
    let scale = gram.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let chol = gram.cholesky().ok_or_else(|| Error::IllConditioned("ΩΩᵀ is singular".into()))?;
    let l_diag = chol.l_dirty().diagonal();
    let min_pivot = l_diag.iter().fold(f64::INFINITY, |a, v| a.min(v * v));
    if scale == 0.0 || min_pivot <= 1e-12 * scale {
        return Err(Error::IllConditioned("ΩΩᵀ is numerically singular".into()));
    }
    let os = DVector::from_vec(omega.apply(template)?);
    Ok(chol.solve(&os).as_slice().to_vec())
}
