//! Signal models and evaluation metrics.
//!
//! Ground-truth spike trains, the QPSK pilot used by the matched filter,
//! the AWGN channel, and the reconstruction metrics shared by every
//! experiment (relative error, MSE, Pearson correlation, RSNR, Hamming
//! distance and recovered sparsity).

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{stream_rng, Stream};

/// Distribution of the nonzero spike amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeLaw {
    /// Random sign, unit magnitude.
    #[default]
    Unit,
    /// Standard normal.
    Gaussian,
    /// Uniform on `[-1, 1]`.
    Uniform,
}

impl std::str::FromStr for AmplitudeLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unit" => Ok(Self::Unit),
            "gaussian" => Ok(Self::Gaussian),
            "uniform" => Ok(Self::Uniform),
            other => invalid(format!("unknown amplitude law `{other}`")),
        }
    }
}

/// A length-`n` real vector with exactly `k` nonzero entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSignal {
    samples: Vec<f64>,
    support: Vec<usize>,
    seed: u64,
}

impl SparseSignal {
    /// Build from explicit samples; the support is every nonzero index.
    pub fn from_samples(samples: Vec<f64>, seed: u64) -> Result<Self> {
        if samples.is_empty() {
            return invalid("signal length must be at least 1");
        }
        let support = samples.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect();
        Ok(Self { samples, support, seed })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Mean power per sample, `‖x‖²/n`.
    pub fn power(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum::<f64>() / self.samples.len() as f64
    }
}

/// Draw `k` spikes at uniformly random distinct positions of a length-`n` vector.
pub fn gen_sparse_signal(n: usize, k: usize, law: AmplitudeLaw, seed: u64) -> Result<SparseSignal> {
    if n == 0 {
        return invalid("signal length must be at least 1");
    }
    if k > n {
        return invalid(format!("sparsity {k} exceeds length {n}"));
    }
    let mut rng = stream_rng(seed, Stream::Signal);
    let mut support = index::sample(&mut rng, n, k).into_vec();
    support.sort_unstable();
    let mut samples = vec![0.0; n];
    for &i in &support {
        samples[i] = loop {
            let v = match law {
                AmplitudeLaw::Unit => {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
                AmplitudeLaw::Gaussian => StandardNormal.sample(&mut rng),
                AmplitudeLaw::Uniform => rng.random_range(-1.0..=1.0),
            };
            if v != 0.0 {
                break v;
            }
        };
    }
    Ok(SparseSignal { samples, support, seed })
}

/// Representation basis for signals that are sparse in something other than
/// the canonical basis. Columns of the orthonormal matrix are the atoms.
#[derive(Debug, Clone, Default)]
pub enum SparseBasis {
    #[default]
    Identity,
    Orthonormal(DMatrix<f64>),
}

impl SparseBasis {
    pub fn orthonormal(basis: DMatrix<f64>) -> Result<Self> {
        if !basis.is_square() {
            return invalid("basis must be square");
        }
        let gram = basis.transpose() * &basis;
        let n = basis.nrows();
        let err = (&gram - DMatrix::<f64>::identity(n, n)).abs().max();
        if err > 1e-9 {
            return invalid(format!("basis is not orthonormal (max deviation {err:.3e})"));
        }
        Ok(Self::Orthonormal(basis))
    }

    /// Signal-domain vector `φ s`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        match self {
            Self::Identity => coeffs.to_vec(),
            Self::Orthonormal(b) => (b * nalgebra::DVector::from_column_slice(coeffs)).as_slice().to_vec(),
        }
    }

    /// Coefficients `φᵀ x`.
    pub fn analyze(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Identity => x.to_vec(),
            Self::Orthonormal(b) => (b.transpose() * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulation {
    Qpsk,
}

/// Known primary-user pilot for coherent detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotSignal {
    samples: Vec<Complex64>,
    modulation: Modulation,
    energy: f64,
}

impl PilotSignal {
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    /// `E = Σ |x_p|²`.
    pub fn energy(&self) -> f64 {
        self.energy
    }
}

/// `n` QPSK symbols drawn from `{(±1 ± j)/√2}`.
pub fn gen_pilot_qpsk(n: usize, seed: u64) -> Result<PilotSignal> {
    if n == 0 {
        return invalid("pilot length must be at least 1");
    }
    let mut rng = stream_rng(seed, Stream::Signal);
    let samples: Vec<Complex64> = (0..n)
        .map(|_| {
            let re = if rng.random::<bool>() { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
            let im = if rng.random::<bool>() { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
            Complex64::new(re, im)
        })
        .collect();
    let energy = samples.iter().map(|s| s.norm_sqr()).sum();
    Ok(PilotSignal { samples, modulation: Modulation::Qpsk, energy })
}

/// Flat channel gain applied before the noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelGain {
    #[default]
    Unit,
    /// One circular complex Gaussian scalar per call, `E|h|² = 1`.
    Rayleigh,
}

/// Received samples `h·s + w` with their noise metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisySignal {
    pub samples: Vec<Complex64>,
    pub snr_db: f64,
    pub noise_variance: f64,
    pub channel_gain: Complex64,
}

impl NoisySignal {
    /// Wrap already-received samples (no noise metadata).
    pub fn from_complex(samples: Vec<Complex64>) -> Self {
        Self { samples, snr_db: f64::NAN, noise_variance: f64::NAN, channel_gain: Complex64::new(1.0, 0.0) }
    }

    pub fn from_real(samples: &[f64]) -> Self {
        Self::from_complex(samples.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.samples.iter().map(|c| c.re).collect()
    }
}

fn noise_variance_for(signal_power: f64, snr_db: f64) -> Result<f64> {
    if snr_db.is_nan() {
        return invalid("snr_db is NaN");
    }
    if snr_db == f64::INFINITY {
        return Ok(0.0);
    }
    if signal_power <= 0.0 {
        return invalid("zero-power signal with finite SNR");
    }
    Ok(signal_power / 10f64.powf(snr_db / 10.0))
}

/// Add real white Gaussian noise so that `signal_power / δ_w² = 10^(snr_db/10)`.
///
/// `snr_db = +∞` returns a noiseless copy with `noise_variance = 0`.
pub fn add_awgn(signal: &[f64], snr_db: f64, seed: u64) -> Result<NoisySignal> {
    if signal.is_empty() {
        return invalid("empty signal");
    }
    let power = signal.iter().map(|v| v * v).sum::<f64>() / signal.len() as f64;
    let var = noise_variance_for(power, snr_db)?;
    let sd = var.sqrt();
    let mut rng = stream_rng(seed, Stream::Noise);
    let samples = signal
        .iter()
        .map(|&s| {
            let w: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(s + sd * w, 0.0)
        })
        .collect();
    Ok(NoisySignal { samples, snr_db, noise_variance: var, channel_gain: Complex64::new(1.0, 0.0) })
}

/// Complex-baseband variant: circular noise with total variance `δ_w²`
/// (`δ_w²/2` per quadrature), optionally through a flat channel gain.
pub fn add_awgn_complex(signal: &[Complex64], snr_db: f64, gain: ChannelGain, seed: u64) -> Result<NoisySignal> {
    if signal.is_empty() {
        return invalid("empty signal");
    }
    let power = signal.iter().map(|s| s.norm_sqr()).sum::<f64>() / signal.len() as f64;
    let var = noise_variance_for(power, snr_db)?;
    let h = match gain {
        ChannelGain::Unit => Complex64::new(1.0, 0.0),
        ChannelGain::Rayleigh => complex_gaussian(&mut stream_rng(seed, Stream::Gain), 1.0),
    };
    let mut rng = stream_rng(seed, Stream::Noise);
    let samples = signal.iter().map(|&s| h * s + complex_gaussian(&mut rng, var)).collect();
    Ok(NoisySignal { samples, snr_db, noise_variance: var, channel_gain: h })
}

/// One circular complex Gaussian sample with `E|z|² = variance`.
pub fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let sd = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(sd * re, sd * im)
}

/// Reconstruction quality of one estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub recovery_error: f64,
    pub mse: f64,
    pub correlation: f64,
    pub rsnr: f64,
    pub hamming: usize,
    pub recovered_sparsity: usize,
}

/// `‖x̂ − x‖₂ / ‖x‖₂`.
pub fn recovery_error(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    same_len(x, x_hat)?;
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nx == 0.0 {
        return Err(Error::DivisionByZero("recovery error of a zero reference signal".into()));
    }
    let nd = x.iter().zip(x_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok(nd / nx)
}

/// `(1/N) Σ (x − x̂)²`.
pub fn mse(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    same_len(x, x_hat)?;
    if x.is_empty() {
        return invalid("empty vectors");
    }
    Ok(x.iter().zip(x_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64)
}

/// Pearson correlation in the raw-sums form.
pub fn correlation(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    same_len(x, x_hat)?;
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), x_hat.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(x_hat).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = x_hat.iter().map(|a| a * a).sum();
    let dx = n * sxx - sx * sx;
    let dy = n * syy - sy * sy;
    if dx <= 0.0 || dy <= 0.0 {
        return Err(Error::Undefined("correlation of a constant vector".into()));
    }
    Ok(((n * sxy - sx * sy) / (dx.sqrt() * dy.sqrt())).clamp(-1.0, 1.0))
}

/// `‖x‖² / ‖x − x̂‖²` from a single realisation; `+∞` for an exact estimate.
pub fn rsnr(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    same_len(x, x_hat)?;
    let num: f64 = x.iter().map(|v| v * v).sum();
    let den: f64 = x.iter().zip(x_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    if den == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(num / den)
}

/// Number of positions where the two vectors differ.
pub fn hamming(y: &[f64], y_hat: &[f64]) -> Result<usize> {
    same_len(y, y_hat)?;
    Ok(y.iter().zip(y_hat).filter(|(a, b)| a != b).count())
}

/// Count of `|x̂_i| > zero_tol`; the default tolerance is `1e-6·max|x̂|`.
pub fn recovered_sparsity(x_hat: &[f64], zero_tol: Option<f64>) -> usize {
    let tol = zero_tol.unwrap_or_else(|| 1e-6 * x_hat.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    x_hat.iter().filter(|v| v.abs() > tol).count()
}

/// All metrics at once. Fails when any of them is undefined.
pub fn evaluate_metrics(
    x: &[f64],
    x_hat: &[f64],
    y: Option<&[f64]>,
    y_hat: Option<&[f64]>,
    zero_tol: Option<f64>,
) -> Result<MetricBundle> {
    let hamming = match (y, y_hat) {
        (Some(a), Some(b)) => hamming(a, b)?,
        _ => 0,
    };
    Ok(MetricBundle {
        recovery_error: recovery_error(x, x_hat)?,
        mse: mse(x, x_hat)?,
        correlation: correlation(x, x_hat)?,
        rsnr: rsnr(x, x_hat)?,
        hamming,
        recovered_sparsity: recovered_sparsity(x_hat, zero_tol),
    })
}

/// Like [`evaluate_metrics`] but scores a constant estimate with correlation 0
/// instead of failing, which is what a sweep wants when a solver returns zeros.
pub fn evaluate_metrics_lenient(
    x: &[f64],
    x_hat: &[f64],
    y: Option<&[f64]>,
    y_hat: Option<&[f64]>,
    zero_tol: Option<f64>,
) -> Result<MetricBundle> {
    match evaluate_metrics(x, x_hat, y, y_hat, zero_tol) {
        Err(Error::Undefined(_)) => {
            let hamming = match (y, y_hat) {
                (Some(a), Some(b)) => hamming(a, b)?,
                _ => 0,
            };
            Ok(MetricBundle {
                recovery_error: recovery_error(x, x_hat)?,
                mse: mse(x, x_hat)?,
                correlation: 0.0,
                rsnr: rsnr(x, x_hat)?,
                hamming,
                recovered_sparsity: recovered_sparsity(x_hat, zero_tol),
            })
        }
        other => other,
    }
}

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return invalid(format!("length mismatch: {} vs {}", a.len(), b.len()));
    }
    Ok(())
}
