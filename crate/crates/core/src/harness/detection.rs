use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind, Waveform};
use crate::detect::{
    autocorr_detect, compressive_weights, energy_detect, energy_threshold, euclid_detect, matched_filter_detect,
    q_inverse, quiet_time_threshold_seeded, wavelet_detect, Technique,
};
use crate::error::{invalid, Result};
use crate::par::map_indexed;
use crate::rng::{stream_rng, trial_seed, Rng, Stream};
use crate::sensing::{build_matrix, compress};
use crate::signal::{complex_gaussian, gen_pilot_qpsk, NoisySignal, PilotSignal};

/// Monte-Carlo counts at one `(technique, snr, factor, n)` grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub technique: Technique,
    #[serde(with = "crate::io::float_token_serde")]
    pub snr_db: f64,
    pub threshold_factor: f64,
    pub n: usize,
    pub trials: usize,
    pub nd: usize,
    pub nf: usize,
    pub pd: f64,
    pub pfa: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PdPfaCurve {
    pub points: Vec<CurvePoint>,
}

impl PdPfaCurve {
    pub fn find(&self, technique: Technique, snr_db: f64, factor: f64) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.technique == technique && p.snr_db == snr_db && p.threshold_factor == factor)
    }
}

fn default_waveform(t: Technique) -> Waveform {
    match t {
        Technique::Energy => Waveform::Gaussian,
        Technique::MatchedFilter => Waveform::Qpsk,
        _ => Waveform::Nrz { symbol_len: 32 },
    }
}

fn draw_waveform(w: Waveform, n: usize, power: f64, pilot: &PilotSignal, rng: &mut Rng) -> Vec<Complex64> {
    let a = power.sqrt();
    match w {
        Waveform::Gaussian => (0..n)
            .map(|_| {
                let v: f64 = StandardNormal.sample(rng);
                Complex64::new(a * v, 0.0)
            })
            .collect(),
        Waveform::Qpsk => pilot.samples().iter().map(|s| s * a).collect(),
        Waveform::Nrz { symbol_len } => {
            nrz(n, symbol_len, rng).into_iter().map(|v| Complex64::new(a * v, 0.0)).collect()
        }
    }
}

/// `±1` symbols, each held for `symbol_len` samples.
pub fn nrz(n: usize, symbol_len: usize, rng: &mut Rng) -> Vec<f64> {
    let len = symbol_len.max(1);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
        out.extend(std::iter::repeat_n(s, len.min(n - out.len())));
    }
    out
}

/// Complex waveforms get circular noise, real ones real noise, both with
/// total variance `var`.
fn add_noise(mut x: Vec<Complex64>, complex: bool, var: f64, rng: &mut Rng) -> Vec<Complex64> {
    let sd = var.sqrt();
    for v in &mut x {
        if complex {
            *v += complex_gaussian(rng, var);
        } else {
            let w: f64 = StandardNormal.sample(rng);
            v.re += sd * w;
        }
    }
    x
}

type Statistic<'a> = Box<dyn Fn(&NoisySignal) -> Result<f64> + 'a>;

/// Per-technique machinery shared by all trials of one `(n, technique)` pair.
enum Setup {
    Energy { lambda: f64 },
    Matched { pilot: PilotSignal },
    Fixed { lambda: f64 },
    Compressive { omega: Box<crate::sensing::SensingMatrix>, template: Vec<f64>, weights: Vec<f64>, lambda: f64 },
}

/// Whether a large statistic means "occupied".
fn occupied_when_large(t: Technique, cfg: &ExperimentConfig) -> bool {
    match t {
        Technique::Euclid => false,
        Technique::Wavelet => cfg.detection.wavelet.invert,
        _ => true,
    }
}

fn decide(stat: f64, threshold: f64, large_occupied: bool) -> bool {
    (stat >= threshold) == large_occupied
}

/// Monte-Carlo Pd/Pfa over the grid `samples_n × techniques × snr × factors`.
///
/// Trial `i` of every grid point uses seed `base_seed ^ i`: signal-present
/// records draw noise from the noise stream, noise-only records from the
/// idle stream. Thresholds for each factor are `factor` times the base
/// threshold of the technique; for the matched filter the base threshold is
/// re-estimated per trial from quiet-time noise.
pub fn run_detection_mc(cfg: &ExperimentConfig) -> Result<PdPfaCurve> {
    if cfg.experiment_kind != ExperimentKind::DetectionMc {
        return invalid("config is not a detection_mc experiment");
    }
    cfg.validate()?;
    if cfg.snr_grid_db.contains(&f64::INFINITY) {
        return invalid("detection SNR grid must not contain +inf");
    }
    let d = &cfg.detection;
    let var = d.noise_variance;
    let nt = cfg.trials;
    let mut curve = PdPfaCurve::default();
    for &n in &cfg.samples_n {
        for &tech in &cfg.techniques {
            let waveform = d.waveform.unwrap_or_else(|| default_waveform(tech));
            let pilot = gen_pilot_qpsk(n, cfg.base_seed)?;
            let setup = match tech {
                Technique::Energy => Setup::Energy { lambda: energy_threshold(d.pfa_target, n, var)? },
                Technique::MatchedFilter => Setup::Matched { pilot: pilot.clone() },
                Technique::Autocorr => Setup::Fixed { lambda: d.autocorr_threshold },
                Technique::Euclid => Setup::Fixed { lambda: d.euclid_threshold },
                Technique::Wavelet => Setup::Fixed { lambda: d.wavelet_threshold },
                Technique::Compressive => {
                    let m = d.compressive_m.unwrap_or(n / 4).clamp(1, n);
                    let omega = build_matrix(cfg.matrix_scheme, m, n, cfg.base_seed, &cfg.matrix_options)?;
                    let sym = match waveform {
                        Waveform::Nrz { symbol_len } => symbol_len,
                        _ => 1,
                    };
                    let template = nrz(n, sym, &mut stream_rng(cfg.base_seed, Stream::Signal));
                    let weights = compressive_weights(&omega, &template)?;
                    let sd = (var * weights.iter().map(|w| w * w).sum::<f64>()).sqrt();
                    let lambda = sd * q_inverse(d.pfa_target)?;
                    Setup::Compressive { omega: Box::new(omega), template, weights, lambda }
                }
            };
            let large = occupied_when_large(tech, cfg);
            let complex = matches!(waveform, Waveform::Qpsk);
            for &snr in &cfg.snr_grid_db {
                let power = var * 10f64.powf(snr / 10.0);
                let run = |i: usize| -> Result<(f64, f64, f64)> {
                    let seed = trial_seed(cfg.base_seed, i as u64);
                    let mut sig_rng = stream_rng(seed, Stream::Signal);
                    match &setup {
                        Setup::Compressive { omega, template, weights, lambda } => {
                            let x: Vec<f64> = template.iter().map(|v| v * power.sqrt()).collect();
                            let y1 = compress(omega, &x, var, seed)?;
                            let mut idle = stream_rng(seed, Stream::Idle);
                            let sd = var.sqrt();
                            let t1 = y1.values.iter().zip(weights).map(|(a, b)| a * b).sum();
                            let t0 = weights
                                .iter()
                                .map(|b| {
                                    let w: f64 = StandardNormal.sample(&mut idle);
                                    sd * w * b
                                })
                                .sum();
                            Ok((t1, t0, *lambda))
                        }
                        _ => {
                            let clean = draw_waveform(waveform, n, power, &pilot, &mut sig_rng);
                            let h1 = NoisySignal::from_complex(add_noise(
                                clean,
                                complex,
                                var,
                                &mut stream_rng(seed, Stream::Noise),
                            ));
                            let h0 = NoisySignal::from_complex(add_noise(
                                vec![Complex64::new(0.0, 0.0); n],
                                complex,
                                var,
                                &mut stream_rng(seed, Stream::Idle),
                            ));
                            let (lambda, stat): (f64, Statistic) = match &setup {
                                Setup::Energy { lambda } => {
                                    (*lambda, Box::new(|y| Ok(energy_detect(y, 0.0)?.statistic)))
                                }
                                Setup::Matched { pilot } => (
                                    quiet_time_threshold_seeded(var, pilot, 1.0, d.quiet_time_runs, seed)?,
                                    Box::new(|y| Ok(matched_filter_detect(y, pilot, 0.0)?.statistic)),
                                ),
                                Setup::Fixed { lambda } => (
                                    *lambda,
                                    Box::new(move |y| {
                                        Ok(match tech {
                                            Technique::Autocorr => autocorr_detect(y, 0.0)?.statistic,
                                            Technique::Euclid => euclid_detect(y, 0.0, d.euclid_lags)?.statistic,
                                            _ => wavelet_detect(y, 0.0, d.wavelet)?.statistic,
                                        })
                                    }),
                                ),
                                Setup::Compressive { .. } => unreachable!(),
                            };
                            Ok((stat(&h1)?, if d.single_loop { f64::NAN } else { stat(&h0)? }, lambda))
                        }
                    }
                };
                let records = map_indexed(cfg.execution, nt, run).into_iter().collect::<Result<Vec<_>>>()?;
                for &factor in &cfg.threshold_factors {
                    let nd = records.iter().filter(|(t1, _, l)| decide(*t1, factor * l, large)).count();
                    let nf = if d.single_loop {
                        nt - nd
                    } else {
                        records.iter().filter(|(_, t0, l)| decide(*t0, factor * l, large)).count()
                    };
                    curve.points.push(CurvePoint {
                        technique: tech,
                        snr_db: snr,
                        threshold_factor: factor,
                        n,
                        trials: nt,
                        nd,
                        nf,
                        pd: nd as f64 / nt as f64,
                        pfa: nf as f64 / nt as f64,
                    });
                }
            }
        }
    }
    Ok(curve)
}
