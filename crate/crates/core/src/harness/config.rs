use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::detect::{Technique, WaveletOpts, EUCLID_DEFAULT_LAGS};
use crate::error::{invalid, Result};
use crate::par::Execution;
use crate::recovery::{BayesOpts, Solver};
use crate::sensing::{MatrixOptions, RowSelection, Scheme};
use crate::signal::AmplitudeLaw;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    DetectionMc,
    RecoveryMc,
    ScanSim,
}

/// Primary-user waveform in detection trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Waveform {
    /// Real white Gaussian samples.
    Gaussian,
    /// Known complex QPSK pilot shared by all trials.
    Qpsk,
    /// Real ±1 symbols held for `symbol_len` samples.
    Nrz { symbol_len: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionParams {
    /// Noise variance `δ_w²`; the signal power is `γ·δ_w²`.
    pub noise_variance: f64,
    /// Target false-alarm rate for the energy threshold.
    pub pfa_target: f64,
    /// Quiet-time records averaged into each per-trial threshold.
    pub quiet_time_runs: usize,
    pub autocorr_threshold: f64,
    pub euclid_threshold: f64,
    pub euclid_lags: usize,
    pub wavelet_threshold: f64,
    pub wavelet: WaveletOpts,
    /// Overrides the per-technique default waveform.
    pub waveform: Option<Waveform>,
    /// Count misses of signal-present trials as `nf` instead of running
    /// separate noise-only trials.
    pub single_loop: bool,
    /// Measurements for the compressive detector; `N/4` when absent.
    pub compressive_m: Option<usize>,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            noise_variance: 1.0,
            pfa_target: 0.1,
            quiet_time_runs: 1,
            autocorr_threshold: 0.90,
            euclid_threshold: 0.95,
            euclid_lags: EUCLID_DEFAULT_LAGS,
            wavelet_threshold: 1.0,
            wavelet: WaveletOpts::default(),
            waveform: None,
            single_loop: false,
            compressive_m: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoveryParams {
    pub amplitude_law: AmplitudeLaw,
    /// Basis-pursuit penalty; derived from the data when absent.
    pub bp_penalty: Option<f64>,
    pub bp_max_iter: usize,
    pub bp_tol: f64,
    /// OMP stops once `‖r‖ ≤ omp_residual·‖y‖` (at most `m/2` atoms).
    pub omp_residual: f64,
    pub cosamp_max_iter: usize,
    pub cosamp_tol: f64,
    pub bayes: BayesOpts,
    pub biht_max_iter: usize,
    /// Threshold for recovered sparsity; `1e-6·max|x̂|` when absent.
    pub zero_tol: Option<f64>,
}

impl Default for RecoveryParams {
    fn default() -> Self {
        Self {
            amplitude_law: AmplitudeLaw::Unit,
            bp_penalty: None,
            bp_max_iter: 5000,
            bp_tol: 1e-8,
            omp_residual: 1e-6,
            cosamp_max_iter: 100,
            cosamp_tol: 1e-10,
            bayes: BayesOpts::default(),
            biht_max_iter: 300,
            zero_tol: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub name: String,
    pub f_low_mhz: f64,
    pub f_high_mhz: f64,
    pub channel_spacing_mhz: f64,
    pub channel_count: usize,
}

impl Band {
    pub fn derived_count(&self) -> usize {
        ((self.f_high_mhz - self.f_low_mhz) / self.channel_spacing_mhz).floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandPlan {
    pub bands: Vec<Band>,
}

impl BandPlan {
    /// GSM-850 and GSM-1900 downlink plus the 2.4 and 5.8 GHz Wi-Fi bands.
    pub fn survey() -> Self {
        let band = |name: &str, lo: f64, hi: f64, sp: f64, c: usize| Band {
            name: name.into(),
            f_low_mhz: lo,
            f_high_mhz: hi,
            channel_spacing_mhz: sp,
            channel_count: c,
        };
        Self {
            bands: vec![
                band("GSM-850 D/L", 869.0, 894.0, 3.2, 11),
                band("GSM-1900 D/L", 1930.0, 1990.0, 3.2, 25),
                band("Wi-Fi 2.4 GHz", 2402.0, 2497.0, 5.0, 20),
                band("Wi-Fi 5.8 GHz", 5725.0, 5875.0, 5.0, 31),
            ],
        }
    }

    pub fn total_channels(&self) -> usize {
        self.bands.iter().map(|b| b.channel_count).sum()
    }

    /// Bands whose declared channel count differs from the spacing arithmetic.
    pub fn inconsistent_bands(&self) -> Vec<(String, usize, usize)> {
        self.bands
            .iter()
            .filter(|b| b.derived_count() != b.channel_count)
            .map(|b| (b.name.clone(), b.channel_count, b.derived_count()))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.bands.is_empty() || self.total_channels() == 0 {
            return invalid("band plan has no channels");
        }
        for b in &self.bands {
            if !(b.f_high_mhz > b.f_low_mhz) || !(b.channel_spacing_mhz > 0.0) {
                return invalid(format!("band '{}' has an invalid range or spacing", b.name));
            }
        }
        for (name, declared, derived) in self.inconsistent_bands() {
            log::warn!("band '{name}': {declared} channels declared, spacing gives {derived}");
        }
        Ok(())
    }
}

impl Default for BandPlan {
    fn default() -> Self {
        Self::survey()
    }
}

/// Per-channel busy/idle process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficModel {
    /// Probability that a channel is busy in a slot.
    pub busy_probability: f64,
    /// Optional per-slot multiplier on `busy_probability` (cycled), e.g. a day profile.
    pub diurnal: Vec<f64>,
}

impl Default for TrafficModel {
    fn default() -> Self {
        Self { busy_probability: 0.3, diurnal: Vec::new() }
    }
}

impl TrafficModel {
    pub fn busy_probability_at(&self, slot: usize) -> f64 {
        let mult = if self.diurnal.is_empty() { 1.0 } else { self.diurnal[slot % self.diurnal.len()] };
        (self.busy_probability * mult).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanParams {
    pub slots: usize,
    pub plan: BandPlan,
    pub traffic: TrafficModel,
    /// Mean-power threshold of the energy detector (`T/N ≥ λ`).
    pub energy_threshold: f64,
    pub autocorr_threshold: f64,
    pub euclid_threshold: f64,
    pub euclid_lags: usize,
    pub symbol_len: usize,
    /// Generator density of the partial circulant matrix.
    pub density: f64,
    /// `M/N` of the compressive path.
    pub compression_ratio: f64,
    pub survey_period_s: f64,
    pub estimate_snr: bool,
    pub snr_l: usize,
    pub snr_k: usize,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            slots: 21,
            plan: BandPlan::survey(),
            traffic: TrafficModel::default(),
            energy_threshold: 1e-10,
            autocorr_threshold: 0.90,
            euclid_threshold: 0.95,
            euclid_lags: EUCLID_DEFAULT_LAGS,
            symbol_len: 32,
            density: 0.1,
            compression_ratio: 0.25,
            survey_period_s: 8.0 * 3600.0,
            estimate_snr: true,
            snr_l: 10,
            snr_k: 50,
        }
    }
}

/// One experiment, as read from a JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema_default")]
    pub schema: u32,
    pub experiment_kind: ExperimentKind,
    #[serde(default = "trials_default", alias = "trials_nt")]
    pub trials: usize,
    #[serde(deserialize_with = "one_or_many", default = "n_default")]
    pub samples_n: Vec<usize>,
    #[serde(with = "float_list", default = "snr_default")]
    pub snr_grid_db: Vec<f64>,
    #[serde(default = "factors_default")]
    pub threshold_factors: Vec<f64>,
    #[serde(default)]
    pub techniques: Vec<Technique>,
    #[serde(default)]
    pub solvers: Vec<Solver>,
    #[serde(default = "scheme_default")]
    pub matrix_scheme: Scheme,
    #[serde(default)]
    pub matrix_options: MatrixOptions,
    #[serde(deserialize_with = "one_or_many", default)]
    pub measurements_m: Vec<usize>,
    /// `M = round(ratio·N)` when `measurements_m` is empty.
    #[serde(default)]
    pub measurement_ratio: Option<f64>,
    #[serde(deserialize_with = "one_or_many", default)]
    pub sparsity_k: Vec<usize>,
    #[serde(default)]
    pub base_seed: u64,
    /// Record wall-clock timings (makes output non-reproducible).
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub execution: Execution,
    #[serde(default)]
    pub detection: DetectionParams,
    #[serde(default)]
    pub recovery: RecoveryParams,
    #[serde(default)]
    pub scan: ScanParams,
}

fn schema_default() -> u32 {
    SCHEMA_VERSION
}
fn trials_default() -> usize {
    1000
}
fn n_default() -> Vec<usize> {
    vec![1000]
}
fn snr_default() -> Vec<f64> {
    vec![0.0]
}
fn factors_default() -> Vec<f64> {
    vec![1.0]
}
fn scheme_default() -> Scheme {
    Scheme::Circulant
}

impl ExperimentConfig {
    /// Minimal config of the given kind with all defaults.
    pub fn new(kind: ExperimentKind) -> Self {
        let mut c = Self {
            schema: SCHEMA_VERSION,
            experiment_kind: kind,
            trials: trials_default(),
            samples_n: n_default(),
            snr_grid_db: snr_default(),
            threshold_factors: factors_default(),
            techniques: Vec::new(),
            solvers: Vec::new(),
            matrix_scheme: scheme_default(),
            matrix_options: MatrixOptions::default(),
            measurements_m: Vec::new(),
            measurement_ratio: None,
            sparsity_k: Vec::new(),
            base_seed: 0,
            timing: false,
            execution: Execution::Parallel,
            detection: DetectionParams::default(),
            recovery: RecoveryParams::default(),
            scan: ScanParams::default(),
        };
        match kind {
            ExperimentKind::DetectionMc => c.techniques = vec![Technique::MatchedFilter],
            ExperimentKind::RecoveryMc => {
                c.solvers = vec![Solver::Bayesian, Solver::BasisPursuit, Solver::Omp];
                c.samples_n = vec![200];
                c.sparsity_k = vec![15];
                c.measurements_m = vec![80];
                c.trials = 50;
            }
            ExperimentKind::ScanSim => {
                c.techniques = vec![Technique::Energy, Technique::Autocorr, Technique::Euclid];
                c.samples_n = vec![3072];
                c.snr_grid_db = (-20..=10).step_by(2).map(f64::from).collect();
                c.trials = 1;
                c.matrix_options = MatrixOptions { density: 0.1, row_selection: RowSelection::First, generator: None };
            }
        }
        c
    }

    /// Measurement counts for signal length `n`.
    pub fn measurements_for(&self, n: usize) -> Result<Vec<usize>> {
        if !self.measurements_m.is_empty() {
            return Ok(self.measurements_m.clone());
        }
        match self.measurement_ratio {
            Some(r) if r > 0.0 && r <= 1.0 => Ok(vec![((r * n as f64).round() as usize).max(1)]),
            Some(r) => invalid(format!("measurement ratio {r} outside (0, 1]")),
            None => invalid("recovery experiments need measurements_m or measurement_ratio"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return invalid(format!("unsupported config schema {} (expected {SCHEMA_VERSION})", self.schema));
        }
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if self.samples_n.is_empty() || self.samples_n.contains(&0) {
            return invalid("samples_n must be a nonempty list of positive counts");
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|v| v.is_nan()) {
            return invalid("snr_grid_db must be a nonempty list of numbers");
        }
        if self.threshold_factors.is_empty() || self.threshold_factors.iter().any(|f| !(*f > 0.0)) {
            return invalid("threshold_factors must be a nonempty list of positive numbers");
        }
        match self.experiment_kind {
            ExperimentKind::DetectionMc => {
                if self.techniques.is_empty() {
                    return invalid("technique list is empty");
                }
                let d = &self.detection;
                if !(d.noise_variance > 0.0) {
                    return invalid("noise variance must be positive");
                }
                if !(d.pfa_target > 0.0 && d.pfa_target < 1.0) {
                    return invalid("pfa_target must lie in (0, 1)");
                }
                if d.quiet_time_runs == 0 {
                    return invalid("quiet_time_runs must be at least 1");
                }
            }
            ExperimentKind::RecoveryMc => {
                if self.solvers.is_empty() {
                    return invalid("solver list is empty");
                }
                if self.sparsity_k.is_empty() {
                    return invalid("sparsity_k is empty");
                }
                for &n in &self.samples_n {
                    for m in self.measurements_for(n)? {
                        if m == 0 || m > n {
                            return invalid(format!("m = {m} outside [1, {n}]"));
                        }
                    }
                    if self.sparsity_k.iter().any(|&k| k > n) {
                        return invalid(format!("sparsity exceeds n = {n}"));
                    }
                }
            }
            ExperimentKind::ScanSim => {
                if self.techniques.is_empty() {
                    return invalid("technique list is empty");
                }
                if let Some(t) = self
                    .techniques
                    .iter()
                    .find(|t| !matches!(t, Technique::Energy | Technique::Autocorr | Technique::Euclid))
                {
                    return invalid(format!("technique {t} is not available in the scan simulator"));
                }
                let s = &self.scan;
                s.plan.validate()?;
                if s.slots == 0 {
                    return invalid("scan needs at least one slot");
                }
                if !(s.compression_ratio > 0.0 && s.compression_ratio <= 1.0) {
                    return invalid("compression ratio must lie in (0, 1]");
                }
            }
        }
        Ok(())
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(usize),
        Many(Vec<usize>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

/// Float lists where non-finite values are written as `"inf"`, `"-inf"`, `"nan"`.
pub mod float_list {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum F {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
        let items: Vec<F> =
            v.iter().map(|&x| if x.is_finite() { F::Num(x) } else { F::Text(crate::io::float_token(x)) }).collect();
        items.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
        let items = Vec::<F>::deserialize(d)?;
        items
            .into_iter()
            .map(|f| match f {
                F::Num(x) => Ok(x),
                F::Text(t) => crate::io::parse_float(&t).map_err(serde::de::Error::custom),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_parses_with_defaults() {
        let c: ExperimentConfig = serde_json::from_str(
            r#"{"schema":1,"experiment_kind":"detection_mc","techniques":["mf"],"snr_grid_db":[-4,"inf"],"samples_n":1000}"#,
        )
        .unwrap();
        assert_eq!(c.samples_n, vec![1000]);
        assert_eq!(c.snr_grid_db, vec![-4.0, f64::INFINITY]);
        assert_eq!(c.detection.quiet_time_runs, 1);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_field_and_schema_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"experiment_kind":"scan_sim","bogus":1}"#).is_err());
        let mut c = ExperimentConfig::new(ExperimentKind::ScanSim);
        c.schema = 2;
        assert!(c.validate().is_err());
    }

    #[test]
    fn survey_plan_inconsistencies_are_reported() {
        let p = BandPlan::survey();
        assert_eq!(p.total_channels(), 87);
        let bad = p.inconsistent_bands();
        assert!(bad.iter().any(|(n, d, g)| n.starts_with("GSM-850") && *d == 11 && *g == 7));
        p.validate().unwrap();
    }

    #[test]
    fn measurement_rules() {
        let mut c = ExperimentConfig::new(ExperimentKind::RecoveryMc);
        c.measurements_m.clear();
        assert!(c.measurements_for(200).is_err());
        c.measurement_ratio = Some(0.4);
        assert_eq!(c.measurements_for(200).unwrap(), vec![80]);
        c.validate().unwrap();
        c.sparsity_k = vec![500];
        assert!(c.validate().is_err());
    }

    #[test]
    fn defaults_round_trip() {
        for kind in [ExperimentKind::DetectionMc, ExperimentKind::RecoveryMc, ExperimentKind::ScanSim] {
            let c = ExperimentConfig::new(kind);
            c.validate().unwrap();
            let s = serde_json::to_string(&c).unwrap();
            let back: ExperimentConfig = serde_json::from_str(&s).unwrap();
            assert_eq!(back, c);
        }
    }
}
