use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::detection::nrz;
use crate::detect::{autocorr_detect, energy_detect, euclid_detect, Decision, Technique};
use crate::error::{invalid, Result};
use crate::par::map_indexed;
use crate::rng::{stream_rng, trial_seed, Stream};
use crate::sensing::{build_matrix, Scheme, SensingMatrix};
use crate::signal::NoisySignal;
use crate::snr::estimate_snr_real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanPath {
    /// Detectors on `M` partial-circulant measurements of each channel.
    Compressive,
    /// Detectors on all `N` samples.
    Conventional,
}

impl ScanPath {
    pub fn as_str(self) -> &'static str {
        match self {
            ScanPath::Compressive => "compressive",
            ScanPath::Conventional => "conventional",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelInfo {
    pub index: usize,
    pub band: String,
    pub center_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrRates {
    pub snr_db: f64,
    pub busy: usize,
    pub idle: usize,
    pub detection_rate: f64,
    pub false_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechniqueSummary {
    pub technique: Technique,
    /// `[channel][slot]`.
    pub timeline: Vec<Vec<Decision>>,
    /// Percentage of channels declared occupied, per slot.
    pub occupancy_pct: Vec<f64>,
    pub detection_rate: f64,
    pub false_rate: f64,
    pub rates_by_snr: Vec<SnrRates>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    pub path: ScanPath,
    pub samples_per_channel: usize,
    /// Channel scans that fit in the sample budget.
    pub channels_scanned: usize,
    /// `Ts / (techniques · channels_scanned)`, seconds.
    pub scan_time_tsc_s: f64,
    pub techniques: Vec<TechniqueSummary>,
}

impl PathReport {
    pub fn technique(&self, t: Technique) -> Option<&TechniqueSummary> {
        self.techniques.iter().find(|s| s.technique == t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyReport {
    pub channels: Vec<ChannelInfo>,
    pub slots: usize,
    /// `[channel][slot]`.
    pub ground_truth: Vec<Vec<bool>>,
    /// SNR drawn for each `[channel][slot]`; meaningful only when busy.
    pub snr_db: Vec<Vec<f64>>,
    /// Blind estimate from the full samples, NaN when disabled or failed.
    pub est_snr_db: Vec<Vec<f64>>,
    pub survey_period_s: f64,
    /// Samples the survey may process per path.
    pub budget_samples: usize,
    pub paths: Vec<PathReport>,
}

impl OccupancyReport {
    pub fn path(&self, p: ScanPath) -> Option<&PathReport> {
        self.paths.iter().find(|r| r.path == p)
    }

    /// Compressive over conventional channels scanned within the budget.
    pub fn budget_ratio(&self) -> f64 {
        match (self.path(ScanPath::Compressive), self.path(ScanPath::Conventional)) {
            (Some(c), Some(v)) if v.channels_scanned > 0 => c.channels_scanned as f64 / v.channels_scanned as f64,
            _ => f64::NAN,
        }
    }
}

/// `t_sc = Ts / (m·Nc)`.
pub fn scan_time(survey_period: f64, techniques: usize, channels: usize) -> Result<f64> {
    if techniques == 0 || channels == 0 {
        return invalid("scan time needs at least one technique and one channel");
    }
    Ok(survey_period / (techniques * channels) as f64)
}

/// `(detection_rate, false_rate)` recounted from a decision timeline.
pub fn rates(timeline: &[Vec<Decision>], truth: &[Vec<bool>]) -> (f64, f64) {
    let (mut busy, mut hit, mut idle, mut fa) = (0usize, 0usize, 0usize, 0usize);
    for (row, t_row) in timeline.iter().zip(truth) {
        for (d, &t) in row.iter().zip(t_row) {
            if t {
                busy += 1;
                hit += d.is_occupied() as usize;
            } else {
                idle += 1;
                fa += d.is_occupied() as usize;
            }
        }
    }
    (ratio(hit, busy), ratio(fa, idle))
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

struct Cell {
    truth: bool,
    snr_db: f64,
    est_snr_db: f64,
    /// `[path][technique]`.
    decisions: [Vec<Decision>; 2],
}

fn run_detectors(samples: &[f64], techniques: &[Technique], cfg: &ExperimentConfig) -> Result<Vec<Decision>> {
    let s = &cfg.scan;
    let y = NoisySignal::from_real(samples);
    techniques
        .iter()
        .map(|t| {
            Ok(match t {
                Technique::Energy => energy_detect(&y, s.energy_threshold * samples.len() as f64)?.decision,
                Technique::Autocorr => autocorr_detect(&y, s.autocorr_threshold)?.decision,
                Technique::Euclid => euclid_detect(&y, s.euclid_threshold, s.euclid_lags)?.decision,
                other => return invalid(format!("technique {other} is not available in the scan simulator")),
            })
        })
        .collect()
}

/// Simulated wideband survey.
///
/// Every `(slot, channel)` cell draws its busy state from the traffic model
/// and, when busy, an SNR from `snr_grid_db`; the primary user is an NRZ
/// waveform in unit-variance real noise. Each cell is sensed twice: by the
/// detectors on all `N` samples and by the same detectors on `M = ratio·N`
/// partial-circulant measurements. The sample budget is what the
/// conventional path needs for the whole survey, so the compressive path
/// fits `N/M` times as many channel scans in it.
pub fn run_scan_sim(cfg: &ExperimentConfig) -> Result<OccupancyReport> {
    if cfg.experiment_kind != ExperimentKind::ScanSim {
        return invalid("config is not a scan_sim experiment");
    }
    cfg.validate()?;
    let s = &cfg.scan;
    let &[n] = cfg.samples_n.as_slice() else {
        return invalid("scan simulation takes a single samples_n");
    };
    let m = ((s.compression_ratio * n as f64).round() as usize).clamp(1, n);
    let opts = crate::sensing::MatrixOptions { density: s.density, ..cfg.matrix_options.clone() };
    let omega: SensingMatrix = build_matrix(Scheme::Circulant, m, n, cfg.base_seed, &opts)?;

    let mut channels = Vec::new();
    for b in &s.plan.bands {
        for c in 0..b.channel_count {
            channels.push(ChannelInfo {
                index: channels.len(),
                band: b.name.clone(),
                center_mhz: b.f_low_mhz + (c as f64 + 0.5) * b.channel_spacing_mhz,
            });
        }
    }
    let nc = channels.len();
    let techniques = &cfg.techniques;

    let cell = |idx: usize| -> Result<Cell> {
        let (slot, _) = (idx / nc, idx % nc);
        let seed = trial_seed(cfg.base_seed, idx as u64);
        let truth = stream_rng(seed, Stream::Traffic).random::<f64>() < s.traffic.busy_probability_at(slot);
        let grid = &cfg.snr_grid_db;
        let snr_db = grid[stream_rng(seed, Stream::Gain).random_range(0..grid.len())];
        let power = if truth { 10f64.powf(snr_db / 10.0) } else { 0.0 };
        let amp = power.sqrt();
        let mut noise = stream_rng(seed, Stream::Noise);
        let pu = nrz(n, s.symbol_len, &mut stream_rng(seed, Stream::Signal));
        let samples: Vec<f64> = pu
            .iter()
            .map(|v| {
                let w: f64 = StandardNormal.sample(&mut noise);
                amp * v + w
            })
            .collect();
        let est_snr_db = if s.estimate_snr {
            estimate_snr_real(&samples, s.snr_l, s.snr_k).map(|e| e.snr_db).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        let compressed = omega.apply(&samples)?;
        Ok(Cell {
            truth,
            snr_db,
            est_snr_db,
            decisions: [run_detectors(&compressed, techniques, cfg)?, run_detectors(&samples, techniques, cfg)?],
        })
    };
    let cells = map_indexed(cfg.execution, s.slots * nc, cell).into_iter().collect::<Result<Vec<_>>>()?;

    let grid2 = |f: &dyn Fn(&Cell) -> f64| -> Vec<Vec<f64>> {
        (0..nc).map(|c| (0..s.slots).map(|t| f(&cells[t * nc + c])).collect()).collect()
    };
    let ground_truth: Vec<Vec<bool>> =
        (0..nc).map(|c| (0..s.slots).map(|t| cells[t * nc + c].truth).collect()).collect();
    let budget_samples = n * nc * s.slots;

    let mut snr_values = cfg.snr_grid_db.clone();
    snr_values.sort_by(f64::total_cmp);
    snr_values.dedup();

    let mut paths = Vec::new();
    for (pi, (path, per_channel)) in [(ScanPath::Compressive, m), (ScanPath::Conventional, n)].into_iter().enumerate() {
        let channels_scanned = budget_samples / per_channel;
        let mut summaries = Vec::new();
        for (ti, &technique) in techniques.iter().enumerate() {
            let dec = |c: &Cell| c.decisions[pi][ti];
            let timeline: Vec<Vec<Decision>> =
                (0..nc).map(|c| (0..s.slots).map(|t| dec(&cells[t * nc + c])).collect()).collect();
            let occupancy_pct = (0..s.slots)
                .map(|t| {
                    let occ = (0..nc).filter(|&c| timeline[c][t].is_occupied()).count();
                    100.0 * occ as f64 / nc as f64
                })
                .collect();
            let (detection_rate, false_rate) = rates(&timeline, &ground_truth);
            let rates_by_snr = snr_values
                .iter()
                .map(|&snr| {
                    let sel: Vec<&Cell> = cells.iter().filter(|c| c.snr_db == snr).collect();
                    let busy = sel.iter().filter(|c| c.truth).count();
                    let idle = sel.len() - busy;
                    let hit = sel.iter().filter(|c| c.truth && dec(c).is_occupied()).count();
                    let fa = sel.iter().filter(|c| !c.truth && dec(c).is_occupied()).count();
                    SnrRates { snr_db: snr, busy, idle, detection_rate: ratio(hit, busy), false_rate: ratio(fa, idle) }
                })
                .collect();
            summaries.push(TechniqueSummary {
                technique,
                timeline,
                occupancy_pct,
                detection_rate,
                false_rate,
                rates_by_snr,
            });
        }
        paths.push(PathReport {
            path,
            samples_per_channel: per_channel,
            channels_scanned,
            scan_time_tsc_s: scan_time(s.survey_period_s, techniques.len(), channels_scanned)?,
            techniques: summaries,
        });
    }

    Ok(OccupancyReport {
        channels,
        slots: s.slots,
        ground_truth,
        snr_db: grid2(&|c| c.snr_db),
        est_snr_db: grid2(&|c| c.est_snr_db),
        survey_period_s: s.survey_period_s,
        budget_samples,
        paths,
    })
}

/// Flat `(slot, channel, technique, decision, truth, est_snr_db)` rows of one path.
pub fn scan_rows(report: &OccupancyReport, path: ScanPath) -> Vec<ScanRow> {
    let Some(p) = report.path(path) else { return Vec::new() };
    let mut rows = Vec::new();
    for slot in 0..report.slots {
        for ch in 0..report.channels.len() {
            for t in &p.techniques {
                rows.push(ScanRow {
                    slot,
                    channel: ch,
                    technique: t.technique,
                    decision: t.timeline[ch][slot],
                    truth: report.ground_truth[ch][slot],
                    est_snr_db: report.est_snr_db[ch][slot],
                });
            }
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub slot: usize,
    pub channel: usize,
    pub technique: Technique,
    pub decision: Decision,
    pub truth: bool,
    #[serde(with = "crate::io::float_token_serde")]
    pub est_snr_db: f64,
}
