//! Monte-Carlo sweeps and the simulated wideband survey.
//!
//! Every run is a pure function of its [`ExperimentConfig`]: trials are
//! seeded from `base_seed ^ trial_index`, evaluated in parallel (or
//! sequentially) and reduced in index order.

mod config;
mod detection;
mod recovery;
mod scan;

pub use config::{
    Band, BandPlan, DetectionParams, ExperimentConfig, ExperimentKind, RecoveryParams, ScanParams, TrafficModel,
    Waveform, SCHEMA_VERSION,
};
pub use detection::{nrz, run_detection_mc, CurvePoint, PdPfaCurve};
pub use recovery::{measurement_noise_variance, run_recovery_mc, solve, RecoveryCell, RecoveryReport, SolveOutcome};
pub use scan::{
    rates, run_scan_sim, scan_rows, scan_time, ChannelInfo, OccupancyReport, PathReport, ScanPath, ScanRow, SnrRates,
    TechniqueSummary,
};
