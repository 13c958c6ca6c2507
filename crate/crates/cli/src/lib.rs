//! Command-line front end for `sparsense-core`.
//!
//! Every subcommand writes into `--out` (created if missing) and finishes by
//! writing `manifest.json` there, listing the files it produced.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;
use sparsense_core::detect::{
    autocorr_detect, compressive_detect, compressive_weights, energy_detect, energy_threshold, euclid_detect,
    matched_filter_detect, q_inverse, wavelet_detect, DetectionOutcome, Technique, WaveletOpts,
};
use sparsense_core::harness::{
    measurement_noise_variance, run_detection_mc, run_recovery_mc, run_scan_sim, solve, ExperimentConfig,
    ExperimentKind, RecoveryParams, ScanPath,
};
use sparsense_core::io::{
    config_hash, document_hash, format_float, now_rfc3339, read_column, read_columns_csv, read_config,
    read_detection_csv, read_json, read_recovery_csv, read_scan_csv, write_columns_csv, write_detection_csv,
    write_json, write_recovery_csv, write_rows, write_scan_csv, RunManifest, DETECTION_COLUMNS, RECOVERY_COLUMNS,
    SCAN_COLUMNS,
};
use sparsense_core::par::{env_thread_cap, with_threads, Execution};
use sparsense_core::recovery::Solver;
use sparsense_core::sensing::{build_matrix, compress, MatrixDescriptor, MatrixOptions, MeasurementVector, Scheme};
use sparsense_core::signal::{evaluate_metrics_lenient, gen_pilot_qpsk, gen_sparse_signal, AmplitudeLaw, NoisySignal};
use sparsense_core::snr::{estimate_snr, pso_tune, PsoOpts};

#[derive(Parser, Debug)]
#[command(name = "sparsense", version, about = "Compressive spectrum sensing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct OutDir {
    /// Directory for outputs and the run manifest.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct Parallelism {
    /// Override the config's execution mode.
    #[arg(long, value_enum)]
    execution: Option<ExecArg>,
    /// Worker threads (default: CS_TOOLKIT_THREADS, else all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ExecArg {
    Parallel,
    Sequential,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a k-sparse signal.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "unit")]
        amplitude: AmplitudeLaw,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutDir,
    },
    /// Compress a signal file with a seeded sensing matrix.
    Compress {
        #[arg(long)]
        input: PathBuf,
        /// Column to read (default: first).
        #[arg(long)]
        column: Option<String>,
        #[arg(long, default_value = "circulant")]
        scheme: Scheme,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Probability that a structured generator entry is nonzero.
        #[arg(long, default_value_t = 1.0)]
        density: f64,
        #[arg(long, conflicts_with = "noise_variance", allow_negative_numbers = true)]
        snr_db: Option<f64>,
        #[arg(long)]
        noise_variance: Option<f64>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Recover a sparse signal, from files or a synthetic instance.
    Recover {
        #[arg(long)]
        solver: Solver,
        /// Measurements file; needs --matrix.
        #[arg(long, requires = "matrix")]
        input: Option<PathBuf>,
        /// Matrix descriptor written by `compress`.
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Ground truth to score against, for file input.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, required_unless_present = "input")]
        n: Option<usize>,
        #[arg(long, required_unless_present = "input")]
        m: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value = "gaussian")]
        scheme: Scheme,
        #[arg(long, default_value = "unit")]
        amplitude: AmplitudeLaw,
        #[arg(long, allow_negative_numbers = true)]
        snr_db: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Add the recovery time to the metrics row.
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        out: OutDir,
    },
    /// Run one detector on a sample file.
    Detect {
        #[arg(long)]
        technique: Technique,
        /// Samples: a `re,im` pair of columns, or one real column.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        threshold: Option<f64>,
        /// Derive the threshold from a false-alarm target (energy, compressive).
        #[arg(long, conflicts_with = "threshold")]
        pfa: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        noise_variance: f64,
        #[arg(long, default_value_t = 64)]
        lags: usize,
        #[arg(long, default_value_t = 4.0)]
        wavelet_scale: f64,
        #[arg(long)]
        wavelet_invert: bool,
        /// Seed of the QPSK pilot for the matched filter.
        #[arg(long, default_value_t = 0)]
        pilot_seed: u64,
        /// Matrix descriptor, for the compressive detector.
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Signal template, for the compressive detector.
        #[arg(long)]
        template: Option<PathBuf>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Blind SNR estimate of a sample file.
    EstimateSnr {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        l: usize,
        #[arg(long, default_value_t = 50)]
        k: usize,
        /// Search L and K with a particle swarm instead.
        #[arg(long)]
        tune: bool,
        #[arg(long, default_value_t = 4)]
        l_min: usize,
        #[arg(long, default_value_t = 16)]
        l_max: usize,
        #[arg(long, default_value_t = 20)]
        k_min: usize,
        #[arg(long, default_value_t = 100)]
        k_max: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutDir,
    },
    /// Run the Monte-Carlo experiment described by a config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        par: Parallelism,
        #[command(flatten)]
        out: OutDir,
    },
    /// Simulate a wideband scan, conventional against compressive.
    ScanSim {
        /// Scan config; defaults apply otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        slots: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        par: Parallelism,
        #[command(flatten)]
        out: OutDir,
    },
    /// Re-emit a result CSV as JSON or canonical CSV.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        out: OutDir,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<sparsense_core::Error> for Failure {
    fn from(e: sparsense_core::Error) -> Self {
        match e {
            sparsense_core::Error::InvalidArgument(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

/// Parse `argv` (program name first), run, and return the exit code:
/// 0 on success, 2 on bad arguments, 1 on runtime failure.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run with --help for usage");
            2
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

/// Collects outputs and writes the manifest at the end.
struct Run {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Run {
    fn start(dir: &Path, hash: String, seed: u64) -> Outcome<Self> {
        fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), manifest: RunManifest::new(hash, seed, now_rfc3339()) })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.manifest.output_paths.push(PathBuf::from(name));
        self.dir.join(name)
    }

    fn finish(self) -> Outcome<()> {
        self.manifest.finish(&self.dir)?;
        Ok(())
    }
}

fn dispatch(cmd: Command) -> Outcome<()> {
    match cmd {
        Command::Generate { n, k, amplitude, seed, out } => {
            let x = gen_sparse_signal(n, k, amplitude, seed)?;
            let doc = json!({"command": "generate", "n": n, "k": k, "amplitude": amplitude, "seed": seed});
            let mut run = Run::start(&out.out, document_hash(&doc), seed)?;
            write_columns_csv(&run.path("signal.csv"), &["x"], &[x.samples()])?;
            run.finish()
        }
        Command::Compress { input, column, scheme, m, seed, density, snr_db, noise_variance, out } => {
            let x = read_column(&input, column.as_deref())?;
            let options = MatrixOptions::with_density(density);
            let a = build_matrix(scheme, m, x.len(), seed, &options)?;
            let power = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
            let var = match (noise_variance, snr_db) {
                (Some(v), _) => v,
                (None, Some(s)) => measurement_noise_variance(power, m, s),
                (None, None) => 0.0,
            };
            let y = compress(&a, &x, var, seed)?;
            let doc = json!({"command": "compress", "input": x_digest(&x), "scheme": scheme, "m": m, "seed": seed,
                "density": density, "noise_variance": var});
            let mut run = Run::start(&out.out, document_hash(&doc), seed)?;
            write_json(&run.path("matrix.json"), &a.descriptor())?;
            write_columns_csv(&run.path("measurements.csv"), &["y"], &[&y.values])?;
            run.finish()
        }
        Command::Recover { solver, input, matrix, truth, n, m, k, scheme, amplitude, snr_db, seed, timing, out } => {
            let needs_k = matches!(solver, Solver::Cosamp | Solver::Biht);
            let (y, a, x, k, doc) = match input {
                Some(input) => {
                    let desc: MatrixDescriptor = read_json(matrix.as_deref().expect("clap enforces --matrix"))?;
                    let a = desc.build()?;
                    let y = MeasurementVector::noiseless(read_column(&input, None)?);
                    let x = truth.as_deref().map(|p| read_column(p, None)).transpose()?;
                    let k = match (k, needs_k) {
                        (Some(k), _) => k,
                        (None, false) => 0,
                        (None, true) => return Err(Failure::Usage(format!("--k is required for {solver}"))),
                    };
                    let doc = json!({"command": "recover", "solver": solver, "matrix": desc, "k": k,
                        "input": x_digest(&y.values)});
                    (y, a, x, k, doc)
                }
                None => {
                    let (n, m) = (n.expect("clap enforces --n"), m.expect("clap enforces --m"));
                    let k = k.ok_or_else(|| Failure::Usage("--k is required for a synthetic instance".into()))?;
                    let sig = gen_sparse_signal(n, k, amplitude, seed)?;
                    let a = build_matrix(scheme, m, n, seed, &MatrixOptions::default())?;
                    let var = snr_db.map_or(0.0, |s| measurement_noise_variance(sig.power(), m, s));
                    let y = compress(&a, sig.samples(), var, seed)?;
                    let doc = json!({"command": "recover", "solver": solver, "n": n, "m": m, "k": k,
                        "scheme": scheme, "amplitude": amplitude, "snr_db": snr_db.map(format_float), "seed": seed});
                    (y, a, Some(sig.into_samples()), k, doc)
                }
            };
            let outcome = solve(solver, &y, &a, k, &RecoveryParams::default())?;
            let mut run = Run::start(&out.out, document_hash(&doc), seed)?;
            if matrix.is_none() {
                write_json(&run.path("matrix.json"), &a.descriptor())?;
            }
            let mut header = vec!["hd", "sparsity"];
            let mut row = vec![outcome.hamming.to_string()];
            match &x {
                Some(x) => {
                    if x.len() != outcome.x_hat.len() {
                        return Err(Failure::Usage(format!(
                            "truth has {} samples, estimate {}",
                            x.len(),
                            outcome.x_hat.len()
                        )));
                    }
                    let truth = if solver == Solver::Biht { unit(x) } else { x.clone() };
                    let mb = evaluate_metrics_lenient(&truth, &outcome.x_hat, None, None, None)?;
                    write_columns_csv(&run.path("recovery.csv"), &["x", "x_hat"], &[x, &outcome.x_hat])?;
                    header = vec!["re", "mse", "cc", "rsnr", "hd", "sparsity"];
                    row = [mb.recovery_error, mb.mse, mb.correlation, mb.rsnr].map(format_float).to_vec();
                    row.push(outcome.hamming.to_string());
                    row.push(mb.recovered_sparsity.to_string());
                }
                None => {
                    write_columns_csv(&run.path("recovery.csv"), &["x_hat"], &[&outcome.x_hat])?;
                    row.push(outcome.x_hat.iter().filter(|v| **v != 0.0).count().to_string());
                }
            }
            if timing {
                header.push("tr_ms");
                row.push(format_float(outcome.recovery_time.as_secs_f64() * 1e3));
            }
            write_rows(&run.path("metrics.csv"), &header, [row])?;
            run.finish()
        }
        Command::Detect {
            technique,
            input,
            threshold,
            pfa,
            noise_variance,
            lags,
            wavelet_scale,
            wavelet_invert,
            pilot_seed,
            matrix,
            template,
            out,
        } => {
            let outcome = detect(DetectArgs {
                technique,
                input: &input,
                threshold,
                pfa,
                noise_variance,
                lags,
                wavelet: WaveletOpts { scale: wavelet_scale, invert: wavelet_invert },
                pilot_seed,
                matrix: matrix.as_deref(),
                template: template.as_deref(),
            })?;
            let doc = json!({"command": "detect", "technique": technique, "threshold": format_float(outcome.threshold),
                "input": input.display().to_string(), "lags": lags, "pilot_seed": pilot_seed});
            let mut run = Run::start(&out.out, document_hash(&doc), pilot_seed)?;
            write_rows(
                &run.path("detection.csv"),
                &["technique", "statistic", "threshold", "decision"],
                [vec![
                    technique.to_string(),
                    format_float(outcome.statistic),
                    format_float(outcome.threshold),
                    outcome.decision.to_string(),
                ]],
            )?;
            println!("{}", outcome.decision);
            run.finish()
        }
        Command::EstimateSnr { input, l, k, tune, l_min, l_max, k_min, k_max, seed, out } => {
            let samples = read_samples(&input)?;
            let (l, k) = if tune {
                let r = pso_tune(&samples, l_min..=l_max, k_min..=k_max, PsoOpts::default(), seed)?;
                (r.l_star, r.k_star)
            } else {
                (l, k)
            };
            let est = estimate_snr(&samples, l, k)?;
            let doc = json!({"command": "estimate-snr", "input": input.display().to_string(), "l": l, "k": k,
                "tune": tune, "seed": seed});
            let mut run = Run::start(&out.out, document_hash(&doc), seed)?;
            write_rows(
                &run.path("snr.csv"),
                &["snr_db", "noise_variance_hat", "total_power_hat", "mdl_order", "l", "k", "goodness_d", "floored"],
                [vec![
                    format_float(est.snr_db),
                    format_float(est.noise_variance_hat),
                    format_float(est.total_power_hat),
                    est.mdl_order.to_string(),
                    est.smoothing_l.to_string(),
                    est.grid_k.to_string(),
                    format_float(est.goodness_d),
                    est.floored.to_string(),
                ]],
            )?;
            println!("{} dB", format_float(est.snr_db));
            run.finish()
        }
        Command::Experiment { config, par, out } => {
            let cfg = read_config(&config)?;
            run_experiment(cfg, &par, &out.out)
        }
        Command::ScanSim { config, slots, seed, par, out } => {
            let mut cfg = match config {
                Some(p) => read_config(&p)?,
                None => ExperimentConfig::new(ExperimentKind::ScanSim),
            };
            if cfg.experiment_kind != ExperimentKind::ScanSim {
                return Err(Failure::Usage(format!("{:?} config given to scan-sim", cfg.experiment_kind)));
            }
            if let Some(s) = slots {
                cfg.scan.slots = s;
            }
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            cfg.validate()?;
            run_experiment(cfg, &par, &out.out)
        }
        Command::Report { input, format, out } => report(&input, format, &out.out),
    }
}

fn run_experiment(mut cfg: ExperimentConfig, par: &Parallelism, out: &Path) -> Outcome<()> {
    if let Some(e) = par.execution {
        cfg.execution = match e {
            ExecArg::Parallel => Execution::Parallel,
            ExecArg::Sequential => Execution::Sequential,
        };
    }
    let threads = par.threads.or_else(env_thread_cap);
    let mut run = Run::start(out, config_hash(&cfg)?, cfg.base_seed)?;
    write_json(&run.path("config.json"), &cfg)?;
    match cfg.experiment_kind {
        ExperimentKind::DetectionMc => {
            let curve = with_threads(threads, || run_detection_mc(&cfg))?;
            write_detection_csv(&run.path("detection.csv"), &curve)?;
        }
        ExperimentKind::RecoveryMc => {
            let report = with_threads(threads, || run_recovery_mc(&cfg))?;
            write_recovery_csv(&run.path("recovery.csv"), &report)?;
        }
        ExperimentKind::ScanSim => {
            let report = with_threads(threads, || run_scan_sim(&cfg))?;
            for p in [ScanPath::Conventional, ScanPath::Compressive] {
                write_scan_csv(&run.path(&format!("scan_{}.csv", p.as_str())), &report, p)?;
            }
            write_json(&run.path("occupancy.json"), &report)?;
            for p in &report.paths {
                for t in &p.techniques {
                    println!(
                        "{} {}: channels {} detection {} false {}",
                        p.path.as_str(),
                        t.technique,
                        p.channels_scanned,
                        format_float(t.detection_rate),
                        format_float(t.false_rate)
                    );
                }
            }
        }
    }
    run.finish()
}

struct DetectArgs<'a> {
    technique: Technique,
    input: &'a Path,
    threshold: Option<f64>,
    pfa: Option<f64>,
    noise_variance: f64,
    lags: usize,
    wavelet: WaveletOpts,
    pilot_seed: u64,
    matrix: Option<&'a Path>,
    template: Option<&'a Path>,
}

fn detect(a: DetectArgs<'_>) -> Outcome<DetectionOutcome> {
    let missing = |what: &str| Failure::Usage(format!("{} detection needs {what}", a.technique));
    if a.technique == Technique::Compressive {
        let desc: MatrixDescriptor = read_json(a.matrix.ok_or_else(|| missing("--matrix"))?)?;
        let omega = desc.build()?;
        let template = read_column(a.template.ok_or_else(|| missing("--template"))?, None)?;
        let y = MeasurementVector::noiseless(read_column(a.input, None)?);
        let lambda = match (a.threshold, a.pfa) {
            (Some(t), _) => t,
            (None, Some(p)) => {
                let z = compressive_weights(&omega, &template)?;
                let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                a.noise_variance.sqrt() * norm * q_inverse(p)?
            }
            (None, None) => return Err(missing("--threshold or --pfa")),
        };
        return Ok(compressive_detect(&y, &omega, &template, lambda)?);
    }
    let y = NoisySignal::from_complex(read_samples(a.input)?);
    let lambda = match (a.threshold, a.pfa) {
        (Some(t), _) => t,
        (None, Some(p)) if a.technique == Technique::Energy => energy_threshold(p, y.len(), a.noise_variance)?,
        _ => return Err(missing("--threshold")),
    };
    Ok(match a.technique {
        Technique::Energy => energy_detect(&y, lambda)?,
        Technique::Autocorr => autocorr_detect(&y, lambda)?,
        Technique::Euclid => euclid_detect(&y, lambda, a.lags)?,
        Technique::Wavelet => wavelet_detect(&y, lambda, a.wavelet)?,
        Technique::MatchedFilter => {
            let pilot = gen_pilot_qpsk(y.len(), a.pilot_seed)?;
            matched_filter_detect(&y, &pilot, lambda)?
        }
        Technique::Compressive => unreachable!(),
    })
}

/// Complex samples from `re,im` columns, or a single real column.
fn read_samples(path: &Path) -> Outcome<Vec<Complex64>> {
    let (header, cols) = read_columns_csv(path)?;
    let col = |name: &str| header.iter().position(|h| h == name);
    match (col("re"), col("im")) {
        (Some(r), Some(i)) => {
            if cols[r].len() != cols[i].len() {
                return Err(Failure::Usage(format!("{}: re and im lengths differ", path.display())));
            }
            Ok(cols[r].iter().zip(&cols[i]).map(|(&re, &im)| Complex64::new(re, im)).collect())
        }
        _ => match cols.first() {
            Some(c) => Ok(c.iter().map(|&v| Complex64::new(v, 0.0)).collect()),
            None => Err(Failure::Usage(format!("{}: no samples", path.display()))),
        },
    }
}

fn report(input: &Path, format: Format, out: &Path) -> Outcome<()> {
    let header = fs::read_to_string(input)
        .map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", input.display())))?
        .lines()
        .next()
        .unwrap_or("")
        .to_string();
    let cols: Vec<&str> = header.split(',').collect();
    let doc = json!({"command": "report", "input": input.display().to_string(), "format": format!("{format:?}")});
    let mut run = Run::start(out, document_hash(&doc), 0)?;
    let name = if format == Format::Json { "report.json" } else { "report.csv" };
    let target = run.path(name);
    let records = if cols == DETECTION_COLUMNS {
        let curve = read_detection_csv(input)?;
        match format {
            Format::Json => write_json(&target, &curve.points)?,
            Format::Csv => write_detection_csv(&target, &curve)?,
        }
        curve.points.len()
    } else if cols == RECOVERY_COLUMNS {
        let rep = read_recovery_csv(input)?;
        match format {
            Format::Json => write_json(&target, &rep.cells)?,
            Format::Csv => write_recovery_csv(&target, &rep)?,
        }
        rep.cells.len()
    } else if cols == SCAN_COLUMNS {
        let rows = read_scan_csv(input)?;
        match format {
            Format::Json => write_json(&target, &rows)?,
            Format::Csv => write_rows(
                &target,
                &SCAN_COLUMNS,
                rows.iter().map(|r| {
                    vec![
                        r.slot.to_string(),
                        r.channel.to_string(),
                        r.technique.to_string(),
                        r.decision.to_string(),
                        r.truth.to_string(),
                        format_float(r.est_snr_db),
                    ]
                }),
            )?,
        }
        rows.len()
    } else {
        return Err(Failure::Usage(format!("{}: not a detection, recovery or scan CSV", input.display())));
    };
    println!("{records} records");
    run.finish()
}

fn unit(x: &[f64]) -> Vec<f64> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter().map(|v| v / norm).collect()
    } else {
        x.to_vec()
    }
}

/// Stable stand-in for input data inside a hashed document.
fn x_digest(x: &[f64]) -> String {
    let tokens: Vec<String> = x.iter().map(|v| format_float(*v)).collect();
    document_hash(&json!(tokens))
}
