//! Acceptance suite. Runs every criterion and prints one PASS/FAIL line each,
//! then a summary. Set `ACCEPTANCE_STRICT=1` to exit nonzero on any failure;
//! `ACCEPTANCE_ONLY=N` runs a single criterion.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sparsense_core::detect::{closed_form_roc, energy_threshold, RocTechnique, Technique};
use sparsense_core::harness::{
    measurement_noise_variance, run_detection_mc, run_recovery_mc, run_scan_sim, solve, ExperimentConfig,
    ExperimentKind, PdPfaCurve, RecoveryParams, RecoveryReport, ScanPath,
};
use sparsense_core::io;
use sparsense_core::linalg::lstsq;
use sparsense_core::par::{with_threads, Execution};
use sparsense_core::recovery::{
    basis_pursuit, biht_recover, blind_penalty, cosamp, omp, one_bit_quantize, sign_mismatches, Solver, SolverOpts,
    StoppingRule,
};
use sparsense_core::sensing::{build_matrix, compress, MatrixOptions, RowSelection, Scheme, SensingMatrix};
use sparsense_core::signal::{correlation, gen_sparse_signal, recovered_sparsity, recovery_error, AmplitudeLaw};
use sparsense_core::snr::{estimate_snr, mdl_order, pso_fitness, pso_tune, synthetic_tone, PsoFitness, PsoOpts};

type Check = (bool, String);
type Criterion = (u32, &'static str, Duration, fn() -> Check);

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `b` is no larger than `a` beyond two binomial standard deviations.
fn within_2sigma_le(a: f64, b: f64, trials: usize) -> bool {
    let var = (a * (1.0 - a) + b * (1.0 - b)) / trials as f64;
    b <= a + 2.0 * var.sqrt()
}

fn detection_cfg(tech: Technique, n: usize, snr: Vec<f64>, factors: Vec<f64>, trials: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(ExperimentKind::DetectionMc);
    c.techniques = vec![tech];
    c.samples_n = vec![n];
    c.snr_grid_db = snr;
    c.threshold_factors = factors;
    c.trials = trials;
    c
}

fn criterion_1() -> Check {
    let n = 1000;
    let trials = 10_000;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for pfa in [0.01, 0.1] {
        let mut cfg = detection_cfg(Technique::Energy, n, vec![-10.0, -5.0, 0.0], vec![1.0], trials);
        cfg.detection.pfa_target = pfa;
        let curve = run_detection_mc(&cfg).expect("energy MC");
        let lambda = energy_threshold(pfa, n, 1.0).unwrap();
        for p in &curve.points {
            let cf = closed_form_roc(RocTechnique::Energy, n, 1.0, Some(p.snr_db), None, lambda).unwrap();
            let e = (p.pd - cf.pd).abs().max((p.pfa - cf.pfa).abs());
            worst = worst.max(e);
            ok &= e <= 0.02;
        }
    }
    (ok, format!("max |MC - closed form| = {worst:.4} (tol 0.02)"))
}

fn criterion_2() -> Check {
    let trials = 1000;
    let snrs = vec![-20.0, -16.0, -12.0, -8.0, -4.0];
    let factors = vec![1.0, 2.0, 3.0, 4.0];
    let curve = run_detection_mc(&detection_cfg(Technique::MatchedFilter, 1000, snrs.clone(), factors.clone(), trials))
        .expect("matched filter MC");
    let pt = |snr: f64, f: f64| curve.find(Technique::MatchedFilter, snr, f).unwrap();
    let pd_m4 = pt(-4.0, 1.0).pd;
    let pd_m20 = pt(-20.0, 1.0).pd;
    let mut monotone = true;
    for &snr in &snrs {
        for w in factors.windows(2) {
            let (a, b) = (pt(snr, w[0]), pt(snr, w[1]));
            monotone &= within_2sigma_le(a.pd, b.pd, trials) && within_2sigma_le(a.pfa, b.pfa, trials);
        }
    }
    let ok = pd_m4 >= 0.95 && pd_m4 > pd_m20 && monotone;
    (ok, format!("Pd(-4 dB) = {pd_m4:.3}, Pd(-20 dB) = {pd_m20:.3}, factor monotone = {monotone}"))
}

/// `x̂` from least squares on the true support.
fn oracle(a: &SensingMatrix, support: &[usize], y: &[f64]) -> Vec<f64> {
    let sub = a.to_dense().select_columns(support);
    let c = lstsq(&sub, y).expect("oracle least squares");
    let mut x = vec![0.0; a.n()];
    for (&j, v) in support.iter().zip(c) {
        x[j] = v;
    }
    x
}

fn criterion_3() -> Check {
    let (n, k) = (256, 10);
    let mut counts = [0usize; 2];
    let mut oracle_ok = true;
    for (idx, m) in [100usize, 120].into_iter().enumerate() {
        for seed in 0..100u64 {
            let a = build_matrix(Scheme::Gaussian, m, n, seed, &MatrixOptions::default()).unwrap();
            let x = gen_sparse_signal(n, k, AmplitudeLaw::Gaussian, seed).unwrap();
            let y = compress(&a, x.samples(), 0.0, seed).unwrap();
            let x_or = oracle(&a, x.support(), &y.values);
            oracle_ok &= recovery_error(x.samples(), &x_or).unwrap() < 1e-9;
            let x_hat = if idx == 0 {
                omp(&y, &a, StoppingRule::Sparsity(k)).unwrap().x_hat
            } else {
                cosamp(&y, &a, k, SolverOpts::default()).unwrap().x_hat
            };
            let re = recovery_error(x.samples(), &x_hat).unwrap();
            let re_or = recovery_error(&x_or, &x_hat).unwrap();
            if re < 1e-6 && re_or < 1e-6 {
                counts[idx] += 1;
            }
        }
    }
    let ok = counts[0] >= 95 && counts[1] >= 90 && oracle_ok;
    (
        ok,
        format!(
            "exact: OMP {}/100 (need 95), CoSaMP {}/100 (need 90), oracle exact = {oracle_ok}",
            counts[0], counts[1]
        ),
    )
}

struct SeedRun {
    re: [f64; 3],
    sparsity: usize,
}

/// Bayesian, BP and OMP on one seed, with the sweep's solver settings.
fn three_solvers(scheme: Scheme, n: usize, k: usize, m: usize, snr: f64, seed: u64) -> SeedRun {
    let p = RecoveryParams::default();
    let a = build_matrix(scheme, m, n, seed, &MatrixOptions::default()).unwrap();
    let x = gen_sparse_signal(n, k, AmplitudeLaw::Unit, seed).unwrap();
    let y = compress(&a, x.samples(), measurement_noise_variance(x.power(), m, snr), seed).unwrap();
    let mut re = [0.0; 3];
    let mut sparsity = 0;
    for (i, s) in [Solver::Bayesian, Solver::BasisPursuit, Solver::Omp].into_iter().enumerate() {
        let out = solve(s, &y, &a, k, &p).unwrap();
        re[i] = recovery_error(x.samples(), &out.x_hat).unwrap();
        if i == 0 {
            sparsity = recovered_sparsity(&out.x_hat, None);
        }
    }
    SeedRun { re, sparsity }
}

fn criterion_4() -> Check {
    let mut ok = true;
    let mut detail = Vec::new();
    for (scheme, n, k, m) in [(Scheme::Circulant, 200, 15, 80), (Scheme::Toeplitz, 400, 20, 123)] {
        let runs: Vec<SeedRun> = (0..50).map(|s| three_solvers(scheme, n, k, m, 2.0, s)).collect();
        let med: Vec<f64> = (0..3).map(|i| median(runs.iter().map(|r| r.re[i]).collect())).collect();
        let within = runs.iter().filter(|r| r.sparsity.abs_diff(k) <= 2).count();
        let case_ok = med[0] < med[1] && med[0] < med[2] && within * 100 >= 80 * runs.len();
        let m123 = if m == 123 { med[0] < 0.05 } else { true };
        ok &= case_ok && m123;
        detail.push(format!(
            "{scheme} n={n} m={m}: median Re bayes {:.2}% bp {:.2}% omp {:.2}%, sparsity within 2 in {within}/50",
            100.0 * med[0],
            100.0 * med[1],
            100.0 * med[2]
        ));
    }
    (ok, detail.join("; "))
}

fn recovery_cfg(scheme: Scheme, n: Vec<usize>, k: usize, snr: Vec<f64>, trials: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(ExperimentKind::RecoveryMc);
    c.matrix_scheme = scheme;
    c.samples_n = n;
    c.sparsity_k = vec![k];
    c.snr_grid_db = snr;
    c.trials = trials;
    c
}

fn criterion_5() -> Check {
    let solvers = [Solver::Bayesian, Solver::BasisPursuit, Solver::Omp];
    let snrs: Vec<f64> = (-10..=10).step_by(2).map(f64::from).collect();
    let mut cfg = recovery_cfg(Scheme::Toeplitz, vec![400], 20, snrs.clone(), 30);
    cfg.measurements_m = vec![123];
    cfg.solvers = solvers.to_vec();
    let r = run_recovery_mc(&cfg).expect("snr sweep");
    let re = |s: Solver, snr: f64| r.cell(s, 400, 20, 123, snr).unwrap().mean_re;
    let mut snr_monotone = true;
    let mut ordering = true;
    for s in solvers {
        for w in snrs.windows(2) {
            snr_monotone &= re(s, w[1]) <= re(s, w[0]);
        }
    }
    for &snr in snrs.iter().filter(|v| **v <= 4.0) {
        ordering &= re(Solver::Bayesian, snr) <= re(Solver::BasisPursuit, snr)
            && re(Solver::Bayesian, snr) <= re(Solver::Omp, snr);
    }

    let ns = vec![50usize, 100, 200, 400];
    let mut cfg = recovery_cfg(Scheme::Circulant, ns.clone(), 5, vec![2.0], 30);
    cfg.measurements_m.clear();
    cfg.measurement_ratio = Some(0.4);
    cfg.solvers = vec![Solver::BasisPursuit, Solver::Bayesian];
    let r2 = run_recovery_mc(&cfg).expect("length sweep");
    let mut n_monotone = true;
    for s in [Solver::BasisPursuit, Solver::Bayesian] {
        let mse: Vec<f64> =
            ns.iter().map(|&n| r2.cells.iter().find(|c| c.solver == s && c.n == n).unwrap().mean_mse).collect();
        n_monotone &= mse.windows(2).all(|w| w[1] <= w[0]);
    }
    let lo = |s| 100.0 * re(s, -10.0);
    let ok = snr_monotone && ordering && n_monotone;
    (
        ok,
        format!(
            "Re nonincreasing in SNR = {snr_monotone}, bayes lowest for SNR <= 4 dB = {ordering}, MSE nonincreasing in N = {n_monotone}; Re at -10 dB: bayes {:.1}% bp {:.1}% omp {:.1}%",
            lo(Solver::Bayesian),
            lo(Solver::BasisPursuit),
            lo(Solver::Omp)
        ),
    )
}

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for case in 0..100u64 {
        let n = rng.random_range(8..300);
        let m = rng.random_range(1..=n);
        let scheme = if case % 2 == 0 { Scheme::Circulant } else { Scheme::Toeplitz };
        let row_selection = if rng.random::<bool>() { RowSelection::First } else { RowSelection::Random };
        let density = rng.random_range(0.05..=1.0);
        let opts = MatrixOptions { density, row_selection, generator: None };
        let a = build_matrix(scheme, m, n, case, &opts).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d = a.to_dense();
        let ax = &d * DVector::from_column_slice(&x);
        let atv = d.transpose() * DVector::from_column_slice(&v);
        let e1 = a.apply(&x).unwrap().iter().zip(ax.iter()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        let e2 = a.apply_transpose(&v).unwrap().iter().zip(atv.iter()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        worst = worst.max(e1).max(e2);
    }

    let n = 4096;
    let m = n / 4;
    let mut speedups = Vec::new();
    for scheme in [Scheme::Circulant, Scheme::Toeplitz] {
        let a = build_matrix(scheme, m, n, 1, &MatrixOptions::default()).unwrap();
        let dense: DMatrix<f64> = a.to_dense();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let xv = DVector::from_column_slice(&x);
        let mut ts = Vec::new();
        let mut td = Vec::new();
        for _ in 0..20 {
            let t = Instant::now();
            std::hint::black_box(a.apply(std::hint::black_box(&x)).unwrap());
            ts.push(t.elapsed().as_secs_f64());
            let t = Instant::now();
            std::hint::black_box(&dense * std::hint::black_box(&xv));
            td.push(t.elapsed().as_secs_f64());
        }
        speedups.push((scheme, median(td) / median(ts)));
    }
    let ok = worst <= 1e-10 && speedups.iter().all(|(_, s)| *s >= 5.0);
    let sp: Vec<String> = speedups.iter().map(|(s, v)| format!("{s} {v:.1}x")).collect();
    (ok, format!("max |structured - dense| = {worst:.2e}; median speedup at n=4096: {}", sp.join(", ")))
}

fn criterion_7() -> Check {
    let opts = SolverOpts::new(300, 0.0);
    let mut norm_ok = true;
    let mut cc = Vec::new();
    for seed in 0..50u64 {
        let (n, k, m) = (2000, 50, 500);
        let a = build_matrix(Scheme::Gaussian, m, n, seed, &MatrixOptions::default()).unwrap();
        let x = gen_sparse_signal(n, k, AmplitudeLaw::Gaussian, seed).unwrap();
        let signs = one_bit_quantize(&compress(&a, x.samples(), 0.0, seed).unwrap()).unwrap();
        let r = biht_recover(&signs, &a, k, opts).unwrap();
        let norm = r.x_hat.iter().map(|v| v * v).sum::<f64>().sqrt();
        norm_ok &= (norm - 1.0).abs() <= 1e-12;
        cc.push(correlation(x.samples(), &r.x_hat).unwrap());
    }
    let med_cc = median(cc);

    let mut hd = Vec::new();
    let mut t_biht = Vec::new();
    let mut t_bp = Vec::new();
    for n in [500usize, 1000, 2000] {
        let (k, m) = (n / 40, n / 4);
        let mut h = Vec::new();
        let mut tb = Vec::new();
        let mut tp = Vec::new();
        for seed in 0..20u64 {
            let a = build_matrix(Scheme::Gaussian, m, n, seed, &MatrixOptions::default()).unwrap();
            let x = gen_sparse_signal(n, k, AmplitudeLaw::Gaussian, seed).unwrap();
            let y = compress(&a, x.samples(), 0.0, seed).unwrap();
            let signs = one_bit_quantize(&y).unwrap();
            let t = Instant::now();
            let r = biht_recover(&signs, &a, k, opts).unwrap();
            tb.push(t.elapsed().as_secs_f64());
            let norm = r.x_hat.iter().map(|v| v * v).sum::<f64>().sqrt();
            norm_ok &= (norm - 1.0).abs() <= 1e-12;
            h.push(sign_mismatches(&a, &r.x_hat, &signs).unwrap() as f64);
            if seed < 5 {
                let t = Instant::now();
                let z = blind_penalty(&y, &a).unwrap();
                std::hint::black_box(basis_pursuit(&y, &a, z, SolverOpts::default()).unwrap());
                tp.push(t.elapsed().as_secs_f64());
            }
        }
        hd.push(h.iter().sum::<f64>() / h.len() as f64);
        t_biht.push(median(tb));
        t_bp.push(median(tp));
    }
    let hd_ok = hd.windows(2).all(|w| w[1] <= w[0]);
    let growth_biht = t_biht[2] / t_biht[0];
    let growth_bp = t_bp[2] / t_bp[0];
    let ok = norm_ok && med_cc >= 0.9 && hd_ok && growth_biht < growth_bp;
    (
        ok,
        format!(
            "unit norm = {norm_ok}, median correlation {med_cc:.3}; mean H_d over n=500/1000/2000: {:.2}/{:.2}/{:.2}; time growth 500->2000: BIHT {growth_biht:.2}x, BPD {growth_bp:.2}x",
            hd[0], hd[1], hd[2]
        ),
    )
}

/// Minimum description length by direct evaluation of its definition.
fn mdl_brute(eig: &[f64], n: usize) -> usize {
    let l = eig.len();
    let nf = n as f64;
    let mut best = (0, f64::INFINITY);
    for m in 0..l {
        let tail = &eig[m..];
        let len = tail.len() as f64;
        let geo = (tail.iter().map(|v| v.ln()).sum::<f64>() / len).exp();
        let arith = tail.iter().sum::<f64>() / len;
        let cost = -(len * nf) * (geo / arith).ln() + 0.5 * (m * (2 * l - m)) as f64 * nf.ln();
        if cost < best.1 {
            best = (m, cost);
        }
    }
    best.0
}

fn criterion_8() -> Check {
    let mut errs = Vec::new();
    for snr in [0.0, 5.0, 10.0] {
        let e: Vec<f64> = (0..50u64)
            .map(|seed| {
                let s = synthetic_tone(5000, snr, 0.1, seed);
                (estimate_snr(&s, 10, 50).unwrap().snr_db - snr).abs()
            })
            .collect();
        errs.push(median(e));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let mut mdl_match = 0;
    for _ in 0..1000 {
        let l = rng.random_range(2..=16);
        let n = rng.random_range(l..=4 * l + 200);
        let spikes = rng.random_range(0..l);
        let mut eig: Vec<f64> = (0..l)
            .map(|i| {
                let base = rng.random_range(0.5..1.5);
                if i < spikes {
                    base * rng.random_range(1.0..50.0)
                } else {
                    base
                }
            })
            .collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        if mdl_order(&eig, n).unwrap() == mdl_brute(&eig, n) {
            mdl_match += 1;
        }
    }

    let mut pso_match = 0;
    for seed in 0..100u64 {
        let s = synthetic_tone(2000, 5.0, 0.1, seed);
        let exhaustive = (8..=12)
            .map(|l| (l, pso_fitness(&s, l, 50, PsoFitness::Goodness)))
            .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b })
            .0;
        let r = pso_tune(&s, 8..=12, 50..=50, PsoOpts::default(), seed).unwrap();
        if r.l_star == exhaustive {
            pso_match += 1;
        }
    }
    let ok = errs.iter().all(|e| *e <= 1.5) && mdl_match == 1000 && pso_match >= 90;
    (
        ok,
        format!(
            "median |error| at 0/5/10 dB: {:.2}/{:.2}/{:.2} dB; MDL matches {mdl_match}/1000; PSO matches grid {pso_match}/100",
            errs[0], errs[1], errs[2]
        ),
    )
}

fn criterion_9() -> Check {
    let cfg = ExperimentConfig::new(ExperimentKind::ScanSim);
    let r = run_scan_sim(&cfg).expect("scan simulation");
    let mut ok = true;
    let mut detail = Vec::new();
    for path in [ScanPath::Compressive, ScanPath::Conventional] {
        let p = r.path(path).unwrap();
        let energy = p.technique(Technique::Energy).unwrap();
        let min_occ = energy.occupancy_pct.iter().copied().fold(f64::INFINITY, f64::min);
        let eu = p.technique(Technique::Euclid).unwrap();
        let ac = p.technique(Technique::Autocorr).unwrap();
        let mut ordering = true;
        for (e, a) in eu.rates_by_snr.iter().zip(&ac.rates_by_snr) {
            if e.snr_db <= -10.0 {
                ordering &= e.detection_rate >= a.detection_rate;
            }
        }
        let max_pfa = eu.rates_by_snr.iter().map(|s| s.false_rate).fold(0.0, f64::max);
        ok &= min_occ >= 99.0 && ordering && max_pfa <= 0.05;
        detail.push(format!(
            "{}: energy min occupancy {min_occ:.1}%, euclid >= autocorr at <= -10 dB = {ordering}, euclid max Pfa {max_pfa:.3}, euclid/autocorr Pd {:.3}/{:.3}",
            path.as_str(),
            eu.detection_rate,
            ac.detection_rate
        ));
    }
    let ratio = r.budget_ratio();
    ok &= ratio >= 1.5;
    detail.push(format!("channels per budget ratio {ratio:.2}"));
    (ok, detail.join("; "))
}

fn csv_bytes(dir: &std::path::Path, tag: &str, curve: Option<&PdPfaCurve>, rec: Option<&RecoveryReport>) -> Vec<u8> {
    let p = dir.join(format!("{tag}.csv"));
    if let Some(c) = curve {
        io::write_detection_csv(&p, c).unwrap();
    }
    if let Some(r) = rec {
        io::write_recovery_csv(&p, r).unwrap();
    }
    std::fs::read(p).unwrap()
}

fn criterion_10() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let mut det = detection_cfg(Technique::MatchedFilter, 500, vec![-12.0, -6.0], vec![1.0, 2.0], 300);
    det.techniques = vec![Technique::MatchedFilter, Technique::Energy, Technique::Euclid];
    let mut rec = recovery_cfg(Scheme::Circulant, vec![128], 6, vec![0.0, 10.0], 8);
    rec.measurements_m = vec![60];
    rec.solvers = vec![Solver::Bayesian, Solver::BasisPursuit, Solver::Omp, Solver::Cosamp, Solver::Biht];
    let mut scan = ExperimentConfig::new(ExperimentKind::ScanSim);
    scan.scan.slots = 3;

    let mut outputs: Vec<Vec<Vec<u8>>> = Vec::new();
    for (exec, threads) in [
        (Execution::Parallel, None),
        (Execution::Parallel, Some(1)),
        (Execution::Sequential, None),
        (Execution::Parallel, Some(3)),
    ] {
        let (d, r, s) = with_threads(threads, || {
            let mut d = det.clone();
            d.execution = exec;
            let mut r = rec.clone();
            r.execution = exec;
            let mut s = scan.clone();
            s.execution = exec;
            (run_detection_mc(&d).unwrap(), run_recovery_mc(&r).unwrap(), run_scan_sim(&s).unwrap())
        });
        let sp = dir.path().join("scan.csv");
        io::write_scan_csv(&sp, &s, ScanPath::Compressive).unwrap();
        let mut scan_bytes = std::fs::read(&sp).unwrap();
        io::write_scan_csv(&sp, &s, ScanPath::Conventional).unwrap();
        scan_bytes.extend(std::fs::read(&sp).unwrap());
        outputs.push(vec![
            csv_bytes(dir.path(), "det", Some(&d), None),
            csv_bytes(dir.path(), "rec", None, Some(&r)),
            scan_bytes,
        ]);
    }
    let identical = outputs.windows(2).all(|w| w[0] == w[1]);
    let sizes: Vec<usize> = outputs[0].iter().map(|b| b.len()).collect();
    (
        identical,
        format!("detection/recovery/scan CSVs identical across 4 execution setups = {identical} (bytes {sizes:?})"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "closed-form vs Monte-Carlo energy ROC", Duration::from_secs(30), criterion_1),
        (2, "matched filter with quiet-time threshold", Duration::from_secs(60), criterion_2),
        (3, "exact recovery regime (OMP, CoSaMP)", Duration::from_secs(60), criterion_3),
        (4, "Bayesian superiority on structured matrices", Duration::from_secs(300), criterion_4),
        (5, "noise-robustness curves", Duration::from_secs(600), criterion_5),
        (6, "structured matrix accuracy and speed", Duration::from_secs(60), criterion_6),
        (7, "one-bit compressive sensing", Duration::from_secs(300), criterion_7),
        (8, "blind SNR estimator", Duration::from_secs(180), criterion_8),
        (9, "wideband scan simulator", Duration::from_secs(300), criterion_9),
        (10, "determinism across thread counts", Duration::from_secs(600), criterion_10),
    ];
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let pass = ok && in_time;
        failed += usize::from(!pass);
        println!(
            "criterion {id:>2} {}: {name}: {detail}; {:.1} s (limit {} s{})",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs(),
            if in_time { "" } else { ", exceeded" }
        );
    }
    if failed == 0 {
        println!("all acceptance criteria passed");
        return;
    }
    println!("{failed} acceptance criteria failed");
    if std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
