use std::fs;
use std::path::Path;

use sparsense_cli::run_cli;
use sparsense_core::io::{format_float, read_json, write_rows, RunManifest};
use sparsense_core::snr::synthetic_tone;
use tempfile::TempDir;

fn run(args: &[&str]) -> i32 {
    run_cli(std::iter::once("sparsense").chain(args.iter().copied()))
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn manifest(dir: &Path) -> RunManifest {
    read_json(&dir.join("manifest.json")).unwrap()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no {name} in {header:?}"));
    lines.map(|l| l.split(',').nth(i).unwrap().parse().unwrap()).collect()
}

#[test]
fn recover_synthetic_omp() {
    let tmp = TempDir::new().unwrap();
    let out = out_arg(tmp.path());
    let code =
        run(&["recover", "--solver", "omp", "--n", "256", "--k", "10", "--m", "100", "--seed", "7", "--out", &out]);
    assert_eq!(code, 0);
    let x = column(&tmp.path().join("recovery.csv"), "x");
    let x_hat = column(&tmp.path().join("recovery.csv"), "x_hat");
    assert_eq!(x.len(), 256);
    assert_eq!(x_hat.len(), 256);
    let re = column(&tmp.path().join("metrics.csv"), "re");
    assert_eq!(re.len(), 1);
    assert!(re[0] < 1e-6, "re = {}", re[0]);
    let m = manifest(tmp.path());
    assert_eq!(m.base_seed, 7);
    for p in &m.output_paths {
        assert!(tmp.path().join(p).exists(), "{p:?}");
    }
    assert!(m.output_paths.iter().any(|p| p == Path::new("metrics.csv")));
}

#[test]
fn generate_compress_recover_pipeline() {
    let tmp = TempDir::new().unwrap();
    let sig = tmp.path().join("sig");
    let meas = tmp.path().join("meas");
    let rec = tmp.path().join("rec");
    assert_eq!(run(&["generate", "--n", "200", "--k", "8", "--seed", "3", "--out", &out_arg(&sig)]), 0);
    let signal = sig.join("signal.csv");
    assert_eq!(
        run(&[
            "compress",
            "--input",
            signal.to_str().unwrap(),
            "--scheme",
            "toeplitz",
            "--m",
            "90",
            "--seed",
            "3",
            "--out",
            &out_arg(&meas)
        ]),
        0
    );
    let code = run(&[
        "recover",
        "--solver",
        "bayesian",
        "--input",
        meas.join("measurements.csv").to_str().unwrap(),
        "--matrix",
        meas.join("matrix.json").to_str().unwrap(),
        "--truth",
        signal.to_str().unwrap(),
        "--out",
        &out_arg(&rec),
    ]);
    assert_eq!(code, 0);
    let re = column(&rec.join("metrics.csv"), "re");
    assert!(re[0] < 1e-2, "re = {}", re[0]);
    let sparsity = column(&rec.join("metrics.csv"), "sparsity");
    assert_eq!(sparsity[0], 8.0);
}

#[test]
fn cosamp_from_files_needs_k() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(run(&["generate", "--n", "64", "--k", "3", "--out", &out_arg(tmp.path())]), 0);
    let signal = tmp.path().join("signal.csv");
    assert_eq!(run(&["compress", "--input", signal.to_str().unwrap(), "--m", "32", "--out", &out_arg(tmp.path())]), 0);
    let y = tmp.path().join("measurements.csv");
    let a = tmp.path().join("matrix.json");
    let rec = tmp.path().join("rec");
    let base = ["recover", "--solver", "cosamp", "--input", y.to_str().unwrap(), "--matrix", a.to_str().unwrap()];
    let mut without_k = base.to_vec();
    without_k.extend(["--out", rec.to_str().unwrap()]);
    assert_eq!(run(&without_k), 2);
    let mut with_k = base.to_vec();
    with_k.extend(["--k", "3", "--out", rec.to_str().unwrap()]);
    assert_eq!(run(&with_k), 0);
    assert_eq!(column(&rec.join("metrics.csv"), "sparsity")[0], 3.0);
}

fn detection_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("detect.json");
    fs::write(
        &path,
        r#"{
  "schema": 1,
  "experiment_kind": "detection_mc",
  "trials": 200,
  "samples_n": 256,
  "snr_grid_db": [-10, -5, 0],
  "threshold_factors": [1.0, 2.0],
  "techniques": ["energy", "matched_filter"],
  "base_seed": 11
}"#,
    )
    .unwrap();
    path
}

#[test]
fn experiment_twice_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = detection_config(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(run(&["experiment", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&a)]), 0);
    assert_eq!(
        run(&[
            "experiment",
            "--config",
            cfg.to_str().unwrap(),
            "--execution",
            "sequential",
            "--threads",
            "1",
            "--out",
            &out_arg(&b)
        ]),
        0
    );
    let da = fs::read(a.join("detection.csv")).unwrap();
    let db = fs::read(b.join("detection.csv")).unwrap();
    assert_eq!(da, db);
    let pd = column(&a.join("detection.csv"), "pd");
    assert_eq!(pd.len(), 2 * 3 * 2);
    assert!(pd.iter().all(|p| (0.0..=1.0).contains(p)));
}

#[test]
fn config_hash_ignores_key_order_and_whitespace() {
    let tmp = TempDir::new().unwrap();
    let one = tmp.path().join("one.json");
    let two = tmp.path().join("two.json");
    fs::write(&one, r#"{"experiment_kind":"recovery_mc","solvers":["omp"],"trials":2,"samples_n":[64],"sparsity_k":[3],"measurements_m":[32],"base_seed":5}"#).unwrap();
    fs::write(
        &two,
        "{\n  \"base_seed\": 5,\n  \"measurements_m\": [32],\n  \"sparsity_k\": [3],\n  \"samples_n\": [64],\n  \"trials\": 2,\n  \"solvers\": [\"omp\"],\n  \"experiment_kind\": \"recovery_mc\"\n}\n",
    )
    .unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(run(&["experiment", "--config", one.to_str().unwrap(), "--out", &out_arg(&a)]), 0);
    assert_eq!(run(&["experiment", "--config", two.to_str().unwrap(), "--out", &out_arg(&b)]), 0);
    assert_eq!(manifest(&a).config_hash, manifest(&b).config_hash);
    assert_eq!(manifest(&a).config_hash.len(), 64);
    assert_eq!(fs::read(a.join("recovery.csv")).unwrap(), fs::read(b.join("recovery.csv")).unwrap());
}

#[test]
fn detect_threshold_flip() {
    let tmp = TempDir::new().unwrap();
    let zeros = tmp.path().join("zeros.csv");
    write_rows(&zeros, &["value"], (0..64).map(|_| vec!["0".to_string()])).unwrap();
    let lo = tmp.path().join("lo");
    let hi = tmp.path().join("hi");
    let z = zeros.to_str().unwrap();
    assert_eq!(
        run(&["detect", "--technique", "energy", "--threshold", "-1e9", "--input", z, "--out", &out_arg(&lo)]),
        0
    );
    assert_eq!(
        run(&["detect", "--technique", "energy", "--threshold", "1e9", "--input", z, "--out", &out_arg(&hi)]),
        0
    );
    let decision = |d: &Path| {
        let text = fs::read_to_string(d.join("detection.csv")).unwrap();
        text.lines().nth(1).unwrap().split(',').nth(3).unwrap().to_string()
    };
    assert_eq!(decision(&lo), "occupied");
    assert_eq!(decision(&hi), "idle");
}

#[test]
fn detect_energy_from_pfa() {
    let tmp = TempDir::new().unwrap();
    let zeros = tmp.path().join("zeros.csv");
    write_rows(&zeros, &["value"], (0..512).map(|_| vec!["0".to_string()])).unwrap();
    let code = run(&[
        "detect",
        "--technique",
        "energy",
        "--pfa",
        "0.1",
        "--input",
        zeros.to_str().unwrap(),
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert_eq!(code, 0);
    let t = column(&tmp.path().join("detection.csv"), "threshold");
    assert!(t[0] > 512.0);
    let code = run(&[
        "detect",
        "--technique",
        "euclid",
        "--pfa",
        "0.1",
        "--input",
        zeros.to_str().unwrap(),
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn estimate_snr_of_a_tone() {
    let tmp = TempDir::new().unwrap();
    let tone = synthetic_tone(5000, 5.0, 0.1, 4);
    let path = tmp.path().join("tone.csv");
    write_rows(&path, &["re", "im"], tone.iter().map(|c| vec![format_float(c.re), format_float(c.im)])).unwrap();
    assert_eq!(run(&["estimate-snr", "--input", path.to_str().unwrap(), "--out", &out_arg(tmp.path())]), 0);
    let snr = column(&tmp.path().join("snr.csv"), "snr_db");
    assert!((snr[0] - 5.0).abs() < 1.0, "{}", snr[0]);
}

#[test]
fn scan_sim_writes_both_paths() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(run(&["scan-sim", "--slots", "2", "--seed", "9", "--out", &out_arg(&a)]), 0);
    assert_eq!(
        run(&["scan-sim", "--slots", "2", "--seed", "9", "--execution", "sequential", "--out", &out_arg(&b)]),
        0
    );
    for name in ["scan_conventional.csv", "scan_compressive.csv"] {
        let bytes = fs::read(a.join(name)).unwrap();
        assert_eq!(bytes, fs::read(b.join(name)).unwrap(), "{name}");
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with("slot,channel,technique,decision,truth,est_snr_db"));
    }
    assert!(a.join("occupancy.json").exists());
}

#[test]
fn report_mirrors_csv_as_json() {
    let tmp = TempDir::new().unwrap();
    let cfg = detection_config(tmp.path());
    let exp = tmp.path().join("exp");
    assert_eq!(run(&["experiment", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&exp)]), 0);
    let rep = tmp.path().join("rep");
    let input = exp.join("detection.csv");
    assert_eq!(run(&["report", "--input", input.to_str().unwrap(), "--out", &out_arg(&rep)]), 0);
    let json: serde_json::Value = read_json(&rep.join("report.json")).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 12);
    assert_eq!(run(&["report", "--input", input.to_str().unwrap(), "--format", "csv", "--out", &out_arg(&rep)]), 0);
    assert_eq!(fs::read(rep.join("report.csv")).unwrap(), fs::read(&input).unwrap());
}

#[test]
fn usage_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let out = out_arg(tmp.path());
    assert_eq!(run(&["frobnicate"]), 2);
    assert_eq!(run(&[]), 2);
    assert_eq!(run(&["generate", "--n", "10", "--k", "2", "--bogus", "--out", &out]), 2);
    assert_eq!(run(&["recover", "--solver", "omp", "--out", &out]), 2);
    assert_eq!(run(&["recover", "--solver", "nope", "--n", "10", "--m", "5", "--k", "1", "--out", &out]), 2);
    assert_eq!(run(&["recover", "--solver", "omp", "--n", "10", "--m", "20", "--k", "1", "--out", &out]), 2);
    assert_eq!(run(&["--help"]), 0);
}

#[test]
fn runtime_errors_exit_1() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("missing.json");
    assert_eq!(run(&["experiment", "--config", missing.to_str().unwrap(), "--out", &out_arg(tmp.path())]), 1);
}

#[test]
fn writes_stay_inside_out_dir() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("nested").join("out");
    assert_eq!(run(&["generate", "--n", "32", "--k", "2", "--out", &out_arg(&out)]), 0);
    let top: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(top, vec![std::ffi::OsString::from("nested")]);
    let mut inside: Vec<_> =
        fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    inside.sort();
    assert_eq!(inside, vec!["manifest.json", "signal.csv"]);
}
