use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nvrelax_core::spectra::io::read_spectrum;

fn nvrelax(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nvrelax"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut v = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            v.extend(files_under(&p));
        } else {
            v.push(p);
        }
    }
    v.sort();
    v
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn default_grid_gives_96_parseable_spectra_that_decompose() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nvrelax(&["simulate-spectra", "--out", "ds", "--seed", "4"], tmp.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let spectra = files_under(&tmp.path().join("ds/spectra"));
    assert_eq!(spectra.len(), 96);
    for p in &spectra {
        let f = read_spectrum(&fs::read_to_string(p).unwrap()).unwrap();
        assert_eq!(f.role, "sample");
        assert_eq!(f.header["seed"], "4");
    }

    let out = nvrelax(&["decompose", "--input", "ds", "--out", "dec"], tmp.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let fractions = fs::read_to_string(tmp.path().join("dec/fractions.csv")).unwrap();
    assert_eq!(data_rows(&fractions).len(), 96);
    let kappa = fs::read_to_string(tmp.path().join("dec/kappa.csv")).unwrap();
    for row in data_rows(&kappa) {
        let k: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!((k / 1.65 - 1.0).abs() < 0.03, "{row}");
    }
    let variance = fs::read_to_string(tmp.path().join("dec/variance.csv")).unwrap();
    let rows = data_rows(&variance);
    assert_eq!(rows.len(), 12);
    for row in rows {
        let v: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!(v <= 1e-5, "{row}");
    }
}

#[test]
fn single_power_and_temperature_give_one_sample() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nvrelax(&["simulate-spectra", "--powers", "5.6e-4", "--temps", "300", "--out", "one"], tmp.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(files_under(&tmp.path().join("one/spectra")).len(), 1);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let spectra = ["simulate-spectra", "--powers", "8e-6,4e-3", "--temps", "294,330", "--seed", "9"];
    let relax = ["relaxometry", "--temps", "294,330", "--reps", "500", "--seed", "9"];
    for dir in ["a", "b"] {
        let out = nvrelax(&[&spectra[..], &["--out", &format!("{dir}/s")]].concat(), tmp.path());
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let out = nvrelax(&[&relax[..], &["--out", &format!("{dir}/r")]].concat(), tmp.path());
        assert!(matches!(code(&out), 0 | 3), "{}", stderr(&out));
    }
    let (a, b) = (files_under(&tmp.path().join("a")), files_under(&tmp.path().join("b")));
    assert_eq!(a.len(), b.len());
    assert!(a.len() > 10);
    for (fa, fb) in a.iter().zip(&b) {
        assert_eq!(fa.strip_prefix(tmp.path().join("a")).unwrap(), fb.strip_prefix(tmp.path().join("b")).unwrap());
        assert!(fs::read(fa).unwrap() == fs::read(fb).unwrap(), "{} differs", fa.display());
    }
}

#[test]
fn missing_reference_is_named_and_nothing_is_written() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nvrelax(&["simulate-spectra", "--powers", "1e-4", "--temps", "294,300", "--out", "ds"], tmp.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for p in files_under(&tmp.path().join("ds/references")) {
        if p.file_name().unwrap().to_string_lossy().starts_with("nv_minus_pre") {
            fs::remove_file(p).unwrap();
        }
    }
    let out = nvrelax(&["decompose", "--input", "ds", "--out", "dec"], tmp.path());
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("nv_minus_pre"), "{}", stderr(&out));
    assert!(!tmp.path().join("dec").exists());
}

#[test]
fn no_pi_omits_the_subtraction_evaluation() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nvrelax(
        &["relaxometry", "--temps", "294,320", "--reps", "1000", "--no-pi", "--out", "r"],
        tmp.path(),
    );
    assert!(matches!(code(&out), 0 | 3), "{}", stderr(&out));
    let curves: Vec<String> = files_under(&tmp.path().join("r/curves"))
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert!(curves.iter().all(|c| c.starts_with("all_optical")), "{curves:?}");
    let trace = fs::read_to_string(tmp.path().join("r/traces/trace_T294.00K.csv")).unwrap();
    assert!(!trace.contains(",with_pi,"));
    let scan = fs::read_to_string(tmp.path().join("r/scan.csv")).unwrap();
    for row in data_rows(&scan) {
        assert!(row.starts_with(|c: char| c.is_ascii_digit()) && row.split(',').nth(1) == Some(""), "{row}");
    }
}

#[test]
fn high_power_enables_recharge_analysis() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nvrelax(
        &["relaxometry", "--power", "0.56e-3", "--temps", "294,320", "--reps", "2000", "--out", "r"],
        tmp.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(tmp.path().join("r/curves/recharge_T294.00K.csv").exists());
    assert!(tmp.path().join("r/calibration.toml").exists());
    let scan = fs::read_to_string(tmp.path().join("r/scan.csv")).unwrap();
    for row in data_rows(&scan) {
        let cols: Vec<&str> = row.split(',').collect();
        assert!(!cols[5].is_empty() && !cols[7].is_empty() && !cols[9].is_empty(), "{row}");
    }
}

#[test]
fn saved_calibration_is_accepted() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&nvrelax(&["calibrate", "--out", "cal"], tmp.path())), 0);
    let out = nvrelax(
        &[
            "relaxometry", "--power", "0.56e-3", "--temps", "294,320", "--reps", "2000", "--calibration",
            "cal/calibration.toml", "--out", "r",
        ],
        tmp.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(!tmp.path().join("r/calibration.toml").exists());
}

#[test]
fn odmr_rows_keep_order_and_known_shifts() {
    let tmp = tempfile::tempdir().unwrap();
    let mut input = String::from("d_hz,d_std_hz\n");
    for k in 0..8 {
        input.push_str(&format!("{},100\n", 2.870e9 - 74.2e3 * k as f64));
    }
    fs::write(tmp.path().join("d.csv"), input).unwrap();
    let out = nvrelax(&["odmr-temp", "--input", "d.csv", "--out", "t.csv"], tmp.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = fs::read_to_string(tmp.path().join("t.csv")).unwrap();
    let rows = data_rows(&table);
    assert_eq!(rows.len(), 8);
    for (k, row) in rows.iter().enumerate() {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols[0] as usize, k + 2);
        assert!((cols[3] - (294.0 + k as f64)).abs() < 1e-9, "{row}");
    }
}

#[test]
fn malformed_odmr_rows_are_reported_by_line() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("d.csv"), "2.87e9,10\nx,1\n2.87e9,1,2\n").unwrap();
    let out = nvrelax(&["odmr-temp", "--input", "d.csv", "--out", "t.csv"], tmp.path());
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("line 2") && err.contains("line 3"), "{err}");
    assert!(!tmp.path().join("t.csv").exists());
}

#[test]
fn invalid_inputs_exit_with_validation_code() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.toml"), "[physics]\nkappa_lambda = \"x\"\n").unwrap();
    let out = nvrelax(&["--config", "bad.toml", "calibrate", "--out", "c"], tmp.path());
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("kappa_lambda"), "{}", stderr(&out));

    fs::write(tmp.path().join("seq.txt"), "REPETITIONS 10\nLASER 8e-6 2e-4\nWIGGLE\n").unwrap();
    let out = nvrelax(&["relaxometry", "--sequence", "seq.txt", "--out", "r"], tmp.path());
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    let out = nvrelax(&["simulate-spectra", "--powers", "-1", "--out", "s"], tmp.path());
    assert_eq!(code(&out), 1);
    assert_eq!(code(&nvrelax(&["frobnicate"], tmp.path())), 1);
    for d in ["c", "r", "s"] {
        assert!(!tmp.path().join(d).exists());
    }
}

#[test]
fn default_config_round_trips_through_the_loader() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&nvrelax(&["default-config", "--out", "cfg.toml"], tmp.path())), 0);
    let out = nvrelax(&["--config", "cfg.toml", "calibrate", "--out", "c"], tmp.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let cal = fs::read_to_string(tmp.path().join("c/calibration.toml")).unwrap();
    assert!(cal.contains("# config = cfg.toml"));
}
