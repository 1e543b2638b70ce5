//! Integration tests for the command surface: exit codes, file formats,
//! config precedence.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_extload")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("failed to launch extload")
}

fn write_raw(path: &Path) {
    let mut text = String::from("t,v,y\n");
    let mut t = 0.0;
    for block in 0..12 {
        let base = 5.0 + block as f64;
        for j in 0..40 {
            let v = base + 0.8 * ((j % 5) as f64 - 2.0);
            let y = 0.4 + 0.05 * base + 0.01 * (j % 7) as f64;
            text.push_str(&format!("{t},{v},{y}\n"));
            t += 15.0;
        }
    }
    fs::write(path, text).unwrap();
}

#[test]
fn ingest_aggregates_and_reports_drops() {
    let tmp = tempfile::tempdir().unwrap();
    let raw = tmp.path().join("raw.csv");
    let out = tmp.path().join("records.csv");
    write_raw(&raw);
    let output = run(&[
        "ingest",
        "--input",
        raw.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("# dropped_blocks: 1"));
    assert!(text.lines().any(|l| l == "v,s,y"));
    // 12 blocks of 40 x 15s samples = 600s each; the last is dropped
    let rows = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(rows, 11);
}

#[test]
fn ingest_reads_stdin() {
    use std::io::Write;
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("records.csv");
    let mut child = Command::new(bin())
        .args(["ingest", "--output", out.to_str().unwrap()])
        .stdin(std::process::Stdio::piped())
        .stderr(std::process::Stdio::null())
        .spawn()
        .unwrap();
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(b"t,v,y\n0,5,0.1\n100,6,0.2\n700,7,0.1\n")
        .unwrap();
    let status = child.wait().unwrap();
    assert!(status.success());
    assert!(fs::read_to_string(&out).unwrap().contains("v,s,y"));
}

#[test]
fn missing_file_exits_with_io_code() {
    let output = run(&[
        "estimate",
        "--input",
        "/nonexistent/records.csv",
        "--out-dir",
        "/tmp",
    ]);
    assert_eq!(output.status.code(), Some(4));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.starts_with("error[io]:"), "stderr: {err}");
}

#[test]
fn bad_arguments_exit_with_precondition_code() {
    let tmp = tempfile::tempdir().unwrap();
    let records = tmp.path().join("r.csv");
    fs::write(&records, "v,s,y\n8.0,0.5,1.0\n").unwrap();
    // nonpositive service time is a precondition failure
    let output = run(&[
        "estimate",
        "--input",
        records.to_str().unwrap(),
        "--out-dir",
        tmp.path().to_str().unwrap(),
        "--t-years=-5",
    ]);
    assert_eq!(output.status.code(), Some(2));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.starts_with("error[precondition]:"), "stderr: {err}");

    // malformed record files also report the offending line
    fs::write(&records, "v,s,y\n8.0,oops,1.0\n").unwrap();
    let output = run(&[
        "fit-wind",
        "--input",
        records.to_str().unwrap(),
        "--out-dir",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "seed = 5\nnot_a_key = 1\n").unwrap();
    let output = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    // config asks for a big simulation; flags shrink it
    fs::write(
        &cfg,
        "sim_blocks = 100000\nseed = 9\nref_datasets = 2\nref_size = 50\nsim_block_size = 5\n",
    )
    .unwrap();
    let out_dir = tmp.path().join("sim");
    let output = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--n-blocks",
        "25",
    ]);
    assert!(output.status.success());
    let text = fs::read_to_string(out_dir.join("train.csv")).unwrap();
    let rows = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .count()
        - 1;
    assert_eq!(rows, 25);
    assert!(text.contains("# seed: 9"));
}

#[test]
fn estimate_writes_one_result_per_service_time() {
    let tmp = tempfile::tempdir().unwrap();
    let sim_dir = tmp.path().join("sim");
    let output = run(&[
        "simulate",
        "--out-dir",
        sim_dir.to_str().unwrap(),
        "--n-blocks",
        "120",
        "--block-size",
        "60",
        "--ref-datasets",
        "2",
        "--ref-size",
        "100",
        "--seed",
        "3",
    ]);
    assert!(output.status.success());

    let est_dir = tmp.path().join("est");
    let output = run(&[
        "estimate",
        "--input",
        sim_dir.join("train.csv").to_str().unwrap(),
        "--out-dir",
        est_dir.to_str().unwrap(),
        "--t-years",
        "20,50",
        "--burn-in",
        "10",
        "--m-l",
        "15",
        "--m-w",
        "8",
        "--n-w",
        "15",
        "--n-l",
        "15",
        "--seed",
        "3",
        "--allowed-mu",
        "1",
        "--allowed-sigma",
        "1",
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    for t in ["20", "50"] {
        let result = fs::read_to_string(est_dir.join(format!("quantile_t{t}.csv"))).unwrap();
        assert!(result.contains("t_years,"));
        assert!(result.contains("ci_lower,"));
        let draws = fs::read_to_string(est_dir.join(format!("quantile_t{t}_draws.csv"))).unwrap();
        let n_draws = draws
            .lines()
            .filter(|l| !l.starts_with('#') && !l.is_empty())
            .count()
            - 1;
        assert_eq!(n_draws, 15);
    }

    // the binning pipeline can reuse the emitted wind pairs
    let binned_dir = tmp.path().join("binned");
    let output = run(&[
        "estimate-binned",
        "--input",
        sim_dir.join("train.csv").to_str().unwrap(),
        "--out-dir",
        binned_dir.to_str().unwrap(),
        "--wind-pairs",
        est_dir.join("wind_pairs.csv").to_str().unwrap(),
        "--t-years",
        "20",
        "--m-l",
        "12",
        "--n-l",
        "15",
        "--grid-v",
        "4",
        "--grid-s",
        "1",
        "--seed",
        "3",
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(binned_dir.join("binned_quantile_t20.csv").exists());
    let summary = fs::read_to_string(binned_dir.join("bin_summary.csv")).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("bin,")));
}

#[test]
fn credible_band_emits_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let sim_dir = tmp.path().join("sim");
    assert!(run(&[
        "simulate",
        "--out-dir",
        sim_dir.to_str().unwrap(),
        "--n-blocks",
        "150",
        "--block-size",
        "50",
        "--ref-datasets",
        "2",
        "--ref-size",
        "100",
        "--seed",
        "6",
    ])
    .status
    .success());
    let band_dir = tmp.path().join("band");
    let output = run(&[
        "credible-band",
        "--input",
        sim_dir.join("train.csv").to_str().unwrap(),
        "--out-dir",
        band_dir.to_str().unwrap(),
        "--axis",
        "v",
        "--burn-in",
        "8",
        "--draws",
        "10",
        "--seed",
        "6",
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let text = fs::read_to_string(band_dir.join("band_v.csv")).unwrap();
    assert!(text.lines().any(|l| l == "center,lower,upper,n_obs"));
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("center") && !l.is_empty())
        .collect();
    assert!(!rows.is_empty());
    for row in rows {
        let fields: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(fields[1] <= fields[2], "band bounds out of order: {row}");
    }
}
