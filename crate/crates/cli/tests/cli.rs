use std::path::Path;
use std::process::{Command, Output};

fn ssbsync(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssbsync"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn generate(path: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["generate", "--out", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = ssbsync(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    o
}

fn sidecar(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(format!("{}.json", path.display())).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn generate_writes_two_periods_and_echoes_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cap.iq");
    generate(&path, &["--offset", "12345", "--cellid", "501", "--seed", "3"]);
    // 2 * 153600 complex samples of two f32 each.
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 2 * 153_600 * 8);
    let meta = sidecar(&path);
    assert_eq!(meta["offset"], 12345);
    assert_eq!(meta["seed"], 3);
    assert_eq!(meta["num_samples"], 307_200);
    assert_eq!(meta["rate_hz"], 7.68e6);
    assert_eq!(meta["payload_bits"].as_str().unwrap().len(), 32);
    let cell = &meta["cell_id"];
    assert_eq!(cell["n_id1"].as_u64().unwrap() * 3 + cell["n_id2"].as_u64().unwrap(), 501);
}

#[test]
fn same_seed_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.iq");
    let b = dir.path().join("b.iq");
    let c = dir.path().join("c.iq");
    generate(&a, &["--seed", "11", "--snr", "-3", "--offset", "999"]);
    generate(&b, &["--seed", "11", "--snr", "-3", "--offset", "999"]);
    generate(&c, &["--seed", "12", "--snr", "-3", "--offset", "999"]);
    let read = |p: &Path| std::fs::read(p).unwrap();
    assert!(read(&a) == read(&b));
    assert!(read(&a) != read(&c));
}

#[test]
fn clean_search_recovers_the_cell_with_both_pipelines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("clean.iq");
    generate(&path, &["--offset", "40000", "--cellid", "772", "--seed", "5"]);
    let mut taus = Vec::new();
    for p in ["baseline", "proposed", "halfrate"] {
        let json = dir.path().join(format!("{p}.json"));
        let o = ssbsync(&[
            "search",
            path.to_str().unwrap(),
            "--pipeline",
            p,
            "--out",
            json.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let text = stdout(&o);
        assert!(text.contains("cell id:  772"), "{text}");
        assert!(text.contains("crc ok"), "{text}");
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
        assert_eq!(v["cell_id"], 772);
        assert_eq!(v["seed"], 0);
        assert_eq!(v["pbch_crc_ok"], true);
        taus.push(v["tau_ssb"].as_u64().unwrap());
    }
    assert_eq!(taus[0], 40000);
    assert_eq!(taus[1], 40000);
}

#[test]
fn truncated_capture_is_an_io_error_naming_lengths() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.iq");
    generate(&path, &[]);
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 800]).unwrap();
    let o = ssbsync(&["search", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("307200") && err.contains("307100"), "{err}");
}

#[test]
fn short_capture_is_a_detection_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.iq");
    generate(&path, &[]);
    let bytes = std::fs::read(&path).unwrap();
    let keep = 153_600 * 8;
    std::fs::write(&path, &bytes[..keep]).unwrap();
    let side = format!("{}.json", path.display());
    let mut meta = sidecar(&path);
    meta["num_samples"] = 153_600.into();
    std::fs::write(&side, meta.to_string()).unwrap();
    for p in ["baseline", "proposed"] {
        let o = ssbsync(&["search", path.to_str().unwrap(), "--pipeline", p]);
        assert_eq!(o.status.code(), Some(4), "{p}: {}", stderr(&o));
        assert!(stderr(&o).contains("insufficient samples"), "{}", stderr(&o));
    }
}

#[test]
fn bad_configuration_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.iq");
    let out = out.to_str().unwrap();

    let o = ssbsync(&["generate", "--out", out, "--cellid", "1008"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cell_id"), "{}", stderr(&o));

    let o = ssbsync(&["generate", "--out", out, "--offset", "200000"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("timing_offset"), "{}", stderr(&o));

    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"search": {"delta_n": 0}}"#).unwrap();
    let o = ssbsync(&["--config", cfg.to_str().unwrap(), "generate", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("delta_n"), "{}", stderr(&o));

    std::fs::write(&cfg, r#"{"sedd": 1}"#).unwrap();
    let o = ssbsync(&["--config", cfg.to_str().unwrap(), "generate", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sedd"), "{}", stderr(&o));

    let o = ssbsync(&["search", out, "--pipeline", "fastest"]);
    assert_eq!(o.status.code(), Some(2));

    let o = ssbsync(&["bench", "no-such-scenario-file.json"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!Path::new(out).exists());
}

#[test]
fn bench_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("tiny.json");
    std::fs::write(
        &scen,
        r#"{
  "name": "tiny",
  "snr_grid_db": [null, 0.0],
  "n_trials": 3,
  "pipelines": ["baseline", "proposed", "halfrate"],
  "params": {"delta_n": 72},
  "seed": 9
}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = ssbsync(&[
        "bench",
        scen.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--workers",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["curves.csv", "timing.csv", "report.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let curves = std::fs::read_to_string(out.join("curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 2 * 3);
    let text = stdout(&o);
    assert!(text.contains("seed 9"), "{text}");
    assert!(text.contains("MAC ratio proposed/baseline: 0.2503"), "{text}");
}

#[test]
fn interrupt_flushes_partial_results() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("awgn");
    let child = Command::new(env!("CARGO_BIN_EXE_ssbsync"))
        .args(["bench", "awgn", "--workers", "2", "--out", out.to_str().unwrap()])
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    std::thread::sleep(std::time::Duration::from_secs(3));
    let status = Command::new("kill")
        .args(["-INT", &child.id().to_string()])
        .status()
        .unwrap();
    assert!(status.success());
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(130), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["interrupted"], true);
    let done = report["completed_trials"].as_u64().unwrap();
    assert!(done > 0 && done < 7000, "{done}");
    assert!(out.join("curves.csv").is_file());
}
