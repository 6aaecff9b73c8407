use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_spadjpd"));
    c.env("RUST_LOG", "warn");
    c
}

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn zero_frames_writes_a_header_only_stream() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--config", s(&preset("half_plane.toml")), "--frames", "0", "--out", s(dir.path())]);
    ok(&out);
    assert_eq!(std::fs::metadata(dir.path().join("frames.spdf")).unwrap().len(), 35);
}

#[test]
fn missing_object_mask_fails_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 1\n[sensor]\nwidth = 16\nheight = 16\n\
         [scene]\nmean_pairs_per_frame = 1.0\ndetection_efficiency = 0.5\ncorrelation_width = 0.0\n\
         illumination = { kind = \"disk\", radius = 6.0 }\n\
         object = { kind = \"image\", path = \"absent.pgm\" }\n",
    )
    .unwrap();
    let out = run(&["simulate", "--config", s(&cfg), "--frames", "10", "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn full_mode_over_budget_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = preset("half_plane.toml");
    ok(&run(&["simulate", "--config", s(&cfg), "--frames", "10", "--out", s(dir.path())]));
    let out = run(&[
        "reconstruct",
        "--in",
        s(&dir.path().join("frames.spdf")),
        "--config",
        s(&cfg),
        "--mode",
        "full",
        "--memory-budget",
        "1000000",
        "--out",
        s(&dir.path().join("r")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("projection-only"));
}

#[test]
fn simulate_reconstruct_project_snr() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = preset("half_plane.toml");
    let sim_dir = dir.path().join("sim");
    let args = ["simulate", "--config", s(&cfg), "--frames", "3000", "--stats", "--out", s(&sim_dir)];
    ok(&run(&args));
    let first = (
        std::fs::read(sim_dir.join("frames.spdf")).unwrap(),
        std::fs::read(sim_dir.join("manifest.json")).unwrap(),
    );
    ok(&run(&args));
    assert_eq!(std::fs::read(sim_dir.join("frames.spdf")).unwrap(), first.0);
    assert_eq!(std::fs::read(sim_dir.join("manifest.json")).unwrap(), first.1);
    assert_eq!(std::fs::metadata(sim_dir.join("frames.spdf")).unwrap().len(), 35 + 3000 * 512);

    let rec = dir.path().join("rec");
    ok(&run(&[
        "reconstruct",
        "--in",
        s(&sim_dir.join("frames.spdf")),
        "--config",
        s(&cfg),
        "--sweep",
        "1e3,2e3,3e3",
        "--out",
        s(&rec),
    ]));
    for f in ["snapshot.jpds", "snapshot_1000.jpds", "snapshot_3000.jpds", "intensity.pgm", "manifest.json"] {
        assert!(rec.join(f).exists(), "missing {f}");
    }

    let proj = dir.path().join("proj");
    ok(&run(&["project", "--snapshot", s(&rec.join("snapshot.jpds")), "--kind", "antidiag", "--out", s(&proj)]));
    let pgm = std::fs::read_dir(&proj)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "pgm"))
        .count();
    assert_eq!(pgm, 1);
    // A conditional that was not accumulated is rejected, not invented.
    let out = run(&[
        "project",
        "--snapshot",
        s(&rec.join("snapshot.jpds")),
        "--kind",
        "conditional",
        "--ref",
        "1,-2",
        "--out",
        s(&proj),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let snr_dir = dir.path().join("snr");
    let snaps: Vec<PathBuf> = [1000, 2000, 3000].iter().map(|m| rec.join(format!("snapshot_{m}.jpds"))).collect();
    let mut a = vec!["snr"];
    for p in &snaps {
        a.extend(["--snapshot", s(p)]);
    }
    a.extend(["--predict-from", s(&cfg), "--out", s(&snr_dir)]);
    ok(&run(&a));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(snr_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["entries"].as_array().unwrap().len(), 3);
    assert!(report["predicted_coefficient"].as_f64().unwrap() > 0.0);
    let csv = std::fs::read_to_string(snr_dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn snr_without_masks_or_scene_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["snr", "--snapshot", s(&dir.path().join("none.jpds")), "--out", s(dir.path())]);
    assert_ne!(out.status.code(), Some(0));
}
