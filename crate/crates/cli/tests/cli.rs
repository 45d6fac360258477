//! End-to-end tests of the installed binary: exit codes, produced files,
//! and determinism of the written artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Small deployment whose uncertainty box sits inside its one circle, so
/// every subcommand (including the covering check) can pass on it.
const TOY: &str = r#"
area_side = 400.0
ru_positions = [[-200.0, -200.0], [200.0, -200.0], [200.0, 200.0], [-200.0, 200.0]]
path_loss_exponent = 2.0
fading_power = 1.0
bandwidth = 1.0e6
signal_esd_dbm_per_hz = -60.0
noise_model = { n0_dbm_per_hz = -174.0, ar_coeff = 0.5 }
fronthaul_capacity = 1.5
propagation_speed = 299792458.0
grid_points = 8
uncertainty_center = [30.0, -20.0]
uncertainty_side = 60.0

[[circles]]
center = [30.0, -20.0]
radius = 60.0
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cranloc"))
}

fn reference_path() -> String {
    format!("{}/../../scenarios/reference_16ru.toml", env!("CARGO_MANIFEST_DIR"))
}

/// Fresh per-test scratch directory under the target dir, not the source tree.
fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        fs::remove_dir_all(&dir).expect("stale scratch dir must be removable");
    }
    fs::create_dir_all(&dir).expect("scratch dir must be creatable");
    dir
}

fn write_toy(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, content).expect("fixture must be writable");
    path
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process must exit normally")
}

#[test]
fn missing_scenario_exits_with_code_two() {
    let dir = scratch("missing_scenario");
    let ghost = dir.join("does_not_exist.toml");
    let out = bin()
        .args(["check", "--scenario"])
        .arg(&ghost)
        .output()
        .expect("binary must spawn");
    assert_eq!(code(&out), 2, "stderr: {}", stderr_of(&out));
    assert!(
        stderr_of(&out).contains("does_not_exist.toml"),
        "error must name the missing file: {}",
        stderr_of(&out)
    );
}

#[test]
fn check_passes_on_bundled_scenario() {
    let out = bin()
        .args(["check", "--scenario", &reference_path()])
        .output()
        .expect("binary must spawn");
    let text = stdout_of(&out);
    assert_eq!(code(&out), 0, "stdout: {text} stderr: {}", stderr_of(&out));
    let passes = text.lines().filter(|l| l.starts_with("check ") && l.contains("pass")).count();
    assert_eq!(passes, 4, "expected four pass lines, got: {text}");
    assert!(!text.contains("FAIL"), "unexpected failure: {text}");
}

#[test]
fn check_reports_uncovered_region() {
    let dir = scratch("uncovered_region");
    // Box spans 100 m around the origin but the only circle sits offset at
    // radius 60: corners are uncovered.
    let toy = TOY
        .replace("uncertainty_center = [30.0, -20.0]", "uncertainty_center = [0.0, 0.0]")
        .replace("uncertainty_side = 60.0", "uncertainty_side = 100.0");
    let path = write_toy(&dir, "uncovered.toml", &toy);
    let out = bin().args(["check", "--scenario"]).arg(&path).output().unwrap();
    assert_eq!(code(&out), 1);
    assert!(
        stdout_of(&out).contains("circle covering: FAIL"),
        "covering failure must be reported: {}",
        stdout_of(&out)
    );
}

#[test]
fn check_rejects_too_few_units() {
    let dir = scratch("too_few_units");
    let toy = TOY.replace(
        "ru_positions = [[-200.0, -200.0], [200.0, -200.0], [200.0, 200.0], [-200.0, 200.0]]",
        "ru_positions = [[-200.0, -200.0], [200.0, 200.0]]",
    );
    let path = write_toy(&dir, "two_units.toml", &toy);
    let out = bin().args(["check", "--scenario"]).arg(&path).output().unwrap();
    assert_eq!(code(&out), 1);
    assert!(
        stdout_of(&out).contains("scenario validation: FAIL"),
        "validation failure must be reported: {}",
        stdout_of(&out)
    );
}

#[test]
fn optimize_writes_design_and_manifest_deterministically() {
    let dir = scratch("optimize_deterministic");
    let path = write_toy(&dir, "toy.toml", TOY);
    let run = |out_dir: &Path| {
        let out = bin()
            .args(["optimize", "--scenario"])
            .arg(&path)
            .arg("--out")
            .arg(out_dir)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
    };
    let (first, second) = (dir.join("run1"), dir.join("run2"));
    run(&first);
    run(&second);
    for name in ["psd_ru00.csv", "psd_ru01.csv", "psd_ru02.csv", "psd_ru03.csv", "trace.csv"] {
        let a = fs::read(first.join(name)).unwrap_or_else(|_| panic!("{name} must exist"));
        let b = fs::read(second.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    let manifest = fs::read_to_string(first.join("manifest.json")).expect("manifest must exist");
    assert!(manifest.contains("\"status\": \"ok\""), "manifest: {manifest}");
    let header = fs::read_to_string(first.join("psd_ru00.csv")).unwrap();
    assert!(header.starts_with("f_hz,sq_mw_per_hz\n"), "psd header: {header}");
}

#[test]
fn optimize_failure_still_writes_manifest() {
    let dir = scratch("optimize_failure");
    let path = write_toy(&dir, "toy.toml", TOY);
    let out_dir = dir.join("out");
    let out = bin()
        .args(["optimize", "--scenario"])
        .arg(&path)
        .arg("--out")
        .arg(&out_dir)
        .arg("--capacity=-1")
        .output()
        .unwrap();
    assert_eq!(code(&out), 1, "stderr: {}", stderr_of(&out));
    let manifest = fs::read_to_string(out_dir.join("manifest.json")).expect("manifest must exist");
    assert!(manifest.contains("\"status\": \"failed"), "manifest: {manifest}");
}

#[test]
fn sweep_records_partial_failures_per_point() {
    let dir = scratch("sweep_partial");
    let path = write_toy(&dir, "toy.toml", TOY);
    let out_dir = dir.join("out");
    let out = bin()
        .args(["sweep", "--scenario"])
        .arg(&path)
        .arg("--out")
        .arg(&out_dir)
        .args(["--capacities", "1.5,-1,2", "--positions", "16", "--fading-draws", "50"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 1, "stderr: {}", stderr_of(&out));
    let report = fs::read_to_string(out_dir.join("report.csv")).expect("report must exist");
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines.len(), 4, "header plus one row per capacity: {report}");
    assert!(
        lines[0].starts_with(
            "c_bits_s_hz,sqrt_worst_avg_spe_m_proposed,sqrt_worst_avg_spe_m_baseline"
        ),
        "header: {}",
        lines[0]
    );
    assert!(lines[2].contains("failed"), "bad capacity row must be marked: {}", lines[2]);
    assert!(!lines[1].contains("failed"), "good rows stay clean: {}", lines[1]);
    let subdirs = fs::read_dir(&out_dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_type().unwrap().is_dir())
        .count();
    assert_eq!(subdirs, 2, "one design directory per successful point");
    assert!(out_dir.join("c00_1.5").join("psd_ru00.csv").exists());
    assert!(out_dir.join("c02_2").join("baseline_white.csv").exists());
}

#[test]
fn sweep_all_points_succeed() {
    let dir = scratch("sweep_clean");
    let path = write_toy(&dir, "toy.toml", TOY);
    let out_dir = dir.join("out");
    let out = bin()
        .args(["sweep", "--scenario"])
        .arg(&path)
        .arg("--out")
        .arg(&out_dir)
        .args(["--capacities", "1,2", "--positions", "16", "--fading-draws", "50"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
    let report = fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 3, "report: {report}");
    let manifest = fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"status\": \"ok\""), "manifest: {manifest}");
    for sub in ["c00_1", "c01_2"] {
        for file in ["psd_ru00.csv", "psd_ru03.csv", "baseline_white.csv"] {
            assert!(out_dir.join(sub).join(file).exists(), "{sub}/{file} missing");
        }
    }
}

#[test]
fn empty_capacities_is_a_usage_error() {
    let dir = scratch("empty_capacities");
    let path = write_toy(&dir, "toy.toml", TOY);
    let out = bin()
        .args(["sweep", "--scenario"])
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(["--capacities", ""])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2, "stderr: {}", stderr_of(&out));
}
