use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn planarizer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_planarizer"))
        .args(args)
        .env_remove("PLANARIZER_OUT")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SHADOW: &str = "name = shadow\nduration = 0.5\nmode = shadowing\n\
    robot.waveform = sine\nrobot.offset = 0.3\nrobot.amplitude = 0.05\nrobot.frequency = 1\n";

#[test]
fn run_writes_telemetry_and_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "shadow.cfg", SHADOW);
    let out = tmp.path().join("results");
    let o = planarizer(&["run", "--scenario", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("telemetry.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 501);
    let txt = fs::read_to_string(out.join("metrics.txt")).unwrap();
    assert!(txt.contains("gap_dev_max = "));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert!(json["gap_dev_max"].as_f64().unwrap() < 0.01);
    assert!(json["force_rise_time_10_90"].is_null());
}

#[test]
fn same_seed_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "f.cfg",
        "duration = 0.5\nmode = force\nsensors.loadcell_noise_std = 1\nf_des.steps = 0:20\n",
    );
    let read = |d: &str| {
        let dir = tmp.path().join(d);
        let o = planarizer(&["run", "--scenario", &cfg, "--out", dir.to_str().unwrap(), "--seed", "9"]);
        assert!(o.status.success());
        fs::read(dir.join("telemetry.csv")).unwrap()
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn out_dir_falls_back_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "shadow.cfg", SHADOW);
    let out = tmp.path().join("env_out");
    let o = Command::new(env!("CARGO_BIN_EXE_planarizer"))
        .args(["run", "--scenario", &cfg])
        .env("PLANARIZER_OUT", &out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(out.join("telemetry.csv").exists());
}

#[test]
fn validate_reports_bad_key_with_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "broken.cfg", "duration = 1\nshadow.kp_typo = 3\n");
    let o = planarizer(&["validate", "--scenario", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kp_typo"));
}

#[test]
fn validate_accepts_good_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "shadow.cfg", SHADOW);
    let o = planarizer(&["validate", "--scenario", &cfg]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn invalid_dt_override_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "shadow.cfg", SHADOW);
    let out = tmp.path().join("r");
    let o = planarizer(&[
        "run", "--scenario", &cfg, "--out", out.to_str().unwrap(),
        "--dt-control", "0.0015", "--dt-physics", "0.001",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(planarizer(&["run"]).status.code(), Some(2));
    assert_eq!(planarizer(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(planarizer(&["suite"]).status.code(), Some(2));
}

#[test]
fn non_finite_state_exits_3_with_partial_telemetry() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "blowup.cfg",
        "duration = 0.5\nmode = shadowing\nrobot.drive = free\nf_ext.waveform = sine\n\
         f_ext.offset = 1e308\nf_ext.amplitude = 1e308\nf_ext.frequency = 1\n",
    );
    let out = tmp.path().join("r");
    let o = planarizer(&["run", "--scenario", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let csv = fs::read_to_string(out.join("telemetry.csv")).unwrap();
    assert!(csv.lines().last().unwrap().ends_with("error:non_finite_state"));
}

#[test]
fn suite_writes_one_directory_per_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("results");
    let o = planarizer(&["suite", "--out", out.to_str().unwrap()]);
    // exit 0 only if every threshold holds; 1 otherwise
    let code = o.status.code().unwrap();
    assert!(code == 0 || code == 1);
    for name in ["shadowing", "force_steps", "force_noisy", "recovery"] {
        assert!(out.join(name).join("telemetry.csv").exists(), "{name}");
        assert!(out.join(name).join("metrics.json").exists(), "{name}");
    }
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("rise_time_to_safe_s"));
    assert_eq!(table.contains("FAIL"), code == 1);
    assert!(out.join("summary.txt").exists());
}
