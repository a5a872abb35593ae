//! End-to-end checks of the `selfacc` binary: argument handling, exit
//! codes, output layout, and agreement between shipped config files and
//! built-in presets.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use selfacc_cli::config::parse_config;
use selfacc_cli::scenario::{preset, preset_names};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_selfacc"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary launches")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

/// A fast scenario used where the test only cares about plumbing.
const SMALL: &str = "\
[scenario]
name = small

[family]
tag = gaussian-localized
a = 1.0
omega = 1.0

[grid]
x_min = -12
x_max = 12
n = 256

[propagation]
scheme = split-step
dt = 1e-3
steps = 40
record_stride = 20
store_fields = true

[diagnostics]
compare_analytic = true
";

#[test]
fn shipped_configs_equal_their_presets() {
    let config_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in preset_names() {
        let path = config_dir.join(format!("{name}.conf"));
        let text = fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let from_file = parse_config(&text).unwrap();
        assert_eq!(
            from_file,
            preset(name).unwrap(),
            "{name}: shipped file and built-in preset disagree"
        );
    }
    // And nothing else ships: every config file corresponds to a preset.
    let mut on_disk: Vec<String> = fs::read_dir(&config_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    on_disk.sort();
    let mut expected: Vec<String> =
        preset_names().iter().map(|n| format!("{n}.conf")).collect();
    expected.sort();
    assert_eq!(on_disk, expected);
}

#[test]
fn preset_list_names_every_preset() {
    let out = run(&["preset", "--list"]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let listed: Vec<&str> = stdout.lines().collect();
    assert_eq!(listed, preset_names());
}

#[test]
fn run_produces_the_documented_output_set() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.conf");
    fs::write(&cfg, SMALL).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_of(&out));

    for f in [
        "manifest.json",
        "timeseries.csv",
        "density.pgm",
        "density.pgm.json",
        "fields_t0000.csv",
        "fields_t0001.csv",
        "fields_t0002.csv",
    ] {
        assert!(out_dir.join(f).is_file(), "missing {f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenario"]["name"], "small");
    assert_eq!(manifest["scheme"], "split-step");
    assert_eq!(manifest["determinism"]["threads"], 1);
    assert!(manifest["error"].is_null());
    assert!(manifest["report"]["analytic_comparison"]["l_inf"].as_f64().unwrap() < 1e-3);
}

#[test]
fn config_errors_exit_2_and_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "[scenario]\nname = x\n[grid]\nx_typo = 1\n").unwrap();
    let out = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = stderr_of(&out);
    assert!(err.contains("line 4"), "{err}");
    assert!(err.contains("x_typo"), "{err}");
}

#[test]
fn unknown_preset_exits_2_with_the_available_names() {
    let out = run(&["preset", "no-such-thing"]);
    assert_eq!(code(&out), 2);
    let err = stderr_of(&out);
    assert!(err.contains("gaussian-localized"), "{err}");
}

#[test]
fn bad_scheme_flag_exits_2() {
    let out = run(&["preset", "gaussian-localized", "--scheme", "psychic"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unsweepable_key_exits_2_before_any_run() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "preset",
        "gaussian-localized",
        "--out",
        out_dir.to_str().unwrap(),
        "--sweep",
        "propagation.scheme=a,b",
    ]);
    assert_eq!(code(&out), 2);
    assert!(!out_dir.exists(), "no run may start when the sweep is invalid");
}

#[test]
fn sweep_fans_out_into_labeled_subdirectories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.conf");
    fs::write(&cfg, SMALL).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--sweep",
        "family.omega=1,2",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_of(&out));
    for (label, omega) in [("family-omega-1", 1.0), ("family-omega-2", 2.0)] {
        let manifest: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(out_dir.join(label).join("manifest.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(manifest["variant"], label);
        assert_eq!(manifest["scenario"]["family"]["params"]["omega"], omega);
    }
}

#[test]
fn resolution_scale_refines_all_three_axes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.conf");
    fs::write(&cfg, SMALL).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--resolution-scale",
        "2",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_of(&out));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    let prop = &manifest["scenario"]["propagation"];
    assert_eq!(manifest["scenario"]["grid"]["n"], 512);
    assert_eq!(prop["steps"], 80);
    assert_eq!(prop["record_stride"], 40);
    assert_eq!(prop["dt"].as_f64().unwrap(), 5e-4);
    // Same physical record times as the unscaled run.
    assert_eq!(manifest["records"]["count"], 3);
}

#[test]
fn aborted_propagation_exits_3_with_partial_outputs() {
    // Quartic power-law gain amplifies the truncated wing without bound;
    // the run must stop at the overflow ceiling, keep what it computed,
    // and record the reason in the manifest.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("overflow.conf");
    fs::write(
        &cfg,
        "\
[scenario]
name = overflow

[family]
tag = const-intensity-power-law
a = 1.0
v0 = 1.0
n = 4

[grid]
x_min = -60
x_max = 60
n = 2048

[propagation]
scheme = split-step
dt = 1e-3
steps = 1000
record_stride = 100
store_fields = true

[truncation]
kind = gaussian
center = 0.0
half_width = 40.0
roll = 3.0
",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "{}", stderr_of(&out));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    let error = manifest["error"].as_str().expect("abort reason recorded");
    assert!(error.contains("overflow"), "{error}");
    let count = manifest["records"]["count"].as_u64().unwrap();
    assert!(count >= 2, "partial record kept");
    let t_last = manifest["records"]["t_last"].as_f64().unwrap();
    assert!(t_last > 0.0 && t_last < 1.0, "stopped mid-run at {t_last}");
    assert!(out_dir.join("timeseries.csv").is_file());
    assert!(out_dir.join("fields_t0000.csv").is_file());
}

#[test]
fn describe_prints_the_construction() {
    let out = run(&["describe", "dark-soliton", "a=1", "sigma=1"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("describe emits JSON");
    assert_eq!(v["family"], "dark-soliton");
    assert_eq!(v["frame"]["mu"], 1.0);

    let bad = run(&["describe", "dark-soliton", "a=1"]);
    assert_eq!(code(&bad), 2, "missing parameter is a validation failure");
}

#[test]
fn synthesize_writes_table_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("envelope.csv");
    let mut text = String::from("q,psi,v_real\n");
    for i in 0..512 {
        let q = -12.0 + i as f64 * 0.05;
        text.push_str(&format!("{q},1.0,{}\n", -q * q));
    }
    fs::write(&table, text).unwrap();
    let out_dir = dir.path().join("syn");
    let out = run(&[
        "synthesize",
        table.to_str().unwrap(),
        "--a",
        "1.0",
        "--mu",
        "0.25",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_of(&out));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("synthesis.json")).unwrap()).unwrap();
    assert_eq!(summary["rows"], 512);
    let flips = summary["flips"].as_array().unwrap();
    assert_eq!(flips.len(), 1);
    assert!((flips[0].as_f64().unwrap() - 0.5).abs() < 0.05);
    let csv = fs::read_to_string(out_dir.join("synthesis.csv")).unwrap();
    assert!(csv.starts_with("q,psi,v_real,radicand,g,v_imag,status\n"));

    let bad = run(&[
        "synthesize",
        table.to_str().unwrap(),
        "--a",
        "1.0",
        "--mu",
        "0.25",
        "--sign",
        "0.5",
    ]);
    assert_eq!(code(&bad), 2, "sign must be +1 or -1");
}

#[test]
fn adjudicate_emits_both_decision_records() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir: PathBuf = dir.path().join("dec");
    let out = run(&["adjudicate", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr_of(&out));
    for stem in ["decision_rate_sign", "decision_shift_coefficient"] {
        let rec: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(out_dir.join(format!("{stem}.json"))).unwrap(),
        )
        .unwrap();
        assert!(rec["selected"].is_u64(), "{stem} left undecided");
        assert_eq!(rec["ladders"].as_array().unwrap().len(), 2);
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("matches the shipped constant"), "{stdout}");
}
