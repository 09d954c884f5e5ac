//! End-to-end tests of the command-line interface: exit codes, report
//! determinism, dump round trips, and config-file precedence.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use kpi_lab::functionals::mass;
use kpi_lab::grid::make_grid;
use kpi_lab::solitons::zaitsev;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kpi-lab"));
    cmd.env_remove("KPI_LAB_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should spawn")
}

fn stdout_of(out: &Output) -> &str {
    std::str::from_utf8(&out.stdout).expect("reports must be UTF-8")
}

/// Scratch directory shared by this test process.
fn temp_path(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kpi-lab-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).expect("temp dir should be writable");
    dir.join(name)
}

#[test]
fn verify_suite_passes_and_reproduces_byte_identical_reports() {
    let first = run(&["verify", "--suite", "moments"]);
    let second = run(&["verify", "--suite", "moments"]);
    assert_eq!(
        first.status.code(),
        Some(0),
        "moments suite should pass: {}",
        String::from_utf8_lossy(&first.stderr)
    );
    assert_eq!(
        first.stdout, second.stdout,
        "identical invocations must produce byte-identical reports"
    );
    let report: serde_json::Value = serde_json::from_str(stdout_of(&first)).unwrap();
    assert_eq!(report["schema"], "kpi-lab/verify/1");
    assert_eq!(report["pass"], true);
    assert_eq!(report["suite"], "moments");
}

#[test]
fn verify_list_enumerates_all_suites() {
    let out = run(&["verify", "--list"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(stdout_of(&out)).unwrap();
    assert_eq!(
        report["suites"].as_array().map(Vec::len),
        Some(15),
        "one suite per acceptance criterion, got {report}"
    );
}

#[test]
fn evolve_report_depends_on_the_seed_but_not_the_invocation() {
    let args = |seed: &'static str| {
        vec![
            "evolve",
            "--a",
            "0.1",
            "--delta",
            "1e-3",
            "--seed",
            seed,
            "--t-end",
            "0.2",
            "--dt",
            "0.004",
            "--nx",
            "256",
            "--ny",
            "8",
            "--observer-stride",
            "10",
        ]
    };
    let first = run(&args("7"));
    let repeat = run(&args("7"));
    let other = run(&args("8"));
    assert_eq!(
        first.status.code(),
        Some(0),
        "short evolution should succeed: {}",
        String::from_utf8_lossy(&first.stderr)
    );
    assert_eq!(
        first.stdout, repeat.stdout,
        "same seed must reproduce the report byte for byte"
    );
    assert_ne!(
        first.stdout, other.stdout,
        "different seeds must perturb the trajectory"
    );
}

#[test]
fn usage_errors_exit_with_code_2() {
    for args in [
        vec!["spectrum", "--mode", "1", "--speed", "bad"],
        vec!["verify", "--suite", "not-a-suite"],
        vec!["soliton", "--a", "1.5"],
        vec!["evolve", "--no-such-flag"],
        vec!["spectrum", "--fourth", "--mode", "0"],
    ] {
        let out = run(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "args {args:?} should be a usage error, stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(
            !out.stderr.is_empty(),
            "usage errors must explain themselves on stderr"
        );
    }
}

#[test]
fn runtime_failures_exit_with_code_1() {
    let missing = temp_path("does-not-exist.bin");
    let out = run(&["modulate", "--input", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "missing input is a runtime failure");

    let garbage = temp_path("garbage.bin");
    fs::write(&garbage, b"definitely not a field dump").unwrap();
    let out = run(&["functionals", "--input", garbage.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "malformed dump is a runtime failure, stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn binary_dump_round_trips_through_functionals() {
    let dump = temp_path("member.bin");
    let out = run(&[
        "soliton", "--a", "0.1", "--nx", "256", "--ny", "8", "--out",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let out = run(&["functionals", "--input", dump.to_str().unwrap(), "--speed", "2.0"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(stdout_of(&out)).unwrap();
    let expected = mass(&zaitsev(0.1, make_grid(256, 80.0, 8).unwrap()).unwrap());
    let got = report["mass"].as_f64().unwrap();
    assert!(
        (got - expected).abs() <= 1e-12 * expected,
        "dumped mass {got} should match the in-process value {expected}"
    );
    assert_eq!(report["speed_used"].as_f64(), Some(2.0));
}

#[test]
fn csv_dump_has_header_and_y_outer_rows() {
    let dump = temp_path("member.csv");
    let out = run(&[
        "soliton", "--nx", "16", "--ny", "8", "--lx", "10", "--out",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&dump).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,value", "first row is the header");
    assert_eq!(lines.len(), 1 + 16 * 8, "one row per grid point");
    let y_of = |line: &str| line.split(',').nth(1).unwrap().to_string();
    let first_y = y_of(lines[1]);
    assert!(
        lines[1..=16].iter().all(|l| y_of(l) == first_y),
        "a full x sweep shares one y value when y is the outer loop"
    );
    assert_ne!(y_of(lines[17]), first_y, "next block moves to the next y");
}

#[test]
fn config_file_fills_missing_flags_and_explicit_flags_win() {
    let config = temp_path("run.conf");
    fs::write(&config, "# defaults for small runs\nnx = 256\nny = 8\na = 0.2\n").unwrap();

    let from_config = run(&["functionals", "--config", config.to_str().unwrap()]);
    let spelled_out = run(&["functionals", "--a", "0.2", "--nx", "256", "--ny", "8"]);
    assert_eq!(from_config.status.code(), Some(0));
    assert_eq!(
        from_config.stdout, spelled_out.stdout,
        "config values must act exactly like flags"
    );

    let overridden = run(&["functionals", "--config", config.to_str().unwrap(), "--a", "0.1"]);
    let direct = run(&["functionals", "--a", "0.1", "--nx", "256", "--ny", "8"]);
    assert_eq!(
        overridden.stdout, direct.stdout,
        "explicit flags must override config entries"
    );

    let bad = temp_path("bad.conf");
    fs::write(&bad, "nx 256\n").unwrap();
    let out = run(&["functionals", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "malformed config lines are usage errors");
}

#[test]
fn thread_cap_env_is_validated() {
    let mut cmd = bin();
    cmd.args(["verify", "--suite", "moments"]);
    cmd.env("KPI_LAB_THREADS", "not-a-number");
    let out = cmd.output().unwrap();
    assert_eq!(out.status.code(), Some(2), "bad thread cap is a usage error");

    let mut cmd = bin();
    cmd.args(["verify", "--suite", "moments"]);
    cmd.env("KPI_LAB_THREADS", "2");
    let out = cmd.output().unwrap();
    assert_eq!(out.status.code(), Some(0), "a valid thread cap must be accepted");
}

#[test]
fn evolve_snapshots_and_final_state_are_loadable_dumps() {
    let prefix = temp_path("snap-");
    let final_state = temp_path("final.bin");
    let out = run(&[
        "evolve",
        "--t-end",
        "0.1",
        "--dt",
        "0.005",
        "--nx",
        "256",
        "--ny",
        "8",
        "--observer-stride",
        "10",
        "--snapshot-every",
        "1",
        "--snapshot-prefix",
        prefix.to_str().unwrap(),
        "--final-state",
        final_state.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    // Observations at steps 0, 10, 20 -> snapshot indices 0..=2.
    for index in 0..3 {
        let path = temp_path(&format!("snap-{index:05}.bin"));
        assert!(path.exists(), "snapshot {index} should be dumped at {path:?}");
    }
    let last = fs::read(temp_path("snap-00002.bin")).unwrap();
    let fin = fs::read(&final_state).unwrap();
    assert_eq!(last, fin, "final-state dump equals the last snapshot");

    let out = run(&["modulate", "--input", final_state.to_str().unwrap(), "--l-hint", "0"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "an evolved soliton stays in the decomposition's basin: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_str(stdout_of(&out)).unwrap();
    assert!(
        report["a_norm"].as_f64().unwrap() < 1e-3,
        "unperturbed evolution should stay near the a = 0 member, got {report}"
    );
}

#[test]
fn spectrum_reports_constrained_coercivity() {
    let out = run(&[
        "spectrum", "--mode", "0", "--count", "3", "--nx", "128", "--constraints", "full",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_str(stdout_of(&out)).unwrap();
    assert_eq!(report["schema"], "kpi-lab/spectrum/1");
    assert_eq!(report["report"]["eigenvalues"].as_array().map(Vec::len), Some(3));
    let constant = report["coercivity_constant"].as_f64().unwrap();
    assert!(
        constant > 0.0,
        "orthogonality to the soliton and its translate restores coercivity, got {constant}"
    );
}
