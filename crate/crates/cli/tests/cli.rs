//! End-to-end checks of the installed binary: output shapes, exit
//! codes, and byte-level determinism across reruns.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn eesched(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eesched"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn gen_scenario_writes_the_channel_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = eesched(
        &["gen-scenario", "--seed", "11", "--out", "chan"],
        dir.path(),
    );
    let text = stdout(&out);
    assert!(text.contains("8 users x 20 links, seed 11"));

    let csv = fs::read_to_string(dir.path().join("chan/scenario.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("user_id,link_id,gain,p_dyn_k"));
    assert_eq!(lines.count(), 8 * 20);
}

#[test]
fn sweep_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep",
        "--axis",
        "pmax",
        "--seed",
        "3",
        "--trials",
        "2",
        "--values",
        "20,25",
        "--schemes",
        "ee-optimal,throughput-optimal",
    ];
    let run = |out: &str| -> Vec<u8> {
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["--out", out]);
        stdout(&eesched(&full, dir.path()));
        fs::read(dir.path().join(out).join("sweep.csv")).unwrap()
    };
    let first = run("a");
    let second = run("b");
    assert_eq!(first, second);

    let text = String::from_utf8(first).unwrap();
    assert!(
        text.starts_with("axis,value,scheme,mean_ee_bit_per_joule,mean_rate_bps,mean_users,trials")
    );
    // 2 axis values x 2 schemes.
    assert_eq!(text.lines().count(), 1 + 4);
}

#[test]
fn sweep_chart_emits_vector_graphics() {
    let dir = tempfile::tempdir().unwrap();
    let out = eesched(
        &[
            "sweep",
            "--axis",
            "psta0",
            "--seed",
            "5",
            "--trials",
            "1",
            "--values",
            "0,5000",
            "--schemes",
            "ee-optimal",
            "--format",
            "chart",
            "--out",
            "fig",
        ],
        dir.path(),
    );
    stdout(&out);
    for name in ["sweep_ee.svg", "sweep_users.svg"] {
        let svg = fs::read_to_string(dir.path().join("fig").join(name)).unwrap();
        assert!(svg.starts_with("<svg"), "{name} is not an SVG");
        assert!(svg.contains("ee-optimal"));
    }
}

#[test]
fn solve_prints_the_operating_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    fs::write(&cfg, "num_users = 2\nlinks_per_user = 3\nseed = 4\n").unwrap();
    let out = eesched(&["solve", "--config", "small.cfg"], dir.path());
    let text = stdout(&out);
    assert!(text.contains("scenario: 2 users x 3 links, seed 4"));
    assert!(text.contains("system EE:"));
    assert!(text.contains("admissions:"));
}

#[test]
fn oracle_check_passes_at_default_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let out = eesched(
        &["oracle-check", "--trials", "40", "--seed", "9"],
        dir.path(),
    );
    let text = stdout(&out);
    assert!(text.contains("40 instances"));
    assert!(text.contains("max relative gap"));
}

#[test]
fn unknown_scheme_is_rejected_with_the_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let out = eesched(
        &[
            "sweep",
            "--axis",
            "pmax",
            "--values",
            "25",
            "--schemes",
            "max-power",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unknown scheme `max-power`"));
    assert!(err.contains("ee-optimal"));
}

#[test]
fn bad_config_key_fails_with_line_context() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.cfg"), "num_users = 2\nbandwith = 1\n").unwrap();
    let out = eesched(&["solve", "--config", "bad.cfg"], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.cfg"), "missing path context: {err}");
}
