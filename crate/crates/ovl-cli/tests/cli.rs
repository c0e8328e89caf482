//! Black-box tests for the `ovl` binary: each one runs the real executable
//! and checks stdout plus the exit code.

use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ovl"))
}

fn fixture(name: &str) -> String {
    format!(
        "{}/../ovl-core/tests/fixtures/{name}.kiss",
        env!("CARGO_MANIFEST_DIR")
    )
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn verify_reports_the_check_count() {
    let out = bin()
        .args(["verify", "--arch", "mram", &fixture("chain5"), "--exhaustive"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("equivalent (320 checks)"));
}

#[test]
fn size_prints_the_totals() {
    let out = bin()
        .args(["size", "--arch", "mram", &fixture("chain5")])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("total 306"), "{text}");
    assert!(text.contains("ste 1 4") && text.contains("ste 5 2"), "{text}");

    let out = bin()
        .args(["size", "--arch", "three", &fixture("chain5")])
        .output()
        .unwrap();
    assert!(stdout(&out).contains("total 424"));
}

#[test]
fn map_then_sim_walks_the_chain() {
    let dir = tempfile::tempdir().unwrap();
    let ovl = dir.path().join("chain5.ovl");
    let out = bin()
        .args(["map", "--arch", "mram", &fixture("chain5")])
        .arg("-o")
        .arg(&ovl)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("306 RAM bits"));

    let stim = dir.path().join("stim.txt");
    std::fs::write(&stim, "100000\n000000\n100000\n").unwrap();
    let out = bin()
        .arg("sim")
        .arg("--bitstream")
        .arg(&ovl)
        .arg("--stimulus")
        .arg(&stim)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out),
        "cycle=0 in=100000 state=0 out=\n\
         cycle=1 in=000000 state=1 out=\n\
         cycle=2 in=100000 state=1 out=\n"
    );

    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "").unwrap();
    let out = bin()
        .arg("sim")
        .arg("--bitstream")
        .arg(&ovl)
        .arg("--stimulus")
        .arg(&empty)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "");
}

#[test]
fn missing_file_exits_3() {
    let out = bin()
        .args(["analyze", "/nonexistent/machine.kiss"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unparseable_input_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.kiss");
    std::fs::write(&bad, "this is not a machine\n").unwrap();
    let out = bin().arg("analyze").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unhostable_instance_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.cfg");
    std::fs::write(
        &cfg,
        "arch mram\ns_total 2\ni_total 1\no_total 0\nt_max 2\nste 1 2\n",
    )
    .unwrap();
    let out = bin()
        .arg("map")
        .arg("--instance")
        .arg(&cfg)
        .arg(fixture("chain5"))
        .arg("-o")
        .arg(dir.path().join("x.ovl"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn bit_cap_exits_6() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .env("OVL_BIT_CAP", "10")
        .args(["map", "--arch", "mram", &fixture("chain5")])
        .arg("-o")
        .arg(dir.path().join("x.ovl"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(6));
}

#[test]
fn analyze_lists_every_state() {
    let out = bin()
        .args(["analyze", &fixture("chain5")])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("states=5 inputs=6 outputs=0"), "{text}");
    assert!(text.contains("s4") && text.contains("1 2 3 4 5"), "{text}");

    let out = bin()
        .args(["analyze", "--csv", &fixture("chain5")])
        .output()
        .unwrap();
    assert!(stdout(&out).contains("s4,5,1;2;3;4;5"));
}

#[test]
fn area_report_contains_the_row() {
    let out = bin()
        .args(["report", "area", &fixture("chain5")])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("| chain5 | 1536 | 888 | 424 | 306 | 27% | 65% |"));

    let out = bin()
        .args([
            "report",
            "area",
            "--format",
            "csv",
            "--multi",
            &fixture("chain5"),
            &fixture("toggle"),
        ])
        .output()
        .unwrap();
    let text = stdout(&out);
    assert!(text.contains("chain5,1536,888,424,306,27,65"), "{text}");
    assert!(text.lines().any(|l| l.starts_with("multi,")), "{text}");
}
