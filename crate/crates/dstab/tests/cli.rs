use std::path::PathBuf;
use std::process::Command;

use dstab::report::field;

fn fixture(f: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(f)
        .display()
        .to_string()
}

/// Runs the installed binary; returns (stdout, stderr, exit code).
fn dstab(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_dstab"))
        .args(args)
        .env_remove("DSTAB_WORKERS")
        .output()
        .unwrap();
    (
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
        out.status.code().unwrap(),
    )
}

#[test]
fn decide_examples() {
    let (out, _, code) = dstab(&["decide", &fixture("true.dst"), "--delta", "0.1"]);
    assert_eq!((out.lines().next(), code), (Some("delta-true"), 0));
    let (out, _, code) = dstab(&["decide", &fixture("false.dst"), "--delta", "0.5"]);
    assert_eq!((out.lines().next(), code), (Some("false"), 1));
    let (out, _, code) = dstab(&["decide", &fixture("flow_query.dst"), "--delta", "1/100"]);
    assert_eq!((out.lines().next(), code), (Some("delta-true"), 0));
}

#[test]
fn malformed_input_reports_a_location() {
    let dir = std::env::temp_dir().join(format!("dstab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.dst");
    std::fs::write(&bad, "# header\nforall x in [0, 1]. x + > 0\n").unwrap();
    let (out, err, code) = dstab(&["decide", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("bad.dst:2:"), "{}", err);
    let (_, _, code) = dstab(&["decide", dir.join("missing.dst").to_str().unwrap()]);
    assert_eq!(code, 2);
    let (_, _, code) = dstab(&["frobnicate"]);
    assert_eq!(code, 2);
}

#[test]
fn trace_file_has_one_record_per_line() {
    let trace = std::env::temp_dir().join(format!("dstab-trace-{}.txt", std::process::id()));
    let (_, _, code) = dstab(&[
        "decide",
        &fixture("true.dst"),
        "--delta",
        "1/100",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(!text.is_empty());
    assert!(text.lines().all(|l| l.starts_with("seq=")), "{}", text);
}

#[test]
fn stability_reports() {
    let (out, _, code) = dstab(&["check-stability", &fixture("decay.dst")]);
    assert_eq!(code, 0);
    assert_eq!(field(&out, "verdict"), Some("stable"));
    assert_eq!(field(&out, "class"), Some("Pi3"));
    assert_eq!(field(&out, "time_bound"), Some("5"));

    let (out, _, code) = dstab(&["check-stability", &fixture("growth.dst")]);
    assert_eq!(code, 1);
    assert_eq!(field(&out, "verdict"), Some("delta-unstable"));
    assert_ne!(field(&out, "witness"), Some("none"));

    let (out, _, _) = dstab(&[
        "check-stability",
        &fixture("decay.dst"),
        "--kind",
        "asymptotic",
    ]);
    assert_eq!(field(&out, "class"), Some("Sigma4"));
    assert_eq!(field(&out, "conv_radius"), Some("1"));
    let (out, _, _) = dstab(&[
        "check-stability",
        &fixture("decay.dst"),
        "--kind",
        "asymptotic-in-large",
    ]);
    assert_eq!(field(&out, "class"), Some("Pi3"));
}

#[test]
fn parameter_errors_exit_with_two() {
    let (_, err, code) = dstab(&[
        "check-stability",
        &fixture("decay.dst"),
        "--eps-min",
        "1/200",
    ]);
    assert_eq!(code, 2, "{}", err);
    assert!(err.contains("eps-min"));
    let (_, _, code) = dstab(&["check-stability", &fixture("decay.dst"), "--delta", "-1"]);
    assert_eq!(code, 2);
    let (_, _, code) = dstab(&["lyap", &fixture("cubic.dst"), "--param", "p=[0.5,2]"]);
    assert_eq!(code, 2);
    let (_, _, code) = dstab(&["lyap", &fixture("cubic.dst"), "--template", "p*x^2"]);
    assert_eq!(code, 2);
    let (_, _, code) = dstab(&[
        "hybrid",
        &fixture("switching.dst"),
        "--k-steps",
        "3",
        "--path-cap",
        "1",
    ]);
    assert_eq!(code, 2);
    let (_, _, code) = dstab(&["deepen", &fixture("growth.dst"), "--schedule", "2,1"]);
    assert_eq!(code, 2);
}

#[test]
fn lyapunov_template_search() {
    let args = [
        "--template",
        "p*x^2",
        "--param",
        "p=[0.5,2]",
        "--exclusion",
        "0.1",
    ];
    let cubic = fixture("cubic.dst");
    let mut a = vec!["lyap", cubic.as_str()];
    a.extend(args);
    let (out, _, code) = dstab(&a);
    assert_eq!((field(&out, "verdict"), code), (Some("success"), 0));
    assert_eq!(field(&out, "class"), Some("Sigma2"));
    assert!(field(&out, "witness").unwrap().starts_with("{p: ["));

    let growth = fixture("growth_small.dst");
    let mut a = vec!["lyap", growth.as_str()];
    a.extend(args);
    let (out, _, code) = dstab(&a);
    assert_eq!((field(&out, "verdict"), code), (Some("delta-fail"), 1));
}

#[test]
fn hybrid_reports() {
    let (out, _, code) = dstab(&["hybrid", &fixture("ball.dst"), "--k-steps", "1"]);
    assert_eq!(code, 0, "{}", out);
    assert_eq!(field(&out, "automaton"), Some("bouncing_ball"));
    assert_eq!(field(&out, "k"), Some("1"));
    for (f, want) in [("decay.dst", "stable"), ("growth.dst", "delta-unstable")] {
        let (cont, _, _) = dstab(&["check-stability", &fixture(f)]);
        let (hyb, _, _) = dstab(&["hybrid", &fixture(f), "--k-steps", "0"]);
        assert_eq!(field(&cont, "verdict"), Some(want));
        assert_eq!(field(&hyb, "verdict"), Some(want));
    }
}

#[test]
fn deepening_lines() {
    let (out, _, code) = dstab(&["deepen", &fixture("growth.dst"), "--schedule", "1,2,4"]);
    assert_eq!(code, 1);
    assert!(
        out.lines().any(|l| l.starts_with("delta-unstable-at T=")),
        "{}",
        out
    );
    let (out, _, code) = dstab(&[
        "deepen",
        &fixture("decay.dst"),
        "--schedule",
        "1,2",
        "--budget",
        "1",
    ]);
    assert_eq!(code, 0);
    assert_eq!(
        out.lines().take(2).collect::<Vec<_>>(),
        ["T=1 stable", "exhausted"]
    );
    assert_eq!(field(&out, "checks"), Some("1"));
}

#[test]
fn worker_count_does_not_change_the_verdict_block() {
    let file = fixture("growth.dst");
    let run = |w: &str| {
        let (out, _, _) = dstab(&["check-stability", &file, "--deterministic", "--workers", w]);
        out
    };
    let one = run("1");
    let four = run("4");
    let block = |s: &str| {
        s.lines()
            .skip_while(|l| *l != "[verdict]")
            .take_while(|l| *l != "[stats]")
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(block(&one), block(&four));
    assert_eq!(field(&one, "boxes"), field(&four, "boxes"));
    assert_eq!(field(&four, "workers"), Some("4"));
}
