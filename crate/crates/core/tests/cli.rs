use std::path::Path;
use std::process::Command;

fn cspreg(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cspreg"))
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SAT: &str = r#"{"variables": [{"name": "x", "domain": [1, 2]}, {"name": "y", "domain": [1, 2]}],
  "constraints": [{"kind": "less_than", "scope": ["x", "y"]}]}"#;
const UNSAT: &str = r#"{"variables": [{"name": "x", "domain": [3]}, {"name": "y", "domain": [3]}],
  "constraints": [{"kind": "not_equal", "scope": ["x", "y"]}]}"#;

#[test]
fn solve_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let sat = write(dir.path(), "sat.json", SAT);
    let out = cspreg(&[
        "solve",
        "--model",
        &sat,
        "--mode",
        "regular",
        "--time-limit-ms",
        "1000",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.contains("x = 1") && stdout.contains("y = 2"),
        "{stdout}"
    );

    let unsat = write(dir.path(), "unsat.json", UNSAT);
    assert_eq!(cspreg(&["solve", "--model", &unsat]).status.code(), Some(1));

    let broken = write(dir.path(), "broken.json", "{");
    assert_eq!(
        cspreg(&["solve", "--model", &broken]).status.code(),
        Some(3)
    );
    assert_eq!(cspreg(&["solve"]).status.code(), Some(3));
    assert_eq!(
        cspreg(&["solve", "--model", &sat, "--mode", "bogus"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(cspreg(&["--help"]).status.code(), Some(0));
}

#[test]
fn solve_appends_stats_rows() {
    let dir = tempfile::tempdir().unwrap();
    let sat = write(dir.path(), "sat.json", SAT);
    let stats = dir.path().join("stats.csv");
    for _ in 0..2 {
        let out = cspreg(&["solve", "--model", &sat, "--stats", stats.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let text = std::fs::read_to_string(&stats).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "instance,mode,elapsed_ms,timed_out,fails,nodes,solution_found,transform_ms"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].contains(",original,"));
}

#[test]
fn regularize_writes_a_loadable_model() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(
        dir.path(),
        "m.json",
        r#"{"variables": [{"name": "a", "domain": {"min": 0, "max": 3}},
                          {"name": "b", "domain": {"min": 0, "max": 3}},
                          {"name": "c", "domain": {"min": 0, "max": 3}}],
            "constraints": [{"kind": "less_than", "scope": ["a", "b"]},
                            {"kind": "less_than", "scope": ["b", "c"]},
                            {"kind": "not_equal", "scope": ["a", "c"]}]}"#,
    );
    let out_path = dir.path().join("out.json");
    let out = cspreg(&[
        "regularize",
        "--model",
        &model,
        "--select",
        "0,1;2",
        "--mode",
        "regular-intersected",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rewritten = csp_regularize::bench::load_model(&out_path).unwrap();
    assert_eq!(rewritten.constraints().len(), 1);
    let solved = cspreg(&["solve", "--model", out_path.to_str().unwrap()]);
    assert_eq!(solved.status.code(), Some(0));

    let bad = cspreg(&[
        "regularize",
        "--model",
        &model,
        "--select",
        "0,x",
        "--mode",
        "regular",
        "--out",
        "/dev/null",
    ]);
    assert_eq!(bad.status.code(), Some(3));
    let overlap = cspreg(&[
        "regularize",
        "--model",
        &model,
        "--select",
        "0;0",
        "--mode",
        "regular",
        "--out",
        "/dev/null",
    ]);
    assert_eq!(overlap.status.code(), Some(3));
}

#[test]
fn bench_blackhole_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bh.csv");
    let out = cspreg(&[
        "bench",
        "blackhole",
        "--instances",
        "1",
        "--seed",
        "2",
        "--enumerated",
        "--time-limit-ms",
        "20000",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 4);
    assert!(text.lines().skip(1).all(|l| l.ends_with(char::is_numeric)));
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.contains("regular-intersected"));
}

#[test]
fn timeout_exit_code() {
    use csp_regularize::bench::{build_black_hole_csp, generate_black_hole, save_model, Deal};
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hard.json");
    // seed 3 needs millions of nodes in original mode
    save_model(
        &build_black_hole_csp(&generate_black_hole(Deal::Seeded(3))).unwrap(),
        &path,
    )
    .unwrap();
    let out = cspreg(&[
        "solve",
        "--model",
        path.to_str().unwrap(),
        "--time-limit-ms",
        "50",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stdout).unwrap().contains("timeout"));
}
