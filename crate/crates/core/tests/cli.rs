use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mimo_aging::chanmodel::read_trace;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mimo-aging"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn small_config(dir: &Path) -> PathBuf {
    write_config(
        dir,
        "small.json",
        r#"{
            "geometry": {"rows_elevation": 2, "cols_azimuth": 8},
            "terminals": [
                {"initial_position": [-2.0, 10.0, -1.0], "velocity": [5.0, 0.0, 0.0]},
                {"initial_position": [1.0, 14.0, 0.5], "velocity": [5.0, 0.0, 0.0]},
                {"initial_position": [3.0, 18.0, 1.5], "velocity": [5.0, 0.0, 0.0]}
            ],
            "num_snapshots": 200,
            "num_blocks": 2
        }"#,
    )
}

#[test]
fn generate_writes_trace_and_manifest() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("t.mmct");
    let o = run(&["generate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let trace = read_trace(fs::File::open(&out).unwrap()).unwrap();
    let d = trace.dims();
    assert_eq!(
        (d.snapshots, d.blocks, d.users, d.antennas),
        (200, 2, 3, 16)
    );
    assert_eq!(trace.sample_period_us(), 5000);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("t.mmct.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["subcommand"], "generate");
    assert!(manifest["tool_version"].is_string());
}

#[test]
fn generate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.mmct"), dir.path().join("b.mmct"));
    let cfg = scenario("jakes_64.json");
    assert_eq!(
        code(&run(&["generate", "--config", s(&cfg), "--out", s(&a)])),
        0
    );
    assert_eq!(
        code(&run(&[
            "--threads",
            "3",
            "generate",
            "--config",
            s(&cfg),
            "--out",
            s(&b)
        ])),
        0
    );
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn more_users_than_antennas_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{
            "geometry": {"rows_elevation": 1, "cols_azimuth": 2},
            "terminals": [
                {"initial_position": [0.0, 10.0, 0.0]},
                {"initial_position": [1.0, 10.0, 0.0]},
                {"initial_position": [2.0, 10.0, 0.0]}
            ],
            "num_snapshots": 4
        }"#,
    );
    let o = run(&[
        "generate",
        "--config",
        s(&cfg),
        "--out",
        s(&dir.path().join("x.mmct")),
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("K <= M"));
}

#[test]
fn unknown_config_field_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "typo.json",
        r#"{"geometry": {"rows_elevation": 1, "cols_azimuth": 2}, "terminals": [], "num_snapshots": 4, "snr": 3}"#,
    );
    let o = run(&[
        "generate",
        "--config",
        s(&cfg),
        "--out",
        s(&dir.path().join("x.mmct")),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_trace_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let o = run(&[
        "sumrate",
        "--trace",
        s(&dir.path().join("nope.mmct")),
        "--out",
        s(&dir.path().join("r.csv")),
    ]);
    assert_eq!(code(&o), 4);
}

#[test]
fn corrupt_trace_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.mmct");
    fs::write(&bad, b"NOPE0000").unwrap();
    let o = run(&[
        "sumrate",
        "--trace",
        s(&bad),
        "--out",
        s(&dir.path().join("r.csv")),
    ]);
    assert_eq!(code(&o), 4);
}

#[test]
fn bad_arguments_exit_with_two() {
    assert_eq!(code(&run(&["sumrate"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
}

#[test]
fn colocated_users_make_zf_singular() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "twins.json",
        r#"{
            "geometry": {"rows_elevation": 1, "cols_azimuth": 8},
            "terminals": [
                {"initial_position": [0.0, 10.0, 0.0]},
                {"initial_position": [0.0, 10.0, 0.0]}
            ],
            "num_snapshots": 4
        }"#,
    );
    let trace = dir.path().join("twins.mmct");
    assert_eq!(
        code(&run(&["generate", "--config", s(&cfg), "--out", s(&trace)])),
        0
    );
    let o = run(&[
        "sumrate",
        "--trace",
        s(&trace),
        "--decoder",
        "zf",
        "--out",
        s(&dir.path().join("r.csv")),
    ]);
    assert_eq!(code(&o), 3);
    // matched filtering has no inverse to fail
    let o = run(&[
        "sumrate",
        "--trace",
        s(&trace),
        "--decoder",
        "mf",
        "--out",
        s(&dir.path().join("m.csv")),
    ]);
    assert_eq!(code(&o), 0);
}

#[test]
fn sumrate_aging_coherence_d10_pipeline() {
    let dir = TempDir::new().unwrap();
    let p = |n: &str| dir.path().join(n);
    let cfg = small_config(dir.path());
    assert_eq!(
        code(&run(&[
            "generate",
            "--config",
            s(&cfg),
            "--out",
            s(&p("t.mmct"))
        ])),
        0
    );

    let o = run(&[
        "sumrate",
        "--trace",
        s(&p("t.mmct")),
        "--decoder",
        "mf",
        "--delta-samples",
        "2",
        "--out",
        s(&p("r.csv")),
        "--summary-out",
        s(&p("sum.csv")),
        "--cdf-out",
        s(&p("cdf.csv")),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rates = fs::read_to_string(p("r.csv")).unwrap();
    // (200 - 2) times × 2 blocks, plus header
    assert_eq!(rates.lines().count(), 1 + 198 * 2);
    assert!(fs::read_to_string(p("sum.csv"))
        .unwrap()
        .contains("median_sum_rate"));

    let o = run(&[
        "aging",
        "--trace",
        s(&p("t.mmct")),
        "--max-delta",
        "3",
        "--out",
        s(&p("g.csv")),
    ]);
    assert_eq!(code(&o), 0);
    let gamma = fs::read_to_string(p("g.csv")).unwrap();
    let lines: Vec<&str> = gamma.lines().collect();
    assert_eq!(lines[0], "delta_ms,gamma_zf,gamma_mf");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("5,1,1"));

    let o = run(&[
        "coherence",
        "--trace",
        s(&p("t.mmct")),
        "--out",
        s(&p("c.csv")),
        "--profile-out",
        s(&p("prof.csv")),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        fs::read_to_string(p("prof.csv")).unwrap().lines().count(),
        201
    );

    let o = run(&[
        "d10",
        "--trace",
        s(&p("t.mmct")),
        "--azimuth-sizes",
        "3,5,8",
        "--speed",
        "5",
        "--elevation-rows",
        "2",
        "--decoder",
        "mf",
        "--out",
        s(&p("d10.csv")),
        "--trend-out",
        s(&p("trend.csv")),
        "--trend-resolution",
        "10",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let d10 = fs::read_to_string(p("d10.csv")).unwrap();
    assert_eq!(
        d10.lines().next().unwrap(),
        "m_azimuth,d10_wavelengths,median_rate"
    );
    assert_eq!(d10.lines().count(), 4);

    let o = run(&[
        "overhead",
        "--d10-table",
        s(&p("d10.csv")),
        "--azimuth-sizes",
        "3,5,8",
        "--elevation-rows",
        "2",
        "--velocities",
        "10,20",
        "--out",
        s(&p("oh.csv")),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(p("oh.csv")).unwrap().lines().count(), 7);

    for out in ["t.mmct", "r.csv", "g.csv", "c.csv", "d10.csv", "oh.csv"] {
        assert!(p(&format!("{out}.manifest.json")).exists(), "{out}");
    }
}

#[test]
fn d10_with_wrong_row_count_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    let trace = dir.path().join("t.mmct");
    assert_eq!(
        code(&run(&["generate", "--config", s(&cfg), "--out", s(&trace)])),
        0
    );
    let o = run(&[
        "d10",
        "--trace",
        s(&trace),
        "--azimuth-sizes",
        "4",
        "--speed",
        "5",
        "--elevation-rows",
        "3",
        "--out",
        s(&dir.path().join("d.csv")),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn static_trace_has_no_coherence_crossing() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "still.json",
        r#"{
            "geometry": {"rows_elevation": 1, "cols_azimuth": 8},
            "terminals": [{"initial_position": [0.0, 10.0, 0.0]}],
            "num_snapshots": 10
        }"#,
    );
    let trace = dir.path().join("still.mmct");
    let out = dir.path().join("c.csv");
    assert_eq!(
        code(&run(&["generate", "--config", s(&cfg), "--out", s(&trace)])),
        0
    );
    assert_eq!(
        code(&run(&["coherence", "--trace", s(&trace), "--out", s(&out)])),
        0
    );
    let csv = fs::read_to_string(&out).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.ends_with(",true"), "{row}");
}

#[test]
fn overhead_with_fixed_coherence_time() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("oh.csv");
    let o = run(&[
        "overhead",
        "--tc-ms",
        "10",
        "--velocities",
        "100",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(&out).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.ends_with(",20,140,2800,3,2.142857"), "{row}");
}

#[test]
fn infeasible_overhead_is_numerical() {
    let dir = TempDir::new().unwrap();
    let o = run(&[
        "overhead",
        "--tc-ms",
        "1",
        "--users",
        "5000",
        "--velocities",
        "50",
        "--out",
        s(&dir.path().join("oh.csv")),
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn plot_renders_line_and_cdf() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("g.csv");
    fs::write(
        &csv,
        "delta_ms,gamma_zf,gamma_mf\n5,1,1\n10,0.9,0.99\n15,0.8,0.98\n",
    )
    .unwrap();

    let svg = dir.path().join("g.svg");
    let o = run(&[
        "plot",
        "--csv",
        s(&csv),
        "--x",
        "delta_ms",
        "--y",
        "gamma_zf,gamma_mf",
        "--out",
        s(&svg),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg"));
    assert_eq!(text.matches("<polyline").count(), 2);

    let cdf = dir.path().join("c.svg");
    let o = run(&[
        "plot",
        "--csv",
        s(&csv),
        "--y",
        "gamma_zf",
        "--cdf",
        "--title",
        "CDF",
        "--out",
        s(&cdf),
    ]);
    assert_eq!(code(&o), 0);
    assert!(fs::read_to_string(&cdf).unwrap().contains(">CDF<"));
}

#[test]
fn plot_rejects_unknown_column_and_malformed_csv() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("g.csv");
    fs::write(&csv, "a,b\n1,2\n3,4\n").unwrap();
    let out = dir.path().join("g.svg");
    assert_eq!(
        code(&run(&[
            "plot",
            "--csv",
            s(&csv),
            "--x",
            "a",
            "--y",
            "zz",
            "--out",
            s(&out)
        ])),
        2
    );

    fs::write(&csv, "a,b\n1,2\n3\n").unwrap();
    assert_eq!(
        code(&run(&[
            "plot",
            "--csv",
            s(&csv),
            "--x",
            "a",
            "--y",
            "b",
            "--out",
            s(&out)
        ])),
        2
    );

    fs::write(&csv, "a,b\n1,2\nx,4\n").unwrap();
    assert_eq!(
        code(&run(&[
            "plot",
            "--csv",
            s(&csv),
            "--x",
            "a",
            "--y",
            "b",
            "--out",
            s(&out)
        ])),
        2
    );
}
