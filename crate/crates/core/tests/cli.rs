use std::process::{Command, Output};

use opim::bench::ErrorTable;

fn opim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opim")).args(args).output().unwrap()
}

fn config(name: &str) -> String {
    format!("{}/configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn usage_errors_exit_one_with_a_single_line() {
    for args in [
        &["solve"][..],
        &["solve", "--problem", "example1", "--order", "0"],
        &["solve", "--problem", "example1", "--degree-cap", "1"],
        &["solve", "--problem", "example1", "--exp-order", "0"],
        &["solve", "--problem", "example1", "--format", "xml"],
        &["solve", "--problem", "example1", "--init", "1,2"],
        &["solve", "--problem", "example1", "--config", "x.toml"],
        &["solve", "--config", "/nonexistent/run.toml"],
        &["residual", "--problem", "example1", "--order", "2", "--constants", "1"],
        &["table1", "--orders", "3"],
    ] {
        let out = opim(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.lines().count(), 1, "{args:?}: {err}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn table1_csv_is_deterministic() {
    let a = opim(&["table1"]);
    let b = opim(&["table1"]);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("order,x,approx,truth,abs_error,published_abs_error,bound,within"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 21);
    // the exit status follows the verdict line
    let pass = text.contains("# verdict=PASS");
    assert_eq!(a.status.code(), Some(if pass { 0 } else { 3 }));
}

#[test]
fn solve_csv_round_trips_through_the_reader() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e1.csv");
    let status = opim(&[
        "solve",
        "--problem",
        "example1",
        "--order",
        "3",
        "--points",
        "0.3,0.6,0.9",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(status.status.code(), Some(0));
    assert!(status.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let rows = ErrorTable::rows_from_csv(&text).unwrap();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.abs_error() < 2e-3));
    assert!(text.contains("# truth=exact"));
}

#[test]
fn config_files_run() {
    for (file, truth) in [("example1.toml", "exact"), ("isothermal.toml", "reference")] {
        let out = opim(&["solve", "--config", &config(file), "--format", "csv"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains(&format!("# truth={truth}")), "{text}");
    }
}

#[test]
fn flags_override_the_config_file() {
    let out = opim(&[
        "solve",
        "--config",
        &config("example1.toml"),
        "--order",
        "2",
        "--points",
        "0.4,0.8",
        "--init",
        "0.5,0.5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("points = [0.4, 0.8]"));
}

#[test]
fn rational_trace_dump() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.txt");
    let out = opim(&[
        "solve",
        "--problem",
        "isothermal",
        "--order",
        "2",
        "--coefficients",
        "rational",
        "--dump-trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let dump = std::fs::read_to_string(trace).unwrap();
    assert!(dump.contains("yc0 = rational:[0, 0, -1/2]"), "{dump}");
    assert!(dump.lines().any(|l| l.starts_with("y2 = rational:")));
}

#[test]
fn residual_csv_samples_the_domain() {
    let out = opim(&[
        "residual",
        "--problem",
        "example1",
        "--order",
        "1",
        "--constants",
        "0",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("x,residual"));
    // C = 0 leaves y = 1, so R = -(4x^2 + 6)
    assert!(text.lines().any(|l| l == "1.0,-10.0"), "{text}");
}

#[test]
fn singular_jacobian_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.toml");
    std::fs::write(
        &path,
        "schema = 1\n[problem]\nk = 2\nbeta = [0]\ngamma = \"power:1\"\ng = [1]\ny0 = 0\n",
    )
    .unwrap();
    let out = opim(&["solve", "--config", path.to_str().unwrap(), "--order", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(
        err.contains("singular Jacobian") && err.contains("collocation points ("),
        "{err}"
    );
}

#[test]
fn bench_sweep_passes_at_order_three() {
    let out = opim(&["bench", "--order", "3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("# verdict=PASS"));
    for name in opim::problem::CATALOG_NAMES {
        assert!(text.lines().any(|l| l.starts_with(&format!("{name},true,"))));
    }
}
