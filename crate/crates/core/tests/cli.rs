use std::process::Command;

fn compmap(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_compmap")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(compmap(&["--help"]).0, 0);
    assert_eq!(compmap(&["basin", "--nx"]).0, 2);
    assert_eq!(compmap(&[]).0, 2);
}

#[test]
fn parameter_constraint_is_a_config_error() {
    let (code, _, err) = compmap(&["curve", "--example", "ex1", "--param", "a=0.5"]);
    assert_eq!(code, 2);
    assert!(err.contains("a > 1"), "{err}");
}

#[test]
fn singular_orbit_start() {
    let (code, _, err) = compmap(&["orbit", "--example", "ex4", "--start", "0,0"]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn hypothesis_failure_names_the_verdict() {
    let (code, _, err) = compmap(&["curve", "--example", "ex3_T", "--fp", "2,2"]);
    assert_eq!(code, 4);
    assert!(err.contains("eigenvalues_ok"), "{err}");
}

#[test]
fn escaping_orbit_stops_early() {
    let (code, out, _) = compmap(&["orbit", "--example", "ex4", "--start", "1.5,3", "--max-iter", "100000"]);
    assert_eq!(code, 0);
    let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert!(rows.len() < 100_000);
    let last_y: f64 = rows.last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!(last_y > 1e3);
}

#[test]
fn dsl_map_matches_builtin() {
    let window = "0,5,0,6";
    let (c1, dsl, _) = compmap(&["curve", "--f", "x/(a+y)", "--g", "y/(1+x)", "--param", "a=2", "--fp", "0,1", "--window", window, "--mode", "limit"]);
    let (c2, builtin, _) = compmap(&["curve", "--example", "ex1", "--window", window]);
    assert_eq!((c1, c2), (0, 0));
    let data = |s: &str| s.lines().filter(|l| !l.starts_with('#')).map(String::from).collect::<Vec<_>>();
    let (a, b) = (data(&dsl), data(&builtin));
    assert_eq!(a.len(), b.len());
    for (p, q) in a.iter().zip(&b).skip(1) {
        let parse = |l: &str| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>();
        let (p, q) = (parse(p), parse(q));
        assert!((p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-7, "{p:?} {q:?}");
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# basin settings\nexample=ex4\nnx=8\nny=8\nformat=csv\n").unwrap();
    let (code, out, err) = compmap(&["basin", "--config", cfg.to_str().unwrap(), "--nx", "4"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("# config: nx=4"));
    let rows = out.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 4 * 8);
}
