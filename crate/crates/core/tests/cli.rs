use std::fs;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bilevel-dc"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(|r| r.trim().to_string()))
        .unwrap_or_else(|| panic!("missing {key} in\n{text}"))
}

#[test]
fn solve_reports_the_optimum() {
    for (inst, method, target) in [
        ("ex1", "pbdc", -3.25),
        ("ex2", "pdg", 0.5),
        ("ex2", "PDC", 0.5),
    ] {
        let o = cli(&[
            "solve",
            "--instance",
            inst,
            "--method",
            method,
            "--seed",
            "7",
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        let s = stdout(&o);
        let f: f64 = field(&s, "final_value").parse().unwrap();
        assert!((f - target).abs() <= 1e-3, "{inst} {method}: {f}");
        assert_eq!(field(&s, "terminated"), "true");
    }
}

#[test]
fn solve_accepts_parameter_overrides_and_instance_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ex1copy.json");
    fs::write(
        &path,
        bilevel_dc::BilevelInstance::load("ex1").unwrap().to_json(),
    )
    .unwrap();
    let o = cli(&[
        "solve",
        "--instance",
        path.to_str().unwrap(),
        "--params",
        "gamma=2",
        "inner_tol=1e-6",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(field(&stdout(&o), "instance"), "ex1copy");
}

#[test]
fn exit_codes() {
    let usage: [&[&str]; 7] = [
        &["frobnicate"],
        &["solve"],
        &["solve", "--instance", "ex1", "--method", "newton"],
        &["solve", "--instance", "ex1", "--params", "gamma=0.5"],
        &["solve", "--instance", "ex1", "--params", "nonsense"],
        &["solve", "--instance", "/nonexistent/instance.json"],
        &[
            "profile", "--in", "x.csv", "--metric", "speed", "--offset", "1", "--out", "o",
        ],
    ];
    for args in usage {
        assert_eq!(cli(args).status.code(), Some(2), "{args:?}");
    }

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"A\": [[1.0]], ").unwrap();
    assert_eq!(
        cli(&["solve", "--instance", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );

    // a lower level that is unbounded for every x is a solver failure
    let unbounded = r#"{"A": [[0.0]], "B": [[-1.0]], "b": [0.0], "C": [[-1.0]], "D": [[0.0]], "d": [0.0],
        "c": [-1.0], "Q": [[1.0, 0.0], [0.0, 1.0]], "q": [0.0, 0.0], "const": 0.0,
        "start_box": [[0.0, 1.0], [0.0, 1.0]]}"#;
    let p = dir.path().join("unbounded.json");
    fs::write(&p, unbounded).unwrap();
    let o = cli(&["solve", "--instance", p.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn bench_then_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let args = |o: &str| {
        vec![
            "bench".to_string(),
            "--instance".into(),
            "ex2".into(),
            "--methods".into(),
            "pbdc,pdg".into(),
            "--runs".into(),
            "6".into(),
            "--seed".into(),
            "11".into(),
            "--out".into(),
            o.into(),
            "--no-timing".into(),
        ]
    };
    let run = |o: &str| {
        let a = args(o);
        let r = cli(&a.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(
            r.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&r.stderr)
        );
    };
    run(out.to_str().unwrap());
    let again = dir.path().join("b2");
    run(again.to_str().unwrap());
    for f in ["results.csv", "summary.csv"] {
        assert_eq!(
            fs::read(out.join(f)).unwrap(),
            fs::read(again.join(f)).unwrap(),
            "{f}"
        );
    }
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(
        results.lines().next().unwrap(),
        "method,start,seed,fval,outer,inner,gap,resid,terminated,wall_ms"
    );
    assert_eq!(results.lines().count(), 1 + 12);
    for m in ["fval", "outer", "gap", "inner"] {
        assert!(out.join(format!("profile_{m}.svg")).exists());
    }

    let prof = dir.path().join("p");
    let o = cli(&[
        "profile",
        "--in",
        out.join("results.csv").to_str().unwrap(),
        "--metric",
        "fval",
        "--offset",
        "1e-5",
        "--pistar",
        "0.5",
        "--out",
        prof.to_str().unwrap(),
        "--log-tau",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let svg = fs::read_to_string(prof.join("profile_fval.svg")).unwrap();
    assert!(svg.starts_with("<?xml") || svg.starts_with("<svg"));
    assert!(!prof.join("results.csv").exists());

    let o = cli(&[
        "profile",
        "--in",
        out.join("results.csv").to_str().unwrap(),
        "--offset",
        "-1",
        "--out",
        prof.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_with_zero_runs_writes_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&[
        "bench",
        "--instance",
        "ex1",
        "--runs",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("note:"));
    assert_eq!(
        fs::read_to_string(dir.path().join("results.csv"))
            .unwrap()
            .lines()
            .count(),
        1
    );
    assert!(!dir.path().join("profile_fval.svg").exists());
}
