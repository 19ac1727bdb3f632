use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pqharm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqharm"))
        .args(args)
        .output()
        .expect("spawn pqharm")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not a report ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

/// Report body with the fields that legitimately vary between runs removed.
fn body(out: &Output) -> Value {
    let mut r = report(out);
    r.as_object_mut().unwrap().remove("generated_unix");
    r
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn sphere_in_sphere_example_is_proper() {
    let out = pqharm(&[
        "verify-hypersurface",
        "--builtin",
        "sphere-in-sphere",
        "--m",
        "2",
        "--a2",
        "0.5",
        "--p",
        "2",
        "--q",
        "2.5",
        "--grid",
        "16",
        "--expect",
        "proper",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = report(&out);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["summary"]["classification"], "proper");
    assert_eq!(r["points"].as_array().unwrap().len(), 256);
    // p = 1/b^2 with b^2 = 1 - a^2 = 1/2: every residual vanishes identically
    assert!(r["summary"]["max_abs_eq1"].as_f64().unwrap() < 1e-6);
}

#[test]
fn cone_solve_example_reports_closed_form() {
    let out = pqharm(&[
        "solve",
        "--builtin",
        "cone",
        "--q",
        "3",
        "--unknowns",
        "p,r",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let s = &report(&out)["summary"];
    let q = 3.0f64;
    let (p, r) = (2.0 * (1.0 - 1.0 / q), 1.0 / (q * (q - 1.0)).sqrt());
    assert!((s["p"].as_f64().unwrap() - p).abs() < 1e-6, "{s}");
    assert!((s["r"].as_f64().unwrap() - r).abs() < 1e-6, "{s}");
    assert_eq!(format!("{:.6}", s["p"].as_f64().unwrap()), "1.333333");
    assert_eq!(format!("{:.6}", s["r"].as_f64().unwrap()), "0.408248");
}

#[test]
fn helix_example_is_proper() {
    let out = pqharm(&[
        "verify-curve",
        "--builtin",
        "helix",
        "--alpha",
        "0.785398",
        "--a",
        "1.322876",
        "--b",
        "0.5",
        "--p",
        "2",
        "--q",
        "2",
        "--expect",
        "proper",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let s = &report(&out)["summary"];
    assert_eq!(s["classification"], "proper");
    assert!((s["helix"]["p"].as_f64().unwrap() - 2.0).abs() < 1e-5);
}

#[test]
fn exact_fractions_are_accepted() {
    let out = pqharm(&[
        "verify-curve",
        "--builtin",
        "helix",
        "--alpha",
        "pi/4",
        "--a",
        "sqrt(7/4)",
        "--b",
        "1/2",
        "--p",
        "2",
        "--q",
        "7/4",
        "--expect",
        "proper",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(report(&out)["config"]["q"], 1.75);
}

#[test]
fn expectation_mismatch_exits_one() {
    let out = pqharm(&[
        "verify-hypersurface",
        "--builtin",
        "sphere-in-sphere",
        "--a2",
        "1/2",
        "--p",
        "2.5",
        "--q",
        "2",
        "--expect",
        "proper",
    ]);
    assert_eq!(code(&out), 1);
    let s = &report(&out)["summary"];
    assert_eq!(s["classification"], "not");
    assert_eq!(s["matched"], false);
}

#[test]
fn plane_is_minimal() {
    let out = pqharm(&[
        "verify-hypersurface",
        "--builtin",
        "plane",
        "--p",
        "3",
        "--q",
        "2",
        "--expect",
        "minimal",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn inadmissible_and_failed_solves_exit_one() {
    let out = pqharm(&[
        "solve",
        "--builtin",
        "cone",
        "--q",
        "2",
        "--unknowns",
        "p,r",
    ]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    let s = &report(&out)["summary"];
    assert_eq!(s["status"], "solved");
    assert_eq!(s["admissible"], false);

    let out = pqharm(&["solve", "--builtin", "plane", "--q", "2"]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    assert_eq!(report(&out)["summary"]["status"], "failed");
}

#[test]
fn solve_p_for_sphere_and_helix() {
    let out = pqharm(&[
        "solve",
        "--builtin",
        "sphere-in-sphere",
        "--a2",
        "0.75",
        "--q",
        "3",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let p = report(&out)["summary"]["p"].as_f64().unwrap();
    assert!((p - 4.0).abs() < 1e-6, "{p}");

    let out = pqharm(&[
        "solve",
        "--builtin",
        "helix",
        "--alpha",
        "pi/4",
        "--a",
        "sqrt(7)/2",
        "--b",
        "1/2",
        "--q",
        "3",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let p = report(&out)["summary"]["p"].as_f64().unwrap();
    assert!((p - 2.0).abs() < 1e-6, "{p}");
}

fn assert_config_error(args: &[&str]) {
    let out = pqharm(args);
    assert_eq!(code(&out), 2, "{args:?}");
    let err = stderr(&out);
    assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
    assert!(err.starts_with("error: "), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn config_errors_exit_two_with_one_line() {
    assert_config_error(&["verify-hypersurface", "--builtin", "plane", "--p", "2"]);
    assert_config_error(&[
        "verify-hypersurface",
        "--builtin",
        "nope",
        "--p",
        "2",
        "--q",
        "2",
    ]);
    assert_config_error(&[
        "verify-hypersurface",
        "--builtin",
        "plane",
        "--p",
        "two",
        "--q",
        "2",
    ]);
    assert_config_error(&[
        "verify-hypersurface",
        "--builtin",
        "plane",
        "--p",
        "2",
        "--q",
        "2",
        "--grid",
        "3",
    ]);
    assert_config_error(&[
        "verify-hypersurface",
        "--builtin",
        "plane",
        "--p",
        "1",
        "--q",
        "2",
    ]);
    assert_config_error(&[
        "verify-hypersurface",
        "--builtin",
        "cone",
        "--a2",
        "0.5",
        "--p",
        "2",
        "--q",
        "2",
    ]);
    assert_config_error(&[
        "verify-hypersurface",
        "--builtin",
        "helix",
        "--p",
        "2",
        "--q",
        "2",
    ]);
    assert_config_error(&["verify-curve", "--builtin", "plane", "--p", "2", "--q", "2"]);
    assert_config_error(&[
        "verify-hypersurface",
        "--chart",
        "/nonexistent/chart.toml",
        "--p",
        "2",
        "--q",
        "2",
    ]);
    assert_config_error(&[
        "solve",
        "--builtin",
        "cone",
        "--q",
        "3",
        "--unknowns",
        "p,x",
    ]);
    assert_config_error(&["frobnicate"]);
}

#[test]
fn bad_thread_cap_is_a_config_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_pqharm"))
        .arg("catalog")
        .env("PQHARM_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    let out = Command::new(env!("CARGO_BIN_EXE_pqharm"))
        .arg("catalog")
        .env("PQHARM_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
}

#[test]
fn catalog_matches_golden() {
    let out = pqharm(&["catalog"]);
    assert_eq!(code(&out), 0);
    let mut r = body(&out);
    r["engine"].as_object_mut().unwrap().remove("version");
    let golden: Value = serde_json::from_str(
        &std::fs::read_to_string(
            Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/catalog.json"),
        )
        .unwrap(),
    )
    .unwrap();
    assert_eq!(r, golden);
}

#[test]
fn catalog_lists_builtins_with_expectations() {
    let r = report(&pqharm(&["catalog"]));
    let entries = r["points"].as_array().unwrap();
    let find = |name: &str| {
        entries
            .iter()
            .find(|e| e["name"] == name)
            .unwrap_or_else(|| panic!("{name} missing"))
    };
    for name in [
        "sphere-in-sphere",
        "cone",
        "helix",
        "plane",
        "great-sphere",
        "circle",
    ] {
        find(name);
    }
    assert!(find("cone")["expectation"]
        .as_str()
        .unwrap()
        .contains("(p, r) = (2(1-1/q), 1/sqrt(q(q-1)))"));
    assert!(find("sphere-in-sphere")["expectation"]
        .as_str()
        .unwrap()
        .contains("p = 1/b^2"));
    assert!(find("plane")["expectation"]
        .as_str()
        .unwrap()
        .starts_with("minimal"));
}

#[test]
fn reports_are_deterministic_modulo_timestamp() {
    let runs: [&[&str]; 3] = [
        &[
            "verify-hypersurface",
            "--builtin",
            "cone",
            "--r",
            "0.4",
            "--p",
            "1.5",
            "--q",
            "3",
            "--grid",
            "6",
        ],
        &[
            "solve",
            "--builtin",
            "cone",
            "--q",
            "4",
            "--unknowns",
            "p,r",
        ],
        &[
            "variation-check",
            "--builtin",
            "circle",
            "--rho",
            "1.5",
            "--p",
            "3",
            "--q",
            "2",
            "--bumps",
            "2",
            "--nodes",
            "256",
            "--seed",
            "7",
        ],
    ];
    for args in runs {
        let a = pqharm(args);
        let b = pqharm(args);
        assert_eq!(code(&a), code(&b));
        assert_eq!(body(&a), body(&b), "{args:?}");
    }
    let thread_capped = Command::new(env!("CARGO_BIN_EXE_pqharm"))
        .args(runs[0])
        .env("PQHARM_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(body(&thread_capped), body(&pqharm(runs[0])));
}

#[test]
fn different_seeds_give_different_bumps() {
    let run = |seed: &str| {
        body(&pqharm(&[
            "variation-check",
            "--builtin",
            "circle",
            "--rho",
            "1",
            "--p",
            "3",
            "--q",
            "2",
            "--bumps",
            "1",
            "--nodes",
            "256",
            "--seed",
            seed,
        ]))
    };
    assert_ne!(
        run("1")["points"][0]["centre"],
        run("2")["points"][0]["centre"]
    );
}

#[test]
fn variation_check_passes_on_a_helix() {
    let out = pqharm(&[
        "variation-check",
        "--builtin",
        "helix",
        "--alpha",
        "pi/4",
        "--a",
        "sqrt(7)/2",
        "--b",
        "1/2",
        "--p",
        "3",
        "--q",
        "2",
        "--bumps",
        "2",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = report(&out);
    assert_eq!(r["summary"]["all_pass"], true);
    for pt in r["points"].as_array().unwrap() {
        assert!(pt["rel_error"].as_f64().unwrap() < 1e-4, "{pt}");
    }
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let json = dir.path().join("sweep.json");
    let out = pqharm(&[
        "sweep",
        "--builtin",
        "sphere-in-sphere",
        "--a2",
        "0.5",
        "--q",
        "2",
        "--param",
        "p",
        "--from",
        "1.5",
        "--to",
        "2.5",
        "--steps",
        "3",
        "--csv",
        csv.to_str().unwrap(),
        "--out",
        json.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "param,max_eq1,max_eq2,classification");
    assert_eq!(lines.len(), 4);
    let labels: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.rsplit(',').next().unwrap())
        .collect();
    assert_eq!(labels, ["not", "proper", "not"]);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(r["points"].as_array().unwrap().len(), 3);
}

#[test]
fn sweep_marks_invalid_values() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = pqharm(&[
        "sweep",
        "--builtin",
        "sphere-in-sphere",
        "--p",
        "2",
        "--q",
        "2",
        "--param",
        "a2",
        "--from",
        "0.5",
        "--to",
        "1.5",
        "--steps",
        "3",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with(",error")).count(), 2);
}

#[test]
fn expression_chart_files() {
    let dir = tempfile::tempdir().unwrap();
    let cone = dir.path().join("cone.toml");
    std::fs::write(
        &cone,
        r#"
coords = ["u", "v"]
domain = [[0.5, 2.0], [0, "2*pi"]]
map = ["r*u*cos(v)", "r*u*sin(v)", "u"]
[ambient]
curvature = 0
[constants]
r = "1/sqrt(6)"
"#,
    )
    .unwrap();
    let out = pqharm(&[
        "verify-hypersurface",
        "--chart",
        cone.to_str().unwrap(),
        "--p",
        "4/3",
        "--q",
        "3",
        "--grid",
        "6",
        "--expect",
        "proper",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(report(&out)["engine"]["path"], "stencil");

    // a circle of radius 1 traversed at speed 2: reparametrized before the Frenet frame
    let circle = dir.path().join("circle.toml");
    std::fs::write(
        &circle,
        "kind = \"curve\"\ndomain = [[0, \"pi\"]]\nmap = [\"cos(2*t)\", \"sin(2*t)\", \"0\"]\n[ambient]\ncurvature = 0\n",
    )
    .unwrap();
    let out = pqharm(&[
        "verify-curve",
        "--chart",
        circle.to_str().unwrap(),
        "--p",
        "2",
        "--q",
        "2",
        "--expect",
        "not",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let s = &report(&out)["summary"];
    assert!((s["min_k"].as_f64().unwrap() - 1.0).abs() < 1e-6, "{s}");
    assert!(
        (s["closed_form_p"]["p"].as_f64().unwrap() - 1.0).abs() < 1e-6,
        "{s}"
    );
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = pqharm(&["catalog", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["command"], "catalog");
}
