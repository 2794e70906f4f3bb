use std::path::Path;

use darboux::cli::{from_csv, from_json, parse_config, run, run_cli, to_json, Cell, OutputTable};

fn call(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["darboux"];
    argv.extend_from_slice(args);
    let code = run_cli(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const COSH: &str = r#"{"command": "potential",
 "chain": {"n": 2, "m": 1, "links": [{"kind": "singular", "entries": [[{"basis": "cosh", "k": 0.8}]]}]},
 "grid": {"r_min": 0.1, "r_max": 6, "count": 60}}"#;

fn column(t: &OutputTable, name: &str) -> Vec<f64> {
    let c = t.column(name).unwrap();
    t.rows.iter().map(|r| r[c].as_f64().unwrap()).collect()
}

#[test]
fn cosh_potential_is_sech_squared() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cosh.json", COSH);
    let (code, out, err) = call(&["potential", "--config", &cfg, "--format", "json"]);
    assert_eq!(code, 0, "{err}");
    let t = &from_json(&out).unwrap()[0];
    let k: f64 = 0.8;
    for (r, v) in column(t, "r").into_iter().zip(column(t, "V11")) {
        let exact = -2.0 * k * k / (k * r).cosh().powi(2);
        assert!((v - exact).abs() < 1e-9, "r = {r}: {v} vs {exact}");
    }
    assert!(column(t, "V22").iter().all(|&v| v == 0.0));
}

#[test]
fn json_round_trip_is_bit_exact() {
    let cfg = parse_config(COSH).unwrap();
    let outcome = run(&cfg).unwrap();
    let text = to_json(&outcome.tables);
    let back = from_json(&text).unwrap();
    assert_eq!(back, outcome.tables);
    for (a, b) in back[0].rows.iter().flatten().zip(outcome.tables[0].rows.iter().flatten()) {
        if let (Cell::Num(x), Cell::Num(y)) = (a, b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cosh.json", COSH);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let (code, _, err) = call(&["potential", "--config", &cfg, "--out", p.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert!(text.contains("r (fm),V11 (fm^-2),V12 (fm^-2),V21 (fm^-2),V22 (fm^-2),V_C (fm^-2),V_T (fm^-2),V_O (fm^-2),pole (flag)"));
    // nine significant digits
    assert!(text.lines().any(|l| l.starts_with("1.00000000e-1,")));
}

#[test]
fn cli_overrides_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cosh.json", COSH);
    let (code, out, _) = call(&["potential", "--config", &cfg, "--rmin", "0.5", "--rmax", "2", "--points", "4", "--grid", "log"]);
    assert_eq!(code, 0);
    let t = &from_csv(&out).unwrap()[0];
    let r = column(t, "r");
    assert_eq!(r.len(), 4);
    assert!((r[1] / r[0] - r[2] / r[1]).abs() < 1e-8);
    assert!((r[3] - 2.0).abs() < 1e-8);
}

#[test]
fn poles_are_flagged_not_dropped() {
    // cosh - 2 sinh vanishes at tanh(kr) = 1/2
    let text = r#"{"command": "potential",
     "chain": {"n": 2, "m": 1, "links": [{"kind": "singular", "entries": [[{"sum": [
        {"basis": "cosh", "k": 0.5}, {"basis": "sinh", "k": 0.5, "coeff": -2}]}]]}]},
     "grid": {"r_min": 0.5, "r_max": 2.0, "count": 31}}"#;
    let outcome = run(&parse_config(text).unwrap()).unwrap();
    let t = &outcome.tables[0];
    assert_eq!(t.rows.len(), 31);
    let zero = 0.5f64.atanh() / 0.5;
    let radii = t.metadata["pole_radii"].as_array().unwrap();
    assert_eq!(radii.len(), 1);
    assert!((radii[0].as_f64().unwrap() - zero).abs() < 0.05);
    let pole = t.column("pole").unwrap();
    let flagged: Vec<f64> =
        t.rows.iter().filter(|r| r[pole] == Cell::Flag(true)).map(|r| r[0].as_f64().unwrap()).collect();
    assert!(!flagged.is_empty() && flagged.iter().all(|r| (r - zero).abs() < 0.1), "{flagged:?}");
}

#[test]
fn solution_command() {
    let text = r#"{"command": "solution",
     "chain": {"n": 2, "m": 1, "links": [{"kind": "singular", "entries": [[{"basis": "cosh", "k": 0.8}]]}]},
     "solution": [{"basis": "jost_s", "k": 0.5}, {"basis": "jost_s", "k": 0.5}],
     "grid": {"r_min": 0.5, "r_max": 3, "count": 6}}"#;
    let outcome = run(&parse_config(text).unwrap()).unwrap();
    let t = &outcome.tables[0];
    // phi1 = psi1' - k0 tanh(k0 r) psi1, phi2 = psi2
    let (k0, q) = (0.8f64, 0.5f64);
    for row in &t.rows {
        let r = row[0].as_f64().unwrap();
        let e = num_complex::Complex64::from_polar(1.0, q * r);
        let phi1 = e * num_complex::Complex64::new(-k0 * (k0 * r).tanh(), q);
        let got = num_complex::Complex64::new(row[1].as_f64().unwrap(), row[2].as_f64().unwrap());
        assert!((got - phi1).norm() < 1e-10, "{got} vs {phi1}");
        assert!((row[3].as_f64().unwrap() - e.re).abs() < 1e-12);
    }
    assert_eq!(t.metadata["energy"][0].as_f64().unwrap(), 0.25);
}

#[test]
fn kvg_writes_three_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "kvg.json", r#"{"command": "kvg", "k1": 0.944, "k2": 0.232, "chi": 1.22, "k": [0.5, 1.0]}"#);
    let out = dir.path().join("kvg.csv");
    let (code, _, err) = call(&["kvg", "--config", &cfg, "--out", out.to_str().unwrap(), "--points", "50"]);
    assert_eq!(code, 0, "{err}");
    let read = |name: &str| from_csv(&std::fs::read_to_string(dir.path().join(name)).unwrap()).unwrap().remove(0);
    let potential = read("kvg_potential.csv");
    assert_eq!(potential.rows.len(), 50);
    let smatrix = read("kvg_smatrix.csv");
    assert_eq!(smatrix.rows.len(), 2);
    assert!(column(&smatrix, "max_gap").iter().all(|&g| g < 1e-3));
    let summary = read("kvg_summary.csv");
    let eta = column(&summary, "eta")[0];
    assert!((eta - 0.018081).abs() < 1e-6);
}

#[test]
fn smatrix_of_a_chain_reads_l_from_the_tail() {
    let text = r#"{"command": "smatrix", "k": [0.3, 1.2],
     "chain": {"n": 2, "m": 1, "links": [{"kind": "singular", "entries": [[{"basis": "cosh", "k": 0.8}]]}]}}"#;
    let outcome = run(&parse_config(text).unwrap()).unwrap();
    let t = &outcome.tables[0];
    assert_eq!(t.metadata["l"], serde_json::json!([0, 0]));
    for row in &t.rows {
        let k = row[0].as_f64().unwrap();
        let s11 = num_complex::Complex64::new(row[2].as_f64().unwrap(), row[3].as_f64().unwrap());
        let delta = (0.8 / k).atan();
        assert!((s11 - num_complex::Complex64::from_polar(1.0, 2.0 * delta)).norm() < 1e-5, "k = {k}: {s11}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = call(&["potential"]);
    assert_eq!(code, 2);
    assert!(err.contains("--config is required"));
    let bad = write(dir.path(), "bad.json", r#"{"command": "smatrix", "k": [], "chain": {"n": 2, "m": 1, "links": [
        {"kind": "singular", "entries": [[{"basis": "cosh", "k": 0.8}]]}]}}"#);
    let (code, _, err) = call(&["smatrix", "--config", &bad]);
    assert_eq!(code, 2);
    assert!(err.contains("k-list required"), "{err}");
    let syntax = write(dir.path(), "syntax.json", "{\"command\": ");
    assert_eq!(call(&["potential", "--config", &syntax]).0, 2);
    assert_eq!(call(&["frobnicate"]).0, 2);
    assert_eq!(call(&["--version"]).0, 0);
    // a realness tolerance no potential can meet is a numerical failure
    let strict = write(
        dir.path(),
        "strict.json",
        r#"{"command": "kvg", "tolerances": {"realness": 1e-30}, "k": [1.0], "grid": {"r_min": 0.001, "r_max": 20, "count": 40}}"#,
    );
    let (code, _, err) = call(&["kvg", "--config", &strict]);
    assert_eq!(code, 3, "{err}");
}
