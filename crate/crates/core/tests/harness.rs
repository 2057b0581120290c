use std::path::Path;

use halfspace_core::harness::{execute, run, write_rows, ExperimentConfig, Mode, Regime};
use halfspace_core::Error;

fn fixture_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/srw1d"))
}

fn cfg(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap()
}

#[test]
fn golden_srw_rows_are_byte_identical() {
    let dir = fixture_dir();
    let c = ExperimentConfig::from_path(&dir.join("config.json")).unwrap();
    let report = execute(&c, dir).unwrap();
    let mut buf = Vec::new();
    write_rows(&mut buf, &report.rows).unwrap();
    let golden = std::fs::read(dir.join("rows.csv")).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), String::from_utf8(golden).unwrap());
    assert!(report.summary.passed);
}

#[test]
fn golden_srw_hand_values() {
    // paths of the simple walk from 1 that stay positive, counted by hand
    let dir = fixture_dir();
    let c = ExperimentConfig::from_path(&dir.join("config.json")).unwrap();
    let rows = execute(&c, dir).unwrap().rows;
    let get = |q: &str, x: f64, y: Option<f64>, n: usize| {
        rows.iter()
            .find(|r| r.quantity == q && r.x == [x] && r.n == Some(n) && r.y.first().copied() == y)
            .unwrap()
            .measured
    };
    let cases = [
        (1, 2.0, 0.5),
        (2, 1.0, 0.25),
        (2, 3.0, 0.25),
        (3, 2.0, 0.25),
        (3, 4.0, 0.125),
        (4, 1.0, 0.125),
        (4, 3.0, 0.1875),
        (4, 5.0, 0.0625),
    ];
    for (n, y, p) in cases {
        assert_eq!(get("p_n", 1.0, Some(y), n), p, "n={n} y={y}");
    }
    for (n, s) in [(0, 1.0), (1, 0.5), (2, 0.5), (3, 0.375), (4, 0.375)] {
        assert_eq!(get("survival", 1.0, None, n), s);
    }
    // from 2: one of the four 2-step paths reaches 0, two return to 2
    assert_eq!(get("survival", 2.0, None, 2), 0.75);
    assert_eq!(get("p_n", 2.0, Some(2.0), 2), 0.5);
}

#[test]
fn run_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::from_path(&fixture_dir().join("config.json")).unwrap();
    c.output.dir = tmp.path().join("o");
    let (_, dir) = run(&c, fixture_dir()).unwrap();
    for f in ["rows.csv", "summary.json", "config.json", "plot.gp"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["schema_version"], 1);
    assert_eq!(s["passed"], true);
}

#[test]
fn config_errors() {
    let no_seed = cfg(r#"{"walk":{"kind":"srw","dim":1},"mode":"mc","grid":{"x":[[1]],"y":[[1]],"n":[2]},"samples":10}"#);
    assert!(matches!(execute(&no_seed, Path::new(".")), Err(Error::Config(_))));
    let continuous_exact = cfg(
        r#"{"walk":{"kind":"continuous","step":{"family":"symmetric_pareto","alpha":1.5}},"mode":"exact","grid":{"x":[[1]],"y":[[1]],"n":[2]}}"#,
    );
    assert!(matches!(execute(&continuous_exact, Path::new(".")), Err(Error::Config(_))));
    let fractional = cfg(r#"{"walk":{"kind":"srw","dim":1},"mode":"exact","grid":{"x":[[1.5]],"y":[[1]],"n":[2]}}"#);
    assert!(matches!(execute(&fractional, Path::new(".")), Err(Error::Config(_))));
    assert!(ExperimentConfig::from_json(r#"{"walk":{"kind":"nope"}}"#).is_err());
}

#[test]
fn verify_mode_passes_on_srw_and_pareto() {
    for walk in [r#"{"kind":"srw","dim":2}"#, r#"{"kind":"pareto_lattice","alpha":1.5,"k_max":200}"#] {
        let c = cfg(&format!(r#"{{"walk":{walk},"mode":"verify","grid":{{"x":{{"lo":[1],"hi":[1]}},"y":[[2],[3]]}},"seed":3}}"#)
            .replace(r#"{"lo":[1],"hi":[1]}"#, if walk.contains("srw") { "[[1,0]]" } else { "[[1]]" })
            .replace(r#"[[2],[3]]"#, if walk.contains("srw") { "[[2,0],[3,1]]" } else { "[[2],[3]]" }));
        let r = execute(&c, Path::new(".")).unwrap();
        for i in &r.summary.invariants {
            assert!(i.passed, "{walk}: {} {}", i.name, i.detail);
        }
        assert!(r.summary.invariants.iter().any(|i| i.name == "mc_reproducible"));
    }
}

#[test]
fn mc_mode_matches_exact_on_lattice() {
    let c = cfg(
        r#"{"walk":{"kind":"pareto_lattice","alpha":1.2,"k_max":64},"mode":"mc",
            "grid":{"x":[[1],[3]],"y":{"lo":[1],"hi":[6]},"n":[1,4,9]},"samples":40000,"seed":11}"#,
    );
    let r = execute(&c, Path::new(".")).unwrap();
    let inv = r.summary.invariants.iter().find(|i| i.name == "lattice_passthrough").unwrap();
    assert!(inv.passed, "{}", inv.detail);
    assert!(r.rows.iter().all(|r| r.stderr.is_some() && !r.exact));
}

#[test]
fn compare_mode_classifies_and_predicts() {
    let c = cfg(
        r#"{"walk":{"kind":"pareto_lattice","alpha":1.5,"k_max":4096},"mode":"compare",
            "grid":{"x":[[1],[2]],"y":[[1],[2],[3],[20],[40],[400],[1500]],"n":[8,16,32,64,128,256,512,1024]},
            "samples":20000,"seed":5,"tolerances":{"box_extent":6000,"max_escaped":1e-3}}"#,
    );
    let r = execute(&c, Path::new(".")).unwrap();
    assert!(r.summary.passed);
    let regimes: Vec<Regime> = r.rows.iter().filter(|r| r.quantity == "p_n").map(|r| r.regime).collect();
    for g in [Regime::Small, Regime::Large, Regime::Normal] {
        assert!(regimes.contains(&g), "{g:?} missing");
    }
    let ratio_rows = r.rows.iter().filter(|r| r.ratio.is_some()).count();
    assert!(ratio_rows > 50, "{ratio_rows}");
    // survival from the boundary decays like n^{-rho} with rho = 1/2
    let f = &r.summary.fits["survival x=1"];
    assert!((f.index + 0.5).abs() < 0.1, "{}", f.index);
    assert!(r.summary.constants.contains_key("large"));
}

#[test]
fn green_mode_exact_lattice_with_prediction() {
    let c = cfg(
        r#"{"walk":{"kind":"isotropic_lattice","dim":2,"alpha":1.0,"k_max":24,"k1_max":24,"q":0.5},"mode":"green",
            "grid":{"x":[[1,0]],"y":[[1,12],[1,16],[2,20]]},
            "tolerances":{"horizon":300,"box_extent":120,"max_escaped":0.05}}"#,
    );
    let r = execute(&c, Path::new(".")).unwrap();
    assert_eq!(r.rows.len(), 3);
    assert!(r.rows.iter().all(|r| r.quantity == "green" && r.measured > 0.0 && r.predicted.unwrap() > 0.0));
    assert!(r.files.iter().any(|(n, _)| n == "green_tail.csv"));
}

#[test]
fn meander_and_table_modes() {
    let m = cfg(
        r#"{"walk":{"kind":"continuous","step":{"family":"symmetric_pareto","alpha":1.5}},"mode":"meander",
            "grid":{"x":[[0]],"n":[16,32]},"samples":20000,"seed":2}"#,
    );
    let r = execute(&m, Path::new(".")).unwrap();
    assert_eq!(r.summary.mode, Mode::Meander);
    assert_eq!(r.files.len(), 2);
    let tv = r.rows.iter().find(|r| r.quantity == "meander_tv").unwrap();
    assert!(tv.measured < 0.2 && tv.stderr.unwrap() > 0.0);

    let t = cfg(r#"{"walk":{"kind":"srw","dim":1},"mode":"table","grid":{"x":[[1]],"n":[4,8,16,32,64,128,256,512]}}"#);
    let r = execute(&t, Path::new(".")).unwrap();
    assert!(r.summary.passed);
    assert!((r.summary.fits["H"].index - 1.0).abs() < 1e-9);
    assert!((r.summary.fits["survival x=1"].index + 0.5).abs() < 0.05);
    let c4 = r.rows.iter().find(|r| r.quantity == "c_n" && r.n == Some(4)).unwrap();
    assert_eq!(c4.measured, 2.0);
}

#[test]
fn cli_style_overrides_keep_results_deterministic() {
    let c = cfg(
        r#"{"walk":{"kind":"continuous","step":{"family":"skewed_pareto","alpha":1.5,"p_plus":0.7}},"mode":"mc",
            "grid":{"x":[[1.5]],"y":[[2]],"n":[5]},"samples":5000,"seed":9,"tolerances":{"cube":0.5}}"#,
    );
    let a = execute(&c, Path::new(".")).unwrap().rows;
    let b = execute(&c, Path::new(".")).unwrap().rows;
    assert_eq!(a, b);
    assert!(a[1].measured >= 0.0);
}
