use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ndsp"))
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

#[test]
fn list_checks_names_every_id() {
    let out = bin().arg("list-checks").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for id in [
        "inequality_chain",
        "subset_properties",
        "potential_properties",
        "power_rule",
        "product_rules",
        "invariance",
        "homogeneous_collapse",
    ] {
        assert!(text.contains(id), "missing {id} in:\n{text}");
    }
}

#[test]
fn validate_config_accepts_bundled_and_rejects_garbage() {
    let out = bin()
        .arg("validate-config")
        .arg("--config")
        .arg(config_path("fullshift.json"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"systems\": []}").unwrap();
    let out = bin().arg("validate-config").arg("--config").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_systems_exit_2_and_infeasible_schedule_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    fs::write(
        &empty,
        r#"{
            "systems": [],
            "potentials": [{"kind": "constant", "a": 0.0}],
            "schedule": {"n_list": [1], "eps_list": [0.5], "mode": {"kind": "greedy"}}
        }"#,
    )
    .unwrap();
    let out = bin()
        .arg("run")
        .arg("--config")
        .arg(&empty)
        .arg("--out")
        .arg(dir.path().join("o1"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let infeasible = dir.path().join("infeasible.json");
    fs::write(
        &infeasible,
        r#"{
            "systems": [{"family": "symbolic", "alphabet_sizes": [2], "word_len": 3}],
            "potentials": [{"kind": "constant", "a": 0.0}],
            "schedule": {"n_list": [1, 9], "eps_list": [0.5], "mode": {"kind": "greedy"}}
        }"#,
    )
    .unwrap();
    let out = bin()
        .arg("run")
        .arg("--config")
        .arg(&infeasible)
        .arg("--out")
        .arg(dir.path().join("o2"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn fullshift_run_reports_log2_and_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("run1");
    let out = bin()
        .arg("run")
        .arg("--config")
        .arg(config_path("fullshift.json"))
        .arg("--out")
        .arg(&out1)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out1.join("summary.json")).unwrap()).unwrap();
    let log2 = (2.0f64).ln();
    let zero_entry = summary
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["potential"] == "zero")
        .unwrap();
    for key in ["q_lower", "q_upper", "p_lower", "p_upper"] {
        let v = zero_entry[key].as_f64().unwrap();
        assert!((v - log2).abs() < 1e-6, "{key} = {v}");
    }
    for key in ["p_bowen", "p_packing"] {
        let v = zero_entry[key].as_f64().unwrap();
        assert!((v - log2).abs() < 0.02, "{key} = {v}");
    }
    // Weighted potential: sep upper proxy equals log(1 + e).
    let weighted = summary
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["potential"] == "first_symbol")
        .unwrap();
    let expected = (1.0 + std::f64::consts::E).ln();
    let v = weighted["p_upper"].as_f64().unwrap();
    assert!((v - expected).abs() < 1e-6, "p_upper = {v}");

    // Rerun into a second directory: byte-identical artifacts.
    let out2 = dir.path().join("run2");
    let out = bin()
        .arg("run")
        .arg("--config")
        .arg(config_path("fullshift.json"))
        .arg("--out")
        .arg(&out2)
        .arg("--threads")
        .arg("2")
        .output()
        .unwrap();
    assert!(out.status.success());
    for name in ["estimates.csv", "summary.json", "checks.json"] {
        let a = fs::read(out1.join(name)).unwrap();
        let b = fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
    }
    // Plot data exists and is non-empty.
    let plots: Vec<_> = fs::read_dir(out1.join("plotdata")).unwrap().collect();
    assert!(!plots.is_empty());
}

#[test]
fn alternating_run_hits_product_formula_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("alt");
    let out = bin()
        .arg("run")
        .arg("--config")
        .arg(config_path("alternating23.json"))
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("estimates.csv")).unwrap();
    let cell = csv
        .lines()
        .find(|l| l.starts_with("alternating23,zero,sep,6,"))
        .expect("sep cell at n = 6");
    let value: f64 = cell.split(',').nth(6).unwrap().parse().unwrap();
    assert!((value - 0.895880).abs() < 1e-6, "{value}");
}

#[test]
fn product_config_checks_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("prod");
    let out = bin()
        .arg("run")
        .arg("--config")
        .arg(config_path("product23.json"))
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let checks: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("checks.json")).unwrap()).unwrap();
    let arr = checks.as_array().unwrap();
    assert!(arr.iter().any(|c| c["theorem_id"] == "product_rules"));
    for c in arr {
        assert_eq!(c["status"], "pass", "{c}");
    }
}

#[test]
fn sweep_epsilon_and_unknown_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sweep");
    let out = bin()
        .arg("sweep")
        .arg("--config")
        .arg(config_path("fullshift.json"))
        .arg("--out")
        .arg(&out_dir)
        .arg("--parameter")
        .arg("epsilon")
        .arg("--values")
        .arg("0.5,0.25,0.125")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert!(csv.contains("#epsilon=0.5"));
    assert!(csv.contains("#epsilon=0.125"));

    // Per-cell sep series is monotone as epsilon shrinks.
    let cell = |eps: &str, n: usize| -> f64 {
        csv.lines()
            .find(|l| {
                l.starts_with(&format!("fullshift2#epsilon={eps},zero,sep,{n},"))
            })
            .unwrap_or_else(|| panic!("missing cell {eps} {n}"))
            .split(',')
            .nth(6)
            .unwrap()
            .parse()
            .unwrap()
    };
    for n in [2usize, 5, 8] {
        assert!(cell("0.5", n) <= cell("0.25", n) + 1e-12);
        assert!(cell("0.25", n) <= cell("0.125", n) + 1e-12);
    }

    let out = bin()
        .arg("sweep")
        .arg("--config")
        .arg(config_path("fullshift.json"))
        .arg("--out")
        .arg(dir.path().join("sweep2"))
        .arg("--parameter")
        .arg("bogus")
        .arg("--values")
        .arg("1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Empty value list (flag omitted): a no-op with exit 0.
    let out = bin()
        .arg("sweep")
        .arg("--config")
        .arg(config_path("fullshift.json"))
        .arg("--out")
        .arg(dir.path().join("sweep3"))
        .arg("--parameter")
        .arg("epsilon")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sweep_power_ratios_scale_with_m() {
    let dir = tempfile::tempdir().unwrap();
    // A dedicated config at a radius fine enough for the power systems.
    let cfgp = dir.path().join("power.json");
    fs::write(
        &cfgp,
        r#"{
            "systems": [{"family": "symbolic", "alphabet_sizes": [2], "word_len": 8, "label": "s2"}],
            "potentials": [{"kind": "constant", "a": 0.0, "label": "zero"}],
            "schedule": {
                "n_list": [1, 2, 3, 4, 5, 6, 7, 8],
                "eps_list": [0.125],
                "mode": {"kind": "exact", "exact_budget": 256}
            }
        }"#,
    )
    .unwrap();
    let out_dir = dir.path().join("powsweep");
    let out = bin()
        .arg("sweep")
        .arg("--config")
        .arg(&cfgp)
        .arg("--out")
        .arg(&out_dir)
        .arg("--parameter")
        .arg("power")
        .arg("--values")
        .arg("1,2")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summaries: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("sweep_summary.json")).unwrap())
            .unwrap();
    let p_lower = |tag: &str| -> f64 {
        summaries
            .as_array()
            .unwrap()
            .iter()
            .find(|s| s["system"].as_str().unwrap().contains(tag))
            .unwrap()["p_lower"]
            .as_f64()
            .unwrap()
    };
    let base = p_lower("power=1");
    let doubled = p_lower("power=2");
    assert!((doubled / base - 2.0).abs() < 0.05, "ratio {}", doubled / base);
}
