use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use ac_dynbc_cli::output::{sha256_hex, RunManifest};
use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_ac-dynbc"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .env_remove("AC_DYNBC_OUT")
        .output()
        .unwrap()
}

fn manifest(out: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn hashes(m: &RunManifest) -> BTreeMap<String, String> {
    m.files.iter().map(|f| (f.path.clone(), f.sha256.clone())).collect()
}

const SMALL: &str = "potential = \"double_well\"\ndt = 0.01\nt_final = 0.05\n[mesh]\nnx = 8\nny = 8\n";

#[test]
fn solve_on_zero_data_writes_zero_trajectory() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), SMALL, &["solve", "--snapshots", "0.02,0.05", "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = tmp.path().join("out");
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("t,energy_total"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r[1..].iter().all(|&v| v == 0.0)));
    // t = 0 is added whenever snapshots are requested.
    for k in 0..3 {
        assert!(out.join(format!("snapshot_{k:03}.csv")).exists());
        let raw = std::fs::read(out.join(format!("snapshot_{k:03}.bin"))).unwrap();
        assert_eq!(raw.len(), 8 * 8 * 8);
    }
    let side: Value = serde_json::from_str(&std::fs::read_to_string(out.join("snapshot_002.json")).unwrap()).unwrap();
    assert_eq!(side["shape"], serde_json::json!([8, 8]));
    assert!((side["t"].as_f64().unwrap() - 0.05).abs() < 1e-12);
    assert!(o.stdout.is_empty());
}

#[test]
fn manifest_hashes_match_files_and_are_stable() {
    let config = format!(
        "{SMALL}[initial]\nkind = \"trig\"\noffset = 0.1\nmodes = [{{ amplitude = 0.5, kx = 1 }}]\n"
    );
    let tmp = TempDir::new().unwrap();
    assert_eq!(run(tmp.path(), &config, &["solve", "--quiet"]).status.code(), Some(0));
    let out = tmp.path().join("out");
    let first = manifest(&out);
    assert_eq!(first.subcommand, "solve");
    assert!(!first.phases.is_empty());
    for f in &first.files {
        let bytes = std::fs::read(out.join(&f.path)).unwrap();
        assert_eq!(sha256_hex(&bytes), f.sha256, "{}", f.path);
    }
    for svg in ["energy.svg", "norms.svg"] {
        let doc = std::fs::read_to_string(out.join(svg)).unwrap();
        assert!(doc.contains(&format!("<!-- manifest hash: {} -->", first.run_hash)));
    }
    // Rerun from the emitted resolved config in a fresh directory.
    let resolved = std::fs::read_to_string(out.join("resolved_config.toml")).unwrap();
    let tmp2 = TempDir::new().unwrap();
    assert_eq!(run(tmp2.path(), &resolved, &["solve", "--quiet"]).status.code(), Some(0));
    let second = manifest(&tmp2.path().join("out"));
    assert_eq!(first.run_hash, second.run_hash);
    assert_eq!(hashes(&first), hashes(&second));
}

#[test]
fn thread_count_does_not_change_results() {
    let config = "[mms]\nsizes = [8, 16]\ntemporal_dt = [4e-3, 2e-3]\nt_final_spatial = 0.128\nt_final_temporal = 0.008\n";
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert_eq!(run(a.path(), config, &["mms", "--threads", "1", "--quiet"]).status.code().map(|c| c == 0 || c == 4), Some(true));
    assert_eq!(run(b.path(), config, &["mms", "--threads", "3", "--quiet"]).status.code().map(|c| c == 0 || c == 4), Some(true));
    assert_eq!(hashes(&manifest(&a.path().join("out"))), hashes(&manifest(&b.path().join("out"))));
}

#[test]
fn incompatible_custom_pair_fails_graph_check_with_witness() {
    let config = "[bulk]\nname = \"log\"\ngraph = \"logarithmic\"\nperturbation = { kind = \"linear\", slope = -1.0 }\n\
                  [boundary]\npotential = \"double_obstacle\"\n";
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), config, &["graph-check"]);
    assert_eq!(o.status.code(), Some(4));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("domain inclusion fails at r = "), "{stdout}");
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/graph_check.json")).unwrap()).unwrap();
    let w = report["domain_inclusion_witness"].as_f64().unwrap();
    assert!(w.abs() >= 1.0, "witness {w} lies in D(log) = (-1, 1)");
    assert_eq!(report["passed"], Value::Bool(false));

    // The same pair is a configuration error for the solver.
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), config, &["solve"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("r = "));
}

#[test]
fn compatible_pair_passes_graph_check() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), "[bulk]\npotential = \"double_well\"\n[boundary]\npotential = \"double_obstacle\"\n", &["graph-check"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("compatibility: eta = "));
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    for (text, key) in [("nu = -1.0", "nu"), ("dt = 0.0", "dt"), ("[mesh]\nnx = 2", "mesh")] {
        let tmp = TempDir::new().unwrap();
        let o = run(tmp.path(), text, &["solve"]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(String::from_utf8_lossy(&o.stderr).contains(&format!("`{key}")), "{text}");
    }
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), "nu = [", &["solve"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

#[test]
fn mms_at_two_levels_reports_orders_and_matching_slope() {
    let config = "[mms]\nsizes = [16, 32]\ntemporal_dt = [4e-3, 2e-3, 1e-3]\nt_final_spatial = 0.064\nt_final_temporal = 0.02\n";
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), config, &["mms", "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = tmp.path().join("out");
    let table = std::fs::read_to_string(out.join("mms_spatial.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("mms_report.json")).unwrap()).unwrap();
    for (svg, key) in [("mms_spatial.svg", "spatial_order_fit"), ("mms_temporal.svg", "temporal_order_fit")] {
        let doc = std::fs::read_to_string(out.join(svg)).unwrap();
        let start = doc.find("data-slope=\"").unwrap() + 12;
        let end = start + doc[start..].find('"').unwrap();
        let plotted: f64 = doc[start..end].parse().unwrap();
        let reported = report["derived"][key].as_f64().unwrap();
        assert!((plotted - reported).abs() <= 1e-12 * reported.abs(), "{svg}: {plotted} vs {reported}");
    }
}

fn polyline_ys(doc: &str) -> Vec<f64> {
    let start = doc.find("points=\"").unwrap() + 8;
    let end = start + doc[start..].find('"').unwrap();
    doc[start..end]
        .split(' ')
        .map(|p| p.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn energy_run_plots_a_monotone_polyline() {
    let config = format!(
        "{SMALL}[initial]\nkind = \"trig\"\noffset = 0.1\nmodes = [{{ amplitude = 0.6, kx = 1 }}]\n"
    );
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &config, &["energy", "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = std::fs::read_to_string(tmp.path().join("out/energy_decay_energy.svg")).unwrap();
    assert_eq!(doc.matches("<polyline").count(), 1);
    // SVG y grows downward, so a decreasing energy has nondecreasing pixel rows.
    let ys = polyline_ys(&doc);
    assert_eq!(ys.len(), 6);
    assert!(ys.windows(2).all(|w| w[1] >= w[0]), "{ys:?}");
}

#[test]
fn forced_energy_run_is_a_config_error() {
    let config = format!("{SMALL}[forcing.bulk]\nkind = \"constant\"\nvalue = 1.0\n");
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &config, &["energy"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("forcing.bulk"));
}

#[test]
fn contdep_and_sweeps_write_reports() {
    let config = format!(
        "{SMALL}[initial]\nkind = \"trig\"\noffset = 0.1\nmodes = [{{ amplitude = 0.6, kx = 1 }}]\n\
         [contdep]\namplitudes = [0.1, 0.01]\n[sweep_eps]\nvalues = [1e-1, 1e-2, 1e-3]\n[sweep_nu]\nvalues = [1e-1, 1e-2]\n"
    );
    for (cmd, id) in [("contdep", "contdep"), ("sweep-eps", "eps_sweep"), ("sweep-nu", "nu_sweep")] {
        let tmp = TempDir::new().unwrap();
        let o = run(tmp.path(), &config, &[cmd, "--quiet"]);
        let code = o.status.code().unwrap();
        let out = tmp.path().join("out");
        let report: Value =
            serde_json::from_str(&std::fs::read_to_string(out.join(format!("{id}_report.json"))).unwrap()).unwrap();
        let all_pass = report["flags"].as_object().unwrap().values().all(|v| v == &Value::Bool(true));
        assert_eq!(code, if all_pass { 0 } else { 4 }, "{cmd}");
        assert!(out.join(format!("{id}_report.txt")).exists());
        assert!(manifest(&out).files.iter().any(|f| f.path.ends_with(".svg")), "{cmd}");
    }
}

#[test]
fn env_var_overrides_out() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let target = tmp.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_ac-dynbc"))
        .args(["solve", "--quiet", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("from_flag"))
        .env("AC_DYNBC_OUT", &target)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(target.join("trajectory.csv").exists());
    assert!(!tmp.path().join("from_flag").exists());
}

#[test]
fn missing_config_flag_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_ac-dynbc")).arg("solve").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
