use std::fs;
use std::path::Path;
use std::process::Command;

use atomic_arrays_cli::{run, validate, ExperimentConfig, ExperimentKind, Preset};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_atomic-arrays"))
}

fn cfg(kind: ExperimentKind, overlay: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml_over(overlay, Preset::Ci, Some(kind)).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn paper_preset_validates_with_expected_dimension() {
    let out = bin().args(["validate", "--kind", "g2", "--preset", "paper"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["double_dimension"], 13204);
    assert_eq!(report["atoms"], 162);
}

#[test]
fn wide_spacing_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("c.toml");
    fs::write(&conf, "kind = \"g2\"\n[lattice]\na = 1.1\n").unwrap();
    let out = bin().args(["run", "--config"]).arg(&conf).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("diffraction"), "{err}");
    assert!(!dir.path().join("o").exists());
}

#[test]
fn unknown_keys_and_kinds_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("c.toml");
    fs::write(&conf, "kind = \"g2\"\n[lattice]\nspacing = 0.6\n").unwrap();
    let out = bin().args(["run", "--config"]).arg(&conf).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    fs::write(&conf, "kind = \"g3\"\n").unwrap();
    let out = bin().args(["run", "--config"]).arg(&conf).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn resolved_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(ExperimentKind::ParaxialCheck, "[beam]\nwaist = 2.0\n");
    run(&c, dir.path()).unwrap();
    let back = ExperimentConfig::from_toml(&fs::read_to_string(dir.path().join("config.toml")).unwrap()).unwrap();
    assert_eq!(back.hash(), c.hash());
    let side = json(&dir.path().join("paraxial.json"));
    assert_eq!(side["config_hash"], c.hash());
    assert!((side["summary"]["mode_norm"].as_f64().unwrap() - 4.0).abs() < 1e-9);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let c = cfg(ExperimentKind::G2, "[lattice]\nnx = 3\nny = 3\n[drive]\ndetuning = 0.4\n[correlation]\nt_max = 200.0\nt_points = 101\n");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(&c, a.path()).unwrap();
    let out = bin().arg("run").arg("--config").arg(a.path().join("config.toml")).arg("--out").arg(b.path()).arg("--threads").arg("1").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(a.path().join("g2.csv")).unwrap(), fs::read(b.path().join("g2.csv")).unwrap());
}

#[test]
fn ci_dual_array_shows_antibunching() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(ExperimentKind::G2, "");
    let res = run(&c, dir.path()).unwrap();
    let g_min = res.summary["g2_min"].as_f64().unwrap();
    assert!(g_min < 0.3, "{g_min}");
    let csv = fs::read_to_string(dir.path().join("g2.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,g2"));
    assert_eq!(csv.lines().count(), 1 + c.correlation.t_points);
}

#[test]
fn surrogate_modes_match_dimer_rates() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(ExperimentKind::ModesFit, "[modes]\nsurrogate_cells = 3\n");
    let res = run(&c, dir.path()).unwrap();
    let s = &res.summary;
    let expected = &s["setup"]["expected_rates"];
    let (slow, fast) = (expected[0].as_f64().unwrap(), expected[1].as_f64().unwrap());
    let gm = s["fit_minus"]["gamma"].as_f64().unwrap();
    let gp = s["fit_plus"]["gamma"].as_f64().unwrap();
    assert!((gm / slow - 1.0).abs() < 0.05 && (gp / fast - 1.0).abs() < 0.05, "{gm} {gp} vs {slow} {fast}");
}

#[test]
fn infinite_spectrum_writes_expected_columns() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(ExperimentKind::SpectrumInfinite, "[spectrum]\ndelta_points = 11\nseparation_points = 4\n");
    run(&c, dir.path()).unwrap();
    let csv = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("delta,L,re_T,im_T,abs_T2,tau"));
    assert_eq!(csv.lines().count(), 1 + 44);
    for f in ["resonance.csv", "resonance.json", "spectrum_beam.csv", "spectrum.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn validate_report_lists_all_problems() {
    let c = cfg(ExperimentKind::G2, "[lattice]\ngeometry = \"curved\"\n[beam]\n[drive]\nomega = 0.5\n");
    let r = validate(&c);
    assert!(!r.ok());
    assert!(r.issues.iter().any(|i| i.message.contains("weak")), "{:?}", r.issues);
}
