mod common;

use serde_json::{json, Value};
use udmetric_cli::{
    parse_config, parse_value, run, CliError, ExperimentKind, Overrides, RunOptions, RunStatus,
};

use common::{configs, outputs, udmetric, write_config};

fn parse(kind: ExperimentKind, v: Value) -> Result<udmetric_cli::ExperimentConfig, CliError> {
    parse_value(v, Some(kind), &Overrides::default())
}

fn problems(r: Result<udmetric_cli::ExperimentConfig, CliError>) -> Vec<String> {
    match r {
        Err(CliError::Validation(errs)) => errs,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn minimal_disc_config_parses() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        "disc",
        &json!({"experiment": "disc", "generator": {"kind": "radical_inverse", "bases": [2], "count": 8}}),
    );
    let c = parse_config(&p).unwrap();
    assert_eq!(c.experiment.kind(), ExperimentKind::Disc);
}

#[test]
fn every_sample_config_parses() {
    for (name, v) in configs() {
        let kind: ExperimentKind = serde_json::from_value(Value::String(name.into())).unwrap();
        parse(kind, v).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn tau_below_one_cites_the_sum_hypothesis() {
    let errs = problems(parse(ExperimentKind::Dimension, json!({"tau": [0.5, 0.4]})));
    assert_eq!(errs.len(), 1);
    assert!(errs[0].contains("sum tau > 1"), "{errs:?}");
}

#[test]
fn unknown_keys_are_all_named() {
    let errs = problems(parse(
        ExperimentKind::Measure,
        json!({
            "generator": {"kind": "kronecker", "alpha": [0.5], "count": 10, "colour": 1},
            "psi": [{"family": "power", "c": 1.0, "tau": 1.0}],
            "phsi": [],
            "window": {"j_min": 1, "j_max": 10},
            "samples": 100,
            "seed": 1
        }),
    ));
    assert!(errs.iter().any(|e| e.contains("`phsi`")), "{errs:?}");
    assert!(errs.iter().any(|e| e.contains("`generator.colour`")), "{errs:?}");
}

#[test]
fn all_validation_errors_are_collected() {
    let errs = problems(parse(
        ExperimentKind::Measure,
        json!({
            "generator": {"kind": "kronecker", "alpha": [1.5], "count": 10},
            "psi": [{"family": "power", "c": -1.0, "tau": 1.0}],
            "window": {"j_min": 1, "j_max": 20},
            "samples": 5,
            "seed": 1
        }),
    ));
    assert!(errs.len() >= 4, "{errs:?}");
}

#[test]
fn kind_mismatch_is_rejected() {
    let errs = problems(parse(ExperimentKind::Disc, json!({"experiment": "series"})));
    assert!(errs[0].contains("series") && errs[0].contains("disc"), "{errs:?}");
}

#[test]
fn overrides_replace_fields() {
    let (_, v) = configs().into_iter().find(|(n, _)| *n == "ubiquity").unwrap();
    let o = Overrides {
        seed: Some(99),
        horizon: Some(6),
        ..Default::default()
    };
    let c = parse_value(v, Some(ExperimentKind::Ubiquity), &o).unwrap();
    let s = serde_json::to_value(&c).unwrap();
    assert_eq!(s["horizon"], 6);
    assert_eq!(s["balls"]["random"]["seed"], 99);
    assert_eq!(s["method"]["seed"], 99);

    let o = Overrides {
        seed: Some(1),
        ..Default::default()
    };
    let errs = problems(parse_value(
        json!({"tau": [2.0]}),
        Some(ExperimentKind::Dimension),
        &o,
    ));
    assert!(errs[0].contains("--seed"));
}

#[test]
fn dss_check_on_van_der_corput_passes() {
    let dir = tempfile::tempdir().unwrap();
    let (_, v) = configs().into_iter().find(|(n, _)| *n == "dss-check").unwrap();
    let c = parse(ExperimentKind::DssCheck, v).unwrap();
    let m = run(
        &c,
        &RunOptions {
            out: dir.path().into(),
            threads: Some(2),
        },
    )
    .unwrap();
    assert_eq!(m.status, RunStatus::Complete);
    let report: Value = serde_json::from_slice(&std::fs::read(dir.path().join("dss.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "pass");
    let manifest: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "complete");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn dimension_of_tau_two_is_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = udmetric(&["dimension", "--tau", "2", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("dimension.json")).unwrap()).unwrap();
    assert_eq!(report["value"], 0.5);
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out_s = out.to_str().unwrap();

    let o = udmetric(&["dimension", "--tau", "0.5,0.4", "--out", out_s]);
    assert_eq!(o.status.code(), Some(2));

    // Exact 2-D extreme discrepancy of 1000 points is past the search guard.
    let guard = write_config(
        dir.path(),
        "guard",
        &json!({"generator": {"kind": "iid_uniform", "seed": 1, "dim": 2, "count": 1000}}),
    );
    let o = udmetric(&["disc", "--config", guard.to_str().unwrap(), "--out", out_s]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("discrepancy:"));
    let manifest: Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "failed");
    assert!(outputs(&out).is_empty());

    // A rate nothing can beat leaves no admissible schedule index.
    let empty = write_config(
        dir.path(),
        "empty",
        &json!({
            "generator": {"kind": "radical_inverse", "bases": [2], "count": 100},
            "rate": {"family": "power", "c": 1e-9, "theta": 0.0},
            "propose_slack": 0.1
        }),
    );
    let o = udmetric(&["dss-check", "--config", empty.to_str().unwrap(), "--out", out_s]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = udmetric(&[
        "dimension",
        "--tau",
        "2",
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn failed_run_removes_stale_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out_s = out.to_str().unwrap();
    let ok = write_config(
        dir.path(),
        "ok",
        &json!({"generator": {"kind": "radical_inverse", "bases": [2, 3], "count": 32}}),
    );
    assert!(
        udmetric(&["disc", "--config", ok.to_str().unwrap(), "--out", out_s])
            .status
            .success()
    );
    assert_eq!(outputs(&out).len(), 2);
    let g = write_config(
        dir.path(),
        "g",
        &json!({"generator": {"kind": "iid_uniform", "seed": 1, "dim": 2, "count": 1000}}),
    );
    assert_eq!(
        udmetric(&["disc", "--config", g.to_str().unwrap(), "--out", out_s])
            .status
            .code(),
        Some(3)
    );
    assert!(outputs(&out).is_empty());
}

#[test]
fn env_var_sets_default_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_udmetric"))
        .args(["dimension", "--tau", "3"])
        .env("UDMETRIC_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("dimension.json").exists());
}

#[test]
fn csv_outputs_use_lf_and_header() {
    let dir = tempfile::tempdir().unwrap();
    for (name, v) in configs() {
        let p = write_config(dir.path(), name, &v);
        let out = dir.path().join(format!("out-{name}"));
        let o = udmetric(&[
            name,
            "--config",
            p.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(
            o.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        for (file, bytes) in outputs(&out) {
            if file.ends_with(".csv") {
                let s = String::from_utf8(bytes).unwrap();
                assert!(!s.contains('\r'), "{file}");
                let header = s.lines().next().unwrap();
                assert!(
                    header.chars().any(|c| c.is_ascii_alphabetic()),
                    "{file}: {header}"
                );
            }
        }
    }
}
