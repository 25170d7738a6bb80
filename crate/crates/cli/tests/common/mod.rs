//! Small configs, one per experiment kind, shared by the CLI tests.

#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

pub const GOLDEN: f64 = 0.618_033_988_749_894_8;

pub fn configs() -> Vec<(&'static str, Value)> {
    vec![
        (
            "gen",
            json!({
                "generator": {"kind": "iid_uniform", "seed": 3, "dim": 2, "count": 100}
            }),
        ),
        (
            "disc",
            json!({
                "generator": {"kind": "radical_inverse", "bases": [2, 3], "count": 64},
                "checkpoints": [16, 32, 64],
                "ratios": true
            }),
        ),
        (
            "dss-check",
            json!({
                "generator": {"kind": "radical_inverse", "bases": [2], "count": 65536},
                "schedule": {"kind": "square_exp", "m": 2.0},
                "horizon": 4,
                "rate": {"family": "polylog", "c": 4.0, "n": 1.0}
            }),
        ),
        (
            "ubiquity",
            json!({
                "source": {"lazy_van_der_corput": {"base": 2}},
                "schedule": {"kind": "square_exp", "m": 2.0},
                "horizon": 5,
                "rho": {"base": {"family": "polylog", "c": 4.0, "n": 1.0}, "exponents": [1.0]},
                "balls": {"random": {"seed": 7, "count": 5, "radius": 0.1}},
                "ks": [3, 4, 5],
                "method": {"method": "monte_carlo", "samples": 20000, "seed": 11},
                "prior_check": {"delta": 0.5, "eta": 0.5}
            }),
        ),
        (
            "measure",
            json!({
                "generator": {"kind": "kronecker", "alpha": [GOLDEN], "count": 10000},
                "psi": [{"family": "power", "c": 0.5, "tau": 1.0}],
                "window": {"j_min": 1, "j_max": 10000},
                "samples": 2000,
                "seed": 5,
                "sweep": [100, 1000, 10000]
            }),
        ),
        (
            "series",
            json!({
                "criterion": {
                    "criterion": "square_exp",
                    "m": 2.0,
                    "psi": [{"family": "rate_power", "v": {"family": "polylog", "c": 1.0, "n": 1.0}, "tau": 1.0}]
                },
                "horizon": 20
            }),
        ),
        ("dimension", json!({"tau": [2.0, 1.5]})),
        (
            "box-dim",
            json!({
                "generator": {"kind": "kronecker", "alpha": [GOLDEN], "count": 20000},
                "psi": [{"family": "power", "c": 1.0, "tau": 2.0}],
                "window": {"j_min": 1, "j_max": 20000},
                "scales": {"dyadic": {"from": 4, "to": 10}}
            }),
        ),
    ]
}

pub fn write_config(dir: &Path, name: &str, v: &Value) -> std::path::PathBuf {
    let p = dir.join(format!("{name}.json"));
    std::fs::write(&p, serde_json::to_vec_pretty(v).unwrap()).unwrap();
    p
}

pub fn udmetric(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_udmetric"))
        .args(args)
        .env_remove("UDMETRIC_OUT")
        .output()
        .expect("binary runs")
}

/// `(name, bytes)` of every file in `dir` except the manifest, sorted by name.
pub fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "manifest.json")
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}
