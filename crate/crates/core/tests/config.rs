// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use rabispec::config::Config;
use rabispec::sweep::RunManifest;
use rabispec::Error;

fn example(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs").join(name)
}

fn pointer_of(text: &str) -> String {
    match Config::from_json(text) {
        Err(Error::Config { pointer, .. }) => pointer,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn shipped_configs_load() {
    for name in ["simulate.json", "response.json", "sweep.json", "sweep_ode.json", "fit.json"] {
        Config::load(&example(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn manifest_config_reproduces_the_run() {
    let cfg = Config::load(&example("sweep.json")).unwrap();
    let mut m = RunManifest::new("sweep", &cfg);
    m.outputs.push("sweep.csv".into());
    let dir = std::env::temp_dir().join(format!("rabispec-manifest-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("manifest.json");
    m.write(&path).unwrap();
    let back = Config::load(&path).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.sweep_spec().unwrap().len(), cfg.sweep_spec().unwrap().len());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn errors_name_the_offending_field() {
    let base = std::fs::read_to_string(example("sweep.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&base).unwrap();
    v["tank"]["q_t"] = serde_json::json!("high");
    assert_eq!(pointer_of(&v.to_string()), "/tank/q_t");

    let mut v: serde_json::Value = serde_json::from_str(&base).unwrap();
    v["tls"]["gamma_phi"]["unit"] = serde_json::json!("furlong");
    assert_eq!(pointer_of(&v.to_string()), "/tls/gamma_phi/unit");

    let mut v: serde_json::Value = serde_json::from_str(&base).unwrap();
    v["drive"]["omega"]["value"] = serde_json::json!(-1.0);
    assert_eq!(pointer_of(&v.to_string()), "/drive/omega");

    let mut v: serde_json::Value = serde_json::from_str(&base).unwrap();
    v["sweep"]["axes"][1]["count"] = serde_json::json!(0);
    assert!(pointer_of(&v.to_string()).starts_with("/sweep"));

    assert!(pointer_of(r#"{"tls": {}, "extra": 1}"#).starts_with("/"));
}

#[test]
fn unknown_fields_are_rejected() {
    let base = std::fs::read_to_string(example("simulate.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&base).unwrap();
    v["simulate"]["durration_s"] = serde_json::json!(1.0);
    assert!(pointer_of(&v.to_string()).starts_with("/simulate"));
}
