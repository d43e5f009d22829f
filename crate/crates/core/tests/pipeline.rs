use std::path::PathBuf;

use irs_paoi::paoi::{evaluate, UpdateGrid};
use irs_paoi::{load_config, Error, ScenarioConfig};

fn default_config_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml")
}

#[test]
fn shipped_config_is_the_reference_scenario() {
    let cfg = load_config(default_config_path()).unwrap();
    assert_eq!(cfg, ScenarioConfig::reference());
}

#[test]
fn missing_config_is_io_error() {
    let e = load_config("/nonexistent/scenario.toml").unwrap_err();
    assert!(matches!(e, Error::Io { .. }));
    assert_eq!(e.kind(), "io");
}

#[test]
fn coarse_pipeline_from_file() {
    let mut cfg = load_config(default_config_path()).unwrap();
    cfg.numerics.t_max_s = 20.0;
    let grid = UpdateGrid { min: 0.1, max: 4.0, step: 0.01 };
    let (timing, curves, curve) = evaluate(&cfg, &grid).unwrap();
    assert_eq!(curves.r_in, 1.7);
    assert_eq!(curve.points.len(), 391);
    let (t, p) = curve.argmin;
    assert!(t > 1.0 && t < 2.5, "{t}");
    assert!(p > timing.t_d && p < 1e-3);
}

#[test]
fn r_out_not_above_r_in_is_rejected() {
    let mut cfg = ScenarioConfig::reference();
    cfg.geometry.r_in_m = 5.0;
    let e = evaluate(&cfg, &UpdateGrid { min: 1.0, max: 1.0, step: 1.0 }).unwrap_err();
    assert_eq!(e.kind(), "validation");
}
