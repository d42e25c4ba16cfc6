use beamlab::experiment::{execute, run, ExperimentConfig, RunOptions};
use beamlab::Error;

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(text).unwrap()
}

#[test]
fn unknown_manifold_is_config_invalid() {
    let e = ExperimentConfig::from_json(r#"{"name": "x", "kind": "residual_scaling", "manifold": "moebius_strip"}"#).unwrap_err();
    assert!(matches!(e, Error::ConfigInvalid(_)), "{e}");
}

#[test]
fn ray_moments_rerun_is_byte_identical() {
    let cfg = config(
        r#"{"name": "moments", "kind": "ray_moments", "manifold": "perturbed_disk", "seed": 11,
            "ray": {"chords": 6, "gauge_chords": 4, "gauge_basis": 7, "potential_points": 10},
            "thresholds": [{"metric": "gradient_max_moment", "max": 1e-6}, {"metric": "control_max_moment", "min": 0.01},
                           {"metric": "control_not_closed", "min": 1}, {"metric": "gauge_max", "max": 1e-8},
                           {"metric": "potential_max_error", "max": 1e-6}]}"#,
    );
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let reports: Vec<_> =
        dirs.iter().map(|d| run(&cfg, &RunOptions { out_dir: Some(d.path().to_path_buf()), deep: false }).unwrap()).collect();
    assert!(reports[0].passed, "{:?}", reports[0].thresholds);
    let a = std::fs::read(reports[0].csv_path.as_ref().unwrap()).unwrap();
    let b = std::fs::read(reports[1].csv_path.as_ref().unwrap()).unwrap();
    assert_eq!(a, b);
    // 2 fields × 3 λ × 6 chords + 4 gauge chords
    assert_eq!(a.iter().filter(|&&c| c == b'\n').count(), 1 + 40);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(reports[0].json_path.as_ref().unwrap()).unwrap()).unwrap();
    assert_eq!(json["seed"], 11);
    assert_eq!(json["passed"], true);
}

#[test]
fn seed_changes_the_chords() {
    let text = |seed: u64| {
        format!(r#"{{"name": "m", "kind": "ray_moments", "manifold": "flat_cylinder", "seed": {seed}, "ray": {{"chords": 3, "gauge_chords": 0, "lambdas": [0.5]}}}}"#)
    };
    let a = execute(&config(&text(1)), false).unwrap().csv_bytes().unwrap();
    let b = execute(&config(&text(2)), false).unwrap().csv_bytes().unwrap();
    assert_ne!(a, b);
}

#[test]
fn failing_threshold_is_reported() {
    let cfg = config(
        r#"{"name": "m", "kind": "ray_moments", "manifold": "flat_cylinder",
            "ray": {"chords": 3, "gauge_chords": 0, "lambdas": [0.0]},
            "thresholds": [{"metric": "control_max_moment", "max": 1e-3}]}"#,
    );
    let r = execute(&cfg, false).unwrap();
    assert!(!r.passed);
    assert!(r.summary_line().contains("FAIL (control_max_moment)"), "{}", r.summary_line());
}

#[test]
fn module_errors_carry_experiment_context() {
    let cfg = config(
        r#"{"name": "tangent", "kind": "residual_scaling", "manifold": "flat_cylinder",
            "geodesics": [{"start": [-1, 0], "direction_angle": 1.5707963267948966}]}"#,
    );
    let e = execute(&cfg, false).unwrap_err();
    assert!(matches!(&e, Error::Experiment { experiment, .. } if experiment == "tangent"), "{e}");
    assert_eq!(e.root(), &Error::TangentialStart);
}

#[test]
fn residual_scaling_on_flat_cylinder() {
    let cfg = config(
        r#"{"name": "flat", "kind": "residual_scaling", "manifold": "flat_cylinder",
            "thresholds": [{"metric": "residual_slope", "min": 2.3}, {"metric": "mode_mismatch", "max": 0.05},
                           {"metric": "h1scl_ratio_v", "max": 2}, {"metric": "h1scl_ratio_w", "max": 2},
                           {"metric": "eikonal_slope", "min": 3.9}, {"metric": "transport_residual", "max": 1e-8}]}"#,
    );
    let r = execute(&cfg, false).unwrap();
    eprintln!("{:?} {:?}", r.metrics, r.timings);
    assert!(r.passed, "{:?}", r.thresholds);
}

#[test]
fn boundary_recovery_on_flat_cylinder() {
    let cfg = config(
        r#"{"name": "probe", "kind": "boundary_recovery", "manifold": "flat_cylinder",
            "thresholds": [{"metric": "max_rel_error", "max": 0.05}, {"metric": "interior_exponent_error", "max": 0.1},
                           {"metric": "boundary_exponent_error", "max": 0.1}]}"#,
    );
    let r = execute(&cfg, false).unwrap();
    eprintln!("{:?}", r.metrics);
    assert!(r.passed, "{:?}", r.thresholds);
    assert_eq!(r.table.rows.len(), 6);
}
