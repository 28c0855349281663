use std::path::Path;
use std::process::Command;

use cycone::ma::test_grid;
use cycone::pipeline::io::{read_json, write_json};
use cycone::pipeline::{bundled, bundled_names, emit_csv, run_pipeline, Mode, PipelineError, RunConfig, SolutionReport};
use cycone::Error;

fn run(cone: &str, mode: Mode) -> SolutionReport {
    let mut config = RunConfig::new(cone, mode);
    config.mc_samples = 100_000;
    run_pipeline(&config).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn bundled_cones_are_listed() {
    let names = bundled_names();
    for name in ["quadrant2", "quadrant3", "conifold", "c3z2"] {
        assert!(names.contains(&name));
        assert!(bundled(name).is_some());
    }
}

#[test]
fn quadrant_plane_full_run() {
    let r = run("quadrant2", Mode::Cy);
    assert!(r.converged);
    assert_eq!(r.l.as_deref(), Some(&["1".to_string(), "1".to_string()][..]));
    assert!(max_abs_diff(r.xi_star.as_ref().unwrap(), &[1.0, 1.0]) <= 1e-12);
    assert!((r.v_vol.unwrap() - 0.5).abs() < 1e-15);
    let ma = r.ma.as_ref().unwrap();
    assert!(ma.solution.mass_residual <= 1e-9);
    assert!(ma.slope_count >= 1000);
    let cert = r.certificate.as_ref().unwrap();
    assert!(cert.passed);
    assert!((cert.lhs - 2f64.ln()).abs() < 5e-3);
    let rec = r.reconstruction.as_ref().unwrap();
    assert!(rec.min_dual_margin >= -1e-9);
    let mc = r.mc_volume.as_ref().unwrap();
    assert!((mc.estimate - 0.5).abs() <= 3.0 * mc.std_error);
    for stage in ["validate", "minimize-volume", "solve-ma", "reconstruct", "certify", "mc-volume"] {
        assert!(r.timing.contains_key(stage), "missing timing for {stage}");
    }
}

#[test]
fn conifold_reeb_vector_and_solution() {
    let r = run("conifold", Mode::SolveMa);
    assert!(r.converged);
    assert_eq!(r.l.as_deref(), Some(&["1".to_string(), "1".to_string(), "2".to_string()][..]));
    assert!(max_abs_diff(r.xi_star.as_ref().unwrap(), &[0.0, 0.0, 1.5]) <= 1e-8);
    assert!(max_abs_diff(r.barycenter.as_ref().unwrap(), &[1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0]) <= 1e-8);
    assert!(r.ma.as_ref().unwrap().solution.mass_residual <= 1e-3);
    assert!(r.certificate.is_none());
}

#[test]
fn c3_mod_2_reeb_vector() {
    let r = run("c3z2", Mode::MinimizeVolume);
    let xi = r.xi_star.unwrap();
    assert!(max_abs_diff(&xi, &[1.0, 2.0, 0.0]) <= 1e-8, "{xi:?}");
    assert!(r.ma.is_none());
}

#[test]
fn validate_mode_echoes_dual() {
    let r = run("conifold", Mode::Validate);
    assert!(r.converged);
    assert_eq!(r.cone.dual_rays.len(), 4);
    assert!(r.xi_star.is_none());
}

#[test]
fn off_barycenter_reeb_vector_reports_unboundedness() {
    let mut config = RunConfig::new("quadrant2", Mode::SolveMa);
    config.xi = Some(vec![0.5, 1.5]);
    let r = run_pipeline(&config).unwrap();
    assert!(!r.converged);
    assert!(r.ma.is_none());
    let cert = r.unbounded.unwrap();
    assert!(cert.strictly_decreasing);
    assert!(cert.observed_slope < 0.0);
    assert!(!r.warnings.is_empty());
}

#[test]
fn report_round_trips_bit_exactly() {
    let r = run("quadrant3", Mode::Cy);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    write_json(&r, &path).unwrap();
    let back: SolutionReport = read_json(&path).unwrap();
    assert_eq!(back, r);
}

#[test]
fn runs_are_deterministic() {
    let a = run("quadrant3", Mode::Cy);
    let b = run("quadrant3", Mode::Cy);
    assert_eq!(a.without_timing(), b.without_timing());
}

#[test]
fn certify_reloads_a_saved_solution() {
    let first = run("conifold", Mode::SolveMa);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("solution.json");
    write_json(&first, &path).unwrap();
    let mut config = RunConfig::new("conifold", Mode::Certify);
    config.solution_path = Some(path.clone());
    config.mc_samples = 100_000;
    let r = run_pipeline(&config).unwrap();
    assert!(r.certificate.unwrap().passed);
    assert!(r.reconstruction.unwrap().min_dual_margin >= -1e-9);

    let mut wrong = config.clone();
    wrong.cone_path = "quadrant3".into();
    let err = run_pipeline(&wrong).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn csv_grid_output() {
    let r = run("quadrant2", Mode::SolveMa);
    let solution = &r.ma.unwrap().solution;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phi.csv");
    emit_csv(solution, &test_grid(1, 5.0, 101), &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "s1,phi,phi_q,density");
    assert_eq!(lines.len(), 102);
    let row: Vec<f64> = lines[51].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row[0], 0.0);
    assert!(row[3] > 0.0);

    emit_csv(solution, &[], &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 1);
}

#[test]
fn structural_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("skew.json");
    // rays not on one affine hyperplane
    std::fs::write(&path, r#"{"dim":3,"rays":[[1,0,1],[0,1,1],[-1,0,1],[0,-1,2]]}"#).unwrap();
    let err = run_pipeline(&RunConfig::new(&path, Mode::Validate)).unwrap_err();
    assert!(matches!(
        err,
        PipelineError::Stage {
            source: Error::NotGorenstein,
            ..
        }
    ));
    assert_eq!(err.exit_code(), 2);

    let err = run_pipeline(&RunConfig::new(dir.path().join("missing.json"), Mode::Validate)).unwrap_err();
    assert_eq!(err.exit_code(), 3);

    std::fs::write(&path, "{not json").unwrap();
    assert_eq!(run_pipeline(&RunConfig::new(&path, Mode::Validate)).unwrap_err().exit_code(), 3);

    let mut config = RunConfig::new("quadrant2", Mode::SolveMa);
    config.ma_tol = -1.0;
    assert_eq!(run_pipeline(&config).unwrap_err().exit_code(), 2);
}

fn cli(args: &[&str], dir: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cycone"))
        .args(args)
        .current_dir(dir)
        .env_remove("CYCONE_SEED")
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn cli_exit_codes_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let (code, stdout) = cli(&["validate", "--cone", "conifold"], d);
    assert_eq!(code, 0);
    let report: SolutionReport = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report.mode, Mode::Validate);

    let (code, _) = cli(
        &["solve-ma", "--cone", "quadrant2", "--out", "sol.json", "--grid-csv", "phi.csv"],
        d,
    );
    assert_eq!(code, 0);
    assert_eq!(std::fs::read_to_string(d.join("phi.csv")).unwrap().lines().count(), 102);
    let (code, _) = cli(
        &["certify", "--solution", "sol.json", "--cone", "quadrant2", "--mc-samples", "10000", "--out", "cert.json"],
        d,
    );
    assert_eq!(code, 0);
    let cert: SolutionReport = read_json(&d.join("cert.json")).unwrap();
    assert!(cert.certificate.unwrap().passed);

    // rational xi off the barycenter: no solution, exit 1
    let (code, _) = cli(&["solve-ma", "--cone", "quadrant2", "--xi", "2/3,4/3"], d);
    assert_eq!(code, 1);
    let (code, _) = cli(&["solve-ma", "--cone", "quadrant2", "--max-iter", "1"], d);
    assert_eq!(code, 1);

    std::fs::write(d.join("skew.json"), r#"{"dim":3,"rays":[[1,0,1],[0,1,1],[-1,0,1],[0,-1,2]]}"#).unwrap();
    assert_eq!(cli(&["cy", "--cone", "skew.json"], d).0, 2);
    assert_eq!(cli(&["validate", "--cone", "nowhere.json"], d).0, 3);
    assert_eq!(cli(&["solve-ma", "--cone", "quadrant2", "--xi", "1,x"], d).0, 2);
}

#[test]
fn cli_seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cycone"))
        .args(["cy", "--cone", "quadrant2", "--mc-samples", "10000", "--resolution", "200"])
        .env("CYCONE_SEED", "17")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r: SolutionReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r.ma.unwrap().solution.seed, 17);
}
