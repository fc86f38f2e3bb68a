use std::process::Command;
use torus_experiments::{
    emit, run, ConfigOverrides, Experiment, ExperimentConfig, ExperimentError, OutputFormat, SweepResult, CSV_HEADER,
};

fn small(experiment: Experiment) -> ExperimentConfig {
    let flags = ConfigOverrides {
        grid_points: Some(256),
        band: Some(64),
        atoms: Some(6),
        sigmas: Some(vec![0.125, 0.0625, 0.03125, 0.015625]),
        ..Default::default()
    };
    ExperimentConfig::resolve(experiment, None, &flags).unwrap()
}

#[test]
fn empty_result_is_header_only() {
    let cfg = small(Experiment::Threshold);
    let result = SweepResult::new(&cfg);
    let mut buf = Vec::new();
    result.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", CSV_HEADER.join(",")));
    assert_eq!(result.exit_code(), 0);
}

#[test]
fn one_failing_row_sets_exit_code() {
    let mut cfg = small(Experiment::Threshold);
    cfg.tolerances.ratio_cap = 1e-6;
    let result = run(&cfg).unwrap();
    assert_eq!(result.exit_code(), 1);
    assert!(result.failures().all(|r| r.statistic == "ratio"));
}

#[test]
fn pass_flags_follow_value_and_tolerance() {
    for e in [Experiment::Threshold, Experiment::HpPipeline, Experiment::VerifySymbol] {
        let result = run(&small(e)).unwrap();
        assert!(result.asserted().count() > 0);
        for row in &result.rows {
            assert_eq!(row.pass, row.recompute_pass(), "{}", row.statistic);
        }
    }
}

#[test]
fn outputs_are_byte_identical_under_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    for (e, format) in [
        (Experiment::Threshold, OutputFormat::Csv),
        (Experiment::HpPipeline, OutputFormat::Json),
        (Experiment::KernelDecay, OutputFormat::Csv),
    ] {
        let cfg = small(e);
        let a = dir.path().join(format!("{e}-a.{format}"));
        let b = dir.path().join(format!("{e}-b.{format}"));
        emit(&run(&cfg).unwrap(), format, Some(&a)).unwrap();
        emit(&run(&cfg).unwrap(), format, Some(&b)).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
    let mut other = small(Experiment::Threshold);
    other.seed = 99;
    let c = dir.path().join("other.csv");
    emit(&run(&other).unwrap(), OutputFormat::Csv, Some(&c)).unwrap();
    assert_ne!(
        std::fs::read(&c).unwrap(),
        std::fs::read(dir.path().join("threshold-a.csv")).unwrap()
    );
}

#[test]
fn unwritable_path_reports_the_path() {
    let result = SweepResult::new(&small(Experiment::Threshold));
    let err = emit(
        &result,
        OutputFormat::Csv,
        Some(std::path::Path::new("/nonexistent/dir/out.csv")),
    )
    .unwrap_err();
    assert!(err.to_string().contains("/nonexistent/dir/out.csv"));
}

#[test]
fn gate_refuses_nonvanishing_t_star_one() {
    let mut cfg = small(Experiment::HpPipeline);
    cfg.symbol = "separable:m=0,phi=cos".into();
    match run(&cfg) {
        Err(ExperimentError::Gate { bmo, tolerance }) => assert!(bmo > tolerance),
        other => panic!("expected a gate refusal, got {other:?}"),
    }
}

#[test]
fn identity_pipeline_is_uniformly_bounded() {
    let mut cfg = small(Experiment::HpPipeline);
    cfg.symbol = "identity".into();
    let result = run(&cfg).unwrap();
    assert!(result.all_pass(), "{:?}", result.failures().collect::<Vec<_>>());
    let hp: Vec<f64> = result
        .rows
        .iter()
        .filter(|r| r.statistic == "hp_bound_max")
        .map(|r| r.value)
        .collect();
    assert_eq!(hp.len(), 4);
    assert!(hp.iter().all(|&v| v < cfg.tolerances.hp_cap));
}

#[test]
fn boundary_beta_is_flagged() {
    let mut cfg = small(Experiment::HpPipeline);
    cfg.beta = 0.5;
    let result = run(&cfg).unwrap();
    assert!(result.notes.iter().any(|n| n.contains("boundary")));
    let mut cfg = small(Experiment::Threshold);
    cfg.beta = 0.5;
    assert!(run(&cfg).is_err());
}

#[test]
fn subcritical_p_needs_exploration_mode() {
    let mut cfg = small(Experiment::Threshold);
    cfg.p = 0.4;
    assert!(matches!(run(&cfg), Err(ExperimentError::Precondition(_))));
    cfg.assert = false;
    let result = run(&cfg).unwrap();
    assert_eq!(result.asserted().count(), 0);
}

#[test]
fn zero_atoms_are_excluded_from_r() {
    // sup over an empty atom list would be zero; the ladder stays positive
    let result = run(&small(Experiment::Threshold)).unwrap();
    assert!(result.rows.iter().filter(|r| r.statistic == "R").all(|r| r.value > 0.0));
}

#[test]
fn constant_inputs_have_zero_oscillation() {
    let mut cfg = small(Experiment::SharpMax);
    cfg.functions = 2;
    let result = run(&cfg).unwrap();
    let row = result.find("constant_input_sharp_sup", None).unwrap();
    assert!(row.value < 1e-12);
    assert_eq!(result.find("sharp_ratio_nonfinite", None).unwrap().value, 0.0);
}

#[test]
fn molecule_decompose_emits_a_summary() {
    let result = run(&small(Experiment::MoleculeDecompose)).unwrap();
    assert!(result.all_pass());
    let details = result.details.as_ref().unwrap();
    assert!(details["decomposition"]["blocks"].as_array().unwrap().len() >= 2);
    let mut buf = Vec::new();
    result.write_json(&mut buf).unwrap();
    let parsed: serde_json::Value = serde_json::from_slice(&buf).unwrap();
    assert_eq!(parsed["metadata"]["G"], 256);
    assert!(parsed["metadata"].get("wall_time").is_none());
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_torus-pdo"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn cli_exit_codes() {
    let base = [
        "-G",
        "256",
        "-N",
        "64",
        "--atoms",
        "4",
        "--sigmas",
        "0.125,0.0625,0.03125,0.015625",
    ];
    let (code, stdout, _) = cli(&[&["threshold"][..], &base].concat());
    assert_eq!(code, 0);
    assert!(stdout.starts_with(&CSV_HEADER.join(",")));

    let (code, _, stderr) = cli(&[&["hp-pipeline", "--symbol", "separable:m=0,phi=cos"][..], &base].concat());
    assert_eq!(code, 2);
    assert!(stderr.contains("T*(1)"));

    let (code, _, _) = cli(&["kernel-decay", "-G", "64", "-N", "32"]);
    assert_eq!(code, 2);

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.toml");
    std::fs::write(&config, "[tolerances]\nratio_cap = 1e-9\n").unwrap();
    let (code, _, stderr) = cli(&[&["threshold", "--config", config.to_str().unwrap()][..], &base].concat());
    assert_eq!(code, 1);
    assert!(stderr.contains("FAIL"));
}

#[test]
fn cli_flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.toml");
    std::fs::write(&config, "grid_points = 128\nband = 32\nseed = 5\n").unwrap();
    let out = dir.path().join("o.json");
    let (code, _, _) = cli(&[
        "verify-symbol",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "8",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let parsed: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(parsed["metadata"]["seed"], 8);
    assert_eq!(parsed["metadata"]["G"], 128);
}
