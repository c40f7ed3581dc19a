use xlirs::channel::{sample_scenario, ChannelRealization, SystemConfig};
use xlirs::estimator::{Hyperparams, StepSize};
use xlirs::harness::*;
use xlirs::observation::{build_phase_schedule, observe_at_snr, ObservationSet, ScheduleKind};
use xlirs::Error;

fn desk_run(sweep: Sweep, trials: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig { sweep, trials, seed, ..ExperimentConfig::desk() }
}

#[test]
fn minimal_file_gets_reference_defaults() {
    let cfg = parse_config("seed = 42\n", None).unwrap();
    assert_eq!(cfg.seed, 42);
    assert_eq!(cfg.preset, Preset::Paper);
    let s = &cfg.system;
    assert_eq!(s.n_b(), 25);
    assert_eq!(s.n_r(), 256);
    assert_eq!(s.carrier_hz, 28e9);
    assert_eq!(s.bandwidth_hz, 2e9);
    assert_eq!(s.pilots, 280);
    assert_eq!(s.subcarriers, 6);
    assert_eq!(cfg.scenario.paths, 2);
    assert_eq!(cfg.hyper, Hyperparams::default());
    assert!((0.1..=2.0).contains(&cfg.hyper.lambda1));
    assert_eq!(cfg.hyper.lambda2, 1.0);
    assert_eq!(cfg.hyper.delta, 1e-10);
}

#[test]
fn preset_selection_and_partial_overrides() {
    let text = "preset = \"desk\"\n[system]\npilots = 40\n[hyper]\nlambda3 = 0.01\n";
    let cfg = parse_config(text, None).unwrap();
    assert_eq!(cfg.preset, Preset::Desk);
    assert_eq!(cfg.system.pilots, 40);
    assert_eq!(cfg.system.nr_z, 8);
    assert_eq!(cfg.hyper.lambda3, StepSize::Fixed(0.01));
    assert_eq!(cfg.hyper.rho, 0.5);
    // the command-line preset wins over the file
    let cfg = parse_config("preset = \"desk\"\n", Some(Preset::Paper)).unwrap();
    assert_eq!(cfg.system, SystemConfig::paper());
    let auto = parse_config("[hyper]\nlambda3 = \"auto\"\n", None).unwrap();
    assert_eq!(auto.hyper.lambda3, StepSize::AUTO);
}

#[test]
fn sweep_table_replaces_default() {
    let text = "preset = \"desk\"\n[sweep]\nkind = \"lambda_grid\"\nlambda1 = [0.1, 1.0]\nlambda2 = [0.5, 1.0, 2.0]\n";
    let cfg = parse_config(text, None).unwrap();
    assert_eq!(cfg.sweep, Sweep::LambdaGrid { lambda1: vec![0.1, 1.0], lambda2: vec![0.5, 1.0, 2.0] });
    let pts = cfg.points();
    assert_eq!(pts.len(), 6);
    assert_eq!(pts[1].hyper.lambda1, 0.1);
    assert_eq!(pts[1].hyper.lambda2, 1.0);
    assert_eq!(pts[1].value, "0.1;1");
}

#[test]
fn config_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in [
        ExperimentConfig::paper(),
        desk_run(Sweep::IrsElements { values: vec![[8, 8], [8, 7]] }, 3, 9),
        ExperimentConfig {
            snr_db: f64::INFINITY,
            hyper: Hyperparams { mode_ranks: Some([2, 3, 2]), lambda3: StepSize::Fixed(0.25), ..Hyperparams::default() },
            output: Some("out/results.csv".into()),
            ..ExperimentConfig::desk()
        },
    ] {
        let path = dir.path().join("cfg.toml");
        cfg.save(&path).unwrap();
        assert_eq!(load_config(&path, None).unwrap(), cfg);
    }
}

fn config_error_path(text: &str) -> String {
    match parse_config(text, None) {
        Err(Error::Config { path, .. }) => path,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn invalid_configs_report_field_paths() {
    assert_eq!(config_error_path("[system]\npilots = 100\n"), "system.pilots");
    assert_eq!(config_error_path("trials = 0\n"), "trials");
    assert_eq!(config_error_path("[hyper]\nrho = 2.0\n"), "hyper");
    assert_eq!(config_error_path("[system]\nbogus = 1\n"), "system.bogus");
    assert!(config_error_path("colour = 3\n").contains("colour"));
    assert_eq!(config_error_path("[hyper]\nlambda1 = \"big\"\n"), "hyper.lambda1");
    assert_eq!(
        config_error_path("preset = \"desk\"\n[sweep]\nkind = \"pilot_length\"\nvalues = [64, 16]\n"),
        "sweep[1]"
    );
    assert_eq!(config_error_path("[sweep]\nkind = \"snr\"\nvalues = []\n"), "sweep");
    assert_eq!(config_error_path("preset = \"desk\"\n[scenario]\nue_distance = [5.0, 10.0]\n"), "scenario.ue_distance");
    assert!(matches!(parse_config("preset = \"huge\"\n", None), Err(Error::Config { .. })));
    assert!(matches!(parse_config("seed = [\n", None), Err(Error::Parse(_))));
}

#[test]
fn lambda_grid_row_count() {
    let cfg = desk_run(Sweep::LambdaGrid { lambda1: vec![0.2, 0.5], lambda2: vec![0.5, 1.0, 2.0] }, 2, 3);
    let cfg = ExperimentConfig { hyper: Hyperparams { t_max: 10, ..cfg.hyper }, ..cfg };
    let run = run_experiment(&cfg).unwrap();
    assert_eq!(run.rows.len(), 2 * 3 * 2);
    assert!(run.failures.is_empty());
    assert_eq!(run.rows[3].sweep_value, "0.2;1");
    assert_eq!(run.rows[3].trial, 1);
    // one trace per subcarrier behind every row, initial value included
    assert_eq!(run.traces.len(), run.rows.len());
    for (row, tr) in run.rows.iter().zip(&run.traces) {
        assert_eq!(tr.len(), cfg.system.subcarriers);
        assert!(tr.iter().all(|t| t.len() <= cfg.hyper.t_max + 1));
        assert_eq!(tr.iter().map(|t| t.len() - 1).max(), Some(row.iterations));
    }
    let mut buf = Vec::new();
    write_traces(&run.rows, &run.traces, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines = text.lines().count();
    assert_eq!(lines, 1 + run.traces.iter().flatten().map(Vec::len).sum::<usize>());
    assert!(text.lines().nth(1).unwrap().starts_with("lambda_grid,0.2;0.5,0,1,0,"));
    assert!(write_traces(&run.rows[..1], &run.traces, Vec::new()).is_err());
}

#[test]
fn runs_are_byte_identical() {
    let cfg = desk_run(Sweep::Snr { values: vec![10.0, 20.0] }, 3, 11);
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    emit_results(&run_experiment(&cfg).unwrap().rows, &a).unwrap();
    emit_results(&run_experiment(&cfg).unwrap().rows, &b).unwrap();
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let other = ExperimentConfig { seed: 12, ..cfg };
    let c = dir.path().join("c.csv");
    emit_results(&run_experiment(&other).unwrap().rows, &c).unwrap();
    assert_ne!(ta, std::fs::read(&c).unwrap());
}

#[test]
fn adding_trials_keeps_earlier_rows() {
    let small = desk_run(Sweep::Snr { values: vec![15.0] }, 2, 5);
    let large = ExperimentConfig { trials: 4, ..small.clone() };
    let a = run_experiment(&small).unwrap().rows;
    let b = run_experiment(&large).unwrap().rows;
    assert_eq!(a[..], b[..2]);
}

#[test]
fn csv_contract() {
    let mut buf = Vec::new();
    write_results(&[], &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), CSV_HEADER.join(",") + "\n");

    let row = ResultRow {
        sweep_var: "snr".into(),
        sweep_value: "20".into(),
        trial: 3,
        nmse_db: -31.123456789012,
        crlb: 0.5,
        iterations: 7,
        objective_final: -123.4,
        wall_ms: 0.0,
        seed: 18_446_744_073_709_551_000,
    };
    let mut buf = Vec::new();
    write_results(std::slice::from_ref(&row), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1].split(',').count(), 9);
    assert_eq!(lines[1], "snr,20,3,-31.1234568,0.5,7,-123.4,0,18446744073709551000");

    let parsed = parse_results(&text).unwrap();
    let rounded = ResultRow { nmse_db: round_sig(row.nmse_db), ..row };
    assert_eq!(parsed, vec![rounded]);
    assert!(parse_results("a,b\n1,2\n").is_err());
}

#[test]
fn emitted_run_reparses_exactly() {
    let cfg = desk_run(Sweep::Paths { values: vec![1, 3] }, 2, 21);
    let rows = run_experiment(&cfg).unwrap().rows;
    let mut buf = Vec::new();
    write_results(&rows, &mut buf).unwrap();
    assert_eq!(parse_results(std::str::from_utf8(&buf).unwrap()).unwrap(), rows);
}

#[test]
fn failures_become_nan_rows() {
    let cfg = desk_run(Sweep::Snr { values: vec![20.0] }, 1, 1);
    // validation guards the public entry point, so break a point directly
    let mut point = cfg.points().remove(0);
    point.hyper.t_max = 0;
    assert!(run_trial(&point, 0, 1, ScheduleKind::OrthogonalDft).is_err());
    let bad = ExperimentConfig { hyper: Hyperparams { t_max: 0, ..cfg.hyper.clone() }, ..cfg };
    assert!(run_experiment(&bad).is_err());
}

#[test]
fn snr_sweep_trend() {
    let cfg = desk_run(Sweep::Snr { values: vec![0.0, 10.0, 20.0, 30.0] }, 20, 2024);
    let run = run_experiment(&cfg).unwrap();
    assert!(run.failures.is_empty());
    let mean = |v: &str| {
        let sel: Vec<f64> = run.rows.iter().filter(|r| r.sweep_value == v).map(|r| r.nmse_db).collect();
        sel.iter().sum::<f64>() / sel.len() as f64
    };
    let m: Vec<f64> = ["0", "10", "20", "30"].iter().map(|v| mean(v)).collect();
    assert!(m.windows(2).all(|w| w[1] < w[0]), "{m:?}");
}

#[test]
fn scenario_and_observation_json_round_trip() {
    let cfg = ExperimentConfig::desk();
    let ch = sample_scenario::<f64>(&cfg.system, &cfg.scenario, 4).unwrap();
    let v = build_phase_schedule::<f64>(cfg.system.n_r(), cfg.system.pilots, ScheduleKind::RandomPhase, 1).unwrap();
    let obs = observe_at_snr(&ch, &v, 10.0, 2).unwrap();
    let ch2: ChannelRealization<f64> = serde_json::from_str(&serde_json::to_string(&ch).unwrap()).unwrap();
    let obs2: ObservationSet<f64> = serde_json::from_str(&serde_json::to_string(&obs).unwrap()).unwrap();
    assert_eq!(ch, ch2);
    assert_eq!(obs, obs2);
}

#[test]
fn scenario_and_observation_toml_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::desk();
    let ch = sample_scenario::<f64>(&cfg.system, &cfg.scenario, 8).unwrap();
    let v = build_phase_schedule::<f64>(cfg.system.n_r(), cfg.system.pilots, ScheduleKind::OrthogonalDft, 0).unwrap();
    let mut noiseless = xlirs::observation::observe(&ch, &v, 0.0, 1).unwrap();
    noiseless.snr_db = f64::INFINITY;
    let noisy = observe_at_snr(&ch, &v, 5.0, 2).unwrap();

    let p = dir.path().join("a/scenario.toml");
    save_toml(&ch, &p).unwrap();
    assert_eq!(load_toml::<ChannelRealization<f64>>(&p).unwrap(), ch);
    for obs in [noiseless, noisy] {
        let p = dir.path().join("obs.toml");
        save_toml(&obs, &p).unwrap();
        assert_eq!(load_toml::<ObservationSet<f64>>(&p).unwrap(), obs);
    }
    assert!(matches!(load_toml::<ChannelRealization<f64>>(&dir.path().join("obs.toml")), Err(Error::Config { .. })));
}
