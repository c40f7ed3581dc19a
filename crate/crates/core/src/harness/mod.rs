//! Seeded batch experiments: sweeps over system and algorithm parameters,
//! Monte-Carlo trials, and CSV output.

mod artifacts;
mod config;
mod results;

pub use artifacts::{load_toml, save_toml};

pub use config::{load_config, parse_config, ExperimentConfig, Preset, Sweep, SweepPoint};
pub use results::{
    emit_results, format_number, parse_results, round_sig, write_results, write_traces, ResultRow, CSV_HEADER,
    TRACE_HEADER,
};

use std::time::Instant;

use rayon::prelude::*;

use crate::analysis::{crlb, nmse, to_db, CrlbInputs};
use crate::channel::sample_scenario;
use crate::error::Result;
use crate::estimator::estimate_all;
use crate::observation::{build_phase_schedule, observe, snr_to_noise_power, ScheduleKind};
use crate::rng::derive_seed;

/// Stream labels under a trial seed.
const STREAM_CHANNEL: u64 = 0;
const STREAM_SCHEDULE: u64 = 1;
const STREAM_NOISE: u64 = 2;

/// Metrics of one successful trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub nmse_db: f64,
    pub crlb: f64,
    pub iterations: usize,
    pub objective_final: f64,
    pub wall_ms: f64,
    /// Outer objective trace of each subcarrier.
    pub traces: Vec<Vec<f64>>,
}

/// Seed of trial `trial`; every random stream of the trial derives from it.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    derive_seed(master, &[trial as u64])
}

/// Simulates one trial at one sweep point.
///
/// Channel and phase schedule depend only on the trial seed, so every sweep
/// point of a trial sees the same channel whenever the swept parameter
/// leaves the geometry unchanged. Noise also depends on the point index.
pub fn run_trial(point: &SweepPoint, point_index: usize, seed: u64, schedule: ScheduleKind) -> Result<TrialOutcome> {
    let start = Instant::now();
    let sys = &point.system;
    let ch = sample_scenario::<f64>(sys, &point.scenario, derive_seed(seed, &[STREAM_CHANNEL]))?;
    let v = build_phase_schedule::<f64>(sys.n_r(), sys.pilots, schedule, derive_seed(seed, &[STREAM_SCHEDULE]))?;
    let sigma2 = if point.snr_db == f64::INFINITY { 0.0 } else { snr_to_noise_power(&ch, &v, point.snr_db)? };
    let mut obs = observe(&ch, &v, sigma2, derive_seed(seed, &[STREAM_NOISE, point_index as u64]))?;
    obs.snr_db = point.snr_db;
    let est = estimate_all(&obs, &point.hyper)?;
    let err = nmse(&est.channels, &ch.tensors)?;
    Ok(TrialOutcome {
        nmse_db: to_db(err),
        crlb: crlb(&CrlbInputs::from_config(sys, sigma2)),
        iterations: est.max_iterations(),
        objective_final: est.mean_final_objective(),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        traces: est.traces,
    })
}

/// Rows of a run, the objective traces behind each row (empty for failed
/// trials), and the messages of failed trials keyed by row index.
#[derive(Clone, Debug, Default)]
pub struct ExperimentRun {
    pub rows: Vec<ResultRow>,
    pub traces: Vec<Vec<Vec<f64>>>,
    pub failures: Vec<(usize, String)>,
}

/// Runs every (sweep point, trial) pair on the rayon pool. Rows come out in
/// (point, trial) order regardless of scheduling; failed trials produce rows
/// with NaN metrics.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    cfg.validate()?;
    let points = cfg.points();
    let tasks: Vec<(usize, usize)> =
        (0..points.len()).flat_map(|p| (0..cfg.trials).map(move |t| (p, t))).collect();
    let outcomes: Vec<(ResultRow, Vec<Vec<f64>>, Option<String>)> = tasks
        .par_iter()
        .map(|&(p, t)| {
            let point = &points[p];
            let seed = trial_seed(cfg.seed, t);
            let mut row = ResultRow {
                sweep_var: point.var.to_string(),
                sweep_value: point.value.clone(),
                trial: t,
                nmse_db: f64::NAN,
                crlb: f64::NAN,
                iterations: 0,
                objective_final: f64::NAN,
                wall_ms: 0.0,
                seed,
            };
            match run_trial(point, p, seed, cfg.schedule) {
                Ok(o) => {
                    row.nmse_db = round_sig(o.nmse_db);
                    row.crlb = round_sig(o.crlb);
                    row.iterations = o.iterations;
                    row.objective_final = round_sig(o.objective_final);
                    if cfg.record_timing {
                        row.wall_ms = round_sig(o.wall_ms);
                    }
                    let traces = o.traces.into_iter().map(|t| t.into_iter().map(round_sig).collect()).collect();
                    (row, traces, None)
                }
                Err(e) => (row, Vec::new(), Some(format!("{} = {}, trial {t}: {e}", point.var, point.value))),
            }
        })
        .collect();
    let mut run = ExperimentRun::default();
    for (i, (row, traces, failure)) in outcomes.into_iter().enumerate() {
        run.rows.push(row);
        run.traces.push(traces);
        if let Some(msg) = failure {
            run.failures.push((i, msg));
        }
    }
    Ok(run)
}
