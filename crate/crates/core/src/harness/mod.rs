//! Seeded Monte Carlo comparison of the three receiver pipelines.
//!
//! A trial draws a cell, payload and SSB offset, impairs a two-period
//! capture once, then hands the same realization to every enabled
//! pipeline.

mod pipeline;
mod report;
mod scenario;

pub use pipeline::{Pipeline, PipelineRun, Receiver, StageValues, SSS_MACS};
pub use report::{
    emit_report, load_report, read_curves, wilson_interval, CurveRow, Interval, PipelinePoint,
    Report, ReportPaths, ReportPoint, TimingRow, WILSON_Z,
};
pub use scenario::{Scenario, SweepPoint, BUILTIN_SCENARIOS};

use std::sync::atomic::{AtomicBool, Ordering};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_channel, rng, ChannelSpec};
use crate::waveform::{place_ssb_in_frame, ssb_waveform, CellId, PBCH_PAYLOAD_BITS};
use crate::{Error, Result};

/// Result of one pipeline on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub pipeline: Pipeline,
    pub tau_true: usize,
    /// `None` when the pipeline reported no PSS.
    pub tau_est: Option<usize>,
    pub cell_id_true: CellId,
    pub cell_id_est: Option<CellId>,
    pub cellid_ok: bool,
    pub pbch_ok: bool,
    pub stage_times_ms: StageValues<f64>,
    pub stage_macs: StageValues<u64>,
}

/// Random draws of one trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialDraw {
    pub seed: u64,
    pub cell_id: CellId,
    pub payload_bits: Vec<u8>,
    pub offset: usize,
}

/// Trial seed and draws for `(scenario, point, index)`.
pub fn draw_trial(scenario: &Scenario, point: &SweepPoint, index: u64) -> TrialDraw {
    let seed = rng::mix_seed(&[
        scenario.seed,
        point.snr_db.map_or(u64::MAX, f64::to_bits),
        point.drift_samples.to_bits(),
        index,
    ]);
    let mut r = rng::stream_rng(seed, rng::STREAM_TRIAL);
    let n_id = r.random_range(0..1008u16);
    let payload_bits = (0..PBCH_PAYLOAD_BITS).map(|_| r.random_range(0..2u8)).collect();
    let offset = r.random_range(0..=scenario.cfg.n_ssb - scenario.cfg.ssb_len());
    TrialDraw {
        seed,
        cell_id: CellId::from_n_id(n_id).expect("drawn n_id is in range"),
        payload_bits,
        offset,
    }
}

/// Channel used for a trial: the scenario template with the sweep point,
/// offset and trial seed filled in.
pub fn trial_channel(scenario: &Scenario, point: &SweepPoint, draw: &TrialDraw) -> ChannelSpec {
    ChannelSpec {
        snr_db: point.snr_db,
        timing_offset: draw.offset,
        drift_samples_per_period: point.drift_samples,
        seed: draw.seed,
        ..scenario.channel.clone()
    }
}

/// One trial: every enabled pipeline on the same impaired capture.
pub fn run_trial(scenario: &Scenario, point: &SweepPoint, index: u64) -> Result<Vec<SearchOutcome>> {
    let cfg = &scenario.cfg;
    let draw = draw_trial(scenario, point, index);
    let ssb = ssb_waveform(draw.cell_id, &draw.payload_bits, cfg)?;
    let tx = place_ssb_in_frame(&ssb, cfg, 0)?;
    let rx = apply_channel(&tx, &trial_channel(scenario, point, &draw), cfg)?;
    let mut receiver = Receiver::new(&rx, cfg, &scenario.params, scenario.discard_gap)?;
    scenario
        .pipelines
        .iter()
        .map(|&p| {
            let run = receiver.run(p)?;
            let cellid_ok = run.cell_id == Some(draw.cell_id);
            let pbch_ok = cellid_ok
                && run
                    .pbch
                    .as_ref()
                    .is_some_and(|d| d.crc_ok && d.payload_bits == draw.payload_bits);
            Ok(SearchOutcome {
                pipeline: p,
                tau_true: draw.offset,
                tau_est: run.tau_ssb,
                cell_id_true: draw.cell_id,
                cell_id_est: run.cell_id,
                cellid_ok,
                pbch_ok,
                stage_times_ms: run.times_ms,
                stage_macs: run.macs,
            })
        })
        .collect()
}

/// Execution controls for [`run_scenario_with`].
#[derive(Default)]
pub struct RunOptions<'a> {
    /// Worker threads; `None` uses the machine's parallelism.
    pub workers: Option<usize>,
    /// Checked between trials; set it to stop early.
    pub cancel: Option<&'a AtomicBool>,
    /// Called with the partial report after each sweep point.
    pub on_point: Option<&'a (dyn Fn(&Report) + Sync)>,
}

/// Runs every sweep point of `scenario` with default options.
pub fn run_scenario(scenario: &Scenario) -> Result<Report> {
    run_scenario_with(scenario, &RunOptions::default())
}

pub fn run_scenario_with(scenario: &Scenario, opts: &RunOptions) -> Result<Report> {
    scenario.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.workers {
        if n == 0 {
            return Err(Error::config("workers", "must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))?;
    let cancelled = || opts.cancel.is_some_and(|c| c.load(Ordering::Relaxed));

    let mut report = Report::empty(scenario);
    for point in scenario.sweep() {
        if cancelled() {
            report.interrupted = true;
            break;
        }
        let trials: Vec<Option<Result<Vec<SearchOutcome>>>> = pool.install(|| {
            (0..scenario.n_trials as u64)
                .into_par_iter()
                .map(|i| (!cancelled()).then(|| run_trial(scenario, &point, i)))
                .collect()
        });
        let mut done = Vec::with_capacity(trials.len());
        for t in trials {
            match t {
                Some(r) => done.push(r?),
                None => report.interrupted = true,
            }
        }
        report.add_point(point, &done);
        if let Some(f) = opts.on_point {
            f(&report);
        }
        if report.interrupted {
            break;
        }
    }
    Ok(report)
}
