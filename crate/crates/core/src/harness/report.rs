use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Pipeline, Scenario, SearchOutcome, StageValues, SweepPoint};
use crate::channel::SNR_CONVENTION;
use crate::{Error, Result};

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959964;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub half_width: f64,
}

impl Interval {
    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// Wilson score interval for `failures` out of `trials`.
pub fn wilson_interval(failures: usize, trials: usize) -> Interval {
    if trials == 0 {
        return Interval {
            lo: 0.0,
            hi: 1.0,
            half_width: 0.5,
        };
    }
    let n = trials as f64;
    let p = failures as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Interval {
        lo: if failures == 0 { 0.0 } else { (centre - half).max(0.0) },
        hi: if failures >= trials { 1.0 } else { (centre + half).min(1.0) },
        half_width: half,
    }
}

/// Aggregate of one pipeline at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelinePoint {
    pub pipeline: Pipeline,
    pub trials: usize,
    pub cellid_failures: usize,
    pub pbch_failures: usize,
    pub cellid_fail_rate: f64,
    pub pbch_fail_rate: f64,
    pub cellid_ci: Interval,
    pub pbch_ci: Interval,
    pub mean_times_ms: StageValues<f64>,
    pub mean_macs: StageValues<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportPoint {
    pub snr_db: Option<f64>,
    pub drift_samples: f64,
    pub pipelines: Vec<PipelinePoint>,
}

impl ReportPoint {
    pub fn get(&self, p: Pipeline) -> Option<&PipelinePoint> {
        self.pipelines.iter().find(|x| x.pipeline == p)
    }
}

/// Mean time and MACs of one stage over the whole scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub pipeline: Pipeline,
    pub stage: String,
    pub mean_ms: f64,
    pub mean_macs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: Scenario,
    pub snr_convention: String,
    pub points: Vec<ReportPoint>,
    pub timing: Vec<TimingRow>,
    /// Mean proposed over mean baseline total MACs, when both ran.
    pub mac_ratio: Option<f64>,
    pub completed_trials: usize,
    pub interrupted: bool,
}

#[derive(Default, Clone, Copy)]
struct Sums {
    trials: usize,
    times: StageValues<f64>,
    macs: StageValues<f64>,
}

impl Sums {
    fn add(&mut self, o: &SearchOutcome) {
        self.trials += 1;
        let t = &mut self.times;
        let s = &o.stage_times_ms;
        t.pss_init += s.pss_init;
        t.pss_refine += s.pss_refine;
        t.sss += s.sss;
        t.pbch += s.pbch;
        t.overall += s.overall;
        let m = &mut self.macs;
        let s = &o.stage_macs;
        m.pss_init += s.pss_init as f64;
        m.pss_refine += s.pss_refine as f64;
        m.sss += s.sss as f64;
        m.pbch += s.pbch as f64;
        m.overall += s.overall as f64;
    }

    fn means(&self) -> (StageValues<f64>, StageValues<f64>) {
        let n = self.trials.max(1) as f64;
        (self.times.map(|v| v / n), self.macs.map(|v| v / n))
    }
}

impl Report {
    pub(super) fn empty(scenario: &Scenario) -> Self {
        Report {
            scenario: scenario.clone(),
            snr_convention: SNR_CONVENTION.to_string(),
            points: Vec::new(),
            timing: Vec::new(),
            mac_ratio: None,
            completed_trials: 0,
            interrupted: false,
        }
    }

    /// Folds in the outcomes of one sweep point (in trial order) and
    /// refreshes the scenario-wide timing table.
    pub(super) fn add_point(&mut self, point: SweepPoint, trials: &[Vec<SearchOutcome>]) {
        let pipelines = self.scenario.pipelines.clone();
        let mut out = Vec::with_capacity(pipelines.len());
        for &p in &pipelines {
            let mut sums = Sums::default();
            let (mut cf, mut pf) = (0, 0);
            for o in trials.iter().flatten().filter(|o| o.pipeline == p) {
                sums.add(o);
                cf += usize::from(!o.cellid_ok);
                pf += usize::from(!o.pbch_ok);
            }
            let n = sums.trials;
            let (mean_times_ms, mean_macs) = sums.means();
            let rate = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
            out.push(PipelinePoint {
                pipeline: p,
                trials: n,
                cellid_failures: cf,
                pbch_failures: pf,
                cellid_fail_rate: rate(cf),
                pbch_fail_rate: rate(pf),
                cellid_ci: wilson_interval(cf, n),
                pbch_ci: wilson_interval(pf, n),
                mean_times_ms,
                mean_macs,
            });
        }
        self.points.push(ReportPoint {
            snr_db: point.snr_db,
            drift_samples: point.drift_samples,
            pipelines: out,
        });
        self.completed_trials += trials.len();
        self.refresh_timing();
    }

    fn refresh_timing(&mut self) {
        self.timing.clear();
        let mut totals = Vec::new();
        for &p in &self.scenario.pipelines {
            let mut n = 0.0;
            let mut t = StageValues::<f64>::default();
            let mut m = StageValues::<f64>::default();
            for pp in self.points.iter().filter_map(|x| x.get(p)) {
                let w = pp.trials as f64;
                n += w;
                for (acc, v) in [
                    (&mut t.overall, pp.mean_times_ms.overall),
                    (&mut t.pss_init, pp.mean_times_ms.pss_init),
                    (&mut t.pss_refine, pp.mean_times_ms.pss_refine),
                    (&mut t.sss, pp.mean_times_ms.sss),
                    (&mut t.pbch, pp.mean_times_ms.pbch),
                    (&mut m.overall, pp.mean_macs.overall),
                    (&mut m.pss_init, pp.mean_macs.pss_init),
                    (&mut m.pss_refine, pp.mean_macs.pss_refine),
                    (&mut m.sss, pp.mean_macs.sss),
                    (&mut m.pbch, pp.mean_macs.pbch),
                ] {
                    *acc += w * v;
                }
            }
            let n = n.max(1.0);
            let (t, m) = (t.map(|v| v / n), m.map(|v| v / n));
            for ((stage, ms), (_, macs)) in t.entries().into_iter().zip(m.entries()) {
                self.timing.push(TimingRow {
                    pipeline: p,
                    stage: stage.to_string(),
                    mean_ms: ms,
                    mean_macs: macs,
                });
            }
            totals.push((p, m.pss_init + m.pss_refine));
        }
        let search = |p: Pipeline| totals.iter().find(|x| x.0 == p).map(|x| x.1);
        self.mac_ratio = match (search(Pipeline::Proposed), search(Pipeline::Baseline)) {
            (Some(a), Some(b)) if b > 0.0 => Some(a / b),
            _ => None,
        };
    }

    pub fn timing_row(&self, p: Pipeline, stage: &str) -> Option<&TimingRow> {
        self.timing.iter().find(|r| r.pipeline == p && r.stage == stage)
    }
}

/// One line of `curves.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    /// Empty for noiseless points.
    pub snr_db: Option<f64>,
    pub pipeline: Pipeline,
    pub cellid_fail: f64,
    pub pbch_fail: f64,
    pub cellid_ci: f64,
    pub pbch_ci: f64,
    pub cellid_ci_lo: f64,
    pub cellid_ci_hi: f64,
    pub pbch_ci_lo: f64,
    pub pbch_ci_hi: f64,
    pub trials: usize,
    pub drift_samples: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub curves: PathBuf,
    pub timing: PathBuf,
    pub json: PathBuf,
}

impl ReportPaths {
    pub fn in_dir(dir: &Path) -> Self {
        ReportPaths {
            curves: dir.join("curves.csv"),
            timing: dir.join("timing.csv"),
            json: dir.join("report.json"),
        }
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `curves.csv`, `timing.csv` and `report.json` into `dir`.
pub fn emit_report(report: &Report, dir: &Path) -> Result<ReportPaths> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = ReportPaths::in_dir(dir);

    let mut w = csv::Writer::from_path(&paths.curves).map_err(csv_err(&paths.curves))?;
    for point in &report.points {
        for p in &point.pipelines {
            w.serialize(CurveRow {
                snr_db: point.snr_db,
                pipeline: p.pipeline,
                cellid_fail: p.cellid_fail_rate,
                pbch_fail: p.pbch_fail_rate,
                cellid_ci: p.cellid_ci.half_width,
                pbch_ci: p.pbch_ci.half_width,
                cellid_ci_lo: p.cellid_ci.lo,
                cellid_ci_hi: p.cellid_ci.hi,
                pbch_ci_lo: p.pbch_ci.lo,
                pbch_ci_hi: p.pbch_ci.hi,
                trials: p.trials,
                drift_samples: point.drift_samples,
            })
            .map_err(csv_err(&paths.curves))?;
        }
    }
    w.flush().map_err(|e| Error::io(&paths.curves, e))?;

    let mut w = csv::Writer::from_path(&paths.timing).map_err(csv_err(&paths.timing))?;
    for row in &report.timing {
        w.serialize(row).map_err(csv_err(&paths.timing))?;
    }
    w.flush().map_err(|e| Error::io(&paths.timing, e))?;

    let json = serde_json::to_string_pretty(report).map_err(|source| Error::Json {
        path: paths.json.clone(),
        source,
    })?;
    fs::write(&paths.json, json).map_err(|e| Error::io(&paths.json, e))?;
    Ok(paths)
}

/// Reads `report.json` from a directory written by [`emit_report`].
pub fn load_report(dir: &Path) -> Result<Report> {
    let path = ReportPaths::in_dir(dir).json;
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path, source })
}

pub fn read_curves(path: &Path) -> Result<Vec<CurveRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err(path))
}
