use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::{dual_rate_frontend, DualRateCapture, IqBuffer};
use crate::detector::{
    full_search, half_search, two_step_estimate, CoarseEstimate, OpCount, SearchParams,
};
use crate::postsync::{decode_pbch, detect_sss, estimate_cfo, extract_ssb_symbols, PbchDecode};
use crate::waveform::{reference_set, CellId, FrameConfig, ReferencePss, NUM_N_ID1, SEQ_LEN};
use crate::{Error, Result};

/// Correlation MACs of one SSS detection.
pub const SSS_MACS: u64 = NUM_N_ID1 as u64 * SEQ_LEN as u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    /// Exhaustive full-rate search of the first period.
    Baseline,
    /// Half-rate coarse search, full-rate refinement in the second period.
    Proposed,
    /// Half-rate search only; the coarse offset is used as is.
    Halfrate,
}

impl Pipeline {
    pub const ALL: [Pipeline; 3] = [Pipeline::Baseline, Pipeline::Proposed, Pipeline::Halfrate];

    pub fn as_str(self) -> &'static str {
        match self {
            Pipeline::Baseline => "baseline",
            Pipeline::Proposed => "proposed",
            Pipeline::Halfrate => "halfrate",
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pipeline::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::config("pipeline", format!("unknown pipeline `{s}`")))
    }
}

/// Per-stage values in the order of the timing table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageValues<T> {
    pub pss_init: T,
    pub pss_refine: T,
    pub sss: T,
    pub pbch: T,
    pub overall: T,
}

impl<T: Copy> StageValues<T> {
    pub const NAMES: [&'static str; 5] = ["overall", "pss_init", "pss_refine", "sss", "pbch"];

    /// Values in [`Self::NAMES`] order.
    pub fn entries(&self) -> [(&'static str, T); 5] {
        [
            ("overall", self.overall),
            ("pss_init", self.pss_init),
            ("pss_refine", self.pss_refine),
            ("sss", self.sss),
            ("pbch", self.pbch),
        ]
    }

    pub fn map<U>(&self, f: impl Fn(T) -> U) -> StageValues<U> {
        StageValues {
            pss_init: f(self.pss_init),
            pss_refine: f(self.pss_refine),
            sss: f(self.sss),
            pbch: f(self.pbch),
            overall: f(self.overall),
        }
    }
}

/// What a pipeline concluded from one capture.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub pipeline: Pipeline,
    /// SSB start within the period.
    pub tau_ssb: Option<usize>,
    pub n_id2: Option<u8>,
    pub cell_id: Option<CellId>,
    pub pbch: Option<PbchDecode>,
    pub cfo_hz: Option<f64>,
    pub times_ms: StageValues<f64>,
    pub macs: StageValues<u64>,
}

struct Coarse {
    est: CoarseEstimate,
    ops: OpCount,
    ms: f64,
}

/// Runs pipelines on one two-period full-rate capture, sharing the
/// dual-rate front end and the coarse search between pipelines.
pub struct Receiver<'a> {
    rx: &'a IqBuffer,
    cfg: FrameConfig,
    params: SearchParams,
    refs: [ReferencePss; 3],
    discard_gap: usize,
    capture: Option<DualRateCapture>,
    coarse: Option<Coarse>,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

impl<'a> Receiver<'a> {
    pub fn new(
        rx: &'a IqBuffer,
        cfg: &FrameConfig,
        params: &SearchParams,
        discard_gap: usize,
    ) -> Result<Self> {
        params.validate(cfg)?;
        rx.require_full_rate(cfg, "receiver")?;
        Ok(Receiver {
            rx,
            cfg: *cfg,
            params: *params,
            refs: reference_set(cfg),
            discard_gap,
            capture: None,
            coarse: None,
        })
    }

    fn ensure_capture(&mut self) -> Result<()> {
        if self.capture.is_none() {
            self.capture = Some(dual_rate_frontend(self.rx, &self.cfg, self.discard_gap)?);
        }
        Ok(())
    }

    pub fn run(&mut self, pipeline: Pipeline) -> Result<PipelineRun> {
        match pipeline {
            Pipeline::Baseline => self.baseline(),
            Pipeline::Proposed => self.proposed(),
            Pipeline::Halfrate => self.halfrate(),
        }
    }

    fn baseline(&mut self) -> Result<PipelineRun> {
        let t = Instant::now();
        let (det, ops) = full_search(self.rx, &self.refs, &self.cfg)?;
        let pss_ms = ms_since(t);
        let mut run = empty_run(Pipeline::Baseline);
        run.times_ms.pss_init = pss_ms;
        run.macs.pss_init = ops.complex_macs;
        run.tau_ssb = Some(det.tau_ssb);
        post(&mut run, self.rx, det.tau_ssb, det.n_id2, &self.cfg)?;
        Ok(run)
    }

    fn proposed(&mut self) -> Result<PipelineRun> {
        let cfg = self.cfg;
        let params = self.params;
        self.ensure_capture()?;
        let capture = self.capture.as_ref().expect("capture built");
        let two = two_step_estimate(capture, &self.refs, &params, &cfg)?;
        self.coarse.get_or_insert(Coarse {
            est: two.coarse,
            ops: two.coarse_ops,
            ms: two.times.coarse_ms,
        });
        let mut run = empty_run(Pipeline::Proposed);
        run.times_ms.pss_init = two.times.coarse_ms;
        run.times_ms.pss_refine = two.times.refine_ms;
        run.macs.pss_init = two.coarse_ops.complex_macs;
        run.macs.pss_refine = two.refine_ops.complex_macs;
        if two.detection.confirmed {
            run.tau_ssb = Some(two.detection.tau_ssb);
            post(&mut run, &capture.full, two.local_tau, two.detection.n_id2, &cfg)?;
        } else {
            finish(&mut run);
        }
        Ok(run)
    }

    fn halfrate(&mut self) -> Result<PipelineRun> {
        let cfg = self.cfg;
        self.ensure_capture()?;
        let capture = self.capture.as_ref().expect("capture built");
        if self.coarse.is_none() {
            let t = Instant::now();
            let (est, ops) = half_search(&capture.half, &self.refs, &cfg)?;
            self.coarse = Some(Coarse {
                est,
                ops,
                ms: ms_since(t),
            });
        }
        let c = self.coarse.as_ref().expect("coarse search done");
        let mut run = empty_run(Pipeline::Halfrate);
        run.times_ms.pss_init = c.ms;
        run.macs.pss_init = c.ops.complex_macs;
        let n_ssb = cfg.n_ssb as i64;
        let tau = 2 * c.est.tau_h as i64;
        let shift = capture.full.start_index_full_rate as i64 - capture.half.start_index_full_rate as i64;
        let local = (tau - shift).rem_euclid(n_ssb) as usize;
        run.tau_ssb = Some(tau.rem_euclid(n_ssb) as usize);
        let n_id2 = c.est.n_id2;
        post(&mut run, &capture.full, local, n_id2, &cfg)?;
        Ok(run)
    }
}

fn empty_run(pipeline: Pipeline) -> PipelineRun {
    PipelineRun {
        pipeline,
        tau_ssb: None,
        n_id2: None,
        cell_id: None,
        pbch: None,
        cfo_hz: None,
        times_ms: StageValues::default(),
        macs: StageValues::default(),
    }
}

fn finish(run: &mut PipelineRun) {
    let t = &mut run.times_ms;
    t.overall = t.pss_init + t.pss_refine + t.sss + t.pbch;
    let m = &mut run.macs;
    m.overall = m.pss_init + m.pss_refine + m.sss + m.pbch;
}

/// CFO correction, SSS and PBCH at buffer offset `tau`. An SSB running
/// past the buffer end counts as a failed search, not an error.
fn post(run: &mut PipelineRun, r: &IqBuffer, tau: usize, n_id2: u8, cfg: &FrameConfig) -> Result<()> {
    run.n_id2 = Some(n_id2);
    if tau + cfg.ssb_len() > r.len() {
        finish(run);
        return Ok(());
    }
    let t = Instant::now();
    let cfo = estimate_cfo(r, tau, cfg)?;
    let obs = extract_ssb_symbols(r, tau, cfo, cfg)?;
    let (n_id1, _) = detect_sss(&obs, n_id2)?;
    let cell = CellId::new(n_id1, n_id2)?;
    run.times_ms.sss = ms_since(t);
    run.macs.sss = SSS_MACS;
    let t = Instant::now();
    run.pbch = Some(decode_pbch(&obs, cell));
    run.times_ms.pbch = ms_since(t);
    run.cfo_hz = Some(cfo);
    run.cell_id = Some(cell);
    finish(run);
    Ok(())
}
