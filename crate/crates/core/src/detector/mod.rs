//! PSS timing-offset estimation.
//!
//! * [`full_search`]: exhaustive full-rate search over every offset of one
//!   SSB period and all three PSS sequences.
//! * [`half_search`]: the same search on half-rate samples with half-length
//!   references, a quarter of the work.
//! * [`refine`] / [`two_step_estimate`]: coarse half-rate estimate followed
//!   by a full-rate search of a `±delta_n` window around it, on samples
//!   captured one period later.
//!
//! Offsets are reported as the index of the first cyclic-prefix sample of
//! the PSS symbol; correlations start `cp_len` samples later. Every search
//! counts its complex multiply-accumulates exactly.

mod kernel;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::{DualRateCapture, IqBuffer};
use crate::waveform::{FrameConfig, ReferencePss};
use crate::{Cf64, Error, Result};
use kernel::{scan, Lanes};

/// Search stage a count belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Baseline,
    Coarse,
    Refine,
}

/// Exact operation count of one search stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCount {
    pub complex_macs: u64,
    pub correlations_evaluated: u64,
    pub stage: Stage,
}

impl OpCount {
    pub fn new(stage: Stage) -> Self {
        OpCount {
            complex_macs: 0,
            correlations_evaluated: 0,
            stage,
        }
    }

    fn add(&mut self, correlations: usize, length: usize) {
        self.correlations_evaluated += correlations as u64;
        self.complex_macs += (correlations * length) as u64;
    }
}

/// Refinement margin around the rate-converted coarse estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub delta_n: usize,
    /// Smallest accepted ratio of refined to coarse peak power (after
    /// correcting for the rate change) before the PSS counts as detected.
    #[serde(default = "default_min_peak_ratio")]
    pub min_peak_ratio: f64,
}

fn default_min_peak_ratio() -> f64 {
    DEFAULT_MIN_PEAK_RATIO
}

pub const DEFAULT_MIN_PEAK_RATIO: f64 = 0.15;

impl SearchParams {
    /// Two cyclic prefixes: half-rate quantization plus CP-scale skew.
    pub fn default_for(cfg: &FrameConfig) -> Self {
        SearchParams {
            delta_n: 2 * cfg.cp_len,
            min_peak_ratio: DEFAULT_MIN_PEAK_RATIO,
        }
    }

    pub fn validate(&self, cfg: &FrameConfig) -> Result<()> {
        if self.delta_n == 0 || 8 * self.delta_n >= 3 * cfg.n_ssb {
            return Err(Error::config(
                "delta_n",
                format!("{} not in [1, 3/8 * n_ssb = {})", self.delta_n, 3 * cfg.n_ssb / 8),
            ));
        }
        if !(0.0..1.0).contains(&self.min_peak_ratio) {
            return Err(Error::config(
                "min_peak_ratio",
                format!("{} not in [0, 1)", self.min_peak_ratio),
            ));
        }
        Ok(())
    }
}

/// Result of a PSS search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PssDetection {
    /// SSB start within the period, full-rate samples.
    pub tau_ssb: usize,
    pub n_id2: u8,
    /// `|rho|` at the peak.
    pub peak_metric: f64,
    /// Coarse estimate in half-rate samples, for two-step searches.
    pub coarse_tau_h: Option<usize>,
    /// Inclusive refinement window in period coordinates. Can extend past
    /// `[0, n_ssb)` when the window straddles a period boundary.
    pub window: Option<(i64, i64)>,
    /// The peak sits on an unclipped window edge: the true offset most
    /// likely lies outside the window.
    pub window_edge: bool,
    /// Refined over coarse peak power, rate corrected; about 1 when both
    /// stages see the same PSS.
    pub peak_ratio: Option<f64>,
    /// False when the refinement did not find the PSS inside its window
    /// (edge peak or too weak a peak).
    pub confirmed: bool,
}

/// Coarse half-rate estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoarseEstimate {
    pub tau_h: usize,
    pub n_id2: u8,
    pub peak_metric: f64,
}

/// Wall-clock duration of the two search stages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub coarse_ms: f64,
    pub refine_ms: f64,
}

/// Output of [`two_step_estimate`].
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStepResult {
    pub detection: PssDetection,
    pub coarse: CoarseEstimate,
    /// Refined offset as an index into `capture.full`.
    pub local_tau: usize,
    pub coarse_ops: OpCount,
    pub refine_ops: OpCount,
    pub times: StageTimes,
}

impl TwoStepResult {
    pub fn total_macs(&self) -> u64 {
        self.coarse_ops.complex_macs + self.refine_ops.complex_macs
    }
}

/// `|sum_k r[tau + k] conj(s[k])|`, adding `len(s)` MACs to `ops`.
///
/// Plain `f64` evaluation; the searches use a vectorized `f32` kernel and
/// are checked against this.
pub fn correlate(r: &IqBuffer, s: &[Cf64], tau: usize, ops: &mut OpCount) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::domain("empty reference sequence"));
    }
    if tau + s.len() > r.len() {
        return Err(Error::domain(format!(
            "lag {tau} with {} reference samples exceeds buffer of {}",
            s.len(),
            r.len()
        )));
    }
    let acc: Cf64 = r.samples[tau..tau + s.len()]
        .iter()
        .zip(s)
        .map(|(a, b)| a * b.conj())
        .sum();
    ops.add(1, s.len());
    Ok(acc.norm())
}

fn require_len(buf: &IqBuffer, what: &'static str, expected: usize) -> Result<()> {
    if buf.len() < expected {
        return Err(Error::InsufficientSamples {
            what,
            expected,
            actual: buf.len(),
        });
    }
    Ok(())
}

/// Exhaustive full-rate search: `n_ssb` offsets times three sequences.
pub fn full_search(
    r_full: &IqBuffer,
    refs: &[ReferencePss; 3],
    cfg: &FrameConfig,
) -> Result<(PssDetection, OpCount)> {
    r_full.require_full_rate(cfg, "full_search")?;
    let n = cfg.n_fft;
    let needed = cfg.n_ssb - 1 + cfg.cp_len + n;
    require_len(r_full, "full-rate search (one period plus PSS symbol)", needed)?;

    let r = Lanes::from_samples(&r_full.samples[..needed]);
    let s: Vec<Lanes> = refs.iter().map(|p| Lanes::from_samples(&p.full_rate)).collect();
    let peak = scan(&r, [&s[0], &s[1], &s[2]], cfg.cp_len, cfg.n_ssb);

    let mut ops = OpCount::new(Stage::Baseline);
    ops.add(3 * cfg.n_ssb, n);
    Ok((
        PssDetection {
            tau_ssb: peak.position - cfg.cp_len,
            n_id2: refs[peak.reference].seq_index,
            peak_metric: (peak.metric_sq as f64).sqrt(),
            coarse_tau_h: None,
            window: None,
            window_edge: false,
            peak_ratio: None,
            confirmed: true,
        },
        ops,
    ))
}

/// Half-rate search: `n_ssb / 2` offsets times three half-length sequences.
pub fn half_search(
    r_half: &IqBuffer,
    refs: &[ReferencePss; 3],
    cfg: &FrameConfig,
) -> Result<(CoarseEstimate, OpCount)> {
    r_half.require_half_rate(cfg, "half_search")?;
    let n = cfg.n_fft / 2;
    let cp = cfg.cp_len / 2;
    let offsets = cfg.n_ssb / 2;
    let needed = offsets - 1 + cp + n;
    require_len(r_half, "half-rate search (one period plus PSS symbol)", needed)?;

    let r = Lanes::from_samples(&r_half.samples[..needed]);
    let s: Vec<Lanes> = refs.iter().map(|p| Lanes::from_samples(&p.half_rate)).collect();
    let peak = scan(&r, [&s[0], &s[1], &s[2]], cp, offsets);

    let mut ops = OpCount::new(Stage::Coarse);
    ops.add(3 * offsets, n);
    Ok((
        CoarseEstimate {
            tau_h: peak.position - cp,
            n_id2: refs[peak.reference].seq_index,
            peak_metric: (peak.metric_sq as f64).sqrt(),
        },
        ops,
    ))
}

struct WindowPeak {
    tau: usize,
    metric: f64,
    lo: usize,
    hi: usize,
    edge: bool,
}

/// Full-rate search of `[center - delta_n, center + delta_n]` clipped to
/// `[0, max_tau]`, all in buffer-local offsets. `None` when the clipped
/// window is empty.
fn search_window(
    r_full: &IqBuffer,
    reference: &ReferencePss,
    center: i64,
    delta_n: usize,
    max_tau: i64,
    cfg: &FrameConfig,
    ops: &mut OpCount,
) -> Option<WindowPeak> {
    let want_lo = center - delta_n as i64;
    let want_hi = center + delta_n as i64;
    let lo = want_lo.max(0);
    let hi = want_hi.min(max_tau);
    if lo > hi {
        return None;
    }
    let (lo, hi) = (lo as usize, hi as usize);
    let n = cfg.n_fft;
    let count = hi - lo + 1;
    let first = lo + cfg.cp_len;
    let r = Lanes::from_samples(&r_full.samples[first..first + count - 1 + n]);
    let s = Lanes::from_samples(&reference.full_rate);
    let peak = scan(&r, [&s], 0, count);
    ops.add(count, n);
    let tau = lo + peak.position;
    let edge = (tau as i64 == want_lo) || (tau as i64 == want_hi);
    Some(WindowPeak {
        tau,
        metric: (peak.metric_sq as f64).sqrt(),
        lo,
        hi,
        edge,
    })
}

fn outside(center: i64, delta_n: usize, max_tau: i64) -> Error {
    Error::domain(format!(
        "refinement window [{}, {}] lies outside the capture [0, {max_tau}]",
        center - delta_n as i64,
        center + delta_n as i64
    ))
}

/// Windowed full-rate refinement around `2 * coarse_tau_h`, using only the
/// already detected sequence. The window is clipped to `[0, n_ssb - 1]`.
pub fn refine(
    r_full: &IqBuffer,
    ref_full: &ReferencePss,
    coarse_tau_h: usize,
    params: &SearchParams,
    cfg: &FrameConfig,
) -> Result<(PssDetection, OpCount)> {
    r_full.require_full_rate(cfg, "refine")?;
    params.validate(cfg)?;
    let symbol_end = cfg.cp_len + cfg.n_fft;
    if r_full.len() < symbol_end {
        return Err(Error::InsufficientSamples {
            what: "refinement",
            expected: symbol_end,
            actual: r_full.len(),
        });
    }
    let max_tau = ((r_full.len() - symbol_end) as i64).min(cfg.n_ssb as i64 - 1);
    let mut ops = OpCount::new(Stage::Refine);
    let center = 2 * coarse_tau_h as i64;
    let w = search_window(r_full, ref_full, center, params.delta_n, max_tau, cfg, &mut ops)
        .ok_or_else(|| outside(center, params.delta_n, max_tau))?;
    Ok((
        PssDetection {
            tau_ssb: w.tau,
            n_id2: ref_full.seq_index,
            peak_metric: w.metric,
            coarse_tau_h: Some(coarse_tau_h),
            window: Some((w.lo as i64, w.hi as i64)),
            window_edge: w.edge,
            peak_ratio: None,
            confirmed: !w.edge,
        },
        ops,
    ))
}

/// Two-step estimate: coarse search on `capture.half`, then refinement on
/// `capture.full` around the coarse offset carried into the capture's
/// period by SSB periodicity.
pub fn two_step_estimate(
    capture: &DualRateCapture,
    refs: &[ReferencePss; 3],
    params: &SearchParams,
    cfg: &FrameConfig,
) -> Result<TwoStepResult> {
    params.validate(cfg)?;
    capture.full.require_full_rate(cfg, "two_step_estimate")?;

    let t0 = Instant::now();
    let (coarse, coarse_ops) = half_search(&capture.half, refs, cfg)?;
    let coarse_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t1 = Instant::now();
    let n_ssb = cfg.n_ssb as i64;
    let symbol_end = cfg.cp_len + cfg.n_fft;
    if capture.full.len() < symbol_end {
        return Err(Error::InsufficientSamples {
            what: "refinement capture",
            expected: symbol_end,
            actual: capture.full.len(),
        });
    }
    let shift = capture.full.start_index_full_rate as i64 - capture.half.start_index_full_rate as i64;
    let center_period = 2 * coarse.tau_h as i64;
    let center_local = (center_period - shift).rem_euclid(n_ssb);
    let max_tau = (capture.full.len() - symbol_end) as i64;
    let mut refine_ops = OpCount::new(Stage::Refine);
    let reference = &refs[coarse.n_id2 as usize];
    let w = search_window(
        &capture.full,
        reference,
        center_local,
        params.delta_n,
        max_tau,
        cfg,
        &mut refine_ops,
    );
    let refine_ms = t1.elapsed().as_secs_f64() * 1e3;

    // Local offsets map back to the period by the same shift as the centre.
    let to_period = center_period - center_local;
    let delta = params.delta_n as i64;
    let (detection, local_tau) = match w {
        Some(w) => {
            let rate = (cfg.n_fft / (cfg.n_fft / 2)) as f64;
            let coarse_sq = coarse.peak_metric * coarse.peak_metric;
            let peak_ratio = if coarse_sq > 0.0 {
                w.metric * w.metric / (rate * coarse_sq)
            } else {
                0.0
            };
            let det = PssDetection {
                tau_ssb: (w.tau as i64 + to_period).rem_euclid(n_ssb) as usize,
                n_id2: coarse.n_id2,
                peak_metric: w.metric,
                coarse_tau_h: Some(coarse.tau_h),
                window: Some((w.lo as i64 + to_period, w.hi as i64 + to_period)),
                window_edge: w.edge,
                peak_ratio: Some(peak_ratio),
                confirmed: !w.edge && peak_ratio >= params.min_peak_ratio,
            };
            (det, w.tau)
        }
        // The coarse peak points past the end of the capture: nothing to
        // refine, so no PSS is reported.
        None => {
            let det = PssDetection {
                tau_ssb: center_period.rem_euclid(n_ssb) as usize,
                n_id2: coarse.n_id2,
                peak_metric: 0.0,
                coarse_tau_h: Some(coarse.tau_h),
                window: Some((center_period - delta, center_period + delta)),
                window_edge: true,
                peak_ratio: Some(0.0),
                confirmed: false,
            };
            (det, center_local.clamp(0, max_tau) as usize)
        }
    };
    Ok(TwoStepResult {
        detection,
        coarse,
        local_tau,
        coarse_ops,
        refine_ops,
        times: StageTimes {
            coarse_ms,
            refine_ms,
        },
    })
}

#[cfg(test)]
mod tests;
