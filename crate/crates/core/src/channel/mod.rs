//! Seeded impairments (delay, clock drift, TDL fading, CFO, AWGN), the
//! dual-rate front end and IQ file I/O.

mod fading;
mod frontend;
mod iq;
pub mod rng;

pub use fading::{max_doppler_hz, tdl_b, SosFader, Tap, OSCILLATORS};
pub use frontend::{decimate_by_2, dual_rate_frontend, halfband_taps, DualRateCapture, HALFBAND_TAPS};
pub use iq::{read_iq, sidecar_path, write_iq, IqBuffer, IqMetadata};

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::waveform::{FrameConfig, SSB_SUBCARRIERS};
use crate::{Cf64, Error, Result};

/// SNR reference: average signal power of a unit-power SSB resource element
/// against noise in the SSB band (240 subcarriers), not the full sampling
/// bandwidth.
pub const SNR_CONVENTION: &str = "per-resource-element SNR over the 240-subcarrier SSB band";

/// Gain-interpolation step (full-rate samples) for the fading taps.
const FADING_STEP: usize = 64;

/// Impairments applied to a transmitted capture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelSpec {
    /// `None` disables noise.
    pub snr_db: Option<f64>,
    pub cfo_hz: f64,
    /// True SSB timing offset in full-rate samples.
    pub timing_offset: usize,
    pub taps: Vec<Tap>,
    pub doppler_hz: f64,
    /// Extra delay of the second SSB period, in full-rate samples.
    pub drift_samples_per_period: f64,
    pub seed: u64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        ChannelSpec {
            snr_db: None,
            cfo_hz: 0.0,
            timing_offset: 0,
            taps: vec![Tap {
                delay_s: 0.0,
                avg_power_db: 0.0,
            }],
            doppler_hz: 0.0,
            drift_samples_per_period: 0.0,
            seed: 0,
        }
    }
}

impl ChannelSpec {
    pub fn validate(&self, cfg: &FrameConfig) -> Result<()> {
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(Error::config("snr_db", "must be finite (omit to disable noise)"));
            }
        }
        if !self.cfo_hz.is_finite() {
            return Err(Error::config("cfo_hz", "must be finite"));
        }
        if self.timing_offset >= cfg.n_ssb {
            return Err(Error::config(
                "timing_offset",
                format!("{} not in [0, {})", self.timing_offset, cfg.n_ssb),
            ));
        }
        if self.taps.is_empty() {
            return Err(Error::config("taps", "at least one tap is required"));
        }
        for t in &self.taps {
            if !(t.delay_s.is_finite() && t.delay_s >= 0.0) {
                return Err(Error::config("taps", format!("invalid delay {}", t.delay_s)));
            }
            if !t.avg_power_db.is_finite() {
                return Err(Error::config("taps", format!("invalid power {}", t.avg_power_db)));
            }
        }
        if !(self.doppler_hz.is_finite() && self.doppler_hz >= 0.0) {
            return Err(Error::config("doppler_hz", "must be finite and non-negative"));
        }
        if !self.drift_samples_per_period.is_finite() {
            return Err(Error::config("drift_samples_per_period", "must be finite"));
        }
        Ok(())
    }

    /// Complex noise variance per full-rate sample.
    pub fn noise_variance(&self, cfg: &FrameConfig) -> Option<f64> {
        self.snr_db.map(|snr| {
            cfg.n_fft as f64 / (SSB_SUBCARRIERS as f64 * 10f64.powf(snr / 10.0))
        })
    }
}

/// Four-point Lagrange interpolation of `x` at fractional index `p`.
fn lagrange_at(x: &[Cf64], p: f64) -> Cf64 {
    let i = p.floor();
    let mu = p - i;
    let i = i as isize;
    let at = |k: isize| {
        let j = i + k;
        if j >= 0 && (j as usize) < x.len() {
            x[j as usize]
        } else {
            Cf64::new(0.0, 0.0)
        }
    };
    if mu == 0.0 {
        return at(0);
    }
    // Nodes at -1, 0, 1, 2.
    let w_m1 = -mu * (mu - 1.0) * (mu - 2.0) / 6.0;
    let w_0 = (mu + 1.0) * (mu - 1.0) * (mu - 2.0) / 2.0;
    let w_1 = -(mu + 1.0) * mu * (mu - 2.0) / 2.0;
    let w_2 = (mu + 1.0) * mu * (mu - 1.0) / 6.0;
    at(-1) * w_m1 + at(0) * w_0 + at(1) * w_1 + at(2) * w_2
}

/// Delays `tx` by the timing offset, with the second SSB period further
/// delayed by the drift.
fn delay_with_drift(tx: &[Cf64], spec: &ChannelSpec, cfg: &FrameConfig) -> Vec<Cf64> {
    let n = tx.len();
    let offset = spec.timing_offset;
    let mut out = vec![Cf64::new(0.0, 0.0); n];
    let split = cfg.n_ssb.min(n);
    if offset < split {
        out[offset..split].copy_from_slice(&tx[..split - offset]);
    }
    let drift = spec.drift_samples_per_period;
    if split < n {
        if drift.fract() == 0.0 {
            let d = offset as isize + drift as isize;
            for (i, o) in out.iter_mut().enumerate().skip(split) {
                let j = i as isize - d;
                if j >= 0 && (j as usize) < n {
                    *o = tx[j as usize];
                }
            }
        } else {
            let d = offset as f64 + drift;
            for (i, o) in out.iter_mut().enumerate().skip(split) {
                *o = lagrange_at(tx, i as f64 - d);
            }
        }
    }
    out
}

/// Applies the impairments in `spec` to a full-rate transmit capture.
pub fn apply_channel(tx: &IqBuffer, spec: &ChannelSpec, cfg: &FrameConfig) -> Result<IqBuffer> {
    tx.require_full_rate(cfg, "apply_channel")?;
    spec.validate(cfg)?;
    let fs = cfg.sample_rate_hz;
    let delayed = delay_with_drift(&tx.samples, spec, cfg);
    let n = delayed.len();

    let mut fade_rng = rng::stream_rng(spec.seed, rng::STREAM_FADING);
    let taps: Vec<(usize, SosFader)> = spec
        .taps
        .iter()
        .map(|t| {
            let delay = (t.delay_s * fs).round() as usize;
            let fader = SosFader::new(spec.doppler_hz, 10f64.powf(t.avg_power_db / 10.0), &mut fade_rng);
            (delay, fader)
        })
        .collect();

    let mut out = vec![Cf64::new(0.0, 0.0); n];
    let t0 = tx.start_index_full_rate as f64 / fs;
    for (delay, fader) in &taps {
        if *delay >= n {
            continue;
        }
        if fader.is_static() {
            let g = fader.gain(0.0);
            for i in *delay..n {
                out[i] += delayed[i - delay] * g;
            }
            continue;
        }
        // Gains on a coarse grid, linearly interpolated in between.
        let grid: Vec<Cf64> = (0..=n.div_ceil(FADING_STEP))
            .map(|b| fader.gain(t0 + (b * FADING_STEP) as f64 / fs))
            .collect();
        for i in *delay..n {
            let x = delayed[i - delay];
            if x == Cf64::new(0.0, 0.0) {
                continue;
            }
            let b = i / FADING_STEP;
            let frac = (i % FADING_STEP) as f64 / FADING_STEP as f64;
            let g = grid[b] * (1.0 - frac) + grid[b + 1] * frac;
            out[i] += x * g;
        }
    }

    if spec.cfo_hz != 0.0 {
        let w = 2.0 * PI * spec.cfo_hz / fs;
        let base = tx.start_index_full_rate as f64;
        for (i, z) in out.iter_mut().enumerate() {
            *z *= Cf64::from_polar(1.0, w * (base + i as f64));
        }
    }

    if let Some(var) = spec.noise_variance(cfg) {
        let sigma = (var / 2.0).sqrt();
        let mut rng = rng::stream_rng(spec.seed, rng::STREAM_NOISE);
        for z in out.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *z += Cf64::new(re * sigma, im * sigma);
        }
    }

    Ok(IqBuffer {
        samples: out,
        rate_hz: tx.rate_hz,
        start_index_full_rate: tx.start_index_full_rate,
    })
}
