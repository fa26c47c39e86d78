//! Dual-rate front end: a half-band decimator for the half-rate capture of
//! the first SSB period, then full-rate samples of the second period after
//! the rate switch.

use super::IqBuffer;
use crate::waveform::FrameConfig;
use crate::{Cf64, Error, Result};

pub const HALFBAND_TAPS: usize = 63;
const HALFBAND_CENTER: usize = HALFBAND_TAPS / 2;
const KAISER_BETA: f64 = 5.9;

/// Half-rate capture of period one and full-rate capture of period two.
#[derive(Debug, Clone, PartialEq)]
pub struct DualRateCapture {
    pub half: IqBuffer,
    pub full: IqBuffer,
    /// Full-rate samples dropped at the head of the second period.
    pub discard_gap: usize,
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..64 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Kaiser-windowed half-band low-pass (cutoff a quarter of the input rate),
/// unit DC gain. Passband flat to 0.01 dB up to 0.44 of the output Nyquist
/// band; at least 60 dB rejection above 0.57 of it.
pub fn halfband_taps() -> [f64; HALFBAND_TAPS] {
    let m = HALFBAND_CENTER as f64;
    let i0b = bessel_i0(KAISER_BETA);
    let mut h: [f64; HALFBAND_TAPS] = std::array::from_fn(|j| {
        let n = j as f64 - m;
        let sinc = if j == HALFBAND_CENTER {
            0.5
        } else if j.abs_diff(HALFBAND_CENTER) % 2 == 0 {
            0.0
        } else {
            (std::f64::consts::PI * n / 2.0).sin() / (std::f64::consts::PI * n)
        };
        let w = bessel_i0(KAISER_BETA * (1.0 - (n / m).powi(2)).max(0.0).sqrt()) / i0b;
        sinc * w
    });
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

/// Filters and keeps every other sample. Output `m` is aligned with input
/// `2m` (the filter's group delay is compensated); samples outside the input
/// count as zero.
pub fn decimate_by_2(x: &[Cf64]) -> Vec<Cf64> {
    let h = halfband_taps();
    // Symmetric odd-offset taps; even offsets other than the centre are zero.
    let pairs: Vec<(usize, f64)> = (1..=HALFBAND_CENTER)
        .step_by(2)
        .map(|d| (d, h[HALFBAND_CENTER + d]))
        .collect();
    let centre = h[HALFBAND_CENTER];
    let n = x.len();
    let at = |i: isize| {
        if (0..n as isize).contains(&i) {
            x[i as usize]
        } else {
            Cf64::new(0.0, 0.0)
        }
    };
    (0..n / 2)
        .map(|m| {
            let c = 2 * m;
            let mut acc = x[c] * centre;
            if c >= HALFBAND_CENTER && c + HALFBAND_CENTER < n {
                for &(d, v) in &pairs {
                    acc += (x[c - d] + x[c + d]) * v;
                }
            } else {
                for &(d, v) in &pairs {
                    acc += (at(c as isize - d as isize) + at((c + d) as isize)) * v;
                }
            }
            acc
        })
        .collect()
}

/// Splits a two-period full-rate capture into the half-rate first period
/// (plus the tail needed by the last candidate offsets) and the full-rate
/// second period minus `discard_gap` leading samples.
pub fn dual_rate_frontend(
    rx_full: &IqBuffer,
    cfg: &FrameConfig,
    discard_gap: usize,
) -> Result<DualRateCapture> {
    rx_full.require_full_rate(cfg, "dual_rate_frontend")?;
    let n_ssb = cfg.n_ssb;
    if rx_full.len() < 2 * n_ssb {
        return Err(Error::InsufficientSamples {
            what: "dual-rate capture (two SSB periods)",
            expected: 2 * n_ssb,
            actual: rx_full.len(),
        });
    }
    if discard_gap >= n_ssb {
        return Err(Error::domain(format!(
            "discard gap {discard_gap} is not shorter than the SSB period {n_ssb}"
        )));
    }
    let half_input = &rx_full.samples[..n_ssb + cfg.search_tail()];
    let half = IqBuffer {
        samples: decimate_by_2(half_input),
        rate_hz: rx_full.rate_hz / 2.0,
        start_index_full_rate: rx_full.start_index_full_rate,
    };
    let full = IqBuffer {
        samples: rx_full.samples[n_ssb + discard_gap..2 * n_ssb].to_vec(),
        rate_hz: rx_full.rate_hz,
        start_index_full_rate: rx_full.start_index_full_rate + n_ssb + discard_gap,
    };
    Ok(DualRateCapture {
        half,
        full,
        discard_gap,
    })
}
