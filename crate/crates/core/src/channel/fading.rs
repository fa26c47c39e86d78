//! Sum-of-sinusoids Rayleigh fading and the TDL-B delay profile.
//!
//! Each tap is `g(t) = sqrt(P / M) * sum_m exp(j (2 pi f_d cos(a_m) t + phi_m))`
//! with `M = 16` oscillators whose arrival angles `a_m = (2 pi m + theta) / M`
//! share one random rotation `theta` and whose phases `phi_m` are uniform.
//! With distinct Doppler frequencies the time-averaged power of a tap is `P`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::Cf64;

pub const OSCILLATORS: usize = 16;

/// One entry of a power-delay profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub delay_s: f64,
    pub avg_power_db: f64,
}

/// Time-varying gain of one tap.
#[derive(Debug, Clone)]
pub struct SosFader {
    doppler: Vec<f64>,
    phase: Vec<f64>,
    amplitude: f64,
}

impl SosFader {
    /// A static tap (`doppler_hz == 0`) has the constant real gain `sqrt(P)`.
    pub fn new<R: Rng>(doppler_hz: f64, power_lin: f64, rng: &mut R) -> Self {
        if doppler_hz == 0.0 {
            return SosFader {
                doppler: vec![0.0],
                phase: vec![0.0],
                amplitude: power_lin.sqrt(),
            };
        }
        // Rotation kept away from 0 and pi so no two oscillators alias to
        // the same Doppler frequency.
        let theta = rng.random_range(0.25 * PI..0.75 * PI);
        let doppler = (0..OSCILLATORS)
            .map(|m| doppler_hz * ((2.0 * PI * m as f64 + theta) / OSCILLATORS as f64).cos())
            .collect();
        let phase = (0..OSCILLATORS)
            .map(|_| rng.random_range(0.0..2.0 * PI))
            .collect();
        SosFader {
            doppler,
            phase,
            amplitude: (power_lin / OSCILLATORS as f64).sqrt(),
        }
    }

    pub fn is_static(&self) -> bool {
        self.doppler.len() == 1 && self.doppler[0] == 0.0
    }

    pub fn gain(&self, t: f64) -> Cf64 {
        let sum: Cf64 = self
            .doppler
            .iter()
            .zip(&self.phase)
            .map(|(&f, &phi)| Cf64::from_polar(1.0, 2.0 * PI * f * t + phi))
            .sum();
        sum * self.amplitude
    }
}

/// Normalized TDL-B profile (TR 38.901 Table 7.7.2-2): delays in units of
/// the RMS delay spread, powers in dB.
const TDL_B: [(f64, f64); 23] = [
    (0.0000, 0.0),
    (0.1072, -2.2),
    (0.2155, -4.0),
    (0.2095, -3.2),
    (0.2870, -9.8),
    (0.2986, -1.2),
    (0.3752, -3.4),
    (0.5055, -5.2),
    (0.3681, -7.6),
    (0.3697, -3.0),
    (0.5700, -8.9),
    (0.5283, -9.0),
    (1.1021, -4.8),
    (1.2756, -5.7),
    (1.5474, -7.5),
    (1.7842, -1.9),
    (2.0169, -7.6),
    (2.8294, -12.2),
    (3.0219, -9.8),
    (3.6187, -11.4),
    (4.1067, -14.9),
    (4.2790, -9.2),
    (4.7834, -11.3),
];

/// TDL-B taps scaled to `delay_spread_s`, with powers normalized to unit
/// total power.
pub fn tdl_b(delay_spread_s: f64) -> Vec<Tap> {
    let total: f64 = TDL_B.iter().map(|&(_, p)| 10f64.powf(p / 10.0)).sum();
    let offset_db = 10.0 * total.log10();
    TDL_B
        .iter()
        .map(|&(d, p)| Tap {
            delay_s: d * delay_spread_s,
            avg_power_db: p - offset_db,
        })
        .collect()
}

/// Maximum Doppler shift for a terminal speed and carrier frequency.
pub fn max_doppler_hz(speed_kmh: f64, carrier_hz: f64) -> f64 {
    speed_kmh / 3.6 * carrier_hz / 299_792_458.0
}
