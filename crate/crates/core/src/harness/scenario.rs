use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Pipeline;
use crate::channel::{max_doppler_hz, tdl_b, ChannelSpec};
use crate::detector::SearchParams;
use crate::waveform::FrameConfig;
use crate::{Error, Result};

pub const BUILTIN_SCENARIOS: [&str; 3] = ["awgn", "tdlb30", "drift-stress"];

/// A Monte Carlo experiment: sweep points times `n_trials` trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub cfg: FrameConfig,
    /// Template; `snr_db`, `timing_offset`, `drift_samples_per_period` and
    /// `seed` are replaced per trial.
    #[serde(default)]
    pub channel: ChannelSpec,
    /// `null` entries run without noise.
    pub snr_grid_db: Vec<Option<f64>>,
    /// Inter-period drift values; empty means the template's drift only.
    #[serde(default)]
    pub drift_grid: Vec<f64>,
    pub n_trials: usize,
    pub pipelines: Vec<Pipeline>,
    pub params: SearchParams,
    pub seed: u64,
    #[serde(default)]
    pub discard_gap: usize,
}

/// One (SNR, drift) combination of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub snr_db: Option<f64>,
    pub drift_samples: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::config("name", "must not be empty"));
        }
        if self.n_trials == 0 {
            return Err(Error::config("n_trials", "must be at least 1"));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::config("snr_grid_db", "must not be empty"));
        }
        if self.snr_grid_db.iter().flatten().any(|s| !s.is_finite()) {
            return Err(Error::config("snr_grid_db", "values must be finite"));
        }
        if self.drift_grid.iter().any(|d| !d.is_finite()) {
            return Err(Error::config("drift_grid", "values must be finite"));
        }
        if self.pipelines.is_empty() {
            return Err(Error::config("pipelines", "must not be empty"));
        }
        for (i, p) in self.pipelines.iter().enumerate() {
            if self.pipelines[..i].contains(p) {
                return Err(Error::config("pipelines", format!("{p} listed twice")));
            }
        }
        self.params.validate(&self.cfg)?;
        let tail = self.cfg.ssb_len();
        if self.discard_gap + tail > self.cfg.n_ssb {
            return Err(Error::config(
                "discard_gap",
                format!("{} leaves less than one SSB of the second period", self.discard_gap),
            ));
        }
        for point in self.sweep() {
            let spec = ChannelSpec {
                snr_db: point.snr_db,
                drift_samples_per_period: point.drift_samples,
                ..self.channel.clone()
            };
            spec.validate(&self.cfg)?;
        }
        Ok(())
    }

    /// Sweep points, SNR-major.
    pub fn sweep(&self) -> Vec<SweepPoint> {
        let drifts = if self.drift_grid.is_empty() {
            vec![self.channel.drift_samples_per_period]
        } else {
            self.drift_grid.clone()
        };
        self.snr_grid_db
            .iter()
            .flat_map(|&snr_db| {
                drifts.iter().map(move |&drift_samples| SweepPoint {
                    snr_db,
                    drift_samples,
                })
            })
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let s: Scenario = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        s.validate()?;
        Ok(s)
    }

    /// Shipped scenarios by name.
    pub fn builtin(name: &str) -> Option<Self> {
        let cfg = FrameConfig::default();
        let params = SearchParams::default_for(&cfg);
        let sweep: Vec<Option<f64>> = (0..=6).map(|i| Some(-12.0 + 2.0 * i as f64)).collect();
        let base = Scenario {
            name: name.to_string(),
            cfg,
            channel: ChannelSpec::default(),
            snr_grid_db: sweep,
            drift_grid: Vec::new(),
            n_trials: 1000,
            pipelines: vec![Pipeline::Baseline, Pipeline::Proposed, Pipeline::Halfrate],
            params,
            seed: 0,
            discard_gap: 0,
        };
        match name {
            "awgn" => Some(Scenario { seed: 1, ..base }),
            "tdlb30" => Some(Scenario {
                seed: 2,
                channel: ChannelSpec {
                    taps: tdl_b(100e-9),
                    doppler_hz: max_doppler_hz(30.0, 3.5e9),
                    ..ChannelSpec::default()
                },
                ..base
            }),
            "drift-stress" => {
                let d = params.delta_n as f64;
                Some(Scenario {
                    seed: 3,
                    snr_grid_db: vec![Some(0.0)],
                    drift_grid: vec![0.0, d / 2.0, d - 8.0, d, d + 8.0, d + 32.0],
                    n_trials: 200,
                    ..base
                })
            }
            _ => None,
        }
    }
}
