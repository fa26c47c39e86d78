//! JSON configuration file merged with command-line overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use ssb_sync::channel::ChannelSpec;
use ssb_sync::detector::SearchParams;
use ssb_sync::harness::Scenario;
use ssb_sync::waveform::{CellId, FrameConfig, PBCH_PAYLOAD_BITS};
use ssb_sync::{Error, Result};

/// Everything a command may need. Every field is optional in the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub frame: FrameConfig,
    /// Defaults to `delta_n = 2 * cp_len`.
    pub search: Option<SearchParams>,
    pub channel: ChannelSpec,
    pub scenario: Option<Scenario>,
    /// Physical cell ID (0..1008) for `generate`; drawn from the seed if absent.
    pub cell_id: Option<u16>,
    /// 32 characters of `0`/`1`; drawn from the seed if absent.
    pub payload_bits: Option<String>,
    pub seed: u64,
    pub discard_gap: usize,
    pub workers: Option<usize>,
}

/// Flag values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub offset: Option<usize>,
    pub cellid: Option<u16>,
    pub snr: Option<f64>,
    pub delta_n: Option<usize>,
    pub workers: Option<usize>,
}

impl CliConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(CliConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        // A malformed file is a configuration problem, not an I/O one.
        serde_json::from_str(&text).map_err(|e| Error::Config {
            field: "config",
            reason: format!("{}: {e}", path.display()),
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.offset {
            self.channel.timing_offset = t;
        }
        if let Some(c) = o.cellid {
            self.cell_id = Some(c);
        }
        if let Some(s) = o.snr {
            self.channel.snr_db = Some(s);
        }
        if let Some(d) = o.delta_n {
            let mut p = self.params();
            p.delta_n = d;
            self.search = Some(p);
        }
        if let Some(w) = o.workers {
            self.workers = Some(w);
        }
    }

    pub fn params(&self) -> SearchParams {
        self.search.unwrap_or_else(|| SearchParams::default_for(&self.frame))
    }

    pub fn validate(&self) -> Result<()> {
        self.params().validate(&self.frame)?;
        self.channel.validate(&self.frame)?;
        if let Some(c) = self.cell_id {
            CellId::from_n_id(c).map_err(|e| Error::Config {
                field: "cell_id",
                reason: e.to_string(),
            })?;
        }
        if let Some(bits) = &self.payload_bits {
            parse_bits(bits)?;
        }
        if self.workers == Some(0) {
            return Err(Error::Config {
                field: "workers",
                reason: "must be at least 1".into(),
            });
        }
        if self.discard_gap + self.frame.ssb_len() > self.frame.n_ssb {
            return Err(Error::Config {
                field: "discard_gap",
                reason: format!("{} leaves less than one SSB of the second period", self.discard_gap),
            });
        }
        Ok(())
    }
}

pub fn parse_bits(s: &str) -> Result<Vec<u8>> {
    let bits: Option<Vec<u8>> = s
        .chars()
        .map(|c| match c {
            '0' => Some(0),
            '1' => Some(1),
            _ => None,
        })
        .collect();
    match bits {
        Some(b) if b.len() == PBCH_PAYLOAD_BITS => Ok(b),
        _ => Err(Error::Config {
            field: "payload_bits",
            reason: format!("expected {PBCH_PAYLOAD_BITS} characters of 0/1, got `{s}`"),
        }),
    }
}

pub fn format_bits(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
}
