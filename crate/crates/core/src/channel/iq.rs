//! Complex baseband buffers and their on-disk format.
//!
//! Samples are stored as interleaved little-endian `f32` pairs (I, Q). A JSON
//! sidecar named `<file>.json` carries the sampling rate, the time origin and
//! free-form capture metadata.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::waveform::{CellId, FrameConfig};
use crate::{Cf64, Error, Result};

/// Complex samples tagged with their rate and time origin.
#[derive(Debug, Clone, PartialEq)]
pub struct IqBuffer {
    pub samples: Vec<Cf64>,
    pub rate_hz: f64,
    /// Index of `samples[0]` in full-rate sample units.
    pub start_index_full_rate: usize,
}

impl IqBuffer {
    pub fn new(samples: Vec<Cf64>, rate_hz: f64, start_index_full_rate: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain("IQ buffer must not be empty"));
        }
        if !(rate_hz.is_finite() && rate_hz > 0.0) {
            return Err(Error::domain(format!("invalid sample rate {rate_hz}")));
        }
        Ok(IqBuffer {
            samples,
            rate_hz,
            start_index_full_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_full_rate(&self, cfg: &FrameConfig) -> bool {
        (self.rate_hz - cfg.sample_rate_hz).abs() <= 1e-9 * cfg.sample_rate_hz
    }

    pub fn is_half_rate(&self, cfg: &FrameConfig) -> bool {
        (2.0 * self.rate_hz - cfg.sample_rate_hz).abs() <= 1e-9 * cfg.sample_rate_hz
    }

    pub(crate) fn require_full_rate(&self, cfg: &FrameConfig, what: &str) -> Result<()> {
        if self.is_full_rate(cfg) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "{what}: expected full-rate samples at {} Hz, buffer is at {} Hz",
                cfg.sample_rate_hz, self.rate_hz
            )))
        }
    }

    pub(crate) fn require_half_rate(&self, cfg: &FrameConfig, what: &str) -> Result<()> {
        if self.is_half_rate(cfg) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "{what}: expected half-rate samples at {} Hz, buffer is at {} Hz",
                cfg.sample_rate_hz / 2.0,
                self.rate_hz
            )))
        }
    }
}

/// Sidecar metadata written next to every IQ file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqMetadata {
    pub rate_hz: f64,
    pub start_index_full_rate: usize,
    pub description: String,
    pub num_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_id: Option<CellId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload_bits: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<FrameConfig>,
}

impl IqMetadata {
    pub fn for_buffer(buf: &IqBuffer, description: impl Into<String>) -> Self {
        IqMetadata {
            rate_hz: buf.rate_hz,
            start_index_full_rate: buf.start_index_full_rate,
            description: description.into(),
            num_samples: buf.len(),
            seed: None,
            offset: None,
            cell_id: None,
            snr_db: None,
            payload_bits: None,
            frame: None,
        }
    }
}

/// Path of the JSON sidecar belonging to `path`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Writes samples (narrowed to `f32`) and the sidecar.
pub fn write_iq(path: &Path, buf: &IqBuffer, meta: &IqMetadata) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for z in &buf.samples {
        w.write_all(&(z.re as f32).to_le_bytes())
            .and_then(|_| w.write_all(&(z.im as f32).to_le_bytes()))
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let mut meta = meta.clone();
    meta.rate_hz = buf.rate_hz;
    meta.start_index_full_rate = buf.start_index_full_rate;
    meta.num_samples = buf.len();
    let side = sidecar_path(path);
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Json {
        path: side.clone(),
        source: e,
    })?;
    std::fs::write(&side, text + "\n").map_err(|e| Error::io(&side, e))
}

/// Reads an IQ file and its sidecar, checking the declared sample count.
pub fn read_iq(path: &Path) -> Result<(IqBuffer, IqMetadata)> {
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: IqMetadata = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: side.clone(),
        source: e,
    })?;

    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Format {
            path: path.to_owned(),
            reason: format!("length {} bytes is not a whole number of I/Q pairs", bytes.len()),
        });
    }
    let found = bytes.len() / 8;
    if found != meta.num_samples {
        return Err(Error::Format {
            path: path.to_owned(),
            reason: format!(
                "expected {} complex samples (from sidecar), found {found}",
                meta.num_samples
            ),
        });
    }
    let samples = bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Cf64::new(re as f64, im as f64)
        })
        .collect();
    let buf = IqBuffer::new(samples, meta.rate_hz, meta.start_index_full_rate).map_err(|e| {
        Error::Format {
            path: path.to_owned(),
            reason: e.to_string(),
        }
    })?;
    Ok((buf, meta))
}
