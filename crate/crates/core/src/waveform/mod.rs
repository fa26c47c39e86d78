//! SSB synthesis: synchronization sequences, PBCH symbols, resource-grid
//! mapping, OFDM modulation and the PSS reference sequences used by the
//! detectors.

mod grid;
pub(crate) mod ofdm;
pub(crate) mod pbch;
mod sequences;

pub use grid::{map_ssb_grid, SsbGrid};
pub use ofdm::{gen_reference_pss, reference_set, ofdm_modulate, place_ssb_in_frame, ReferencePss};
pub use pbch::{
    crc24c, gen_pbch_symbols, pbch_layout, qpsk_modulate, scrambling_sequence, PbchCell,
    PbchSymbols, PBCH_BLOCK_BITS, PBCH_CRC_BITS, PBCH_PAYLOAD_BITS,
};
pub use sequences::{gen_pss_sequence, gen_sss_sequence, gold_sequence, SEQ_LEN};

use serde::{Deserialize, Serialize};

use crate::channel::IqBuffer;
use crate::{Error, Result};

/// Number of subcarriers spanned by the SSB.
pub const SSB_SUBCARRIERS: usize = 240;
/// Number of OFDM symbols in an SSB.
pub const SSB_SYMBOLS: usize = 4;
/// First SSB subcarrier carrying PSS/SSS.
pub const SS_FIRST_SUBCARRIER: usize = 56;
/// Number of distinct PSS sequences.
pub const NUM_PSS: usize = 3;
/// Number of distinct SSS group identities.
pub const NUM_N_ID1: u16 = 336;

/// Numerology and timing of the simulated carrier.
///
/// Only `scs_hz`, `n_fft`, `cp_len` and `ssb_period_s` are free; the rest is
/// derived and checked on deserialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FrameParams")]
pub struct FrameConfig {
    pub scs_hz: f64,
    pub n_fft: usize,
    pub sample_rate_hz: f64,
    pub cp_len: usize,
    pub ssb_period_s: f64,
    pub n_ssb: usize,
    /// Lowest SSB subcarrier in the DC-centred FFT grid (DC at `n_fft / 2`).
    pub ssb_first_subcarrier: usize,
}

/// User-facing frame parameters. Derived fields may be given, in which case
/// they must agree with the computed ones.
#[derive(Debug, Clone, Deserialize)]
pub struct FrameParams {
    pub scs_hz: f64,
    pub n_fft: usize,
    pub cp_len: usize,
    pub ssb_period_s: f64,
    #[serde(default)]
    pub sample_rate_hz: Option<f64>,
    #[serde(default)]
    pub n_ssb: Option<usize>,
    #[serde(default)]
    pub ssb_first_subcarrier: Option<usize>,
}

impl TryFrom<FrameParams> for FrameConfig {
    type Error = Error;

    fn try_from(p: FrameParams) -> Result<Self> {
        let cfg = FrameConfig::new(p.scs_hz, p.n_fft, p.cp_len, p.ssb_period_s)?;
        if let Some(fs) = p.sample_rate_hz {
            if (fs - cfg.sample_rate_hz).abs() > 1e-6 * cfg.sample_rate_hz {
                return Err(Error::config(
                    "sample_rate_hz",
                    format!("{fs} != n_fft * scs_hz = {}", cfg.sample_rate_hz),
                ));
            }
        }
        if let Some(n) = p.n_ssb {
            if n != cfg.n_ssb {
                return Err(Error::config(
                    "n_ssb",
                    format!("{n} != round(ssb_period_s * sample_rate_hz) = {}", cfg.n_ssb),
                ));
            }
        }
        if let Some(k) = p.ssb_first_subcarrier {
            if k != cfg.ssb_first_subcarrier {
                return Err(Error::config(
                    "ssb_first_subcarrier",
                    format!("{k} != {}", cfg.ssb_first_subcarrier),
                ));
            }
        }
        Ok(cfg)
    }
}

impl FrameConfig {
    pub fn new(scs_hz: f64, n_fft: usize, cp_len: usize, ssb_period_s: f64) -> Result<Self> {
        if !(scs_hz.is_finite() && scs_hz > 0.0) {
            return Err(Error::config("scs_hz", "must be positive and finite"));
        }
        if !n_fft.is_power_of_two() || n_fft < 256 {
            return Err(Error::config(
                "n_fft",
                format!("{n_fft} is not a power of two >= 256"),
            ));
        }
        if cp_len == 0 || cp_len >= n_fft {
            return Err(Error::config("cp_len", format!("{cp_len} not in (0, n_fft)")));
        }
        if !cp_len.is_multiple_of(2) {
            // Half-rate indexing maps full-rate sample 2m to half-rate m.
            return Err(Error::config("cp_len", "must be even"));
        }
        if !(ssb_period_s.is_finite() && ssb_period_s > 0.0) {
            return Err(Error::config("ssb_period_s", "must be positive and finite"));
        }
        let sample_rate_hz = n_fft as f64 * scs_hz;
        let n_ssb = (ssb_period_s * sample_rate_hz).round() as usize;
        let ssb_len = SSB_SYMBOLS * (cp_len + n_fft);
        if n_ssb < 2 * ssb_len || !n_ssb.is_multiple_of(2) {
            return Err(Error::config(
                "ssb_period_s",
                format!("period of {n_ssb} samples must be even and hold two SSBs ({ssb_len} samples each)"),
            ));
        }
        Ok(FrameConfig {
            scs_hz,
            n_fft,
            sample_rate_hz,
            cp_len,
            ssb_period_s,
            n_ssb,
            ssb_first_subcarrier: n_fft / 2 - SSB_SUBCARRIERS / 2,
        })
    }

    /// Samples per OFDM symbol including its cyclic prefix.
    pub fn symbol_len(&self) -> usize {
        self.cp_len + self.n_fft
    }

    /// Full-rate length of one SSB.
    pub fn ssb_len(&self) -> usize {
        SSB_SYMBOLS * self.symbol_len()
    }

    /// Extra full-rate samples needed after one period so that every
    /// candidate offset in the period has a complete PSS symbol.
    pub fn search_tail(&self) -> usize {
        self.cp_len + self.n_fft
    }

    /// FFT bin (natural order) of SSB subcarrier `k` on an `fft_len` grid.
    pub fn fft_bin(&self, k: usize, fft_len: usize) -> usize {
        let rel = k as isize - (SSB_SUBCARRIERS / 2) as isize;
        rel.rem_euclid(fft_len as isize) as usize
    }
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig::new(15_000.0, 512, 36, 0.020).expect("default frame config is valid")
    }
}

/// Full-rate SSB waveform (four OFDM symbols with cyclic prefixes) for a
/// cell and PBCH payload.
pub fn ssb_waveform(cell_id: CellId, payload_bits: &[u8], cfg: &FrameConfig) -> Result<IqBuffer> {
    let pbch = gen_pbch_symbols(cell_id, payload_bits)?;
    let grid = map_ssb_grid(cell_id, &pbch)?;
    Ok(ofdm_modulate(&grid, cfg))
}

/// Physical cell identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "CellIdRepr", into = "CellIdRepr")]
pub struct CellId {
    n_id1: u16,
    n_id2: u8,
}

#[derive(Serialize, Deserialize)]
struct CellIdRepr {
    n_id1: u16,
    n_id2: u8,
    #[serde(default)]
    n_id: Option<u16>,
}

impl TryFrom<CellIdRepr> for CellId {
    type Error = Error;

    fn try_from(r: CellIdRepr) -> Result<Self> {
        let id = CellId::new(r.n_id1, r.n_id2)?;
        match r.n_id {
            Some(n) if n != id.n_id() => Err(Error::domain(format!(
                "n_id {n} inconsistent with (n_id1, n_id2) = ({}, {})",
                r.n_id1, r.n_id2
            ))),
            _ => Ok(id),
        }
    }
}

impl From<CellId> for CellIdRepr {
    fn from(c: CellId) -> Self {
        CellIdRepr {
            n_id1: c.n_id1,
            n_id2: c.n_id2,
            n_id: Some(c.n_id()),
        }
    }
}

impl CellId {
    pub fn new(n_id1: u16, n_id2: u8) -> Result<Self> {
        if n_id1 >= NUM_N_ID1 {
            return Err(Error::domain(format!("n_id1 {n_id1} not in [0, 335]")));
        }
        if n_id2 as usize >= NUM_PSS {
            return Err(Error::domain(format!("n_id2 {n_id2} not in [0, 2]")));
        }
        Ok(CellId { n_id1, n_id2 })
    }

    pub fn from_n_id(n_id: u16) -> Result<Self> {
        if n_id > 1007 {
            return Err(Error::domain(format!("cell id {n_id} not in [0, 1007]")));
        }
        CellId::new(n_id / 3, (n_id % 3) as u8)
    }

    pub fn n_id1(&self) -> u16 {
        self.n_id1
    }

    pub fn n_id2(&self) -> u8 {
        self.n_id2
    }

    pub fn n_id(&self) -> u16 {
        3 * self.n_id1 + self.n_id2 as u16
    }
}

impl std::fmt::Display for CellId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (n_id1={}, n_id2={})", self.n_id(), self.n_id1, self.n_id2)
    }
}
