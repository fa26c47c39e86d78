//! Post-synchronization: SSB symbol extraction at a timing estimate,
//! fractional CFO correction, SSS detection and the PBCH check decoder.

use std::f64::consts::TAU;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::channel::IqBuffer;
use crate::waveform::{
    gen_pss_sequence, gen_sss_sequence, ofdm::ofdm_scale, pbch_layout, pbch::dmrs_sequence,
    scrambling_sequence, CellId, FrameConfig, NUM_N_ID1, PBCH_BLOCK_BITS, PBCH_PAYLOAD_BITS,
    SEQ_LEN, SSB_SUBCARRIERS, SSB_SYMBOLS, SS_FIRST_SUBCARRIER,
};
use crate::{Cf64, Error, Result};

/// SNR estimates are clamped to this floor.
pub const SNR_FLOOR_DB: f64 = -60.0;

/// Frequency-domain view of one SSB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsbObservation {
    #[serde(with = "grid_serde")]
    pub symbols: [[Cf64; SSB_SUBCARRIERS]; SSB_SYMBOLS],
    pub cfo_estimate_hz: f64,
    pub snr_estimate_db: f64,
}

mod grid_serde {
    use super::*;
    use serde::{de::Error as _, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        g: &[[Cf64; SSB_SUBCARRIERS]; SSB_SYMBOLS],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[Cf64]> = g.iter().map(|r| &r[..]).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<[[Cf64; SSB_SUBCARRIERS]; SSB_SYMBOLS], D::Error> {
        let rows: Vec<Vec<Cf64>> = Vec::deserialize(d)?;
        if rows.len() != SSB_SYMBOLS || rows.iter().any(|r| r.len() != SSB_SUBCARRIERS) {
            return Err(D::Error::custom("observation must be 4 x 240"));
        }
        let mut g = [[Cf64::new(0.0, 0.0); SSB_SUBCARRIERS]; SSB_SYMBOLS];
        for (dst, src) in g.iter_mut().zip(rows) {
            dst.copy_from_slice(&src);
        }
        Ok(g)
    }
}

/// PBCH decoder verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PbchDecode {
    pub payload_bits: Vec<u8>,
    pub crc_ok: bool,
}

fn require_ssb(r: &IqBuffer, tau: usize, cfg: &FrameConfig) -> Result<()> {
    r.require_full_rate(cfg, "postsync")?;
    let end = tau.checked_add(cfg.ssb_len());
    if end.is_none_or(|e| e > r.len()) {
        return Err(Error::domain(format!(
            "SSB at offset {tau} needs {} samples, buffer has {}",
            cfg.ssb_len(),
            r.len()
        )));
    }
    Ok(())
}

/// Fractional CFO from the phase between each cyclic prefix and the symbol
/// tail it copies, accumulated over the four SSB symbols. Unambiguous for
/// `|cfo| < scs / 2`; larger offsets alias.
pub fn estimate_cfo(r_full: &IqBuffer, tau_ssb: usize, cfg: &FrameConfig) -> Result<f64> {
    require_ssb(r_full, tau_ssb, cfg)?;
    let n = cfg.n_fft;
    let mut acc = Cf64::new(0.0, 0.0);
    for l in 0..SSB_SYMBOLS {
        let start = tau_ssb + l * cfg.symbol_len();
        for k in 0..cfg.cp_len {
            acc += r_full.samples[start + k].conj() * r_full.samples[start + k + n];
        }
    }
    Ok(acc.arg() * cfg.scs_hz / TAU)
}

/// Derotates by `cfo_hz` (phase referenced to `tau_ssb`), strips the cyclic
/// prefixes and returns the 240 SSB subcarriers of each symbol, scaled so a
/// clean loopback reproduces the transmitted grid.
pub fn extract_ssb_symbols(
    r_full: &IqBuffer,
    tau_ssb: usize,
    cfo_hz: f64,
    cfg: &FrameConfig,
) -> Result<SsbObservation> {
    require_ssb(r_full, tau_ssb, cfg)?;
    let n = cfg.n_fft;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let gain = 1.0 / (ofdm_scale() * n as f64);
    let w = -TAU * cfo_hz / cfg.sample_rate_hz;
    let mut symbols = [[Cf64::new(0.0, 0.0); SSB_SUBCARRIERS]; SSB_SYMBOLS];
    let mut buf = vec![Cf64::new(0.0, 0.0); n];
    for (l, out) in symbols.iter_mut().enumerate() {
        let body = l * cfg.symbol_len() + cfg.cp_len;
        for (j, b) in buf.iter_mut().enumerate() {
            let rel = body + j;
            *b = r_full.samples[tau_ssb + rel] * Cf64::from_polar(1.0, w * rel as f64);
        }
        fft.process(&mut buf);
        for (k, o) in out.iter_mut().enumerate() {
            *o = buf[cfg.fft_bin(k, n)] * gain;
        }
    }
    let snr_estimate_db = pss_snr_db(&symbols[0]);
    Ok(SsbObservation {
        symbols,
        cfo_estimate_hz: cfo_hz,
        snr_estimate_db,
    })
}

/// SNR on the PSS subcarriers, with noise taken from differences of
/// neighbouring channel estimates. Without knowing `n_id2`, the three
/// sequences are tried and the smoothest channel wins.
fn pss_snr_db(pss_symbol: &[Cf64; SSB_SUBCARRIERS]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..3u8 {
        let d = gen_pss_sequence(i).expect("valid n_id2");
        let h: Vec<Cf64> = (0..SEQ_LEN)
            .map(|m| pss_symbol[SS_FIRST_SUBCARRIER + m] * d[m])
            .collect();
        let total = h.iter().map(|z| z.norm_sqr()).sum::<f64>() / SEQ_LEN as f64;
        let noise = h.windows(2).map(|p| (p[1] - p[0]).norm_sqr()).sum::<f64>()
            / (2.0 * (SEQ_LEN - 1) as f64);
        let snr = if noise > 0.0 {
            10.0 * ((total - noise).max(0.0) / noise).log10()
        } else if total > 0.0 {
            f64::INFINITY
        } else {
            SNR_FLOOR_DB
        };
        best = best.max(snr);
    }
    best.clamp(SNR_FLOOR_DB, -SNR_FLOOR_DB)
}

/// Coherent SSS detection: the PSS symbol gives a per-subcarrier channel
/// estimate that equalizes the SSS candidates. Returns `(n_id1, |metric|)`,
/// ties resolved to the smaller `n_id1`.
pub fn detect_sss(obs: &SsbObservation, n_id2: u8) -> Result<(u16, f64)> {
    let pss = gen_pss_sequence(n_id2)?;
    // y_sss * conj(h), with h = y_pss * d_pss since d_pss = +-1.
    let z: Vec<Cf64> = (0..SEQ_LEN)
        .map(|m| {
            let k = SS_FIRST_SUBCARRIER + m;
            obs.symbols[2][k] * (obs.symbols[0][k] * pss[m]).conj()
        })
        .collect();
    let mut best = (0u16, f64::NEG_INFINITY);
    for n_id1 in 0..NUM_N_ID1 {
        let d = gen_sss_sequence(n_id1, n_id2)?;
        let metric = z.iter().zip(&d).map(|(a, &b)| a * b).sum::<Cf64>().norm();
        if metric > best.1 {
            best = (n_id1, metric);
        }
    }
    Ok(best)
}

/// Linear interpolation of pilot estimates onto every subcarrier, flat
/// beyond the outermost pilots.
fn interpolate(pilots: &[(usize, Cf64)]) -> [Cf64; SSB_SUBCARRIERS] {
    let mut h = [Cf64::new(0.0, 0.0); SSB_SUBCARRIERS];
    if pilots.is_empty() {
        return h;
    }
    let mut j = 0;
    for (k, v) in h.iter_mut().enumerate() {
        while j + 1 < pilots.len() && pilots[j + 1].0 <= k {
            j += 1;
        }
        let (k0, h0) = pilots[j];
        *v = if k <= k0 || j + 1 == pilots.len() {
            h0
        } else {
            let (k1, h1) = pilots[j + 1];
            let a = (k - k0) as f64 / (k1 - k0) as f64;
            h0 * (1.0 - a) + h1 * a
        };
    }
    h
}

/// PBCH check decoder: DMRS least-squares channel estimates interpolated
/// across subcarriers, zero-forcing, hard QPSK decisions, descrambling, a
/// majority vote over the repeated block, then the CRC.
pub fn decode_pbch(obs: &SsbObservation, cell_id: CellId) -> PbchDecode {
    let layout = pbch_layout(cell_id);
    let n_dmrs = layout.iter().filter(|c| c.dmrs).count();
    let n_data = layout.len() - n_dmrs;
    let dmrs = dmrs_sequence(cell_id, n_dmrs);

    let mut pilots: [Vec<(usize, Cf64)>; SSB_SYMBOLS] = Default::default();
    for (cell, d) in layout.iter().filter(|c| c.dmrs).zip(&dmrs) {
        let y = obs.symbols[cell.symbol][cell.subcarrier];
        pilots[cell.symbol].push((cell.subcarrier, y * d.conj() / d.norm_sqr()));
    }
    let h: Vec<[Cf64; SSB_SUBCARRIERS]> = pilots.iter().map(|p| interpolate(p)).collect();

    let scramble = scrambling_sequence(cell_id, 2 * n_data);
    let mut votes = [0i32; PBCH_BLOCK_BITS];
    let mut soft = [0.0f64; PBCH_BLOCK_BITS];
    for (j, cell) in layout.iter().filter(|c| !c.dmrs).enumerate() {
        let hk = h[cell.symbol][cell.subcarrier];
        let y = obs.symbols[cell.symbol][cell.subcarrier];
        let x = if hk.norm_sqr() > 0.0 {
            y / hk
        } else {
            Cf64::new(0.0, 0.0)
        };
        for (b, v) in [(2 * j, x.re), (2 * j + 1, x.im)] {
            let hard = u8::from(v < 0.0) ^ scramble[b];
            let slot = b % PBCH_BLOCK_BITS;
            let sign = if scramble[b] == 1 { -1.0 } else { 1.0 };
            // Positive favours bit 0.
            votes[slot] += if hard == 0 { 1 } else { -1 };
            soft[slot] += sign * v;
        }
    }
    let block: Vec<u8> = votes
        .iter()
        .zip(&soft)
        .map(|(&v, &s)| u8::from(v < 0 || (v == 0 && s < 0.0)))
        .collect();
    let (payload, crc) = block.split_at(PBCH_PAYLOAD_BITS);
    let crc_ok = crate::waveform::crc24c(payload)[..] == crc[..];
    PbchDecode {
        payload_bits: payload.to_vec(),
        crc_ok,
    }
}
