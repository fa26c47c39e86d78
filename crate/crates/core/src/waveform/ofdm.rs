use rustfft::FftPlanner;

use super::{gen_pss_sequence, FrameConfig, SsbGrid, SEQ_LEN, SSB_SUBCARRIERS, SSB_SYMBOLS, SS_FIRST_SUBCARRIER};
use crate::channel::IqBuffer;
use crate::{Cf64, Error, Result};

/// Time-domain PSS references at full and half rate, without cyclic prefix
/// and with unit energy.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePss {
    pub seq_index: u8,
    pub full_rate: Vec<Cf64>,
    pub half_rate: Vec<Cf64>,
}

/// Amplitude scale applied after the inverse DFT: a fully occupied
/// unit-power SSB symbol then has unit mean power per sample.
pub(crate) fn ofdm_scale() -> f64 {
    1.0 / (SSB_SUBCARRIERS as f64).sqrt()
}

/// OFDM-modulates the four SSB symbols, prepending a cyclic prefix to each.
pub fn ofdm_modulate(grid: &SsbGrid, cfg: &FrameConfig) -> IqBuffer {
    let n = cfg.n_fft;
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let scale = ofdm_scale();
    let mut out = Vec::with_capacity(cfg.ssb_len());
    let mut buf = vec![Cf64::new(0.0, 0.0); n];
    for l in 0..SSB_SYMBOLS {
        buf.fill(Cf64::new(0.0, 0.0));
        for (k, &v) in grid.symbols[l].iter().enumerate() {
            buf[cfg.fft_bin(k, n)] = v;
        }
        ifft.process(&mut buf);
        out.extend(buf[n - cfg.cp_len..].iter().map(|z| z * scale));
        out.extend(buf.iter().map(|z| z * scale));
    }
    IqBuffer {
        samples: out,
        rate_hz: cfg.sample_rate_hz,
        start_index_full_rate: 0,
    }
}

fn pss_symbol_ifft(d: &[f64; SEQ_LEN], cfg: &FrameConfig, len: usize) -> Vec<Cf64> {
    let mut buf = vec![Cf64::new(0.0, 0.0); len];
    for (n, &v) in d.iter().enumerate() {
        buf[cfg.fft_bin(SS_FIRST_SUBCARRIER + n, len)] = Cf64::new(v, 0.0);
    }
    FftPlanner::<f64>::new().plan_fft_inverse(len).process(&mut buf);
    let norm = buf.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    buf.iter_mut().for_each(|z| *z /= norm);
    buf
}

/// PSS reference `i` at full rate (`n_fft` samples) and half rate
/// (`n_fft / 2` samples). The half-rate reference places the same 127
/// subcarriers on a half-size grid, which is exact because the PSS lies in
/// the central half of the band.
pub fn gen_reference_pss(i: u8, cfg: &FrameConfig) -> Result<ReferencePss> {
    let d = gen_pss_sequence(i)?;
    Ok(ReferencePss {
        seq_index: i,
        full_rate: pss_symbol_ifft(&d, cfg, cfg.n_fft),
        half_rate: pss_symbol_ifft(&d, cfg, cfg.n_fft / 2),
    })
}

/// All three PSS references.
pub fn reference_set(cfg: &FrameConfig) -> [ReferencePss; 3] {
    std::array::from_fn(|i| gen_reference_pss(i as u8, cfg).expect("index in range"))
}

/// Two SSB periods of full-rate samples with the SSB starting at
/// `true_offset` in each period and zeros elsewhere. The SSB must fit inside
/// its period; nothing wraps.
pub fn place_ssb_in_frame(
    grid_waveform: &IqBuffer,
    cfg: &FrameConfig,
    true_offset: usize,
) -> Result<IqBuffer> {
    grid_waveform.require_full_rate(cfg, "place_ssb_in_frame")?;
    if true_offset >= cfg.n_ssb {
        return Err(Error::domain(format!(
            "offset {true_offset} not in [0, {})",
            cfg.n_ssb
        )));
    }
    let len = grid_waveform.len();
    if true_offset + len > cfg.n_ssb {
        return Err(Error::domain(format!(
            "SSB of {len} samples at offset {true_offset} crosses the period boundary {}",
            cfg.n_ssb
        )));
    }
    let mut samples = vec![Cf64::new(0.0, 0.0); 2 * cfg.n_ssb];
    for period in 0..2 {
        let at = period * cfg.n_ssb + true_offset;
        samples[at..at + len].copy_from_slice(&grid_waveform.samples);
    }
    Ok(IqBuffer {
        samples,
        rate_hz: cfg.sample_rate_hz,
        start_index_full_rate: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{gen_pbch_symbols, map_ssb_grid, CellId};
    use std::f64::consts::PI;

    fn naive_dft(x: &[Cf64]) -> Vec<Cf64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(t, &v)| v * Cf64::from_polar(1.0, -2.0 * PI * (k * t) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    fn naive_idft(x: &[Cf64]) -> Vec<Cf64> {
        let n = x.len();
        (0..n)
            .map(|t| {
                x.iter()
                    .enumerate()
                    .map(|(k, &v)| v * Cf64::from_polar(1.0, 2.0 * PI * (k * t) as f64 / n as f64))
                    .sum::<Cf64>()
                    / n as f64
            })
            .collect()
    }

    fn sample_grid(n: u16) -> SsbGrid {
        let cell = CellId::from_n_id(n).unwrap();
        let bits: Vec<u8> = (0..32).map(|i| ((i * 5) % 3 == 0) as u8).collect();
        map_ssb_grid(cell, &gen_pbch_symbols(cell, &bits).unwrap()).unwrap()
    }

    #[test]
    fn zero_grid_gives_zero_samples() {
        let cfg = FrameConfig::default();
        let w = ofdm_modulate(&SsbGrid::empty(), &cfg);
        assert_eq!(w.len(), 4 * 548);
        assert!(w.samples.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn single_tone_is_constant_modulus_with_cp() {
        let cfg = FrameConfig::default();
        let mut g = SsbGrid::empty();
        g.set(1, 17, Cf64::new(1.0, 0.0));
        let w = ofdm_modulate(&g, &cfg);
        let sym = &w.samples[548..2 * 548];
        let m = ofdm_scale();
        assert!(sym.iter().all(|z| (z.norm() - m).abs() < 1e-12));
        for i in 0..cfg.cp_len {
            assert!((sym[i] - sym[cfg.n_fft + i]).norm() < 1e-12);
        }
        // Other symbols stay silent.
        assert!(w.samples[..548].iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn round_trip_recovers_grid() {
        let cfg = FrameConfig::default();
        let g = sample_grid(321);
        let w = ofdm_modulate(&g, &cfg);
        for l in 0..4 {
            let start = l * cfg.symbol_len() + cfg.cp_len;
            let spec = naive_dft(&w.samples[start..start + cfg.n_fft]);
            let gain = (SSB_SUBCARRIERS as f64).sqrt() / cfg.n_fft as f64;
            for k in 0..240 {
                let got = spec[cfg.fft_bin(k, cfg.n_fft)] * gain;
                let want = g.symbols[l][k];
                let tol = 1e-9 * want.norm().max(1.0);
                assert!((got - want).norm() <= tol, "l={l} k={k}");
            }
        }
    }

    #[test]
    fn full_band_symbol_has_unit_mean_power() {
        let cfg = FrameConfig::default();
        let w = ofdm_modulate(&sample_grid(9), &cfg);
        let sym = &w.samples[cfg.symbol_len() + cfg.cp_len..2 * cfg.symbol_len()];
        let p: f64 = sym.iter().map(|z| z.norm_sqr()).sum::<f64>() / cfg.n_fft as f64;
        assert!((p - 1.0).abs() < 1e-9);
    }

    #[test]
    fn references_have_unit_energy_and_differ() {
        let cfg = FrameConfig::default();
        let refs = reference_set(&cfg);
        for r in &refs {
            assert_eq!(r.full_rate.len(), 512);
            assert_eq!(r.half_rate.len(), 256);
            let e_full: f64 = r.full_rate.iter().map(|z| z.norm_sqr()).sum();
            let e_half: f64 = r.half_rate.iter().map(|z| z.norm_sqr()).sum();
            assert!((e_full - 1.0).abs() < 1e-12);
            assert!((e_half - 1.0).abs() < 1e-12);
        }
        assert_ne!(refs[0], refs[1]);
        assert_ne!(refs[1], refs[2]);
        assert_ne!(refs[0], refs[2]);
    }

    #[test]
    fn half_rate_reference_is_ideal_decimation() {
        let cfg = FrameConfig::default();
        for i in 0..3 {
            let r = gen_reference_pss(i, &cfg).unwrap();
            // Ideal low-pass decimation: keep the bins of the central half
            // band and inverse transform on a half-size grid.
            let n = cfg.n_fft;
            let spec = naive_dft(&r.full_rate);
            let mut half_spec = vec![Cf64::new(0.0, 0.0); n / 2];
            for (k, v) in spec.iter().enumerate() {
                let rel = if k < n / 2 { k as isize } else { k as isize - n as isize };
                if rel.unsigned_abs() < n / 4 {
                    half_spec[rel.rem_euclid((n / 2) as isize) as usize] = *v;
                }
            }
            let dec = naive_idft(&half_spec);
            let norm = dec.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let err: f64 = dec
                .iter()
                .zip(&r.half_rate)
                .map(|(a, b)| (a / norm - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(err < 1e-6, "seq {i}: relative error {err}");
        }
    }

    #[test]
    fn reference_matches_transmitted_pss_symbol() {
        let cfg = FrameConfig::default();
        for n_id in [0u16, 1, 2] {
            let g = sample_grid(n_id);
            let w = ofdm_modulate(&g, &cfg);
            let body = &w.samples[cfg.cp_len..cfg.cp_len + cfg.n_fft];
            let r = gen_reference_pss((n_id % 3) as u8, &cfg).unwrap();
            let dot: Cf64 = body.iter().zip(&r.full_rate).map(|(a, b)| a * b.conj()).sum();
            let e: f64 = body.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!((dot.norm() / e - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn frame_placement() {
        let cfg = FrameConfig::default();
        let w = ofdm_modulate(&sample_grid(42), &cfg);
        let f = place_ssb_in_frame(&w, &cfg, 0).unwrap();
        assert_eq!(f.len(), 2 * cfg.n_ssb);
        assert_eq!(f.samples[..w.len()], w.samples[..]);
        assert!((f.energy() - 2.0 * w.energy()).abs() < 1e-9 * w.energy());

        let last = cfg.n_ssb - w.len();
        let f = place_ssb_in_frame(&w, &cfg, last).unwrap();
        assert_eq!(f.samples[cfg.n_ssb + last..], w.samples[..]);
        assert!(place_ssb_in_frame(&w, &cfg, last + 1).is_err());
        assert!(place_ssb_in_frame(&w, &cfg, cfg.n_ssb - 1).is_err());
        assert!(place_ssb_in_frame(&w, &cfg, cfg.n_ssb).is_err());
    }
}
