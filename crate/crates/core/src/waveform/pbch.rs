//! PBCH proxy: a 32-bit payload protected by CRC-24C, repeated over every
//! PBCH data cell with Gold-sequence scrambling, QPSK modulated, plus the
//! Gold-sequence DMRS.
//!
//! Cell layout inside the SSB: symbols 1 and 3 are fully occupied, symbol 2
//! outside the SSS subcarriers. DMRS cells are every fourth subcarrier with
//! offset `n_id mod 4`.

use std::f64::consts::FRAC_1_SQRT_2;

use super::{gold_sequence, CellId, SEQ_LEN, SSB_SUBCARRIERS, SS_FIRST_SUBCARRIER};
use crate::{Cf64, Error, Result};

pub const PBCH_PAYLOAD_BITS: usize = 32;
pub const PBCH_CRC_BITS: usize = 24;
pub const PBCH_BLOCK_BITS: usize = PBCH_PAYLOAD_BITS + PBCH_CRC_BITS;

/// CRC-24C generator `D^24+D^23+D^21+D^20+D^17+D^15+D^13+D^12+D^8+D^4+D^2+D+1`.
const CRC24C_POLY: u32 = 0x1B2_B117;

/// One PBCH resource element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PbchCell {
    pub symbol: usize,
    pub subcarrier: usize,
    pub dmrs: bool,
}

/// PBCH data and DMRS symbols in [`pbch_layout`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct PbchSymbols {
    pub data: Vec<Cf64>,
    pub dmrs: Vec<Cf64>,
}

/// PBCH resource elements for a cell, ordered by symbol then subcarrier.
pub fn pbch_layout(cell_id: CellId) -> Vec<PbchCell> {
    let shift = (cell_id.n_id() % 4) as usize;
    let sss = SS_FIRST_SUBCARRIER..SS_FIRST_SUBCARRIER + SEQ_LEN;
    let mut cells = Vec::with_capacity(3 * SSB_SUBCARRIERS);
    for symbol in 1..=3 {
        for k in 0..SSB_SUBCARRIERS {
            if symbol == 2 && sss.contains(&k) {
                continue;
            }
            cells.push(PbchCell {
                symbol,
                subcarrier: k,
                dmrs: k % 4 == shift,
            });
        }
    }
    cells
}

/// CRC-24C parity bits of `bits` (MSB first, zero initial state).
pub fn crc24c(bits: &[u8]) -> [u8; PBCH_CRC_BITS] {
    let mut reg: u32 = 0;
    for &b in bits.iter().chain(std::iter::repeat_n(&0u8, PBCH_CRC_BITS)) {
        reg = (reg << 1) | (b & 1) as u32;
        if reg & (1 << 24) != 0 {
            reg ^= CRC24C_POLY;
        }
    }
    std::array::from_fn(|i| ((reg >> (23 - i)) & 1) as u8)
}

/// Scrambling sequence for the repeated PBCH block, keyed by `n_id`.
pub fn scrambling_sequence(cell_id: CellId, len: usize) -> Vec<u8> {
    gold_sequence(cell_id.n_id() as u32, len)
}

/// Gray-mapped unit-power QPSK.
pub fn qpsk_modulate(b0: u8, b1: u8) -> Cf64 {
    Cf64::new(
        (1.0 - 2.0 * b0 as f64) * FRAC_1_SQRT_2,
        (1.0 - 2.0 * b1 as f64) * FRAC_1_SQRT_2,
    )
}

pub(crate) fn dmrs_sequence(cell_id: CellId, len: usize) -> Vec<Cf64> {
    let n_id = cell_id.n_id() as u32;
    let c_init = (1 << 11) * (n_id / 4 + 1) + (1 << 6) + n_id % 4;
    let c = gold_sequence(c_init, 2 * len);
    (0..len).map(|m| qpsk_modulate(c[2 * m], c[2 * m + 1])).collect()
}

/// Builds PBCH data and DMRS symbols for `payload_bits` (32 bits, each 0/1).
pub fn gen_pbch_symbols(cell_id: CellId, payload_bits: &[u8]) -> Result<PbchSymbols> {
    if payload_bits.len() != PBCH_PAYLOAD_BITS {
        return Err(Error::domain(format!(
            "PBCH payload must be {PBCH_PAYLOAD_BITS} bits, got {}",
            payload_bits.len()
        )));
    }
    if payload_bits.iter().any(|&b| b > 1) {
        return Err(Error::domain("PBCH payload bits must be 0 or 1"));
    }
    let mut block = payload_bits.to_vec();
    block.extend_from_slice(&crc24c(payload_bits));

    let layout = pbch_layout(cell_id);
    let n_dmrs = layout.iter().filter(|c| c.dmrs).count();
    let n_data = layout.len() - n_dmrs;
    let coded_len = 2 * n_data;
    let scramble = scrambling_sequence(cell_id, coded_len);
    let coded: Vec<u8> = (0..coded_len)
        .map(|j| block[j % PBCH_BLOCK_BITS] ^ scramble[j])
        .collect();
    let data = coded
        .chunks_exact(2)
        .map(|p| qpsk_modulate(p[0], p[1]))
        .collect();
    Ok(PbchSymbols {
        data,
        dmrs: dmrs_sequence(cell_id, n_dmrs),
    })
}
