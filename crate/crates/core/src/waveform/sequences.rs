//! PSS, SSS and Gold pseudo-random sequences as defined in TS 38.211.

use crate::{Error, Result};

/// Length of the PSS and SSS sequences.
pub const SEQ_LEN: usize = 127;

/// Length-127 m-sequence for `x(m+7) = x(m+taps) + x(m) (mod 2)`.
fn m_sequence(seed: [u8; 7], tap: usize) -> [u8; SEQ_LEN] {
    let mut x = [0u8; SEQ_LEN];
    x[..7].copy_from_slice(&seed);
    for m in 0..SEQ_LEN - 7 {
        x[m + 7] = (x[m + tap] + x[m]) % 2;
    }
    x
}

/// BPSK PSS sequence `d(n) = 1 - 2 x((n + 43 n_id2) mod 127)`.
pub fn gen_pss_sequence(n_id2: u8) -> Result<[f64; SEQ_LEN]> {
    if n_id2 > 2 {
        return Err(Error::domain(format!("n_id2 {n_id2} not in [0, 2]")));
    }
    let x = m_sequence([0, 1, 1, 0, 1, 1, 1], 4);
    let shift = 43 * n_id2 as usize;
    Ok(std::array::from_fn(|n| {
        1.0 - 2.0 * x[(n + shift) % SEQ_LEN] as f64
    }))
}

/// BPSK SSS sequence: product of two cyclically shifted m-sequences with
/// shifts `m0 = 15 floor(n_id1 / 112) + 5 n_id2` and `m1 = n_id1 mod 112`.
pub fn gen_sss_sequence(n_id1: u16, n_id2: u8) -> Result<[f64; SEQ_LEN]> {
    if n_id1 > 335 {
        return Err(Error::domain(format!("n_id1 {n_id1} not in [0, 335]")));
    }
    if n_id2 > 2 {
        return Err(Error::domain(format!("n_id2 {n_id2} not in [0, 2]")));
    }
    let seed = [1, 0, 0, 0, 0, 0, 0];
    let x0 = m_sequence(seed, 4);
    let x1 = m_sequence(seed, 1);
    let m0 = 15 * (n_id1 as usize / 112) + 5 * n_id2 as usize;
    let m1 = n_id1 as usize % 112;
    Ok(std::array::from_fn(|n| {
        let a = 1.0 - 2.0 * x0[(n + m0) % SEQ_LEN] as f64;
        let b = 1.0 - 2.0 * x1[(n + m1) % SEQ_LEN] as f64;
        a * b
    }))
}

/// Length-31 Gold sequence `c(n)` with `Nc = 1600` (TS 38.211).
pub fn gold_sequence(c_init: u32, len: usize) -> Vec<u8> {
    const NC: usize = 1600;
    let total = NC + len;
    let mut x1 = vec![0u8; total + 31];
    let mut x2 = vec![0u8; total + 31];
    x1[0] = 1;
    for (i, b) in x2.iter_mut().take(31).enumerate() {
        *b = ((c_init >> i) & 1) as u8;
    }
    for n in 0..total {
        x1[n + 31] = (x1[n + 3] + x1[n]) % 2;
        x2[n + 31] = (x2[n + 3] + x2[n + 2] + x2[n + 1] + x2[n]) % 2;
    }
    (0..len).map(|n| (x1[n + NC] + x2[n + NC]) % 2).collect()
}
