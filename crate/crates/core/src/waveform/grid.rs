use super::{
    gen_pss_sequence, gen_sss_sequence, pbch_layout, CellId, PbchSymbols, SEQ_LEN,
    SSB_SUBCARRIERS, SSB_SYMBOLS, SS_FIRST_SUBCARRIER,
};
use crate::{Cf64, Error, Result};

/// Frequency-domain SSB: 4 OFDM symbols by 240 subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct SsbGrid {
    pub symbols: [[Cf64; SSB_SUBCARRIERS]; SSB_SYMBOLS],
    pub occupied_mask: [[bool; SSB_SUBCARRIERS]; SSB_SYMBOLS],
}

impl SsbGrid {
    pub fn empty() -> Self {
        SsbGrid {
            symbols: [[Cf64::new(0.0, 0.0); SSB_SUBCARRIERS]; SSB_SYMBOLS],
            occupied_mask: [[false; SSB_SUBCARRIERS]; SSB_SYMBOLS],
        }
    }

    pub fn set(&mut self, symbol: usize, k: usize, value: Cf64) {
        self.symbols[symbol][k] = value;
        self.occupied_mask[symbol][k] = true;
    }

    pub fn symbol_energy(&self, symbol: usize) -> f64 {
        self.symbols[symbol].iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Places PSS (symbol 0), SSS (symbol 2) and PBCH/DMRS onto the grid.
pub fn map_ssb_grid(cell_id: CellId, pbch: &PbchSymbols) -> Result<SsbGrid> {
    let layout = pbch_layout(cell_id);
    let n_dmrs = layout.iter().filter(|c| c.dmrs).count();
    if pbch.dmrs.len() != n_dmrs || pbch.data.len() != layout.len() - n_dmrs {
        return Err(Error::domain(format!(
            "PBCH symbols ({} data, {} DMRS) do not fit the layout for cell {} ({} data, {} DMRS)",
            pbch.data.len(),
            pbch.dmrs.len(),
            cell_id.n_id(),
            layout.len() - n_dmrs,
            n_dmrs
        )));
    }

    let mut grid = SsbGrid::empty();
    let pss = gen_pss_sequence(cell_id.n_id2())?;
    let sss = gen_sss_sequence(cell_id.n_id1(), cell_id.n_id2())?;
    for n in 0..SEQ_LEN {
        grid.set(0, SS_FIRST_SUBCARRIER + n, Cf64::new(pss[n], 0.0));
        grid.set(2, SS_FIRST_SUBCARRIER + n, Cf64::new(sss[n], 0.0));
    }
    let mut data = pbch.data.iter();
    let mut dmrs = pbch.dmrs.iter();
    for c in &layout {
        let v = if c.dmrs { dmrs.next() } else { data.next() };
        grid.set(c.symbol, c.subcarrier, *v.expect("length checked above"));
    }
    Ok(grid)
}
