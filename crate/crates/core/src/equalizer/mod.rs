//! Receiver chain: feed-forward filters, dither, the modulo front end and
//! DFE reconstruction over `Z_q`.

pub mod dfe;
pub mod dither;
pub mod ffe;
pub mod stream;

pub use dfe::dfe_reconstruct;
pub use dither::{dither_add, dither_remove, DitherStream};
pub use ffe::{
    apply_ffe, apply_ffe_complex, design_ffe, design_mmse_ffe, design_zf_ffe, FfeRealization, DEFAULT_TAIL_TOL,
};
pub use stream::{measure_sinr, measure_stream, transmit_power, StreamConfig, StreamStats};

use crate::dsp::{Constellation, IntFilter};
use crate::error::Result;

/// Shift that moves the FFE output onto the constellation of `x'`.
///
/// Symbols map to `step·(s - (q-1)/2)`, so `(x * i)` in the signal domain
/// equals `step·(x ⊗ i) - o·Σ i_m` with `o = step (q-1)/2`; adding
/// `o (Σ i_m - 1)` leaves `map(x') mod Δ`. Needs every symbol inside the
/// filter window to be a real transmitted symbol.
pub fn offset_correction(cst: &Constellation, i: &IntFilter) -> Result<f64> {
    let s: i64 = i.real_taps()?.iter().sum();
    let o = cst.step() * (cst.q as f64 - 1.0) / 2.0;
    Ok(o * (s as f64 - 1.0))
}
