//! Recursive recovery of `x` from `x' = (x ⊗ i) mod q`.

use crate::dsp::modular::{check_symbols, reduce};
use crate::dsp::IntFilter;
use crate::error::Result;

/// `x_k = (x'_k - Σ_{m≥1} i_m x_{k-m}) mod q`, reading `x_{k-m}` for `k < m`
/// from the `n - 1` trailing zeros that wrap around. Exact whenever the
/// transmitted block ends in `len(i) - 1` zeros.
pub fn dfe_reconstruct(xp: &[u32], i: &IntFilter, q: u32) -> Result<Vec<u32>> {
    check_symbols(xp, q)?;
    let taps = i.real_taps()?;
    let q64 = q as i64;
    let taps: Vec<i64> = taps.iter().map(|t| t.rem_euclid(q64)).collect();
    let mut x = Vec::with_capacity(xp.len());
    for (k, &v) in xp.iter().enumerate() {
        let mut acc = v as i64;
        for (m, &t) in taps.iter().enumerate().skip(1).take(k) {
            acc -= t * x[k - m] as i64;
            acc = acc.rem_euclid(q64);
        }
        x.push(reduce(acc, q));
    }
    Ok(x)
}
