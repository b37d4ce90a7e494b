//! Pseudo-random dither shared by transmitter and receiver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsp::{mod_interval, IntFilter};
use crate::error::{Error, Result};

/// Uniform dither on `[-Δ/2, Δ/2)`; both ends regenerate identical values
/// from `(seed, stream)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DitherStream {
    pub seed: u64,
    pub delta: f64,
}

impl DitherStream {
    pub fn new(seed: u64, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::input(format!("modulo interval must be positive, got {delta}")));
        }
        Ok(DitherStream { seed, delta })
    }

    /// `len` dither values of sub-stream `stream`.
    pub fn block(&self, stream: u64, len: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        (0..len)
            .map(|_| mod_interval(self.delta * (rng.random::<f64>() - 0.5), self.delta))
            .collect()
    }
}

/// `(x_k + d_k) mod [-Δ/2, Δ/2)`.
pub fn dither_add(x: &[f64], d: &[f64], delta: f64) -> Result<Vec<f64>> {
    if x.len() != d.len() {
        return Err(Error::input(format!("dither has {} values for {} symbols", d.len(), x.len())));
    }
    Ok(x.iter().zip(d).map(|(&a, &b)| mod_interval(a + b, delta)).collect())
}

/// `(v_k - (d * i)_k) mod [-Δ/2, Δ/2)`.
///
/// `d` must start `len(i) - 1` samples before `v` so that every output has
/// its full convolution window: `d.len() == v.len() + len(i) - 1`.
pub fn dither_remove(v: &[f64], d: &[f64], i: &IntFilter, delta: f64) -> Result<Vec<f64>> {
    let taps = i.real_taps()?;
    let lead = taps.len() - 1;
    if d.len() != v.len() + lead {
        return Err(Error::input(format!(
            "dither window has {} values, need {} for {} outputs and a {}-tap filter",
            d.len(),
            v.len() + lead,
            v.len(),
            taps.len()
        )));
    }
    Ok(v.iter()
        .enumerate()
        .map(|(k, &vk)| {
            let di: f64 = taps.iter().enumerate().map(|(m, &t)| t as f64 * d[k + lead - m]).sum();
            mod_interval(vk - di, delta)
        })
        .collect())
}
