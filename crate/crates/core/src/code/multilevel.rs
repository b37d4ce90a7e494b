//! Natural-labeling multilevel words: one coded binary layer plus `M - 1`
//! uncoded bit layers, combined as `x = x_c + Σ_b x_{u_b} 2^b` in `Z_{2^M}`.

use crate::code::cyclic::CyclicCode;
use crate::dsp::{mod_interval, Constellation};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultilevelWord {
    /// Binary codeword carried by the least significant bit.
    pub coded: Vec<u32>,
    /// Bit layers `1 .. M-1`, each of length `N`.
    pub uncoded: Vec<Vec<u32>>,
}

impl MultilevelWord {
    pub fn m(&self) -> usize {
        self.uncoded.len() + 1
    }

    /// Composite symbols in `Z_{2^M}`.
    pub fn symbols(&self) -> Vec<u32> {
        (0..self.coded.len())
            .map(|k| {
                self.uncoded
                    .iter()
                    .enumerate()
                    .fold(self.coded[k], |acc, (b, layer)| acc + (layer[k] << (b + 1)))
            })
            .collect()
    }

    /// Splits `Z_{2^M}` symbols into bit layers.
    pub fn from_symbols(symbols: &[u32], m: usize) -> Result<Self> {
        check_m(m)?;
        if let Some(&s) = symbols.iter().find(|&&s| s >> m != 0) {
            return Err(Error::input(format!("symbol {s} is outside Z_{}", 1u32 << m)));
        }
        Ok(MultilevelWord {
            coded: symbols.iter().map(|s| s & 1).collect(),
            uncoded: (1..m).map(|b| symbols.iter().map(|s| (s >> b) & 1).collect()).collect(),
        })
    }
}

fn check_m(m: usize) -> Result<()> {
    if !(1..=16).contains(&m) {
        return Err(Error::input(format!("bits per symbol M = {m} must lie in 1..=16")));
    }
    Ok(())
}

fn check_binary(code: &CyclicCode) -> Result<()> {
    if code.q() != 2 {
        return Err(Error::input(format!("multilevel layer code must be binary, has q = {}", code.q())));
    }
    Ok(())
}

/// Builds a word from `K - L` coded data bits and `M - 1` uncoded blocks of
/// `N - L` bits, zero-padding the last `L = filter_len - 1` positions of
/// every layer.
pub fn multilevel_encode(
    code: &CyclicCode,
    data_c: &[u32],
    data_u: &[Vec<u32>],
    m: usize,
    filter_len: usize,
) -> Result<MultilevelWord> {
    check_binary(code)?;
    check_m(m)?;
    if data_u.len() != m - 1 {
        return Err(Error::input(format!("need {} uncoded layers, got {}", m - 1, data_u.len())));
    }
    let coded = code.encode_zero_padded(data_c, filter_len)?;
    let n = code.n();
    let pad = filter_len - 1;
    let mut uncoded = Vec::with_capacity(m - 1);
    for (b, layer) in data_u.iter().enumerate() {
        if layer.len() != n - pad {
            return Err(Error::input(format!(
                "uncoded layer {} has {} bits, need {}",
                b + 1,
                layer.len(),
                n - pad
            )));
        }
        if layer.iter().any(|&v| v > 1) {
            return Err(Error::input(format!("uncoded layer {} is not binary", b + 1)));
        }
        let mut full = layer.clone();
        full.resize(n, 0);
        uncoded.push(full);
    }
    Ok(MultilevelWord { coded, uncoded })
}

/// Decodes a received block `y` (already reduced mod `Δ`) of `Z_{2^M}`
/// symbols: ML decoding of the LSB layer on the mod-`2Δ/2^M` coset channel,
/// then a slicer with doubled step for the remaining bits.
pub fn multilevel_decode(
    y: &[f64],
    code: &CyclicCode,
    m: usize,
    cst: &Constellation,
) -> Result<MultilevelWord> {
    check_binary(code)?;
    check_m(m)?;
    if cst.q != 1 << m {
        return Err(Error::input(format!("constellation has q = {}, need 2^M = {}", cst.q, 1u32 << m)));
    }
    if y.len() != code.n() {
        return Err(Error::input("received block does not match the code length"));
    }
    let coarse = 2.0 * cst.step();
    let offsets = [cst.point(0), cst.point(1)];
    let costs: Vec<Vec<f64>> = y
        .iter()
        .map(|&v| offsets.iter().map(|&o| mod_interval(v - o, coarse).powi(2)).collect())
        .collect();
    let coded = code.ml_decode_costs(&costs)?;
    Ok(complete_layers(y, &coded, m, cst))
}

/// Given the LSB layer, slices the remaining bits with step `2Δ/2^M`.
pub fn complete_layers(y: &[f64], coded: &[u32], m: usize, cst: &Constellation) -> MultilevelWord {
    let coarse = 2.0 * cst.step();
    let half = cst.q / 2;
    let symbols: Vec<u32> = y
        .iter()
        .zip(coded)
        .map(|(&v, &b)| {
            let t = (mod_interval(v - cst.point(b), cst.delta) / coarse).round() as i64;
            b + 2 * t.rem_euclid(half as i64) as u32
        })
        .collect();
    MultilevelWord::from_symbols(&symbols, m).expect("symbols fit in Z_{2^M}")
}
