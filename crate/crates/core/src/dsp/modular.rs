//! Integer filters and arithmetic over `Z_q`.

use std::fmt;

use num_complex::Complex;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian integer; real filters have zero imaginary parts throughout.
pub type GaussInt = Complex<i64>;

/// A monic integer-valued filter `I(D) = 1 + i_1 D + ... + i_{n-1} D^{n-1}`.
///
/// Coefficients are Gaussian integers so that the same type carries filters
/// for complex channels; every `Z_q` operation requires a real filter.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntFilter {
    coeffs: Vec<GaussInt>,
}

impl IntFilter {
    pub fn new(coeffs: Vec<i64>) -> Result<Self> {
        Self::from_gaussian(coeffs.into_iter().map(|c| GaussInt::new(c, 0)).collect())
    }

    pub fn from_gaussian(coeffs: Vec<GaussInt>) -> Result<Self> {
        match coeffs.first() {
            None => Err(Error::input("integer filter must have at least one tap")),
            Some(c) if *c != GaussInt::new(1, 0) => {
                Err(Error::input(format!("integer filter must be monic, leading tap is {c}")))
            }
            Some(_) => Ok(IntFilter { coeffs }),
        }
    }

    /// `I(D) = 1`.
    pub fn identity() -> Self {
        IntFilter { coeffs: vec![GaussInt::new(1, 0)] }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coeffs(&self) -> &[GaussInt] {
        &self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.im == 0)
    }

    /// Real taps, or an error for a filter with imaginary parts.
    pub fn real_taps(&self) -> Result<Vec<i64>> {
        if !self.is_real() {
            return Err(Error::Unsupported(format!(
                "Gaussian-integer filter {self:?} cannot act on Z_q symbols"
            )));
        }
        Ok(self.coeffs.iter().map(|c| c.re).collect())
    }

    /// `I(D^d)`.
    pub fn upsample(&self, d: usize) -> IntFilter {
        let mut coeffs = vec![GaussInt::new(0, 0); (self.len() - 1) * d + 1];
        for (k, &c) in self.coeffs.iter().enumerate() {
            coeffs[k * d] = c;
        }
        IntFilter { coeffs }
    }

    /// Drops trailing zero taps.
    pub fn trimmed(mut self) -> Self {
        while self.coeffs.len() > 1 && *self.coeffs.last().unwrap() == GaussInt::new(0, 0) {
            self.coeffs.pop();
        }
        self
    }

    pub fn to_complex(&self) -> Vec<num_complex::Complex64> {
        self.coeffs
            .iter()
            .map(|c| num_complex::Complex64::new(c.re as f64, c.im as f64))
            .collect()
    }
}

impl fmt::Debug for IntFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_real() {
            f.debug_list().entries(self.coeffs.iter().map(|c| c.re)).finish()
        } else {
            f.debug_list().entries(self.coeffs.iter().map(|c| [c.re, c.im])).finish()
        }
    }
}

impl Serialize for IntFilter {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_gauss(&self.coeffs, s)
    }
}

pub(crate) fn serialize_gauss<S: Serializer>(
    coeffs: &[GaussInt],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let real = coeffs.iter().all(|c| c.im == 0);
    let mut seq = s.serialize_seq(Some(coeffs.len()))?;
    for c in coeffs {
        if real {
            seq.serialize_element(&c.re)?;
        } else {
            seq.serialize_element(&[c.re, c.im])?;
        }
    }
    seq.end()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum IntRepr {
    Real(i64),
    Pair([i64; 2]),
}

impl<'de> Deserialize<'de> for IntFilter {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw: Vec<IntRepr> = Vec::deserialize(d)?;
        let coeffs = raw
            .into_iter()
            .map(|c| match c {
                IntRepr::Real(re) => GaussInt::new(re, 0),
                IntRepr::Pair([re, im]) => GaussInt::new(re, im),
            })
            .collect();
        IntFilter::from_gaussian(coeffs).map_err(de::Error::custom)
    }
}

/// Canonical representative of `v mod q` in `0..q`.
pub fn reduce(v: i64, q: u32) -> u32 {
    v.rem_euclid(q as i64) as u32
}

pub(crate) fn check_symbols(x: &[u32], q: u32) -> Result<()> {
    if q < 2 {
        return Err(Error::input(format!("alphabet size q = {q} must be at least 2")));
    }
    if let Some((k, &s)) = x.iter().enumerate().find(|(_, &s)| s >= q) {
        return Err(Error::input(format!("symbol {s} at position {k} is outside Z_{q}")));
    }
    Ok(())
}

/// Cyclic convolution `(x ⊗ i) mod q` with block length `n_block = len(x)`.
///
/// Filter indices beyond the block wrap around modulo the block length.
pub fn cyclic_convolve_mod(x: &[u32], taps: &[i64], q: u32) -> Result<Vec<u32>> {
    check_symbols(x, q)?;
    let n = x.len();
    if n == 0 {
        return Err(Error::input("cyclic convolution needs a nonempty block"));
    }
    let q64 = q as i64;
    let taps: Vec<i64> = taps.iter().map(|t| t.rem_euclid(q64)).collect();
    let mut out = vec![0i64; n];
    for (m, &t) in taps.iter().enumerate() {
        if t == 0 {
            continue;
        }
        let shift = m % n;
        for (k, &xv) in x.iter().enumerate() {
            let idx = (k + shift) % n;
            out[idx] = (out[idx] + t * xv as i64) % q64;
        }
    }
    Ok(out.into_iter().map(|v| v as u32).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cyclic_examples() {
        assert_eq!(cyclic_convolve_mod(&[3, 0, 0, 0], &[1, 2, 1], 7).unwrap(), vec![3, 6, 3, 0]);
        assert_eq!(
            cyclic_convolve_mod(&[3, 1, 4, 0, 0, 0], &[1, 2, 1], 7).unwrap(),
            vec![3, 0, 2, 2, 4, 0]
        );
        assert_eq!(cyclic_convolve_mod(&[5, 1, 0, 6], &[1], 7).unwrap(), vec![5, 1, 0, 6]);
    }

    #[test]
    fn out_of_range_symbol_is_rejected() {
        let err = cyclic_convolve_mod(&[0, 7], &[1], 7).unwrap_err();
        assert!(err.is_input_error());
    }

    #[test]
    fn negative_taps_reduce_correctly() {
        // -1 acts as q-1
        assert_eq!(cyclic_convolve_mod(&[1, 0, 0], &[1, -1], 5).unwrap(), vec![1, 4, 0]);
    }

    #[test]
    fn monic_constraint() {
        assert!(IntFilter::new(vec![1, -2, 1]).is_ok());
        assert!(IntFilter::new(vec![2, 1]).is_err());
        assert!(IntFilter::new(vec![]).is_err());
        let f: IntFilter = serde_json::from_str("[1, 1]").unwrap();
        assert_eq!(f.real_taps().unwrap(), vec![1, 1]);
        let g: IntFilter = serde_json::from_str("[[1,0],[0,-1]]").unwrap();
        assert!(!g.is_real());
        assert!(g.real_taps().is_err());
        assert_eq!(serde_json::to_string(&g).unwrap(), "[[1,0],[0,-1]]");
        assert!(serde_json::from_str::<IntFilter>("[0, 1]").is_err());
    }

    fn fold_reference(x: &[u32], taps: &[i64], q: u32) -> Vec<u32> {
        let n = x.len();
        let xs: Vec<i64> = x.iter().map(|&v| v as i64).collect();
        let lin = super::super::poly::convolve(&xs, taps);
        let mut folded = vec![0i64; n];
        for (k, v) in lin.iter().enumerate() {
            folded[k % n] += v;
        }
        folded.into_iter().map(|v| reduce(v, q)).collect()
    }

    proptest! {
        #[test]
        fn cyclic_matches_linear_then_fold(
            q in 2u32..12,
            x in prop::collection::vec(0u32..1000, 1..20),
            taps in prop::collection::vec(-6i64..7, 1..25),
        ) {
            let x: Vec<u32> = x.into_iter().map(|v| v % q).collect();
            prop_assert_eq!(cyclic_convolve_mod(&x, &taps, q).unwrap(), fold_reference(&x, &taps, q));
        }

        #[test]
        fn zero_padding_turns_linear_into_cyclic(
            q in 2u32..12,
            data in prop::collection::vec(0u32..1000, 1..16),
            tail in prop::collection::vec(-5i64..6, 0..6),
        ) {
            let mut taps = vec![1i64];
            taps.extend(tail);
            let mut x: Vec<u32> = data.into_iter().map(|v| v % q).collect();
            x.extend(std::iter::repeat_n(0, taps.len() - 1));
            let xs: Vec<i64> = x.iter().map(|&v| v as i64).collect();
            let lin = super::super::poly::convolve(&xs, &taps);
            let head: Vec<u32> = lin[..x.len()].iter().map(|&v| reduce(v, q)).collect();
            prop_assert_eq!(head, cyclic_convolve_mod(&x, &taps, q).unwrap());
        }
    }
}
