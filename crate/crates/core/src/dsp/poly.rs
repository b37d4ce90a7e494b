//! D-transform polynomials with complex coefficients.
//!
//! A [`Poly`] stores `p(D) = sum_k c_k D^k` with the coefficient of `D^k` at
//! index `k`. Frequency responses follow the convention `D = e^{jw}`, so
//! `P(e^{jw}) = sum_k c_k e^{jkw}`.

use std::cell::RefCell;
use std::fmt;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
    real: bool,
}

impl Poly {
    /// Builds a polynomial, trimming trailing zero coefficients (a single
    /// zero coefficient is kept for the zero polynomial).
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::input("polynomial needs at least one coefficient"));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::input("polynomial coefficients must be finite"));
        }
        let real = coeffs.iter().all(|c| c.im == 0.0);
        let mut p = Poly { coeffs, real };
        p.trim();
        Ok(p)
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// The constant polynomial 1.
    pub fn one() -> Self {
        Poly { coeffs: vec![Complex64::new(1.0, 0.0)], real: true }
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && *self.coeffs.last().unwrap() == Complex64::default() {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::default())
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Real parts of the coefficients; meaningful for real-flagged polys.
    pub fn real_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.re).collect()
    }

    /// Splits `p(D) = D^d q(D)` with `q(0) != 0`. A pure delay leaves
    /// `|P(e^{jw})|` unchanged, so spectral quantities work on `q`.
    pub fn strip_delay(&self) -> (usize, Poly) {
        let d = self
            .coeffs
            .iter()
            .position(|c| *c != Complex64::default())
            .unwrap_or(0);
        let q = Poly { coeffs: self.coeffs[d..].to_vec(), real: self.real };
        (d, q)
    }

    /// Largest `d` such that `p(D) = r(D^d)` after removing the leading delay.
    pub fn decimation_factor(&self) -> usize {
        let (_, q) = self.strip_delay();
        let mut g = 0usize;
        for (k, c) in q.coeffs.iter().enumerate().skip(1) {
            if *c != Complex64::default() {
                g = gcd(g, k);
            }
        }
        g.max(1)
    }

    /// `r(D)` such that `p(D) = r(D^d)`; the caller guarantees `d` divides
    /// every nonzero exponent.
    pub fn decimate(&self, d: usize) -> Poly {
        let coeffs = self.coeffs.iter().step_by(d).copied().collect();
        Poly { coeffs, real: self.real }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::default(), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly { coeffs: vec![Complex64::default()], real: self.real };
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        Poly { coeffs, real: self.real }
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        let coeffs: Vec<_> = self.coeffs.iter().map(|&c| c * s).collect();
        let real = self.real && s.im == 0.0;
        let mut p = Poly { coeffs, real };
        p.trim();
        p
    }

    /// `p(D^d)`.
    pub fn upsample(&self, d: usize) -> Poly {
        let mut coeffs = vec![Complex64::default(); self.degree() * d + 1];
        for (k, &c) in self.coeffs.iter().enumerate() {
            coeffs[k * d] = c;
        }
        Poly { coeffs, real: self.real }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.real {
            f.debug_list().entries(self.coeffs.iter().map(|c| c.re)).finish()
        } else {
            f.debug_list().entries(self.coeffs.iter()).finish()
        }
    }
}

/// Standard linear convolution, length `deg(a) + deg(b) + 1`.
pub fn linear_convolve(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![Complex64::default(); a.len() + b.len() - 1];
    for (i, &x) in a.coeffs.iter().enumerate() {
        for (j, &y) in b.coeffs.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    let real = a.real && b.real;
    let mut p = Poly { coeffs: out, real };
    p.trim();
    p
}

/// Linear convolution of plain sequences.
pub fn convolve<T>(a: &[T], b: &[T]) -> Vec<T>
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<Output = T>,
{
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![T::default(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = out[i + j] + x * y;
        }
    }
    out
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn inverse_fft(len: usize) -> std::sync::Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

pub(crate) fn forward_fft(len: usize) -> std::sync::Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

/// Evaluates `p` at `w_k = 2 pi k / grid_size`, `k = 0..grid_size`.
///
/// Coefficients beyond the grid length are folded modulo `grid_size`, which
/// is exact at the grid frequencies.
pub fn freq_response(p: &Poly, grid_size: usize) -> Vec<Complex64> {
    assert!(grid_size > 0, "grid size must be positive");
    let mut buf = vec![Complex64::default(); grid_size];
    for (k, &c) in p.coeffs.iter().enumerate() {
        buf[k % grid_size] += c;
    }
    inverse_fft(grid_size).process(&mut buf);
    buf
}

/// Taps `a_m` of a spectrum sampled on the uniform grid, i.e. the inverse of
/// [`freq_response`]: `a_m = (1/G) sum_k A_k e^{-j m w_k}`, `m = 0..G` with
/// negative lags wrapped to the top half.
pub fn taps_from_grid(spectrum: &[Complex64]) -> Vec<Complex64> {
    let g = spectrum.len();
    let mut buf = spectrum.to_vec();
    forward_fft(g).process(&mut buf);
    let scale = 1.0 / g as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Spectral grid used for frequency-domain integrals.
pub const DEFAULT_GRID: usize = 1 << 16;
/// Upper limit for automatic grid doubling.
pub const MAX_GRID: usize = 1 << 20;

/// Smallest power-of-two grid that is at least `DEFAULT_GRID` and at least
/// eight samples per coefficient.
pub fn grid_for(len: usize) -> usize {
    (8 * len).next_power_of_two().max(DEFAULT_GRID)
}

impl Serialize for Poly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.coeffs.len()))?;
        for c in &self.coeffs {
            if self.real {
                seq.serialize_element(&c.re)?;
            } else {
                seq.serialize_element(&[c.re, c.im])?;
            }
        }
        seq.end()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CoeffRepr {
    Real(f64),
    Pair([f64; 2]),
}

impl<'de> Deserialize<'de> for Poly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw: Vec<CoeffRepr> = Vec::deserialize(d)?;
        let coeffs = raw
            .into_iter()
            .map(|c| match c {
                CoeffRepr::Real(re) => Complex64::new(re, 0.0),
                CoeffRepr::Pair([re, im]) => Complex64::new(re, im),
            })
            .collect();
        Poly::new(coeffs).map_err(de::Error::custom)
    }
}
