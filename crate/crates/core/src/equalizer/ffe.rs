//! Feed-forward filters `A(D)` that turn `H(D)` into the integer response
//! `I(D)`, realized as truncated two-sided FIR filters from an FFT grid.

use num_complex::Complex64;
use serde::Serialize;

use crate::dsp::poly::{freq_response, inverse_fft, taps_from_grid, MAX_GRID};
use crate::dsp::{IntFilter, Poly};
use crate::error::{Error, Result};
use crate::spectral::{channel_roots, check_paley_wiener};
use crate::Mode;

/// Fraction of tap energy the truncation may discard.
pub const DEFAULT_TAIL_TOL: f64 = 1e-14;

const MIN_GRID: usize = 256;

#[derive(Clone, Debug, Serialize)]
pub struct FfeRealization {
    /// Taps for lags `-anchor ..= taps.len() - 1 - anchor`.
    #[serde(serialize_with = "serialize_complex")]
    pub taps: Vec<Complex64>,
    /// Index of the lag-0 tap.
    pub anchor: usize,
    pub design: Mode,
    /// Bias-removal gain, 1 for zero forcing.
    pub b0: f64,
    /// Energy fraction dropped by truncation.
    pub truncation_energy: f64,
    /// FFT grid the taps were computed on.
    pub grid: usize,
    /// Transmit power the MMSE design assumed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr: Option<f64>,
}

fn serialize_complex<S: serde::Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let real = v.iter().all(|c| c.im == 0.0);
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for c in v {
        if real {
            seq.serialize_element(&c.re)?;
        } else {
            seq.serialize_element(&[c.re, c.im])?;
        }
    }
    seq.end()
}

impl FfeRealization {
    /// Most negative lag (anticausal reach).
    pub fn min_lag(&self) -> isize {
        -(self.anchor as isize)
    }

    pub fn max_lag(&self) -> isize {
        (self.taps.len() - 1 - self.anchor) as isize
    }

    /// Received samples needed before the first and after the last output.
    pub fn guard(&self) -> (usize, usize) {
        (self.max_lag().max(0) as usize, self.anchor)
    }

    pub fn is_real(&self) -> bool {
        self.taps.iter().all(|c| c.im == 0.0)
    }

    pub fn real_taps(&self) -> Result<Vec<f64>> {
        if !self.is_real() {
            return Err(Error::Unsupported("complex FFE taps cannot filter a real stream".into()));
        }
        Ok(self.taps.iter().map(|c| c.re).collect())
    }

    /// Frequency response of the truncated filter on a grid.
    pub fn response(&self, grid: usize) -> Vec<Complex64> {
        let mut folded = vec![Complex64::default(); grid];
        for (j, &t) in self.taps.iter().enumerate() {
            let lag = j as isize - self.anchor as isize;
            folded[lag.rem_euclid(grid as isize) as usize] += t;
        }
        inverse_fft(grid).process(&mut folded);
        folded
    }

    /// Largest deviation of `A·H` from its target (`I` for ZF,
    /// `b0 |H|²/(|H|² + 1/snr) · I` for MMSE) relative to `max |I|`.
    pub fn composite_error(&self, h: &Poly, i: &IntFilter) -> f64 {
        let mut grid = MIN_GRID;
        while grid < self.taps.len() + h.len() + i.len() {
            grid *= 2;
        }
        let a = self.response(grid);
        let hr = freq_response(h, grid);
        let ir = freq_response(&Poly::new(i.to_complex()).expect("monic filter"), grid);
        let extra = self.snr.map_or(0.0, |s| 1.0 / s);
        let scale = ir.iter().map(|v| v.norm()).fold(0.0, f64::max);
        a.iter()
            .zip(&hr)
            .zip(&ir)
            .map(|((av, hv), iv)| {
                let target = match self.design {
                    Mode::Zf => *iv,
                    Mode::Mmse => iv * (self.b0 * hv.norm_sqr() / (hv.norm_sqr() + extra)),
                };
                (av * hv - target).norm()
            })
            .fold(0.0, f64::max)
            / scale
    }
}

fn start_grid(h: &Poly, i: &IntFilter, grid: Option<usize>) -> usize {
    let want = grid.unwrap_or(MIN_GRID).max(4 * (h.len() + i.len()));
    want.next_power_of_two().max(MIN_GRID)
}

/// Truncates circular taps to the shortest window whose left and right
/// tails each hold at most half the allowed energy. `None` when the window
/// would not fit inside a quarter of the grid on each side.
fn truncate(circ: &[Complex64], tol: f64) -> Option<(Vec<Complex64>, usize, f64)> {
    let g = circ.len();
    let at = |lag: isize| circ[lag.rem_euclid(g as isize) as usize];
    let total: f64 = circ.iter().map(|c| c.norm_sqr()).sum();
    if total == 0.0 {
        return None;
    }
    let half = (g / 2) as isize;
    let budget = 0.5 * tol * total;
    // right tail: lags (hi, half); left tail: lags [-half, lo)
    let mut hi = half - 1;
    let mut right = 0.0;
    while hi > 0 && right + at(hi).norm_sqr() <= budget {
        right += at(hi).norm_sqr();
        hi -= 1;
    }
    let mut lo = -half;
    let mut left = 0.0;
    while lo < 0 && left + at(lo).norm_sqr() <= budget {
        left += at(lo).norm_sqr();
        lo += 1;
    }
    let quarter = (g / 4) as isize;
    if hi > quarter || -lo > quarter {
        return None;
    }
    let taps: Vec<Complex64> = (lo..=hi).map(at).collect();
    Some((taps, (-lo) as usize, (left + right) / total))
}

fn design(
    h: &Poly,
    i: &IntFilter,
    mode: Mode,
    snr: Option<f64>,
    grid: Option<usize>,
    tol: f64,
) -> Result<FfeRealization> {
    let ip = Poly::new(i.to_complex())?;
    let extra = snr.map_or(0.0, |s| 1.0 / s);
    let real = h.is_real() && i.is_real();
    let mut g = start_grid(h, i, grid);
    loop {
        let hr = freq_response(h, g);
        let ir = freq_response(&ip, g);
        let b0 = match mode {
            Mode::Zf => 1.0,
            Mode::Mmse => {
                let mean = hr.iter().map(|v| v.norm_sqr() / (v.norm_sqr() + extra)).sum::<f64>() / g as f64;
                1.0 / mean
            }
        };
        let spectrum: Vec<Complex64> = hr
            .iter()
            .zip(&ir)
            .map(|(hv, iv)| match mode {
                Mode::Zf => iv / hv,
                Mode::Mmse => iv * hv.conj() * (b0 / (hv.norm_sqr() + extra)),
            })
            .collect();
        let mut circ = taps_from_grid(&spectrum);
        if real {
            circ.iter_mut().for_each(|c| c.im = 0.0);
        }
        if let Some((taps, anchor, truncation_energy)) = truncate(&circ, tol) {
            return Ok(FfeRealization { taps, anchor, design: mode, b0, truncation_energy, grid: g, snr });
        }
        if g >= MAX_GRID {
            return Err(Error::numeric(format!(
                "FFE tails do not decay to {tol:e} within a {g}-point grid"
            )));
        }
        g *= 2;
    }
}

/// `A(D) = I(D)/H(D)`.
pub fn design_zf_ffe(h: &Poly, i: &IntFilter, grid: Option<usize>) -> Result<FfeRealization> {
    design_zf_ffe_with_tol(h, i, grid, DEFAULT_TAIL_TOL)
}

pub fn design_zf_ffe_with_tol(h: &Poly, i: &IntFilter, grid: Option<usize>, tol: f64) -> Result<FfeRealization> {
    check_paley_wiener(&channel_roots(h)?)?;
    design(h, i, Mode::Zf, None, grid, tol)
}

/// `A(D) = b0 I(D) H*(D^{-*}) / (|H|² + 1/snr)` with `b0` making the
/// composite response `A H / I` monic.
pub fn design_mmse_ffe(h: &Poly, i: &IntFilter, snr: f64, grid: Option<usize>) -> Result<FfeRealization> {
    design_mmse_ffe_with_tol(h, i, snr, grid, DEFAULT_TAIL_TOL)
}

pub fn design_mmse_ffe_with_tol(
    h: &Poly,
    i: &IntFilter,
    snr: f64,
    grid: Option<usize>,
    tol: f64,
) -> Result<FfeRealization> {
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(Error::input(format!("snr must be positive and finite, got {snr}")));
    }
    if h.is_zero() {
        return Err(Error::input("channel is identically zero"));
    }
    design(h, i, Mode::Mmse, Some(snr), grid, tol)
}

pub fn design_ffe(h: &Poly, i: &IntFilter, mode: Mode, snr: f64) -> Result<FfeRealization> {
    match mode {
        Mode::Zf => design_zf_ffe(h, i, None),
        Mode::Mmse => design_mmse_ffe(h, i, snr, None),
    }
}

fn check_span(len_y: usize, ffe: &FfeRealization, start: usize, len: usize) -> Result<()> {
    let (before, after) = ffe.guard();
    if start < before || start + len + after > len_y {
        return Err(Error::input(format!(
            "FFE needs {before} guard samples before and {after} after the block; \
             block {start}..{} of a {len_y}-sample input does not have them",
            start + len
        )));
    }
    Ok(())
}

/// `v_k = Σ_m a_m y_{k-m}` for `k` in `start .. start + len`, indexed so
/// that output `k` estimates `(x * i)_k`.
pub fn apply_ffe(y: &[f64], ffe: &FfeRealization, start: usize, len: usize) -> Result<Vec<f64>> {
    check_span(y.len(), ffe, start, len)?;
    let taps = ffe.real_taps()?;
    let anchor = ffe.anchor;
    Ok((start..start + len)
        .map(|k| {
            // y index k - lag with lag = j - anchor
            let base = k + anchor;
            taps.iter().enumerate().map(|(j, &a)| a * y[base - j]).sum()
        })
        .collect())
}

pub fn apply_ffe_complex(y: &[Complex64], ffe: &FfeRealization, start: usize, len: usize) -> Result<Vec<Complex64>> {
    check_span(y.len(), ffe, start, len)?;
    let anchor = ffe.anchor;
    Ok((start..start + len)
        .map(|k| {
            let base = k + anchor;
            ffe.taps.iter().enumerate().map(|(j, &a)| a * y[base - j]).sum()
        })
        .collect())
}
