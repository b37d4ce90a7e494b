//! Closed-form benchmark quantities for a finite-impulse-response channel.
//!
//! Everything here depends on `|H(e^{jw})|` only, so leading delays are
//! stripped before the roots are taken.

use std::f64::consts::{E, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::poly::{freq_response, grid_for, Poly, MAX_GRID};
use crate::dsp::IntFilter;
use crate::error::{Error, Result};
use crate::lattice;
use crate::{linear_to_db, Mode};

/// Roots closer than this to the unit circle violate Paley-Wiener.
pub const UNIT_CIRCLE_TOL: f64 = 1e-9;

/// Shaping loss of the one-dimensional modulo, `10 log10(2 pi e / 12)` dB.
pub fn shaping_loss_db() -> f64 {
    linear_to_db(2.0 * PI * E / 12.0)
}

const SCHUR_MAX_ITER: usize = 10_000;

/// Simultaneous Aberth-Ehrlich iteration for all roots of `c`.
fn aberth(c: &[Complex64]) -> Result<Vec<Complex64>> {
    let deg = c.len() - 1;
    let p = Poly::new(c.to_vec())?;
    let dp = p.derivative();
    // Cauchy bound on the root moduli
    let lead = c[deg].norm();
    let radius = 1.0 + c[..deg].iter().map(|v| v.norm() / lead).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| Complex64::from_polar(0.5 * radius, 2.0 * PI * (k as f64 + 0.25) / deg as f64 + 0.4))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for k in 0..deg {
            let f = p.eval(z[k]);
            if f.norm() == 0.0 {
                continue;
            }
            let ratio = f / dp.eval(z[k]);
            let repulse: Complex64 = (0..deg).filter(|&j| j != k).map(|j| 1.0 / (z[k] - z[j])).sum();
            let step = ratio / (1.0 - ratio * repulse);
            if step.is_finite() {
                z[k] -= step;
                moved = moved.max(step.norm() / z[k].norm().max(1.0));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("root iteration diverged"));
    }
    Ok(z)
}

/// Roots of `sum_k c_k z^k` from the eigenvalues of the companion matrix,
/// refined by Newton steps on the polynomial itself.
pub fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && *c.last().unwrap() == Complex64::default() {
        c.pop();
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    if c[0] == Complex64::default() {
        return Err(Error::input("polynomial has a root at zero; strip the delay first"));
    }
    let lead = c[deg];
    let mut roots = if deg == 1 {
        vec![-c[0] / c[1]]
    } else {
        let mut m = DMatrix::<Complex64>::zeros(deg, deg);
        for r in 1..deg {
            m[(r, r - 1)] = Complex64::new(1.0, 0.0);
        }
        for r in 0..deg {
            m[(r, deg - 1)] = -c[r] / lead;
        }
        match m.try_schur(f64::EPSILON, SCHUR_MAX_ITER) {
            Some(schur) => {
                let (_, t) = schur.unpack();
                (0..deg).map(|k| t[(k, k)]).collect::<Vec<_>>()
            }
            // unshifted QR can stall on companion matrices with rotationally
            // symmetric spectra, e.g. 1 + a D^4
            None => aberth(&c)?,
        }
    };

    let p = Poly::new(c.clone())?;
    let dp = p.derivative();
    for z in roots.iter_mut() {
        for _ in 0..8 {
            let f = p.eval(*z);
            let df = dp.eval(*z);
            if df.norm() == 0.0 {
                break;
            }
            let cand = *z - f / df;
            if p.eval(cand).norm() < f.norm() {
                *z = cand;
            } else {
                break;
            }
        }
    }

    for z in &roots {
        let scale: f64 = c
            .iter()
            .enumerate()
            .map(|(k, ck)| ck.norm() * z.norm().powi(k as i32))
            .sum();
        let resid = p.eval(*z).norm();
        if !(resid <= 1e-8 * scale) {
            return Err(Error::numeric(format!(
                "root {z} has residual {resid:.3e}, above 1e-8 of {scale:.3e}"
            )));
        }
    }
    roots.sort_by(|a, b| {
        a.norm()
            .total_cmp(&b.norm())
            .then(a.arg().total_cmp(&b.arg()))
    });
    Ok(roots)
}

/// Zeros of `H(D)` (as a polynomial in `D`), excluding zeros at `D = 0`
/// from a leading delay.
pub fn channel_roots(h: &Poly) -> Result<Vec<Complex64>> {
    if h.is_zero() {
        return Err(Error::input("channel is identically zero"));
    }
    let (_, core) = h.strip_delay();
    poly_roots(core.coeffs())
}

pub fn check_paley_wiener(roots: &[Complex64]) -> Result<()> {
    for &z in roots {
        let distance = (1.0 - z.norm()).abs();
        if distance < UNIT_CIRCLE_TOL {
            return Err(Error::PaleyWienerViolation { root: z, distance });
        }
    }
    Ok(())
}

/// Minimum-phase factor `G(D) = g_0 prod (1 - D/w_i)` with every `|w_i| > 1`,
/// `g_0 > 0`, and `|G(e^{jw})|² = |H(e^{jw})|² + extra` on the unit circle.
#[derive(Clone, Debug)]
pub struct SpectralFactor {
    pub coeffs: Vec<Complex64>,
    /// Zeros `w_i` of `G`, all outside the unit circle.
    pub zeros: Vec<Complex64>,
}

fn expand_from_zeros(gain: f64, zeros: &[Complex64], real: bool) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(gain, 0.0)];
    for &w in zeros {
        let factor = -1.0 / w;
        let mut next = vec![Complex64::default(); c.len() + 1];
        for (k, &ck) in c.iter().enumerate() {
            next[k] += ck;
            next[k + 1] += ck * factor;
        }
        c = next;
    }
    if real {
        c.iter_mut().for_each(|v| v.im = 0.0);
    }
    c
}

/// Spectral factor of `|H|²` (zero-forcing), from the roots of `H` with the
/// ones inside the unit circle reflected to `1/z*`.
pub fn zf_spectral_factor(h: &Poly) -> Result<SpectralFactor> {
    let (_, core) = h.strip_delay();
    let roots = channel_roots(h)?;
    check_paley_wiener(&roots)?;
    let mut gain = core.coeffs()[0].norm();
    let zeros: Vec<Complex64> = roots
        .iter()
        .map(|&z| {
            if z.norm() > 1.0 {
                z
            } else {
                gain /= z.norm();
                1.0 / z.conj()
            }
        })
        .collect();
    Ok(SpectralFactor { coeffs: expand_from_zeros(gain, &zeros, h.is_real()), zeros })
}

/// Spectral factor of `|H|² + extra` for `extra > 0`.
pub fn regularized_spectral_factor(h: &Poly, extra: f64) -> Result<SpectralFactor> {
    if !(extra > 0.0 && extra.is_finite()) {
        return Err(Error::input(format!("regularization must be positive, got {extra}")));
    }
    if h.is_zero() {
        return Err(Error::input("channel is identically zero"));
    }
    let (_, core) = h.strip_delay();
    let hc = core.coeffs();
    let p = hc.len() - 1;
    // s_m = sum_a h_{a+m} conj(h_a), m = 0..=p
    let s: Vec<Complex64> = (0..=p)
        .map(|m| (0..=p - m).map(|a| hc[a + m] * hc[a].conj()).sum())
        .collect();
    let s0 = s[0].re + extra;
    if p == 0 {
        return Ok(SpectralFactor { coeffs: vec![Complex64::new(s0.sqrt(), 0.0)], zeros: vec![] });
    }
    // D^p S(D): coefficient j is s_{j-p}
    let mut pc = Vec::with_capacity(2 * p + 1);
    for j in 0..=2 * p {
        let m = j as isize - p as isize;
        let v = if m < 0 {
            s[(-m) as usize].conj()
        } else if m == 0 {
            Complex64::new(s0, 0.0)
        } else {
            s[m as usize]
        };
        pc.push(v);
    }
    let mut roots = poly_roots(&pc)?;
    roots.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let zeros: Vec<Complex64> = roots[..p].to_vec();
    if zeros.iter().any(|w| w.norm() <= 1.0) {
        return Err(Error::numeric("spectral factorization failed to separate the root pairs"));
    }
    let monic = expand_from_zeros(1.0, &zeros, core.is_real());
    let energy: f64 = monic.iter().map(|c| c.norm_sqr()).sum();
    let gain = (s0 / energy).sqrt();
    Ok(SpectralFactor {
        coeffs: monic.into_iter().map(|c| c * gain).collect(),
        zeros,
    })
}

/// `(1/2pi) ∫ log|H(e^{jw})|² dw` on a grid, doubled until two successive
/// grids agree to 1e-9.
pub fn log_spectrum_mean(h: &Poly) -> Result<f64> {
    let mut grid = grid_for(h.len());
    let eval = |g: usize| -> f64 {
        let r = freq_response(h, g);
        r.iter().map(|v| v.norm_sqr().ln()).sum::<f64>() / g as f64
    };
    let mut prev = eval(grid);
    while grid < MAX_GRID {
        grid *= 2;
        let next = eval(grid);
        if (next - prev).abs() <= 1e-9 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::numeric(format!(
        "log-spectrum quadrature did not converge on a {grid}-point grid"
    )))
}

/// Root formula: `σ² = 1 / (|h_0|² prod_{|z_i|<1} |z_i|^{-2})`.
pub fn sigma2_zf_dfe_from_roots(h: &Poly, roots: &[Complex64]) -> f64 {
    let (_, core) = h.strip_delay();
    let mut g = core.coeffs()[0].norm_sqr();
    for z in roots {
        g *= (1.0 / z.norm_sqr()).max(1.0);
    }
    1.0 / g
}

/// Noise variance after the optimal ZF-DFE front end,
/// `exp(-(1/2pi) ∫ log|H|² dw)`, from the root formula.
///
/// The value is cross-checked against the trapezoid rule on a grid fine
/// enough for the nearest zero; disagreement above 1e-6 is reported as a
/// numeric error. Zeros so close to the circle that the grid would exceed
/// `MAX_GRID` points skip the cross-check.
pub fn sigma2_zf_dfe(h: &Poly) -> Result<f64> {
    let roots = channel_roots(h)?;
    check_paley_wiener(&roots)?;
    let exact = sigma2_zf_dfe_from_roots(h, &roots);
    if let Some(grid) = quadrature_grid(h, &roots) {
        let r = freq_response(h, grid);
        let quad = (-r.iter().map(|v| v.norm_sqr().ln()).sum::<f64>() / grid as f64).exp();
        if ((quad - exact) / exact).abs() > 1e-6 {
            return Err(Error::numeric(format!(
                "ZF-DFE noise quadrature {quad} disagrees with root formula {exact}"
            )));
        }
    }
    Ok(exact)
}

/// Grid on which the trapezoid rule for `log|H|²` is accurate to about
/// 1e-12: its error decays like `ρ^G` with `ρ` the largest of `|z|` and
/// `1/|z|` that is below one.
fn quadrature_grid(h: &Poly, roots: &[Complex64]) -> Option<usize> {
    let rho = roots
        .iter()
        .map(|z| {
            let m = z.norm();
            if m > 1.0 { 1.0 / m } else { m }
        })
        .fold(0.0, f64::max);
    let base = (8 * h.len()).next_power_of_two().max(256);
    if rho == 0.0 {
        return Some(base);
    }
    let need = (1e-12f64.ln() / rho.ln()).ceil();
    if need > MAX_GRID as f64 {
        return None;
    }
    Some((need as usize).next_power_of_two().max(base))
}

/// `α_H = |z_0 ... z_{p-1}|^{2p} / prod_{μ,ν} |z*_μ z_ν - 1|` over the zeros
/// outside the unit circle (diagonal terms included).
pub fn alpha_h(h: &Poly) -> Result<f64> {
    let roots = channel_roots(h)?;
    check_paley_wiener(&roots)?;
    Ok(alpha_from_roots(&roots))
}

pub fn alpha_from_roots(roots: &[Complex64]) -> f64 {
    // With β = 1/w the expression reduces to 1 / prod |1 - β*_μ β_ν|.
    let betas: Vec<Complex64> = roots
        .iter()
        .map(|&z| if z.norm() > 1.0 { 1.0 / z } else { z.conj() })
        .collect();
    let mut log_alpha = 0.0;
    for bm in &betas {
        for bn in &betas {
            log_alpha -= (Complex64::new(1.0, 0.0) - bm.conj() * bn).norm().ln();
        }
    }
    log_alpha.exp()
}

/// Dimension factor of the Minkowski bound; the complex variant applies to
/// complex transmission over a complex channel.
pub fn eta(n: usize, complex: bool) -> f64 {
    assert!(n >= 1, "eta needs n >= 1");
    let n = n as f64;
    if complex {
        4.0 * n / (PI * E) * (2.8 * PI * n).powf(1.0 / (2.0 * n))
    } else {
        2.0 * n / (PI * E) * (1.4 * PI * n).powf(1.0 / n)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: usize,
    pub eta: f64,
    pub alpha_root: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundReport {
    pub complex: bool,
    pub alpha: f64,
    pub sigma2_zf_dfe: f64,
    pub rows: Vec<BoundRow>,
    pub n_star: usize,
    /// Upper bound on `γ_H`, linear.
    pub bound: f64,
    pub bound_db: f64,
    /// Upper bound on the total gap to capacity, dB.
    pub gap_bound_db: f64,
    /// Measured `γ` of a selected filter, when attached.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_db: Option<f64>,
    /// `10 log10 Γ` for the attached `γ`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_db: Option<f64>,
}

impl BoundReport {
    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        self.gamma = Some(gamma);
        self.gamma_db = Some(linear_to_db(gamma));
        self.gap_db = Some(gap_to_capacity(gamma)?);
        Ok(self)
    }
}

/// Upper bound `min_n η(n) α_H^{1/n}` on the noise enhancement of the best
/// integer filter relative to ZF-DFE, over `n` in `n_min..=n_max`.
pub fn minkowski_bound(h: &Poly, n_min: usize, n_max: usize) -> Result<BoundReport> {
    let roots = channel_roots(h)?;
    check_paley_wiener(&roots)?;
    let p = roots.len();
    if n_min < p + 1 || n_max < n_min {
        return Err(Error::input(format!(
            "bound needs p+1 <= n_min <= n_max; got p = {p}, range {n_min}..={n_max}"
        )));
    }
    let alpha = alpha_from_roots(&roots);
    let complex = !h.is_real();
    let rows: Vec<BoundRow> = (n_min..=n_max)
        .map(|n| {
            let e = eta(n, complex);
            let a = alpha.powf(1.0 / n as f64);
            BoundRow { n, eta: e, alpha_root: a, value: e * a }
        })
        .collect();
    let best = rows
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("nonempty range");
    let bound = best.value;
    Ok(BoundReport {
        complex,
        alpha,
        sigma2_zf_dfe: sigma2_zf_dfe(h)?,
        n_star: best.n,
        bound,
        bound_db: linear_to_db(bound),
        gap_bound_db: shaping_loss_db() + linear_to_db(bound),
        rows,
        gamma: None,
        gamma_db: None,
        gap_db: None,
    })
}

/// Leading high-SNR term of the ISI capacity, `½ log2(snr / σ²_ZF-DFE)`
/// bits per real dimension; the vanishing correction is not modeled.
pub fn capacity_high_snr(h: &Poly, snr: f64) -> Result<f64> {
    if !(snr > 0.0) {
        return Err(Error::input(format!("snr must be positive, got {snr}")));
    }
    Ok(0.5 * (snr / sigma2_zf_dfe(h)?).log2())
}

/// `10 log10(2 pi e / 12) + 10 log10(γ)`.
pub fn gap_to_capacity(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::input(format!("gamma must be positive, got {gamma}")));
    }
    Ok(shaping_loss_db() + linear_to_db(gamma))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MiBound {
    /// Lower bound on the mutual information of the modulo channel, bits.
    pub bits: f64,
    pub sigma2: f64,
    pub gamma: f64,
    pub gap_db: f64,
}

/// Mutual-information lower bound `½ log2(snr·12 / (2 pi e σ²))` of the
/// modulo-additive channel seen after the integer-forcing front end.
pub fn mi_lower_bound(h: &Poly, filter: &IntFilter, snr: f64, mode: Mode) -> Result<MiBound> {
    let sigma2 = lattice::noise_enhancement(h, filter, mode, snr)?;
    let gamma = sigma2 / sigma2_zf_dfe(h)?;
    Ok(MiBound {
        bits: 0.5 * (snr * 12.0 / (2.0 * PI * E * sigma2)).log2(),
        sigma2,
        gamma,
        gap_db: gap_to_capacity(gamma)?,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelAnalysis {
    pub roots: Vec<[f64; 2]>,
    pub sigma2_zf_dfe: Option<f64>,
    pub alpha: Option<f64>,
    pub is_paley_wiener: bool,
    /// Smallest `| 1 - |z| |` over the roots.
    pub min_root_distance: Option<f64>,
}

pub fn analyze_channel(h: &Poly) -> Result<ChannelAnalysis> {
    let roots = channel_roots(h)?;
    let pw = check_paley_wiener(&roots).is_ok();
    let min_root_distance = roots
        .iter()
        .map(|z| (1.0 - z.norm()).abs())
        .min_by(|a, b| a.total_cmp(b));
    Ok(ChannelAnalysis {
        roots: roots.iter().map(|z| [z.re, z.im]).collect(),
        sigma2_zf_dfe: if pw { Some(sigma2_zf_dfe(h)?) } else { None },
        alpha: if pw { Some(alpha_from_roots(&roots)) } else { None },
        is_paley_wiener: pw,
        min_root_distance,
    })
}
