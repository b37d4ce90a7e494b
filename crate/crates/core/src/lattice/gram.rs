//! Autocorrelation of `1/|H|²` (or `1/(|H|² + 1/snr)`) and the Toeplitz
//! Gram matrix it generates.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dsp::poly::{freq_response, grid_for, taps_from_grid, MAX_GRID};
use crate::dsp::{GaussInt, Poly};
use crate::error::{Error, Result};
use crate::spectral::{regularized_spectral_factor, zf_spectral_factor, SpectralFactor};
use crate::Mode;

#[derive(Clone, Debug)]
pub struct GramSpec {
    pub mode: Mode,
    pub n: usize,
    pub channel: Poly,
    /// Transmit power `σ_x²` relative to unit noise; read in MMSE mode only.
    pub snr: f64,
}

impl GramSpec {
    pub fn new(channel: Poly, n: usize, mode: Mode, snr: f64) -> Result<Self> {
        let spec = GramSpec { mode, n, channel, snr };
        spec.validate()?;
        Ok(spec)
    }

    pub fn zf(channel: Poly, n: usize) -> Result<Self> {
        Self::new(channel, n, Mode::Zf, f64::INFINITY)
    }

    pub fn mmse(channel: Poly, n: usize, snr: f64) -> Result<Self> {
        Self::new(channel, n, Mode::Mmse, snr)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::input("filter length n must be at least 1"));
        }
        if self.channel.is_zero() {
            return Err(Error::input("channel is identically zero"));
        }
        if self.mode == Mode::Mmse && !(self.snr > 0.0 && self.snr.is_finite()) {
            return Err(Error::input(format!(
                "MMSE mode needs a finite positive snr, got {}",
                self.snr
            )));
        }
        Ok(())
    }

    fn regularization(&self) -> f64 {
        match self.mode {
            Mode::Zf => 0.0,
            Mode::Mmse => 1.0 / self.snr,
        }
    }

    fn factor(&self) -> Result<SpectralFactor> {
        match self.mode {
            Mode::Zf => zf_spectral_factor(&self.channel),
            Mode::Mmse => regularized_spectral_factor(&self.channel, self.regularization()),
        }
    }
}

fn check_residual(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> Result<()> {
    let resid = (a * x - b).norm();
    if !(resid <= 1e-9 * (a.norm() * x.norm() + b.norm())) {
        return Err(Error::numeric(format!("Yule-Walker residual {resid:.3e} too large")));
    }
    Ok(())
}

/// `Σ_a g_a k_{|m-a|} = δ_m / g_0` for real `g`, solved by LU.
fn yule_walker_real(gc: &[Complex64]) -> Result<Vec<Complex64>> {
    let p = gc.len() - 1;
    let mut a = DMatrix::<f64>::zeros(p + 1, p + 1);
    for m in 0..=p {
        for (ai, ga) in gc.iter().enumerate() {
            a[(m, (m as isize - ai as isize).unsigned_abs())] += ga.re;
        }
    }
    let mut b = DVector::<f64>::zeros(p + 1);
    b[0] = 1.0 / gc[0].re;
    let x = a
        .clone()
        .full_piv_lu()
        .solve(&b)
        .ok_or_else(|| Error::numeric("Yule-Walker system is singular"))?;
    check_residual(&a, &x, &b)?;
    Ok(x.iter().map(|&v| Complex64::new(v, 0.0)).collect())
}

/// Complex case on the real embedding. Unknowns: `Re k_0`, then
/// `(Re k_j, Im k_j)` for `j = 1..=p`; equation `m` is
/// `Σ_a g_a k_{m-a} = δ_m / conj(g_0)` with `k_{-j} = conj(k_j)`, split into
/// real and imaginary rows. Solved as least squares through the normal
/// equations with two refinement steps.
fn yule_walker_complex(gc: &[Complex64]) -> Result<Vec<Complex64>> {
    let p = gc.len() - 1;
    let unknowns = 2 * p + 1;
    let mut a = DMatrix::<f64>::zeros(2 * (p + 1), unknowns);
    for m in 0..=p {
        for (ai, &ga) in gc.iter().enumerate() {
            let lag = m as isize - ai as isize;
            let j = lag.unsigned_abs();
            let sign = if lag < 0 { -1.0 } else { 1.0 };
            if j == 0 {
                a[(2 * m, 0)] += ga.re;
                a[(2 * m + 1, 0)] += ga.im;
            } else {
                let (cx, cy) = (2 * j - 1, 2 * j);
                // ga (x + i s y) = (ga.re x - s ga.im y) + i (ga.im x + s ga.re y)
                a[(2 * m, cx)] += ga.re;
                a[(2 * m, cy)] -= sign * ga.im;
                a[(2 * m + 1, cx)] += ga.im;
                a[(2 * m + 1, cy)] += sign * ga.re;
            }
        }
    }
    let rhs = Complex64::new(1.0, 0.0) / gc[0].conj();
    let mut b = DVector::<f64>::zeros(2 * (p + 1));
    b[0] = rhs.re;
    b[1] = rhs.im;
    let at = a.transpose();
    let lu = (&at * &a).full_piv_lu();
    let solve = |r: &DVector<f64>| lu.solve(&(&at * r)).ok_or_else(|| Error::numeric("Yule-Walker system is singular"));
    let mut x = solve(&b)?;
    for _ in 0..2 {
        x += solve(&(&b - &a * &x))?;
    }
    check_residual(&a, &x, &b)?;
    let mut k = vec![Complex64::new(x[0], 0.0)];
    k.extend((1..=p).map(|j| Complex64::new(x[2 * j - 1], x[2 * j])));
    Ok(k)
}

/// `k_0 .. k_{n-1}` with `k_m = (1/2pi) ∫ e^{-jmw} / S(w) dw`.
///
/// `S = |G|²` is factored exactly, the first `p + 1` lags come from the
/// Yule-Walker equations of `G` and later lags from the all-pole recursion,
/// so there is no truncation error. Real channels give real `k`.
pub fn autocorr(spec: &GramSpec) -> Result<Vec<Complex64>> {
    spec.validate()?;
    let g = spec.factor()?;
    let gc = &g.coeffs;
    let p = gc.len() - 1;
    let g0 = gc[0];
    let lags = p + 1;

    let x = if spec.channel.is_real() {
        yule_walker_real(gc)?
    } else {
        yule_walker_complex(gc)?
    };

    let total = spec.n.max(lags);
    let mut k = vec![Complex64::default(); total];
    k[..lags].copy_from_slice(&x);
    let lag = |k: &[Complex64], idx: isize| -> Complex64 {
        if idx < 0 {
            k[(-idx) as usize].conj()
        } else {
            k[idx as usize]
        }
    };
    for m in lags..total {
        let mut acc = Complex64::default();
        for (ai, &ga) in gc.iter().enumerate().skip(1) {
            acc += ga * lag(&k, m as isize - ai as isize);
        }
        k[m] = -acc / g0;
    }
    k.truncate(spec.n);
    if spec.channel.is_real() {
        k.iter_mut().for_each(|v| v.im = 0.0);
    }
    if !(k[0].re > 0.0) || k.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::numeric(format!("autocorrelation is not valid: k_0 = {}", k[0])));
    }
    Ok(k)
}

/// The same sequence by direct quadrature of `1/S` on an FFT grid, doubled
/// until two successive grids agree to relative 1e-9. Kept as an independent
/// check on [`autocorr`].
pub fn autocorr_quadrature(spec: &GramSpec) -> Result<Vec<Complex64>> {
    spec.validate()?;
    if spec.mode == Mode::Zf {
        let roots = crate::spectral::channel_roots(&spec.channel)?;
        crate::spectral::check_paley_wiener(&roots)?;
    }
    let extra = spec.regularization();
    let eval = |grid: usize| -> Vec<Complex64> {
        let h = freq_response(&spec.channel, grid);
        let inv: Vec<Complex64> = h
            .iter()
            .map(|v| Complex64::new(1.0 / (v.norm_sqr() + extra), 0.0))
            .collect();
        let mut k = taps_from_grid(&inv);
        k.truncate(spec.n);
        k
    };
    let mut grid = grid_for(spec.channel.len().max(spec.n));
    let mut prev = eval(grid);
    while grid < MAX_GRID {
        grid *= 2;
        let next = eval(grid);
        let scale = next.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let diff = next
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if diff <= 1e-9 * scale {
            let mut k = next;
            if spec.channel.is_real() {
                k.iter_mut().for_each(|v| v.im = 0.0);
            }
            return Ok(k);
        }
        prev = next;
    }
    Err(Error::numeric(format!(
        "autocorrelation quadrature did not converge on a {grid}-point grid"
    )))
}

/// `i^H K̃ i` with `K̃[r][c] = k_{r-c}`, for a filter no longer than `k`.
pub fn quad_form(k: &[Complex64], i: &[GaussInt]) -> f64 {
    assert!(i.len() <= k.len(), "filter longer than the autocorrelation");
    let lag = |d: isize| if d < 0 { k[(-d) as usize].conj() } else { k[d as usize] };
    let ic: Vec<Complex64> = i.iter().map(|c| Complex64::new(c.re as f64, c.im as f64)).collect();
    let mut acc = Complex64::default();
    for (r, ir) in ic.iter().enumerate() {
        if *ir == Complex64::default() {
            continue;
        }
        for (c, icv) in ic.iter().enumerate() {
            acc += ir.conj() * lag(r as isize - c as isize) * icv;
        }
    }
    acc.re
}

/// Toeplitz Gram matrix `K̃_n` and a factor `F` with `FᵀF = K̃_n`.
///
/// Complex channels use the real embedding `[[Re K, -Im K], [Im K, Re K]]`
/// acting on `[Re i; Im i]`, so `matrix` and `factor` are `2n × 2n`.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    pub n: usize,
    pub complex: bool,
    pub k: Vec<Complex64>,
    pub matrix: DMatrix<f64>,
    pub factor: DMatrix<f64>,
    /// Diagonal loading that was needed for the Cholesky factorization.
    pub jitter: f64,
}

impl GramMatrix {
    /// Builds `K̃_n` from at least `n` lags.
    pub fn from_autocorr(k: &[Complex64], n: usize, complex: bool) -> Result<Self> {
        if n == 0 || k.len() < n {
            return Err(Error::input(format!("need {n} lags, have {}", k.len())));
        }
        let k = k[..n].to_vec();
        let lag = |d: isize| if d < 0 { k[(-d) as usize].conj() } else { k[d as usize] };
        let dim = if complex { 2 * n } else { n };
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        for r in 0..n {
            for c in 0..n {
                let v = lag(r as isize - c as isize);
                m[(r, c)] = v.re;
                if complex {
                    m[(r + n, c + n)] = v.re;
                    m[(r, c + n)] = -v.im;
                    m[(r + n, c)] = v.im;
                }
            }
        }
        let (factor, jitter) = jittered_cholesky(&m)?;
        Ok(GramMatrix { n, complex, k, matrix: m, factor, jitter })
    }

    /// Real dimension of the lattice.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `σ² = i^H K̃_n i`.
    pub fn quad_form(&self, i: &[GaussInt]) -> f64 {
        quad_form(&self.k, i)
    }

    /// Integer coordinates in the lattice basis for a Gaussian-integer filter.
    pub fn embed(&self, i: &[GaussInt]) -> Vec<i64> {
        let mut v = vec![0; self.dim()];
        for (r, c) in i.iter().enumerate().take(self.n) {
            v[r] = c.re;
            if self.complex {
                v[r + self.n] = c.im;
            }
        }
        v
    }

    /// Inverse of [`GramMatrix::embed`].
    pub fn unembed(&self, v: &[i64]) -> Vec<GaussInt> {
        (0..self.n)
            .map(|r| GaussInt::new(v[r], if self.complex { v[r + self.n] } else { 0 }))
            .collect()
    }
}

pub fn build_gram(spec: &GramSpec) -> Result<GramMatrix> {
    let k = autocorr(spec)?;
    GramMatrix::from_autocorr(&k, spec.n, !spec.channel.is_real())
}

/// Upper-triangular `F` with `FᵀF = M + εI`, escalating `ε` from zero up to
/// 1e-9 of the mean diagonal.
fn jittered_cholesky(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let dim = m.nrows();
    let scale = m.trace() / dim as f64;
    let asym = (m - m.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(Error::InvariantViolation(format!("Gram matrix not symmetric ({asym:.3e})")));
    }
    let mut eps = 0.0;
    loop {
        let loaded = m + DMatrix::<f64>::identity(dim, dim) * (eps * scale);
        if let Some(ch) = loaded.cholesky() {
            let f = ch.l().transpose();
            let err = (f.transpose() * &f - m).norm() / m.norm();
            if err > 1e-9 {
                return Err(Error::numeric(format!(
                    "Gram factor reconstruction error {err:.3e} exceeds 1e-9"
                )));
            }
            return Ok((f, eps * scale));
        }
        eps = if eps == 0.0 { 1e-15 } else { eps * 10.0 };
        if eps > 1e-9 {
            return Err(Error::numeric("Gram matrix is indefinite beyond the jitter tolerance"));
        }
    }
}
