//! Parameter sweeps for the two-tap channels and the random channel
//! ensemble, plus the delay invariance check.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::statistics::{Data, OrderStatistics};

use crate::dsp::Poly;
use crate::error::{Error, Result};
use crate::lattice::search::TIE_TOL;
use crate::lattice::{default_n_max, noise_enhancement, select_filter};
use crate::sim::config::draw_gaussian_channel;
use crate::spectral::{minkowski_bound, sigma2_zf_dfe};
use crate::{linear_to_db, Mode};

/// Closest a two-tap coefficient may come to the unit circle.
pub const UNIT_CIRCLE_MARGIN: f64 = 1e-6;

/// Largest `|a|` kept by the complex sweep.
pub const COMPLEX_RADIUS: f64 = 0.99;

/// `1 + a D^p`.
pub fn two_tap(a: Complex64, p: usize) -> Result<Poly> {
    if p == 0 {
        return Err(Error::input("two-tap delay p must be at least 1"));
    }
    let mut c = vec![Complex64::new(0.0, 0.0); p + 1];
    c[0] = Complex64::new(1.0, 0.0);
    c[p] = a;
    Poly::new(c)
}

fn filter_string(f: &crate::dsp::IntFilter) -> String {
    serde_json::to_string(f).expect("filters serialize")
}

/// `γ` of the selected ZF filter.
fn zf_gamma(h: &Poly, n_max: usize) -> Result<(crate::lattice::FilterSearchResult, f64)> {
    let res = select_filter(h, n_max, Mode::Zf, 1.0)?;
    let g = res.sigma2 / sigma2_zf_dfe(h)?;
    Ok((res, g))
}

#[derive(Clone, Debug, Serialize)]
pub struct TwoTapRow {
    pub a: f64,
    pub filter: String,
    pub gamma: f64,
    pub gamma_db: f64,
    /// `min(1/(1-a²), 2/(1+|a|))`.
    pub analytic_gamma: f64,
    pub analytic_gamma_db: f64,
    /// Minkowski bound for `1 + aD`.
    pub bound: f64,
    pub bound_db: f64,
    /// Linear-equalizer enhancement `1/(1-a²)`.
    pub zf_le: f64,
    pub zf_le_db: f64,
}

/// `γ` for `1 + a D^p` over a real grid, with the closed form, the bound
/// and the ZF-LE curve alongside.
pub fn sweep_two_tap_real(a_grid: &[f64], p: usize, n_max: Option<usize>) -> Result<Vec<TwoTapRow>> {
    for &a in a_grid {
        if !(a.abs() <= 1.0 - UNIT_CIRCLE_MARGIN) {
            return Err(Error::input(format!("two-tap coefficient {a} is not inside the unit circle")));
        }
    }
    a_grid
        .par_iter()
        .map(|&a| {
            let h = two_tap(Complex64::new(a, 0.0), p)?;
            let n = n_max.unwrap_or_else(|| default_n_max(&two_tap(Complex64::new(a, 0.0), 1).unwrap()));
            let base = two_tap(Complex64::new(a, 0.0), 1)?;
            let (res, gamma) = zf_gamma(&h, (n - 1) * p + 1)?;
            let zf_le = 1.0 / (1.0 - a * a);
            let analytic = zf_le.min(2.0 / (1.0 + a.abs()));
            let bound = minkowski_bound(&base, 2, n.max(2))?.bound;
            Ok(TwoTapRow {
                a,
                filter: filter_string(&res.filter),
                gamma,
                gamma_db: linear_to_db(gamma),
                analytic_gamma: analytic,
                analytic_gamma_db: linear_to_db(analytic),
                bound,
                bound_db: linear_to_db(bound),
                zf_le,
                zf_le_db: linear_to_db(zf_le),
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct TwoTapComplexRow {
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    /// Phase of `a` in radians.
    pub phase: f64,
    pub filter: String,
    pub gamma: f64,
    pub gamma_db: f64,
    pub zf_le_db: f64,
}

/// `γ` for `1 + a D^p` over the grid `re × im`, keeping points with
/// `|a| ≤ 0.99`.
pub fn sweep_two_tap_complex(
    re: &[f64],
    im: &[f64],
    p: usize,
    n_max: Option<usize>,
) -> Result<Vec<TwoTapComplexRow>> {
    let points: Vec<Complex64> = re
        .iter()
        .flat_map(|&x| im.iter().map(move |&y| Complex64::new(x, y)))
        .filter(|a| a.norm() <= COMPLEX_RADIUS)
        .collect();
    points
        .par_iter()
        .map(|&a| {
            let h = two_tap(a, p)?;
            let n = n_max.unwrap_or_else(|| default_n_max(&two_tap(a, 1).unwrap()));
            let (res, gamma) = zf_gamma(&h, (n - 1) * p + 1)?;
            Ok(TwoTapComplexRow {
                re: a.re,
                im: a.im,
                abs: a.norm(),
                phase: a.arg(),
                filter: filter_string(&res.filter),
                gamma,
                gamma_db: linear_to_db(gamma),
                zf_le_db: linear_to_db(1.0 / (1.0 - a.norm_sqr())),
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `count / (samples · width)`.
    pub density: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PdfReport {
    pub p: usize,
    pub samples: usize,
    /// Draws rejected for a zero too close to the unit circle.
    pub redraws: usize,
    pub median_db: f64,
    pub min_db: f64,
    pub max_db: f64,
    pub bin_width_db: f64,
    pub histogram: Vec<HistogramBin>,
    /// Samples whose `γ` exceeded the Minkowski bound.
    pub bound_violations: usize,
    pub gamma_db: Vec<f64>,
    pub bound_db: Vec<f64>,
}

/// Freedman-Diaconis width `2 IQR n^{-1/3}`.
pub fn freedman_diaconis_width(values: &[f64]) -> f64 {
    let mut d = Data::new(values.to_vec());
    let iqr = d.upper_quartile() - d.lower_quartile();
    2.0 * iqr / (values.len() as f64).cbrt()
}

/// Equal-width histogram over `[min, max]` normalized to a density.
pub fn histogram(values: &[f64], bins: Option<usize>) -> (f64, Vec<HistogramBin>) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let count = match bins {
        Some(b) => b.max(1),
        None => {
            let w = freedman_diaconis_width(values);
            if w > 0.0 && span > 0.0 {
                ((span / w).ceil() as usize).max(1)
            } else {
                1
            }
        }
    };
    let width = if span > 0.0 { span / count as f64 } else { 1.0 };
    let mut counts = vec![0usize; count];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(count - 1);
        counts[b] += 1;
    }
    let n = values.len() as f64;
    let out = counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| HistogramBin {
            lo: lo + b as f64 * width,
            hi: lo + (b + 1) as f64 * width,
            count: c,
            density: c as f64 / (n * width),
        })
        .collect();
    (width, out)
}

/// Samples `γ` (dB) of the best ZF filter for channels with `p + 1`
/// i.i.d. standard normal taps. Sample `j` for memory `p` uses its own
/// ChaCha8 stream, so results do not depend on the thread count.
pub fn random_channel_pdf(
    p_list: &[usize],
    samples: usize,
    seed: u64,
    bins: Option<usize>,
    n_max: Option<usize>,
) -> Result<Vec<PdfReport>> {
    if samples == 0 {
        return Err(Error::input("need at least one sample"));
    }
    p_list
        .iter()
        .map(|&p| {
            if p == 0 {
                return Err(Error::input("channel memory p must be at least 1"));
            }
            let per: Vec<(f64, f64, usize)> = (0..samples)
                .into_par_iter()
                .map(|j| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(((p as u64) << 40) | j as u64);
                    let drawn = draw_gaussian_channel(&mut rng, p, true)?;
                    let h = drawn.channel;
                    let n = n_max.unwrap_or_else(|| default_n_max(&h));
                    let (_, gamma) = zf_gamma(&h, n)?;
                    let bound = minkowski_bound(&h, p + 1, n.max(p + 1))?.bound;
                    Ok((linear_to_db(gamma), linear_to_db(bound), drawn.redraws))
                })
                .collect::<Result<_>>()?;
            let gamma_db: Vec<f64> = per.iter().map(|s| s.0).collect();
            let bound_db: Vec<f64> = per.iter().map(|s| s.1).collect();
            let (bin_width_db, histogram) = histogram(&gamma_db, bins);
            Ok(PdfReport {
                p,
                samples,
                redraws: per.iter().map(|s| s.2).sum(),
                median_db: Data::new(gamma_db.clone()).median(),
                min_db: gamma_db.iter().copied().fold(f64::INFINITY, f64::min),
                max_db: gamma_db.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                bin_width_db,
                histogram,
                bound_violations: per.iter().filter(|s| s.0 > s.1 + 1e-9).count(),
                gamma_db,
                bound_db,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DelayRow {
    pub p: usize,
    pub filter: String,
    pub gamma: f64,
    /// `σ²` of the `p`-upsampled base filter on the delayed channel.
    pub upsampled_sigma2: f64,
    /// The selected filter is the upsampled base filter, or ties it.
    pub upsampled_matches: bool,
    pub rel_diff: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DelayReport {
    pub a: [f64; 2],
    pub base_filter: String,
    pub base_gamma: f64,
    pub rows: Vec<DelayRow>,
    pub max_rel_diff: f64,
    pub tolerance: f64,
    pub ok: bool,
}

/// Compares `γ(1 + aD^p)` with `γ(1 + aD)` for each `p`.
pub fn delay_invariance_check(a: Complex64, p_list: &[usize]) -> Result<DelayReport> {
    const TOL: f64 = 1e-6;
    if !(a.norm() <= 1.0 - UNIT_CIRCLE_MARGIN) {
        return Err(Error::input(format!("two-tap coefficient {a} is not inside the unit circle")));
    }
    let base = two_tap(a, 1)?;
    let n = default_n_max(&base);
    let (bres, bgamma) = zf_gamma(&base, n)?;
    let rows: Vec<DelayRow> = p_list
        .par_iter()
        .map(|&p| {
            let h = two_tap(a, p)?;
            let (res, gamma) = zf_gamma(&h, (n - 1) * p + 1)?;
            let up = bres.filter.upsample(p);
            let upsampled_sigma2 = noise_enhancement(&h, &up, Mode::Zf, 1.0)?;
            let tie = (upsampled_sigma2 - res.sigma2).abs() <= TIE_TOL.max(TOL) * res.sigma2;
            Ok(DelayRow {
                p,
                filter: filter_string(&res.filter),
                gamma,
                upsampled_sigma2,
                upsampled_matches: res.filter == up || tie,
                rel_diff: (gamma - bgamma).abs() / bgamma,
            })
        })
        .collect::<Result<_>>()?;
    let max_rel_diff = rows.iter().map(|r| r.rel_diff).fold(0.0, f64::max);
    let ok = max_rel_diff <= TOL && rows.iter().all(|r| r.upsampled_matches);
    Ok(DelayReport {
        a: [a.re, a.im],
        base_filter: filter_string(&bres.filter),
        base_gamma: bgamma,
        rows,
        max_rel_diff,
        tolerance: TOL,
        ok,
    })
}
