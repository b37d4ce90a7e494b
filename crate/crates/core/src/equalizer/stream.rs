//! Long-stream Monte Carlo measurements of the FFE output: noise variance,
//! SINR, noise coloring and signal/noise correlation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::dsp::poly::convolve;
use crate::dsp::{Constellation, IntFilter, Poly};
use crate::equalizer::dither::{dither_add, DitherStream};
use crate::equalizer::ffe::{apply_ffe, design_ffe};
use crate::error::{Error, Result};
use crate::lattice::noise_enhancement;
use crate::Mode;

#[derive(Clone, Debug)]
pub struct StreamConfig {
    pub channel: Poly,
    pub filter: IntFilter,
    pub mode: Mode,
    /// Constellation power relative to unit noise, linear.
    pub snr: f64,
    pub q: u32,
    pub dither: bool,
    pub samples: usize,
    pub seed: u64,
    /// Lags of the normalized noise autocorrelation to report.
    pub max_lag: usize,
}

impl StreamConfig {
    pub fn new(channel: Poly, filter: IntFilter, mode: Mode, snr: f64) -> Self {
        StreamConfig {
            channel,
            filter,
            mode,
            snr,
            q: 64,
            dither: mode == Mode::Mmse,
            samples: 100_000,
            seed: 0,
            max_lag: 4,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StreamStats {
    pub samples: usize,
    /// Power of the transmitted sequence, used for the MMSE design.
    pub design_snr: f64,
    pub b0: f64,
    /// Measured `E[(v/b0 - x̃)²]`.
    pub sigma2: f64,
    /// Measured `E[(v - x̃)²]` with the bias-removal gain applied.
    pub sigma2_unbiased: f64,
    /// `i^H K̃ i` at the design power.
    pub analytic_sigma2: f64,
    /// Measured `E[x̃²]`.
    pub signal_power: f64,
    /// `E[x̃²] / E[(v/b0 - x̃)²]`.
    pub sinr: f64,
    /// Pearson correlation between the data combination `x * i` and the
    /// unbiased error.
    pub corr_signal_noise: f64,
    /// `E[e_k e_{k+l}] / E[e_k²]` for `l = 0..=max_lag`.
    pub noise_autocorr: Vec<f64>,
}

/// Transmit power of the constellation, or of the dithered sequence
/// (uniform on the modulo interval) when dither is on.
pub fn transmit_power(cst: &Constellation, dither: bool) -> f64 {
    if dither {
        cst.delta * cst.delta / 12.0
    } else {
        cst.snr
    }
}

pub fn measure_stream(cfg: &StreamConfig) -> Result<StreamStats> {
    if !cfg.channel.is_real() || !cfg.filter.is_real() {
        return Err(Error::Unsupported("stream measurements need a real channel and filter".into()));
    }
    if cfg.samples < 2 {
        return Err(Error::input("need at least two samples"));
    }
    let cst = Constellation::new(cfg.q, cfg.snr)?;
    let power = transmit_power(&cst, cfg.dither);
    let ffe = design_ffe(&cfg.channel, &cfg.filter, cfg.mode, power)?;
    let (before, after) = ffe.guard();
    let h = cfg.channel.real_coeffs();
    let lead = before + h.len() + cfg.filter.len();
    let total = lead + cfg.samples + after;

    let mut sym_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    sym_rng.set_stream(0);
    let t: Vec<f64> = (0..total).map(|_| cst.point(sym_rng.random_range(0..cfg.q))).collect();
    let u = if cfg.dither {
        let d = DitherStream::new(cfg.seed, cst.delta)?.block(1, total);
        dither_add(&t, &d, cst.delta)?
    } else {
        t.clone()
    };
    let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    noise_rng.set_stream(2);
    let mut r = convolve(&u, &h);
    r.truncate(total);
    for v in r.iter_mut() {
        *v += noise_rng.sample::<f64, _>(StandardNormal);
    }
    let v = apply_ffe(&r, &ffe, lead, cfg.samples)?;

    let taps: Vec<f64> = cfg.filter.real_taps()?.iter().map(|&c| c as f64).collect();
    let comb = |s: &[f64], k: usize| taps.iter().enumerate().map(|(m, &c)| c * s[k - m]).sum::<f64>();
    let n = cfg.samples as f64;
    let mut e_b = Vec::with_capacity(cfg.samples);
    let mut e_u = Vec::with_capacity(cfg.samples);
    let mut sig = 0.0;
    let mut cross = 0.0;
    let mut data_pow = 0.0;
    for (j, &vk) in v.iter().enumerate() {
        let k = lead + j;
        // the FFE estimates the combination of what was actually sent
        let sent = comb(&u, k);
        let data = comb(&t, k);
        e_b.push(vk / ffe.b0 - sent);
        e_u.push(vk - sent);
        sig += sent * sent;
        data_pow += data * data;
        cross += data * (vk - sent);
    }
    let sigma2 = e_b.iter().map(|e| e * e).sum::<f64>() / n;
    let sigma2_unbiased = e_u.iter().map(|e| e * e).sum::<f64>() / n;
    let signal_power = sig / n;
    let noise_autocorr = (0..=cfg.max_lag)
        .map(|l| {
            let m = cfg.samples.saturating_sub(l);
            if m == 0 {
                return 0.0;
            }
            let c: f64 = (0..m).map(|k| e_u[k] * e_u[k + l]).sum::<f64>() / m as f64;
            c / sigma2_unbiased
        })
        .collect();
    Ok(StreamStats {
        samples: cfg.samples,
        design_snr: power,
        b0: ffe.b0,
        sigma2,
        sigma2_unbiased,
        analytic_sigma2: noise_enhancement(&cfg.channel, &cfg.filter, cfg.mode, power)?,
        signal_power,
        sinr: signal_power / sigma2,
        corr_signal_noise: (cross / n) / ((data_pow / n) * sigma2_unbiased).sqrt(),
        noise_autocorr,
    })
}

/// Empirical SINR of the undithered MMSE front end.
pub fn measure_sinr(channel: &Poly, filter: &IntFilter, snr: f64, samples: usize, seed: u64) -> Result<f64> {
    let cfg = StreamConfig {
        dither: false,
        samples,
        seed,
        ..StreamConfig::new(channel.clone(), filter.clone(), Mode::Mmse, snr)
    };
    Ok(measure_stream(&cfg)?.sinr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(c: &[f64]) -> Poly {
        Poly::from_real(c).unwrap()
    }

    #[test]
    fn scalar_wiener_sinr() {
        for s in [1.0, 4.0, 20.0] {
            let got = measure_sinr(&real(&[1.0]), &IntFilter::identity(), s, 200_000, 5).unwrap();
            // relative standard error of the noise estimate is about sqrt(2/n)
            assert!((got / (s + 1.0) - 1.0).abs() < 0.02, "snr {s}: {got}");
        }
    }

    #[test]
    fn suboptimal_filter_lowers_sinr() {
        let h = real(&[1.0, 0.9]);
        let good = IntFilter::new(vec![1, 1]).unwrap();
        let bad = IntFilter::new(vec![1, -1]).unwrap();
        let a = measure_stream(&StreamConfig { samples: 50_000, ..StreamConfig::new(h.clone(), good, Mode::Mmse, 100.0) })
            .unwrap();
        let b = measure_stream(&StreamConfig { samples: 50_000, ..StreamConfig::new(h, bad, Mode::Mmse, 100.0) })
            .unwrap();
        assert!(a.sigma2 < b.sigma2);
    }

    #[test]
    fn zf_noise_matches_quadratic_form() {
        let h = real(&[0.6, 1.0, -0.3]);
        let i = IntFilter::new(vec![1, 1]).unwrap();
        let st = measure_stream(&StreamConfig { samples: 200_000, ..StreamConfig::new(h, i, Mode::Zf, 10.0) }).unwrap();
        assert_eq!(st.b0, 1.0);
        assert!((st.sigma2 / st.analytic_sigma2 - 1.0).abs() < 0.02);
        assert!((st.noise_autocorr[0] - 1.0).abs() < 1e-12);
    }
}
