//! The end-to-end Monte Carlo engine.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::code::{multilevel_decode, multilevel_encode, CodeSpec, CyclicCode};
use crate::dsp::poly::convolve;
use crate::dsp::{mod_interval, Constellation, IntFilter, Poly};
use crate::equalizer::{
    apply_ffe, design_ffe, dfe_reconstruct, dither_remove, offset_correction, transmit_power, FfeRealization,
};
use crate::error::{Error, Result};
use crate::lattice::{default_n_max, select_filter};
use crate::sim::config::{DecoderKind, SimConfig};
use crate::spectral::{minkowski_bound, sigma2_zf_dfe};
use crate::{db_to_linear, Mode};

/// Trials per work unit; partial sums are combined in chunk order.
pub const CHUNK: u64 = 256;

/// Largest codebook `auto` decodes exhaustively.
pub const AUTO_ML_LIMIT: f64 = 4096.0;

/// Noise autocorrelation lags reported.
pub const NOISE_LAGS: usize = 4;

/// Confidence level of the reported intervals.
pub const CONFIDENCE: f64 = 0.95;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderUsed {
    Ml,
    Hard,
    Multilevel,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub seed: u64,
    /// Resolved channel taps.
    pub channel: Vec<f64>,
    /// Random channels rejected before this one.
    pub channel_redraws: usize,
    pub filter: IntFilter,
    pub code: CodeSpec,
    pub decoder: DecoderUsed,
    /// Constellation power, linear.
    pub snr: f64,
    /// Transmit power the MMSE design used (`Δ²/12` with dither).
    pub design_snr: f64,
    pub dither: bool,
    /// Data symbols per channel use.
    pub effective_rate: f64,
    pub trials: u64,
    pub symbols: u64,
    pub symbol_errors: u64,
    pub block_errors: u64,
    pub ser: f64,
    pub ser_ci: [f64; 2],
    pub bler: f64,
    pub bler_ci: [f64; 2],
    /// `i^H K̃ i` at the design power.
    pub sigma2_analytic: f64,
    /// Measured variance of `v/b0 - (i * u)` at the FFE output.
    pub sigma2_empirical: f64,
    /// Measured variance of `v - (i * u)`.
    pub sigma2_empirical_unbiased: f64,
    pub b0: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma2_zf_dfe: Option<f64>,
    /// `σ² / σ²_ZF-DFE` from the quadratic form.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma_analytic: Option<f64>,
    /// `σ² / σ²_ZF-DFE` from the measured noise.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma_empirical: Option<f64>,
    /// Minkowski bound on `γ` over `n = p+1 ..= n_max`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bound: Option<f64>,
    /// Normalized autocorrelation of the unbiased FFE noise at lags `0..=4`.
    pub noise_autocorr: Vec<f64>,
    pub ffe_taps: usize,
    pub runtime_seconds: f64,
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, confidence: f64) -> [f64; 2] {
    if n == 0 {
        return [0.0, 1.0];
    }
    let z = Normal::standard().inverse_cdf(0.5 + confidence / 2.0);
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    [(center - half).max(0.0), (center + half).min(1.0)]
}

#[derive(Clone, Debug, Default)]
struct Tally {
    symbols: u64,
    symbol_errors: u64,
    block_errors: u64,
    samples: u64,
    err_biased: f64,
    err_unbiased: f64,
    lag_sums: [f64; NOISE_LAGS + 1],
    lag_counts: [u64; NOISE_LAGS + 1],
}

impl Tally {
    fn add(&mut self, o: &Tally) {
        self.symbols += o.symbols;
        self.symbol_errors += o.symbol_errors;
        self.block_errors += o.block_errors;
        self.samples += o.samples;
        self.err_biased += o.err_biased;
        self.err_unbiased += o.err_unbiased;
        for l in 0..=NOISE_LAGS {
            self.lag_sums[l] += o.lag_sums[l];
            self.lag_counts[l] += o.lag_counts[l];
        }
    }
}

struct Pipeline {
    code: CyclicCode,
    m: Option<usize>,
    cst: Constellation,
    filter: IntFilter,
    taps: Vec<i64>,
    ffe: FfeRealization,
    h: Vec<f64>,
    decoder: DecoderUsed,
    dither: bool,
    noiseless: bool,
    offset: f64,
    /// Stream samples before the block.
    pre: usize,
    /// Stream samples after the block.
    post: usize,
    /// Positions of the block that carry data.
    data: std::ops::Range<usize>,
}

impl Pipeline {
    fn trial(&self, seed: u64, trial: u64) -> Result<Tally> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let n = self.code.n();
        let pad = self.filter.len() - 1;
        let q = self.cst.q;
        let x = match self.m {
            Some(m) => {
                let data_c: Vec<u32> = (0..self.code.k() - pad).map(|_| rng.random_range(0..2)).collect();
                let data_u: Vec<Vec<u32>> =
                    (1..m).map(|_| (0..n - pad).map(|_| rng.random_range(0..2)).collect()).collect();
                multilevel_encode(&self.code, &data_c, &data_u, m, self.filter.len())?.symbols()
            }
            None => {
                let data: Vec<u32> = (0..self.code.k() - pad).map(|_| rng.random_range(0..q)).collect();
                self.code.encode_zero_padded(&data, self.filter.len())?
            }
        };

        // the previous block also ends in `pad` zeros; everything further
        // out is an arbitrary neighbor
        let total = self.pre + n + self.post;
        let mut sym = Vec::with_capacity(total);
        sym.extend((0..self.pre - pad).map(|_| rng.random_range(0..q)));
        sym.extend(std::iter::repeat_n(0, pad));
        sym.extend_from_slice(&x);
        sym.extend((0..self.post).map(|_| rng.random_range(0..q)));
        let t: Vec<f64> = sym.iter().map(|&s| self.cst.point(s)).collect();
        let delta = self.cst.delta;
        let (u, d) = if self.dither {
            let d: Vec<f64> = (0..total).map(|_| mod_interval(delta * (rng.random::<f64>() - 0.5), delta)).collect();
            (t.iter().zip(&d).map(|(a, b)| mod_interval(a + b, delta)).collect(), d)
        } else {
            (t, Vec::new())
        };
        let mut y = convolve(&u, &self.h);
        y.truncate(total);
        if !self.noiseless {
            for v in y.iter_mut() {
                *v += rng.sample::<f64, _>(StandardNormal);
            }
        }
        let v = apply_ffe(&y, &self.ffe, self.pre, n)?;

        let mut tally = Tally { samples: n as u64, ..Tally::default() };
        let mut e_u = Vec::with_capacity(n);
        for (k, &vk) in v.iter().enumerate() {
            let at = self.pre + k;
            let sent: f64 = self.taps.iter().enumerate().map(|(m, &c)| c as f64 * u[at - m]).sum();
            let eb = vk / self.ffe.b0 - sent;
            tally.err_biased += eb * eb;
            e_u.push(vk - sent);
        }
        for (k, e) in e_u.iter().enumerate() {
            tally.err_unbiased += e * e;
            for l in 0..=NOISE_LAGS.min(n - 1 - k) {
                tally.lag_sums[l] += e * e_u[k + l];
                tally.lag_counts[l] += 1;
            }
        }

        let w = if self.dither {
            dither_remove(&v, &d[self.pre - pad..self.pre + n], &self.filter, delta)?
        } else {
            v
        };
        let z: Vec<f64> = w.iter().map(|&s| mod_interval(s + self.offset, delta)).collect();
        let xp = match self.decoder {
            DecoderUsed::Multilevel => {
                multilevel_decode(&z, &self.code, self.m.expect("multilevel has M"), &self.cst)?.symbols()
            }
            DecoderUsed::Ml => self.code.ml_decode(&z, &self.cst)?,
            DecoderUsed::Hard => self.code.hard_decode(&z, &self.cst)?.word,
        };
        let xhat = dfe_reconstruct(&xp, &self.filter, q)?;
        let errors = self.data.clone().filter(|&k| xhat[k] != x[k]).count() as u64;
        tally.symbols = self.data.len() as u64;
        tally.symbol_errors = errors;
        tally.block_errors = u64::from(errors > 0);
        Ok(tally)
    }
}

/// Runs `config.trials` independent blocks. Each trial draws from its own
/// ChaCha8 stream keyed by `(seed, trial)`, and partial sums are combined
/// in a fixed order, so results do not depend on the thread count.
pub fn run(config: &SimConfig) -> Result<SimResult> {
    let started = Instant::now();
    config.validate()?;
    let code = config.build_code()?;
    let dither = config.dither_on();
    let snr = db_to_linear(config.snr_db);
    let cst = Constellation::new(config.q, snr)?;
    let design_snr = transmit_power(&cst, dither);

    let drawn = config.channel.resolve(config.mode == Mode::Zf)?;
    let channel: Poly = drawn.channel;
    if !channel.is_real() {
        return Err(Error::Unsupported("the simulator handles real channels only".into()));
    }
    // a filter of length n needs n - 1 padded message symbols
    let n_max = config.n_max.unwrap_or_else(|| default_n_max(&channel)).min(code.k());
    let search = select_filter(&channel, n_max, config.mode, design_snr)?;
    let filter = search.filter.clone();
    let ffe = design_ffe(&channel, &filter, config.mode, design_snr)?;

    let pad = filter.len() - 1;
    let h = channel.real_coeffs();
    let (before, after) = ffe.guard();
    let pre = (before + h.len() - 1).max(pad);
    let decoder = match (config.m, config.decoder) {
        (Some(_), _) => DecoderUsed::Multilevel,
        (None, DecoderKind::Ml) => DecoderUsed::Ml,
        (None, DecoderKind::Hard) => DecoderUsed::Hard,
        (None, DecoderKind::Auto) if code.size() <= AUTO_ML_LIMIT => DecoderUsed::Ml,
        (None, DecoderKind::Auto) => DecoderUsed::Hard,
    };
    let n = code.n();
    let data = match config.m {
        Some(_) => 0..n - pad,
        None => n - code.k()..n - pad,
    };
    let effective_rate = match config.m {
        Some(m) => (code.k() - pad + (m - 1) * (n - pad)) as f64 / n as f64,
        None => code.effective_rate(filter.len())?,
    };
    let pipe = Pipeline {
        offset: offset_correction(&cst, &filter)?,
        taps: filter.real_taps()?,
        code: code.clone(),
        m: config.m,
        cst,
        filter: filter.clone(),
        ffe,
        h: h.clone(),
        decoder,
        dither,
        noiseless: config.noiseless,
        pre,
        post: after,
        data,
    };

    let seed = config.seed;
    let chunks = config.trials.div_ceil(CHUNK);
    let partials: Vec<Result<Tally>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Tally::default();
            for trial in c * CHUNK..((c + 1) * CHUNK).min(config.trials) {
                let t = pipe
                    .trial(seed, trial)
                    .map_err(|e| Error::Trial { trial, seed, source: Box::new(e) })?;
                acc.add(&t);
            }
            Ok(acc)
        })
        .collect();
    let mut total = Tally::default();
    for p in partials {
        total.add(&p?);
    }

    let samples = total.samples as f64;
    let sigma2_empirical = total.err_biased / samples;
    let sigma2_empirical_unbiased = total.err_unbiased / samples;
    let lag0 = total.lag_sums[0] / total.lag_counts[0] as f64;
    let noise_autocorr = (0..=NOISE_LAGS)
        .map(|l| {
            if total.lag_counts[l] == 0 || lag0 == 0.0 {
                0.0
            } else {
                total.lag_sums[l] / total.lag_counts[l] as f64 / lag0
            }
        })
        .collect();
    let zf_dfe = sigma2_zf_dfe(&channel).ok().filter(|&s| s > 0.0);
    let p = channel.strip_delay().1.degree();
    let bound = if p < n_max { minkowski_bound(&channel, p + 1, n_max).ok().map(|b| b.bound) } else { None };
    Ok(SimResult {
        config: config.clone(),
        seed,
        channel: h,
        channel_redraws: drawn.redraws,
        code: code.spec(),
        decoder,
        snr,
        design_snr,
        dither,
        effective_rate,
        trials: config.trials,
        symbols: total.symbols,
        symbol_errors: total.symbol_errors,
        block_errors: total.block_errors,
        ser: total.symbol_errors as f64 / total.symbols.max(1) as f64,
        ser_ci: wilson_interval(total.symbol_errors, total.symbols, CONFIDENCE),
        bler: total.block_errors as f64 / config.trials as f64,
        bler_ci: wilson_interval(total.block_errors, config.trials, CONFIDENCE),
        sigma2_analytic: search.sigma2,
        sigma2_empirical,
        sigma2_empirical_unbiased,
        b0: pipe.ffe.b0,
        sigma2_zf_dfe: zf_dfe,
        gamma_analytic: zf_dfe.map(|z| search.sigma2 / z),
        gamma_empirical: zf_dfe.map(|z| sigma2_empirical / z),
        bound,
        noise_autocorr,
        ffe_taps: pipe.ffe.taps.len(),
        filter,
        runtime_seconds: started.elapsed().as_secs_f64(),
    })
}
