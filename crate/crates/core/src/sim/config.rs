//! Experiment description for the Monte Carlo engine.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::code::{CodeSpec, CyclicCode, ML_LIMIT};
use crate::dsp::Poly;
use crate::error::{Error, Result};
use crate::spectral::{channel_roots, check_paley_wiener};
use crate::Mode;

/// Redraws allowed before a random channel spec gives up.
pub const MAX_REDRAWS: usize = 1000;

/// Explicit real taps `[h_0, .., h_p]`, or `p + 1` i.i.d. standard normal
/// taps drawn from `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelSpec {
    Taps(Vec<f64>),
    Random { p: usize, seed: u64 },
}

/// A random channel together with how many draws were rejected.
#[derive(Clone, Debug)]
pub struct DrawnChannel {
    pub channel: Poly,
    pub redraws: usize,
}

/// Draws `p + 1` standard normal taps from `rng` until the channel is
/// Paley-Wiener (when `require_pw`) and nonzero.
pub fn draw_gaussian_channel(rng: &mut ChaCha8Rng, p: usize, require_pw: bool) -> Result<DrawnChannel> {
    for redraws in 0..MAX_REDRAWS {
        let taps: Vec<f64> = (0..=p).map(|_| StandardNormal.sample(rng)).collect();
        let h = Poly::from_real(&taps)?;
        if h.is_zero() {
            continue;
        }
        if require_pw {
            match channel_roots(&h).and_then(|r| check_paley_wiener(&r)) {
                Ok(()) => {}
                Err(Error::PaleyWienerViolation { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        return Ok(DrawnChannel { channel: h, redraws });
    }
    Err(Error::numeric(format!("no admissible channel in {MAX_REDRAWS} draws")))
}

impl ChannelSpec {
    pub fn resolve(&self, require_pw: bool) -> Result<DrawnChannel> {
        match self {
            ChannelSpec::Taps(t) => {
                if t.is_empty() || t.iter().any(|v| !v.is_finite()) {
                    return Err(Error::input("channel taps must be a nonempty list of finite numbers"));
                }
                let h = Poly::from_real(t)?;
                if h.is_zero() {
                    return Err(Error::input("channel is identically zero"));
                }
                Ok(DrawnChannel { channel: h, redraws: 0 })
            }
            ChannelSpec::Random { p, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                draw_gaussian_channel(&mut rng, *p, require_pw)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedCode {
    /// Every word of length `block_length` over `Z_q`.
    Uncoded,
    /// Single parity check `g = D - 1` (symbols sum to 0 mod q), length
    /// `block_length`.
    Parity,
    /// The binary [7,4] Hamming code, `g = 1 + D + D³`.
    Hamming74,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CodeChoice {
    Named(NamedCode),
    Spec(CodeSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    /// ML when the codebook fits under the exhaustive limit, else hard.
    #[default]
    Auto,
    Ml,
    Hard,
}

fn default_block_length() -> usize {
    64
}

fn default_trials() -> u64 {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub channel: ChannelSpec,
    /// Constellation power over unit noise, in dB.
    pub snr_db: f64,
    pub mode: Mode,
    pub code: CodeChoice,
    /// Largest filter length searched; defaults to `max(p+1, 2p+4)` capped
    /// by what the code's padding allows.
    #[serde(default)]
    pub n_max: Option<usize>,
    pub q: u32,
    /// Bits per symbol for the multilevel construction (`q = 2^M`).
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Block length for the `uncoded` and `parity` codes.
    #[serde(default = "default_block_length")]
    pub block_length: usize,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to on for MMSE and off for ZF.
    #[serde(default)]
    pub dither: Option<bool>,
    /// Switches the channel noise off.
    #[serde(default)]
    pub noiseless: bool,
    #[serde(default)]
    pub decoder: DecoderKind,
}

impl SimConfig {
    pub fn new(channel: ChannelSpec, snr_db: f64, mode: Mode, code: CodeChoice, q: u32) -> Self {
        SimConfig {
            channel,
            snr_db,
            mode,
            code,
            n_max: None,
            q,
            m: None,
            trials: default_trials(),
            block_length: default_block_length(),
            seed: 0,
            dither: None,
            noiseless: false,
            decoder: DecoderKind::Auto,
        }
    }

    pub fn dither_on(&self) -> bool {
        self.dither.unwrap_or(self.mode == Mode::Mmse)
    }

    /// Builds the code and checks it against `q` and `M`.
    pub fn build_code(&self) -> Result<CyclicCode> {
        let code_q = if self.m.is_some() { 2 } else { self.q };
        let code = match &self.code {
            CodeChoice::Named(NamedCode::Uncoded) => CyclicCode::uncoded(self.block_length, code_q)?,
            CodeChoice::Named(NamedCode::Parity) => CyclicCode::parity(self.block_length, code_q)?,
            CodeChoice::Named(NamedCode::Hamming74) => CyclicCode::hamming74(),
            CodeChoice::Spec(s) => CyclicCode::from_spec(s)?,
        };
        if code.q() != code_q {
            return Err(Error::input(format!("code is over Z_{}, symbols are over Z_{code_q}", code.q())));
        }
        Ok(code)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::input("trials must be at least 1"));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::input("snr must be finite"));
        }
        if self.q < 2 {
            return Err(Error::input(format!("alphabet size q = {} must be at least 2", self.q)));
        }
        if let Some(m) = self.m {
            if !(1..=16).contains(&m) || self.q != 1 << m {
                return Err(Error::input(format!("multilevel needs q = 2^M, got q = {} and M = {m}", self.q)));
            }
            if self.decoder == DecoderKind::Hard {
                return Err(Error::input("the multilevel decoder is ML on the coded layer; hard is not available"));
            }
        }
        if self.n_max == Some(0) {
            return Err(Error::input("n_max must be at least 1"));
        }
        let code = self.build_code()?;
        if self.decoder == DecoderKind::Ml && code.size() > ML_LIMIT {
            return Err(Error::CapacityExceeded { codewords: code.size(), limit: ML_LIMIT });
        }
        Ok(())
    }
}
