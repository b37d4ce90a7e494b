//! Cyclic-coded integer-forcing equalization for Gaussian ISI channels.
//!
//! The receiver equalizes a known channel `H(D)` to a short monic integer
//! response `I(D)` instead of to unity. Because a cyclic code over `Z_q` is
//! closed under integer cyclic convolution, the equalized block can be
//! decoded directly and the data recovered afterwards by a decision-feedback
//! recursion over `Z_q`.
//!
//! Modules:
//! - [`dsp`]: polynomials, `Z_q` arithmetic, constellation and modulo.
//! - [`lattice`]: Toeplitz Gram matrices, LLL, enumeration, filter search.
//! - [`spectral`]: closed-form benchmarks (ZF-DFE noise, bounds, capacity).
//! - [`code`]: cyclic codes, decoders and the multilevel construction.
//! - [`equalizer`]: feed-forward filters, dither and DFE reconstruction.
//! - [`sim`]: Monte Carlo engine and the figure sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod code;
pub mod dsp;
pub mod equalizer;
pub mod error;
pub mod lattice;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};

/// Equalizer design criterion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Zf,
    Mmse,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zf" => Ok(Mode::Zf),
            "mmse" => Ok(Mode::Mmse),
            other => Err(Error::InvalidInput(format!("unknown mode {other:?}, expected zf or mmse"))),
        }
    }
}

/// Converts decibels to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
