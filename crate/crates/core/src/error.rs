use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The channel has a zero on (or numerically on) the unit circle, so
    /// `log|H|^2` is not integrable and zero-forcing quantities diverge.
    #[error(
        "channel violates the Paley-Wiener condition: root {root} lies {distance:.3e} from the unit circle"
    )]
    PaleyWienerViolation { root: Complex64, distance: f64 },

    #[error("no monic filter among the candidates; best non-monic vector is {best:?} (sigma2 = {sigma2})")]
    NonMonicOptimum { best: Vec<[i64; 2]>, sigma2: f64 },

    #[error("generator polynomial does not divide D^N - 1 over Z_q; remainder {remainder:?}")]
    Divisibility { remainder: Vec<u32> },

    #[error("zero padding of {pad} symbols does not fit in a code of dimension {k}")]
    PadTooLong { pad: usize, k: usize },

    #[error("exhaustive decoding needs {codewords} codewords, above the limit of {limit}; use the hard decoder")]
    CapacityExceeded { codewords: f64, limit: f64 },

    #[error("lattice enumeration exceeded its budget of {budget} nodes")]
    BudgetExceeded { budget: u64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("trial {trial} (seed {seed}): {source}")]
    Trial { trial: u64, seed: u64, source: Box<Error> },
}

impl Error {
    /// Errors caused by malformed or out-of-domain caller input, as opposed
    /// to model or numeric failures on otherwise valid input.
    pub fn is_input_error(&self) -> bool {
        if let Error::Trial { source, .. } = self {
            return source.is_input_error();
        }
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::Divisibility { .. }
                | Error::PadTooLong { .. }
                | Error::Unsupported(_)
        )
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
