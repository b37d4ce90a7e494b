//! Gram matrices of the integer-forcing quadratic form, LLL reduction,
//! enumeration and the integer filter search built on them.

pub mod enumerate;
pub mod gram;
pub mod lll;
pub mod search;

pub use enumerate::{closest_with_fixed, shortest_vector, svp_bruteforce};
pub use gram::{autocorr, autocorr_quadrature, build_gram, quad_form, GramMatrix, GramSpec};
pub use lll::{lll_reduce, LllResult, DEFAULT_DELTA};
pub use search::{
    default_n_max, noise_enhancement, select_filter, select_filter_with, Candidate, CandidateSource,
    FilterSearchResult, SearchOptions,
};
