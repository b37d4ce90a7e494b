//! Shared signal-processing substrate: polynomials, `Z_q` arithmetic and
//! the constellation/modulo front end.

pub mod constellation;
pub mod modular;
pub mod poly;

pub use constellation::{map_constellation, mod_interval, mod_interval_complex, Constellation};
pub use modular::{cyclic_convolve_mod, reduce, GaussInt, IntFilter};
pub use poly::{freq_response, linear_convolve, Poly};
