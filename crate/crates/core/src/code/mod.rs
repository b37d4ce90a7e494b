//! Cyclic codes over `Z_q`, their decoders and the multilevel construction.

pub mod cyclic;
pub mod multilevel;

pub use cyclic::{mod_costs, CodeSpec, CyclicCode, HardDecision, ML_LIMIT};
pub use multilevel::{complete_layers, multilevel_decode, multilevel_encode, MultilevelWord};
