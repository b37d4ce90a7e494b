//! Monte Carlo simulation and the sweeps behind the two-tap and random
//! channel figures.

pub mod config;
pub mod csv;
pub mod run;
pub mod sweeps;

pub use config::{ChannelSpec, CodeChoice, DecoderKind, NamedCode, SimConfig};
pub use run::{run, wilson_interval, DecoderUsed, SimResult};
pub use sweeps::{
    delay_invariance_check, random_channel_pdf, sweep_two_tap_complex, sweep_two_tap_real, DelayReport, PdfReport,
    TwoTapComplexRow, TwoTapRow,
};
