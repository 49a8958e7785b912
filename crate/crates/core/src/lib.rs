//! Relay-assisted indoor visible-light link simulator.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod error;
pub mod ofdm;
pub mod signal;

pub use analysis::{AnalysisOptions, FdNoiseGain, KpGrid, KpOptimum, SinrScene, SnrProfile};
pub use channel::{
    LedModel, LinkBudget, RawChannels, RelayChannelSet, RelayGeometry, RoomScenario,
};
pub use error::{Error, Result};
pub use ofdm::{LinkModel, McReport, Mode, ModulationScheme, OfdmConfig, RelaySettings};
pub use signal::{SampledSignal, SpectrumVector};
