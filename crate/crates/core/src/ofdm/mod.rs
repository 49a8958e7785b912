//! DCO-OFDM transceiver and Monte Carlo BER engine.

pub mod config;
pub mod frame;
pub mod link;
pub mod modulation;
pub mod montecarlo;

pub use config::OfdmConfig;
pub use frame::{
    add_cp, hermitian_frame, ofdm_modulate, precursor_symbols, receive_frame, remove_cp,
    shape_waveform, symbol_taps, transmit_through, ChannelEstimate, Demodulator,
};
pub use link::{LinkModel, Mode, RelaySettings};
pub use modulation::{demap_symbols, map_bits, ml_detect, nearest_index, ModulationScheme};
pub use montecarlo::{
    monte_carlo_sweep, run_monte_carlo, wilson_interval, McGrid, McReport, OperatingPoint, Z_95,
};
