//! Optical channel construction: LED filtering, CIR synthesis and file I/O,
//! and the relay power budget and full-duplex loop response.

pub mod cir_io;
pub mod led;
pub mod relay;
pub mod synth;

pub use cir_io::{fmt_f64, format_cir, load_cir, parse_cir, store_cir};
pub use led::{
    effective_cir, led_frequency_response, led_impulse_response, LedModel, DEFAULT_LED_TRUNCATION,
};
pub use relay::{
    amplification_factor, amplification_factor_from_energy, band_limited_channel, dbm_to_watts,
    end_to_end_cir, fd_front_term, fd_relay_cir, loop_operator, relay_received_power, solve_loop,
    symbol_energy, watts_to_dbm, ChannelSource, FdRelayResponse, GaNumerator, LinkBudget,
    RawChannels, RdFactor, RelayChannelSet,
};
pub use synth::{
    lambertian_order, synthesize_cir, Node, Point, RelayGeometry, RoomScenario, SPEED_OF_LIGHT,
};
