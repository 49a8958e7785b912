//! Shared fixtures for the benchmarks.

use vlcsim_core::channel::{ChannelSource, RelayGeometry};
use vlcsim_core::{LinkModel, OfdmConfig, RelayChannelSet, RelaySettings, SampledSignal};

/// Link model of the default relay geometry on the default grid.
pub fn default_model() -> LinkModel {
    let config = OfdmConfig::default();
    let settings = RelaySettings::default();
    let raw = RelayGeometry::default()
        .synthesize(config.sample_interval())
        .expect("default geometry synthesizes");
    let channels = RelayChannelSet::from_raw(&raw, &settings.led, ChannelSource::Synthetic)
        .expect("default channels are valid");
    LinkModel::new(channels, config, settings).expect("default model builds")
}

/// Smooth decaying real signal of `len` samples.
pub fn decaying_signal(len: usize, sample_interval: f64) -> SampledSignal {
    let v: Vec<f64> = (0..len).map(|i| (-(i as f64) / 40.0).exp()).collect();
    SampledSignal::from_real(&v, sample_interval).expect("valid signal")
}
