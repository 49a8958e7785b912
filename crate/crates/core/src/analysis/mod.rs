//! Closed-form link analysis: per-subcarrier SNR, BER formulas, power-split
//! optimization and the multi-luminaire SINR model.

pub mod ber;
pub mod optimize;
pub mod sinr;
pub mod snr;

pub use ber::{averaging_factor, ber_per_subcarrier, ber_per_subcarrier_with, mean_ber};
pub use optimize::{argmin, kp_scan, optimize_kp, KpGrid, KpOptimum};
pub use sinr::{average_powers, average_sinr, best_server_sinr, sinr_point, SinrScene, SinrSource};
pub use snr::{snr_direct, snr_fd, snr_hd, snr_profile, FdNoiseGain, SnrProfile};

use crate::channel::LinkBudget;
use crate::error::Result;
use crate::ofdm::{LinkModel, Mode, ModulationScheme};

/// Switches shared by the analytic commands.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub fd_noise_gain: FdNoiseGain,
    /// Use `½·erfc(√snr)` for BPSK-SIM instead of `½·erfc(snr)`.
    pub bpsk_sim_sqrt: bool,
}

/// Subcarrier-averaged BER of an SNR profile.
pub fn average_ber(
    profile: &SnrProfile,
    scheme: ModulationScheme,
    bpsk_sim_sqrt: bool,
) -> Result<f64> {
    let per_bin = profile
        .per_bin
        .iter()
        .map(|&s| ber_per_subcarrier_with(s, scheme, bpsk_sim_sqrt))
        .collect::<Result<Vec<_>>>()?;
    mean_ber(&per_bin)
}

/// Average BER of `mode` on `model` under `budget`.
pub fn link_ber(
    model: &LinkModel,
    mode: Mode,
    scheme: ModulationScheme,
    budget: &LinkBudget,
    opts: &AnalysisOptions,
) -> Result<f64> {
    let profile = snr_profile(model, mode, budget, opts.fd_noise_gain)?;
    average_ber(&profile, scheme, opts.bpsk_sim_sqrt)
}
