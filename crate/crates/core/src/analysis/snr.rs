use num_complex::Complex64;

use crate::channel::LinkBudget;
use crate::error::{invalid, Result};
use crate::ofdm::{LinkModel, Mode};

/// How the relay-noise gain enters the full-duplex SNR denominator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum FdNoiseGain {
    /// `1 + |r·H_noise[k]|²`: `h_noise` already carries G_A, so it is applied
    /// once. This matches the waveform model.
    #[default]
    Single,
    /// `1 + |r·G_A·H_noise[k]|²`, applying G_A a second time on top of the
    /// `h_noise` that already contains it.
    Verbatim,
}

impl FdNoiseGain {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Single => "single",
            Self::Verbatim => "verbatim",
        }
    }
}

impl std::str::FromStr for FdNoiseGain {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "single" => Ok(Self::Single),
            "verbatim" => Ok(Self::Verbatim),
            _ => Err(invalid(format!(
                "unknown fd_noise_gain `{s}` (single or verbatim)"
            ))),
        }
    }
}

/// Per-data-subcarrier linear SNR of one mode, bins k = 1..N/2−1.
///
/// A noiseless budget yields `+∞` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrProfile {
    pub mode: Mode,
    pub per_bin: Vec<f64>,
}

fn ratio(num: f64, noise: f64) -> f64 {
    if noise > 0.0 {
        num / noise
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Full-duplex SNR `P·K_p·r²·|H_signal|² / (σ_v²·(1 + |r·g·H_noise|²))`
/// with `g` = 1 or G_A per `noise_gain`.
pub fn snr_fd(
    h_signal: Complex64,
    h_noise: Complex64,
    budget: &LinkBudget,
    g_a: f64,
    noise_gain: FdNoiseGain,
) -> f64 {
    let r = budget.responsivity;
    let g = match noise_gain {
        FdNoiseGain::Single => 1.0,
        FdNoiseGain::Verbatim => g_a,
    };
    let relay = 1.0 + (r * g * h_noise.norm()).powi(2);
    ratio(
        budget.source_power() * r * r * h_signal.norm_sqr(),
        budget.noise_variance() * relay,
    )
}

/// Half-duplex SNR: direct slot plus the amplified relayed slot.
pub fn snr_hd(
    h_sd: Complex64,
    h_sr: Complex64,
    h_rd: Complex64,
    budget: &LinkBudget,
    g_a: f64,
) -> f64 {
    let r = budget.responsivity;
    let ps = budget.source_power();
    let s2 = budget.noise_variance();
    let direct = ratio(ps * r * r * h_sd.norm_sqr(), s2);
    let relayed = ratio(
        ps * r.powi(4) * g_a * g_a * (h_sr * h_rd).norm_sqr(),
        s2 * (1.0 + (r * g_a * h_rd.norm()).powi(2)),
    );
    direct + relayed
}

/// Unrelayed SNR with the whole budget at the source.
pub fn snr_direct(h_sd: Complex64, budget: &LinkBudget) -> f64 {
    let r = budget.responsivity;
    ratio(
        budget.p_total * r * r * h_sd.norm_sqr(),
        budget.noise_variance(),
    )
}

/// SNR profile of `mode` for a budget built by `model`.
pub fn snr_profile(
    model: &LinkModel,
    mode: Mode,
    budget: &LinkBudget,
    noise_gain: FdNoiseGain,
) -> Result<SnrProfile> {
    budget.validate()?;
    let per_bin = match mode {
        Mode::Direct => model
            .gains_sd()
            .iter()
            .map(|&h| snr_direct(h, budget))
            .collect(),
        Mode::HalfDuplex => {
            let g_a = model.amplification_factor(budget)?;
            model
                .gains_sd()
                .iter()
                .zip(model.gains_sr())
                .zip(model.gains_rd())
                .map(|((&sd, &sr), &rd)| snr_hd(sd, sr, rd, budget, g_a))
                .collect()
        }
        Mode::FullDuplex => {
            let g_a = model.amplification_factor(budget)?;
            let (sig, noise) = model.fd_gains(g_a)?;
            sig.iter()
                .zip(&noise)
                .map(|(&s, &n)| snr_fd(s, n, budget, g_a, noise_gain))
                .collect()
        }
    };
    Ok(SnrProfile { mode, per_bin })
}
