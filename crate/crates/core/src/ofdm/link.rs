//! Band-limited composite responses of one relay scenario, precomputed once
//! and shared by the analytic and Monte Carlo layers.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::channel::{
    amplification_factor_from_energy, band_limited_channel, end_to_end_cir, fd_relay_cir,
    symbol_energy, GaNumerator, LedModel, LinkBudget, RdFactor, RelayChannelSet,
};
use crate::error::{invalid, Error, Result};
use crate::signal::{
    convolve, convolve_discrete, frequency_response_at, rrc_filter, SampledSignal,
};

use super::config::OfdmConfig;
use super::frame::{precursor_symbols, symbol_taps, ChannelEstimate};

/// Transmission mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Source to destination only, with the whole budget at the source.
    Direct,
    /// Two-slot amplify-and-forward relaying.
    HalfDuplex,
    /// Simultaneous amplify-and-forward relaying with loop interference.
    FullDuplex,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Direct, Mode::HalfDuplex, Mode::FullDuplex];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Direct => "direct",
            Mode::HalfDuplex => "HD",
            Mode::FullDuplex => "FD",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "direct" => Ok(Mode::Direct),
            "hd" | "half-duplex" => Ok(Mode::HalfDuplex),
            "fd" | "full-duplex" => Ok(Mode::FullDuplex),
            _ => Err(invalid(format!(
                "unknown mode `{s}` (expected direct, HD or FD)"
            ))),
        }
    }
}

/// Relay front-end and noise settings that stay fixed across a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaySettings {
    pub responsivity: f64,
    /// One-sided noise spectral density N_o in W/Hz.
    pub noise_psd: f64,
    /// Relay processing delay in seconds.
    pub t_p: f64,
    pub led: LedModel,
    pub ga_numerator: GaNumerator,
    pub rd_factor: RdFactor,
    pub residual_tolerance: f64,
}

impl Default for RelaySettings {
    fn default() -> Self {
        Self {
            responsivity: 0.28,
            noise_psd: 1e-20,
            t_p: 50e-9,
            led: LedModel::default(),
            ga_numerator: GaNumerator::Total,
            rd_factor: RdFactor::Effective,
            residual_tolerance: 1e-9,
        }
    }
}

/// Full-duplex responses at unit amplification; both scale linearly in G_A.
#[derive(Debug, Clone)]
struct FdParts {
    relay_composite: SampledSignal,
    noise_cir: SampledSignal,
    relay_estimate: ChannelEstimate,
    noise_gains: Vec<Complex64>,
    terms: usize,
}

/// Precomputed composite responses and per-subcarrier gains.
#[derive(Debug, Clone)]
pub struct LinkModel {
    config: OfdmConfig,
    settings: RelaySettings,
    channels: RelayChannelSet,
    pulse_filter: SampledSignal,
    window_advance: usize,
    h_sd: SampledSignal,
    h_sr: SampledSignal,
    h_rd: SampledSignal,
    h_srd: SampledSignal,
    c_rd: SampledSignal,
    est_sd: ChannelEstimate,
    est_sr: ChannelEstimate,
    est_rd: ChannelEstimate,
    est_srd: ChannelEstimate,
    rd_gains: Vec<Complex64>,
    e_hsr: f64,
    loop_gain: f64,
    fd: Option<FdParts>,
}

impl LinkModel {
    pub fn new(
        channels: RelayChannelSet,
        config: OfdmConfig,
        settings: RelaySettings,
    ) -> Result<Self> {
        config.validate()?;
        let dt = config.sample_interval();
        crate::signal::check_intervals(dt, channels.sample_interval())?;
        if !(settings.responsivity > 0.0 && settings.noise_psd >= 0.0) {
            return Err(invalid(
                "responsivity must be positive and N_o non-negative",
            ));
        }
        let sps = config.samples_per_symbol;
        let g = rrc_filter(config.roll_off, config.filter_span, sps, dt)?;
        let window_advance = precursor_symbols(&convolve_discrete(&g, &g)?, sps);
        if window_advance > config.cp_length {
            return Err(invalid(format!(
                "pulse precursor of {window_advance} symbols exceeds the cyclic prefix"
            )));
        }
        let c_rd = channels.relay_to_destination(settings.rd_factor)?.clone();
        let bl = |c: &SampledSignal| band_limited_channel(c, &g, &g);
        let h_sd = bl(&channels.c_sd_eff)?;
        let h_sr = bl(&channels.c_sr_eff)?;
        let h_rd = bl(&c_rd)?;
        let h_srd = bl(&convolve(&channels.c_sr_eff, &c_rd)?)?;
        let est = |h: &SampledSignal| ChannelEstimate::from_composite(h, &config, window_advance);
        let e_hsr = symbol_energy(&h_sr, sps);

        let unit_budget = LinkBudget {
            p_total: 1.0,
            k_p: 0.5,
            responsivity: settings.responsivity,
            noise_psd: settings.noise_psd,
            noise_bandwidth: 1.0 / config.symbol_interval,
            t_p: settings.t_p,
        };
        unit_budget.validate()?;
        let bins: Vec<f64> = (1..config.n_subcarriers / 2)
            .map(|k| config.subcarrier_frequency(k))
            .collect();
        let (fd, loop_gain) = match fd_relay_cir(
            &channels,
            &unit_budget,
            1.0,
            &settings.led,
            settings.residual_tolerance,
            None,
        ) {
            Ok(u) => {
                let (relayed, noise_cir) =
                    end_to_end_cir(&channels.without_direct_path(), &u.signal, &u.noise, &c_rd)?;
                let relay_composite = bl(&relayed)?;
                let parts = FdParts {
                    relay_estimate: est(&relay_composite),
                    noise_gains: bins
                        .iter()
                        .map(|&f| frequency_response_at(&noise_cir, f))
                        .collect(),
                    relay_composite,
                    noise_cir,
                    terms: u.terms,
                };
                (Some(parts), u.loop_gain)
            }
            Err(Error::DivergentLoop { rho }) => (None, rho),
            Err(e) => return Err(e),
        };

        Ok(Self {
            est_sd: est(&h_sd),
            est_sr: est(&h_sr),
            est_rd: est(&h_rd),
            est_srd: est(&h_srd),
            rd_gains: bins
                .iter()
                .map(|&f| frequency_response_at(&c_rd, f))
                .collect(),
            config,
            settings,
            channels,
            pulse_filter: g,
            window_advance,
            h_sd,
            h_sr,
            h_rd,
            h_srd,
            c_rd,
            e_hsr,
            loop_gain,
            fd,
        })
    }

    pub fn config(&self) -> &OfdmConfig {
        &self.config
    }

    pub fn settings(&self) -> &RelaySettings {
        &self.settings
    }

    pub fn channels(&self) -> &RelayChannelSet {
        &self.channels
    }

    /// Root-raised-cosine taps used as both g_T and g_R.
    pub fn pulse_filter(&self) -> &SampledSignal {
        &self.pulse_filter
    }

    pub fn window_advance(&self) -> usize {
        self.window_advance
    }

    /// Relay-to-destination CIR selected by the settings.
    pub fn relay_to_destination(&self) -> &SampledSignal {
        &self.c_rd
    }

    pub fn h_sd(&self) -> &SampledSignal {
        &self.h_sd
    }

    pub fn h_sr(&self) -> &SampledSignal {
        &self.h_sr
    }

    pub fn h_rd(&self) -> &SampledSignal {
        &self.h_rd
    }

    /// Band-limited source→relay→destination cascade used in the second
    /// half-duplex slot, before the relay gain.
    pub fn h_srd(&self) -> &SampledSignal {
        &self.h_srd
    }

    /// Symbol-rate energy of the band-limited source-to-relay response.
    pub fn e_hsr(&self) -> f64 {
        self.e_hsr
    }

    /// ‖r·δ(t−T_p) ⊗ C_rr,eff‖₁.
    pub fn loop_gain(&self) -> f64 {
        self.loop_gain
    }

    /// Number of loop-series terms summed for the full-duplex response.
    pub fn fd_terms(&self) -> Result<usize> {
        Ok(self.fd_parts()?.terms)
    }

    fn fd_parts(&self) -> Result<&FdParts> {
        self.fd.as_ref().ok_or(Error::DivergentLoop {
            rho: self.loop_gain,
        })
    }

    pub fn data_subcarriers(&self) -> usize {
        self.config.data_subcarriers()
    }

    /// σ_v² = N_o / T_s.
    pub fn noise_variance(&self) -> f64 {
        self.settings.noise_psd / self.config.symbol_interval
    }

    /// Budget for a power split with the configured noise level.
    pub fn budget(&self, p_total: f64, k_p: f64) -> LinkBudget {
        self.budget_with_noise(p_total, k_p, self.noise_variance())
    }

    /// Budget whose N_o is set so that σ_v² equals `noise_variance`.
    pub fn budget_with_noise(&self, p_total: f64, k_p: f64, noise_variance: f64) -> LinkBudget {
        LinkBudget {
            p_total,
            k_p,
            responsivity: self.settings.responsivity,
            noise_psd: noise_variance * self.config.symbol_interval,
            noise_bandwidth: 1.0 / self.config.symbol_interval,
            t_p: self.settings.t_p,
        }
    }

    pub fn amplification_factor(&self, budget: &LinkBudget) -> Result<f64> {
        amplification_factor_from_energy(budget, self.e_hsr, self.settings.ga_numerator)
    }

    /// Data-bin gains of the direct, source-relay and relay-destination
    /// band-limited channels.
    pub fn gains_sd(&self) -> &[Complex64] {
        self.est_sd.data_gains()
    }

    pub fn gains_sr(&self) -> &[Complex64] {
        self.est_sr.data_gains()
    }

    pub fn gains_rd(&self) -> &[Complex64] {
        self.est_rd.data_gains()
    }

    pub fn estimate_sd(&self) -> &ChannelEstimate {
        &self.est_sd
    }

    pub fn estimate_srd(&self) -> &ChannelEstimate {
        &self.est_srd
    }

    /// Continuous-time response of the relay-to-destination CIR at each
    /// data subcarrier.
    pub fn rd_frequency_gains(&self) -> &[Complex64] {
        &self.rd_gains
    }

    /// Mean of |H_SD[k]|² over the data subcarriers.
    pub fn mean_sd_gain(&self) -> f64 {
        let g = self.gains_sd();
        g.iter().map(|h| h.norm_sqr()).sum::<f64>() / g.len() as f64
    }

    /// Reference SNR P·r²·mean|H_SD|²/σ_v² of the unrelayed link.
    pub fn reference_snr(&self, p_total: f64, noise_variance: f64) -> f64 {
        p_total * self.settings.responsivity.powi(2) * self.mean_sd_gain() / noise_variance
    }

    /// Full-duplex composite signal response `g_T ⊗ h_signal ⊗ g_R` and
    /// relay-noise CIR `h_noise` for amplification `g_a`.
    pub fn fd_responses(&self, g_a: f64) -> Result<(SampledSignal, SampledSignal)> {
        let fd = self.fd_parts()?;
        let signal = self.h_sd.add(&fd.relay_composite.scale(g_a))?;
        Ok((signal, fd.noise_cir.scale(g_a)))
    }

    /// Full-duplex data-bin gains `H_signal[k]` and `H_noise[k]`.
    pub fn fd_gains(&self, g_a: f64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let fd = self.fd_parts()?;
        let signal = self
            .gains_sd()
            .iter()
            .zip(fd.relay_estimate.data_gains())
            .map(|(&d, &r)| d + r * g_a)
            .collect();
        let noise = fd.noise_gains.iter().map(|&n| n * g_a).collect();
        Ok((signal, noise))
    }

    /// Symbol-rate taps of a composite response, with the first tap's lag.
    pub(crate) fn taps(&self, h: &SampledSignal) -> (Vec<f64>, i64) {
        let (t, first) = symbol_taps(h, self.config.samples_per_symbol);
        (t.iter().map(|c| c.re).collect(), first)
    }
}
