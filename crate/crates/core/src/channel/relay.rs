//! Relay power budget, amplification factor and the full-duplex
//! loop-interference response.

use crate::error::{config, invalid, Error, Result};
use crate::signal::{convolve, convolve_discrete, delayed_impulse, SampledSignal};

use super::led::{led_impulse_response, LedModel, DEFAULT_LED_TRUNCATION};

/// Safety cap on the number of loop-series terms.
const MAX_LOOP_TERMS: usize = 100_000;

/// Where a channel set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelSource {
    File,
    Synthetic,
}

impl ChannelSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChannelSource::File => "file",
            ChannelSource::Synthetic => "synthetic",
        }
    }
}

/// Raw optical CIRs of one scenario, before LED filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct RawChannels {
    pub c_sd: SampledSignal,
    pub c_sr: SampledSignal,
    pub c_rd: SampledSignal,
    pub c_rr: SampledSignal,
}

/// The four LED-filtered CIRs of a relay scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayChannelSet {
    pub c_sd_eff: SampledSignal,
    pub c_sr_eff: SampledSignal,
    pub c_rd_eff: SampledSignal,
    pub c_rr_eff: SampledSignal,
    /// Relay-to-destination CIR before LED filtering, when known.
    pub c_rd_raw: Option<SampledSignal>,
    pub source: ChannelSource,
}

impl RelayChannelSet {
    pub fn new(
        c_sd_eff: SampledSignal,
        c_sr_eff: SampledSignal,
        c_rd_eff: SampledSignal,
        c_rr_eff: SampledSignal,
        source: ChannelSource,
    ) -> Result<Self> {
        let set = Self {
            c_sd_eff,
            c_sr_eff,
            c_rd_eff,
            c_rr_eff,
            c_rd_raw: None,
            source,
        };
        set.validate()?;
        Ok(set)
    }

    /// Filters every raw CIR through the LED response.
    pub fn from_raw(raw: &RawChannels, led: &LedModel, source: ChannelSource) -> Result<Self> {
        let dt = raw.c_sd.sample_interval();
        let h = led_impulse_response(led, dt, DEFAULT_LED_TRUNCATION)?;
        let mut set = Self::new(
            convolve(&raw.c_sd, &h)?,
            convolve(&raw.c_sr, &h)?,
            convolve(&raw.c_rd, &h)?,
            convolve(&raw.c_rr, &h)?,
            source,
        )?;
        set.c_rd_raw = Some(raw.c_rd.clone());
        Ok(set)
    }

    pub fn sample_interval(&self) -> f64 {
        self.c_sd_eff.sample_interval()
    }

    fn validate(&self) -> Result<()> {
        let dt = self.sample_interval();
        for (name, c) in [
            ("c_sr", &self.c_sr_eff),
            ("c_rd", &self.c_rd_eff),
            ("c_rr", &self.c_rr_eff),
        ] {
            crate::signal::check_intervals(dt, c.sample_interval())
                .map_err(|_| config(format!("{name} is not on the c_sd sample grid")))?;
        }
        for (name, c) in [
            ("c_sd", &self.c_sd_eff),
            ("c_sr", &self.c_sr_eff),
            ("c_rd", &self.c_rd_eff),
        ] {
            if !(c.energy() > 0.0) {
                return Err(invalid(format!("{name} has no energy")));
            }
        }
        Ok(())
    }

    /// Copy with the direct path removed, for relay-only studies.
    pub fn without_direct_path(&self) -> Self {
        let mut out = self.clone();
        out.c_sd_eff = self.c_sd_eff.scale(0.0);
        out
    }

    /// Relay-to-destination CIR used at the end of the relayed path.
    pub fn relay_to_destination(&self, factor: RdFactor) -> Result<&SampledSignal> {
        match factor {
            RdFactor::Effective => Ok(&self.c_rd_eff),
            RdFactor::Raw => self
                .c_rd_raw
                .as_ref()
                .ok_or_else(|| config("raw relay-to-destination CIR not available")),
        }
    }
}

/// Power split and noise parameters of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Total electrical power P in watts.
    pub p_total: f64,
    /// Fraction of P given to the source.
    pub k_p: f64,
    /// Photodetector responsivity r in A/W.
    pub responsivity: f64,
    /// One-sided noise spectral density N_o in W/Hz.
    pub noise_psd: f64,
    /// Noise bandwidth B in hertz; σ_v² = N_o·B.
    pub noise_bandwidth: f64,
    /// Relay processing delay T_p in seconds.
    pub t_p: f64,
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_total.is_finite() && self.p_total > 0.0) {
            return Err(invalid(format!(
                "total power must be positive, got {}",
                self.p_total
            )));
        }
        if !(self.k_p > 0.0 && self.k_p < 1.0) {
            return Err(invalid(format!("K_p = {} outside (0, 1)", self.k_p)));
        }
        if !(self.responsivity.is_finite() && self.responsivity > 0.0) {
            return Err(invalid("responsivity must be positive"));
        }
        if !(self.noise_psd.is_finite() && self.noise_psd >= 0.0) {
            return Err(invalid("noise PSD must be non-negative"));
        }
        if !(self.noise_bandwidth.is_finite() && self.noise_bandwidth > 0.0) {
            return Err(invalid("noise bandwidth must be positive"));
        }
        if !(self.t_p.is_finite() && self.t_p >= 0.0) {
            return Err(invalid("processing delay must be non-negative"));
        }
        Ok(())
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_psd * self.noise_bandwidth
    }

    pub fn source_power(&self) -> f64 {
        self.p_total * self.k_p
    }

    pub fn relay_power(&self) -> f64 {
        self.p_total * (1.0 - self.k_p)
    }

    pub fn with_power(mut self, p_total: f64) -> Self {
        self.p_total = p_total;
        self
    }

    pub fn with_kp(mut self, k_p: f64) -> Self {
        self.k_p = k_p;
        self
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Which power the printed "source transmit power" in the G_A formula
/// stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GaNumerator {
    /// The total budget P.
    #[default]
    Total,
    /// The source share P·K_p.
    Source,
}

/// Relay-to-destination factor at the end of the relayed path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RdFactor {
    /// LED-filtered CIR.
    #[default]
    Effective,
    /// Raw optical CIR.
    Raw,
}

/// Average power at the relay receiver:
/// `P·K_p·r²·E_sr + P·(1−K_p)·r²·E_rr + σ_v²`.
pub fn relay_received_power(channels: &RelayChannelSet, budget: &LinkBudget) -> f64 {
    let r2 = budget.responsivity.powi(2);
    budget.source_power() * r2 * channels.c_sr_eff.energy()
        + budget.relay_power() * r2 * channels.c_rr_eff.energy()
        + budget.noise_variance()
}

/// Energy of a dimensionless composite response seen by a symbol-rate
/// sampler: Σ|h(mT_s)|² over the samples on the symbol grid.
pub fn symbol_energy(h: &SampledSignal, samples_per_symbol: usize) -> f64 {
    let sps = samples_per_symbol.max(1) as i64;
    (h.start_offset()..h.end_offset())
        .filter(|n| n.rem_euclid(sps) == 0)
        .map(|n| h.at(n).norm_sqr())
        .sum()
}

/// Relay amplification factor
/// `G_A = √(2(1−K_p)·P_s / (2·K_p·P_s·r²·E_hsr + σ_v²))`, with `P_s` chosen
/// by `numerator`.
pub fn amplification_factor_from_energy(
    budget: &LinkBudget,
    e_hsr: f64,
    numerator: GaNumerator,
) -> Result<f64> {
    let p_s = match numerator {
        GaNumerator::Total => budget.p_total,
        GaNumerator::Source => budget.source_power(),
    };
    let k = budget.k_p;
    let den = 2.0 * k * p_s * budget.responsivity.powi(2) * e_hsr + budget.noise_variance();
    if !(den > 0.0) {
        return Err(invalid("amplification factor denominator is zero"));
    }
    let g = (2.0 * (1.0 - k) * p_s / den).sqrt();
    if !(g.is_finite() && g > 0.0) {
        return Err(invalid(format!(
            "amplification factor is not positive: {g}"
        )));
    }
    Ok(g)
}

/// [`amplification_factor_from_energy`] for a band-limited source-to-relay
/// response.
pub fn amplification_factor(
    budget: &LinkBudget,
    h_sr: &SampledSignal,
    samples_per_symbol: usize,
    numerator: GaNumerator,
) -> Result<f64> {
    amplification_factor_from_energy(budget, symbol_energy(h_sr, samples_per_symbol), numerator)
}

/// Full-duplex relay responses for the signal and noise inputs.
#[derive(Debug, Clone)]
pub struct FdRelayResponse {
    pub signal: SampledSignal,
    pub noise: SampledSignal,
    /// Series terms summed for the signal response.
    pub terms: usize,
    /// ‖L‖₁ of the loop operator.
    pub loop_gain: f64,
}

/// Loop operator `L = r·δ(t − T_p) ⊗ C_rr,eff` and its L1 gain.
pub fn loop_operator(
    channels: &RelayChannelSet,
    budget: &LinkBudget,
) -> Result<(SampledSignal, f64)> {
    let dt = channels.sample_interval();
    let delay = delayed_impulse(budget.t_p, budget.responsivity, dt)?;
    let l = convolve(&delay, &channels.c_rr_eff)?;
    let rho = l.l1_norm();
    Ok((l, rho))
}

/// Front term `G_A·r·δ(t − T_p) ⊗ C_LED(t)`.
pub fn fd_front_term(
    budget: &LinkBudget,
    g_a: f64,
    led: &LedModel,
    sample_interval: f64,
) -> Result<SampledSignal> {
    let delay = delayed_impulse(budget.t_p, g_a * budget.responsivity, sample_interval)?;
    let h_led = led_impulse_response(led, sample_interval, DEFAULT_LED_TRUNCATION)?;
    convolve(&delay, &h_led)
}

/// Solves `h = b + L ⊗ h` as the series `Σ L^{⊗k} ⊗ b`.
///
/// Summation stops once the newest term's norm falls below
/// `residual_tolerance` times the accumulated norm, which bounds the
/// relative residual by `ρ·residual_tolerance`. Returns the solution and the
/// number of terms.
pub fn solve_loop(
    front: &SampledSignal,
    loop_op: &SampledSignal,
    residual_tolerance: f64,
) -> Result<(SampledSignal, usize)> {
    let rho = loop_op.l1_norm();
    if rho >= 1.0 {
        return Err(Error::DivergentLoop { rho });
    }
    let mut acc = front.clone();
    if loop_op.is_all_zero() || front.is_all_zero() {
        return Ok((acc, 1));
    }
    let mut term = front.clone();
    let mut terms = 1;
    loop {
        term = convolve(loop_op, &term)?;
        acc = acc.add(&term)?;
        terms += 1;
        if term.sample_norm() < residual_tolerance * acc.sample_norm() {
            break;
        }
        if terms >= MAX_LOOP_TERMS {
            return Err(Error::DivergentLoop { rho });
        }
    }
    Ok((acc, terms))
}

/// Full-duplex relay impulse responses.
///
/// Both responses solve `h = G_A·r·δ(t−T_p) ⊗ C_LED + r·δ(t−T_p) ⊗ h ⊗ C_rr,eff`.
/// `noise_front` replaces the front term of the noise response when given.
pub fn fd_relay_cir(
    channels: &RelayChannelSet,
    budget: &LinkBudget,
    g_a: f64,
    led: &LedModel,
    residual_tolerance: f64,
    noise_front: Option<&SampledSignal>,
) -> Result<FdRelayResponse> {
    let dt = channels.sample_interval();
    let (l, rho) = loop_operator(channels, budget)?;
    if rho >= 1.0 {
        return Err(Error::DivergentLoop { rho });
    }
    let front = fd_front_term(budget, g_a, led, dt)?;
    let (signal, terms) = solve_loop(&front, &l, residual_tolerance)?;
    let noise = match noise_front {
        Some(b) => solve_loop(b, &l, residual_tolerance)?.0,
        None => signal.clone(),
    };
    Ok(FdRelayResponse {
        signal,
        noise,
        terms,
        loop_gain: rho,
    })
}

/// Band-limited electrical channel `g_T ⊗ C_eff ⊗ g_R`.
///
/// The pulse filters are dimensionless FIR taps, so the result is the
/// dimensionless response from a transmitted symbol to the matched-filter
/// output: an impulse `a·δ(t)` channel yields `a·(g_T ⊛ g_R)`.
pub fn band_limited_channel(
    c_eff: &SampledSignal,
    g_t: &SampledSignal,
    g_r: &SampledSignal,
) -> Result<SampledSignal> {
    let pulse = convolve_discrete(g_t, g_r)?;
    convolve(c_eff, &pulse)
}

/// End-to-end signal and relay-noise responses of the full-duplex link:
/// `h_signal = C_sd,eff + C_sr,eff ⊗ h_FD,signal ⊗ c_rd` and
/// `h_noise = h_FD,noise ⊗ c_rd`.
pub fn end_to_end_cir(
    channels: &RelayChannelSet,
    h_fd_signal: &SampledSignal,
    h_fd_noise: &SampledSignal,
    c_rd: &SampledSignal,
) -> Result<(SampledSignal, SampledSignal)> {
    let relayed = convolve(&convolve(&channels.c_sr_eff, h_fd_signal)?, c_rd)?;
    let h_signal = channels.c_sd_eff.add(&relayed)?;
    let h_noise = convolve(h_fd_noise, c_rd)?;
    Ok((h_signal, h_noise))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{frequency_response, rrc_filter};
    use num_complex::Complex64;

    const DT: f64 = 5e-9;

    fn impulse_at(index: usize, area: f64) -> SampledSignal {
        let mut v = vec![0.0; index + 1];
        v[index] = area / DT;
        SampledSignal::from_real(&v, DT).unwrap()
    }

    fn unit_energy(len: usize) -> SampledSignal {
        let amp = 1.0 / (len as f64 * DT).sqrt();
        SampledSignal::from_real(&vec![amp; len], DT).unwrap()
    }

    fn budget(p: f64, k: f64) -> LinkBudget {
        LinkBudget {
            p_total: p,
            k_p: k,
            responsivity: 0.28,
            noise_psd: 0.0,
            noise_bandwidth: 4e6,
            t_p: 50e-9,
        }
    }

    fn set(rr: SampledSignal) -> RelayChannelSet {
        RelayChannelSet::new(
            impulse_at(3, 1e-5),
            unit_energy(4),
            unit_energy(6),
            rr,
            ChannelSource::Synthetic,
        )
        .unwrap()
    }

    fn rel_diff(a: &SampledSignal, b: &SampledSignal) -> f64 {
        a.sub(b).unwrap().sample_norm() / b.sample_norm()
    }

    #[test]
    fn channel_set_validation() {
        let z = SampledSignal::zeros(3, DT).unwrap();
        assert!(RelayChannelSet::new(
            z.clone(),
            unit_energy(2),
            unit_energy(2),
            z.clone(),
            ChannelSource::File
        )
        .is_err());
        let other_grid = SampledSignal::from_real(&[1.0], 1e-9).unwrap();
        assert!(RelayChannelSet::new(
            unit_energy(2),
            unit_energy(2),
            unit_energy(2),
            other_grid,
            ChannelSource::File
        )
        .is_err());
        // The loop channel alone may be silent.
        let s = set(z);
        assert!(s.relay_to_destination(RdFactor::Raw).is_err());
        assert!(s.relay_to_destination(RdFactor::Effective).is_ok());
    }

    #[test]
    fn received_power_terms() {
        let s = set(SampledSignal::zeros(1, DT).unwrap());
        let b = budget(1e-3, 0.3);
        let want = 1e-3 * 0.3 * 0.0784 * s.c_sr_eff.energy();
        assert!((relay_received_power(&s, &b) - want).abs() <= 1e-15 * want);

        let s = set(unit_energy(5));
        let b = budget(1e-3, 0.8118);
        assert!((relay_received_power(&s, &b) - 7.84e-5).abs() < 1e-18);

        // Equal energies: K_p = 0.5 is the mean of the two swapped splits.
        let b1 = budget(2e-3, 0.2);
        let b2 = budget(2e-3, 0.8);
        let mid = relay_received_power(&s, &budget(2e-3, 0.5));
        let mean = 0.5 * (relay_received_power(&s, &b1) + relay_received_power(&s, &b2));
        assert!((mid - mean).abs() < 1e-18);

        let mut noisy = b;
        noisy.noise_psd = 1e-20;
        assert!(
            (relay_received_power(&s, &noisy) - relay_received_power(&s, &b) - 4e-14).abs() < 1e-19
        );
    }

    #[test]
    fn amplification_factor_cases() {
        let mut b = budget(1e-3, 0.5);
        b.responsivity = 1.0;
        let g = amplification_factor_from_energy(&b, 1.0, GaNumerator::Total).unwrap();
        assert!((g - 1.0).abs() < 1e-15);

        // Noise-free: P cancels.
        let b = budget(1e-3, 0.3);
        let e: f64 = 2.5e-10;
        let want = ((1.0 - 0.3) / (0.3 * 0.0784 * e)).sqrt();
        for p in [1e-6, 1e-3, 1.0] {
            let g =
                amplification_factor_from_energy(&b.with_power(p), e, GaNumerator::Total).unwrap();
            assert!((g - want).abs() / want < 1e-12);
        }

        let mut noisy = budget(1e-3, 0.4);
        noisy.noise_psd = 1e-20;
        let total = amplification_factor_from_energy(&noisy, e, GaNumerator::Total).unwrap();
        let source = amplification_factor_from_energy(&noisy, e, GaNumerator::Source).unwrap();
        assert!(source < total);

        let mut zero = budget(1e-3, 0.4);
        zero.noise_psd = 0.0;
        assert!(amplification_factor_from_energy(&zero, 0.0, GaNumerator::Total).is_err());
    }

    #[test]
    fn amplification_factor_decreases_with_kp() {
        let mut b = budget(1e-3, 0.5);
        b.noise_psd = 1e-20;
        let mut prev = f64::INFINITY;
        for i in 1..1000 {
            let k = i as f64 / 1000.0;
            let g =
                amplification_factor_from_energy(&b.with_kp(k), 1e-9, GaNumerator::Total).unwrap();
            assert!(g < prev, "not decreasing at K_p = {k}");
            prev = g;
        }
    }

    #[test]
    fn symbol_energy_picks_symbol_grid() {
        let h = SampledSignal::from_real(&[1.0, 5.0, 2.0, 5.0, 3.0], 1.0)
            .unwrap()
            .with_start_offset(-2);
        // indices -2, 0, 2 fall on the grid for sps = 2.
        assert_eq!(symbol_energy(&h, 2), 1.0 + 4.0 + 9.0);
    }

    #[test]
    fn no_loop_gives_single_term() {
        let s = set(SampledSignal::zeros(4, DT).unwrap());
        let b = budget(1e-3, 0.5);
        let led = LedModel::default();
        let fd = fd_relay_cir(&s, &b, 3.0, &led, 1e-9, None).unwrap();
        assert_eq!(fd.terms, 1);
        let want = crate::signal::convolve(
            &delayed_impulse(50e-9, 3.0 * 0.28, DT).unwrap(),
            &led_impulse_response(&led, DT, DEFAULT_LED_TRUNCATION).unwrap(),
        )
        .unwrap();
        assert_eq!(fd.signal, want);
        assert_eq!(fd.noise, want);
    }

    #[test]
    fn scalar_loop_matches_geometric_series() {
        let alpha = 0.1 / 0.28;
        let s = set(impulse_at(0, alpha));
        let b = budget(1e-3, 0.5);
        let led = LedModel::default();
        let g_a = 2.0;
        let fd = fd_relay_cir(&s, &b, g_a, &led, 1e-9, None).unwrap();

        // Closed form: Σ_k (rα)^k · G_A·r·C_LED(t − (k+1)T_p).
        let h_led = led_impulse_response(&led, DT, DEFAULT_LED_TRUNCATION).unwrap();
        let shift = 10; // T_p / Δt
        let mut want = SampledSignal::zeros(1, DT).unwrap();
        for k in 0..40 {
            let term = h_led
                .scale(g_a * 0.28 * 0.1f64.powi(k))
                .shifted(shift * (k as i64 + 1));
            want = want.add(&term).unwrap();
        }
        assert!(rel_diff(&fd.signal, &want) < 1e-9);
        // Geometric DC gain, scaled by the truncated LED response's own DC gain.
        let dc = g_a * 0.28 * h_led.dc_gain().re / (1.0 - 0.1);
        assert!((fd.signal.dc_gain().re - dc).abs() / dc < 1e-9);
    }

    fn random_loop() -> SampledSignal {
        // Smooth positive loop CIR with L1 gain well under one.
        let v: Vec<f64> = (0..30).map(|i| 1e7 * (-(i as f64) / 6.0).exp()).collect();
        SampledSignal::from_real(&v, DT).unwrap()
    }

    #[test]
    fn fixed_point_residual() {
        let s = set(random_loop());
        let b = budget(1e-3, 0.5);
        let led = LedModel::default();
        let fd = fd_relay_cir(&s, &b, 1.5, &led, 1e-9, None).unwrap();
        assert!(fd.loop_gain > 0.05 && fd.loop_gain < 1.0);
        let (l, _) = loop_operator(&s, &b).unwrap();
        let front = fd_front_term(&b, 1.5, &led, DT).unwrap();
        let rhs = front.add(&convolve(&l, &fd.signal).unwrap()).unwrap();
        let residual = rhs.sub(&fd.signal).unwrap().sample_norm() / fd.signal.sample_norm();
        assert!(residual < 1e-8, "residual {residual}");
    }

    #[test]
    fn series_equals_jacobi_iteration() {
        let s = set(random_loop());
        let b = budget(1e-3, 0.5);
        let led = LedModel::default();
        let fd = fd_relay_cir(&s, &b, 1.0, &led, 1e-9, None).unwrap();
        let (l, _) = loop_operator(&s, &b).unwrap();
        let front = fd_front_term(&b, 1.0, &led, DT).unwrap();
        let mut h = SampledSignal::zeros(1, DT).unwrap();
        for _ in 0..fd.terms {
            h = front.add(&convolve(&l, &h).unwrap()).unwrap();
        }
        assert!(rel_diff(&fd.signal, &h) < 1e-9);
    }

    #[test]
    fn divergent_loop_reports_rho() {
        let s = set(impulse_at(2, 4.0));
        let b = budget(1e-3, 0.5);
        match fd_relay_cir(&s, &b, 1.0, &LedModel::default(), 1e-9, None) {
            Err(Error::DivergentLoop { rho }) => assert!((rho - 1.12).abs() < 1e-9),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn distinct_noise_front_term() {
        let s = set(random_loop());
        let b = budget(1e-3, 0.5);
        let led = LedModel::default();
        let front = fd_front_term(&b, 1.0, &led, DT).unwrap();
        let fd = fd_relay_cir(&s, &b, 4.0, &led, 1e-9, Some(&front)).unwrap();
        assert!(rel_diff(&fd.noise.scale(4.0), &fd.signal) < 1e-9);
    }

    #[test]
    fn band_limited_of_impulse_is_pulse() {
        let g = rrc_filter(0.5, 8, 8, DT).unwrap();
        let c = impulse_at(0, 2.5);
        let h = band_limited_channel(&c, &g, &g).unwrap();
        let rc = convolve_discrete(&g, &g).unwrap().scale(2.5);
        assert!(rel_diff(&h, &rc) < 1e-12);
        assert!((h.at(0).re - 2.5).abs() < 1e-12);
    }

    #[test]
    fn band_limited_is_linear_and_delays_add() {
        let g = rrc_filter(0.5, 8, 8, DT).unwrap();
        let a = impulse_at(7, 1.0);
        let b = random_loop();
        let lhs = band_limited_channel(&a.scale(2.0).add(&b).unwrap(), &g, &g).unwrap();
        let rhs = band_limited_channel(&a, &g, &g)
            .unwrap()
            .scale(2.0)
            .add(&band_limited_channel(&b, &g, &g).unwrap())
            .unwrap();
        assert!(rel_diff(&lhs, &rhs) < 1e-12);
        // Centred filters peak at 0; the channel peak at 7 carries through.
        let h = band_limited_channel(&a, &g, &g).unwrap();
        assert!((h.peak_index() - (a.peak_index() + g.peak_index() + g.peak_index())).abs() <= 1);
    }

    #[test]
    fn end_to_end_paths() {
        let s = set(SampledSignal::zeros(1, DT).unwrap());
        let zero = SampledSignal::zeros(1, DT).unwrap();
        let (h_sig, h_noise) = end_to_end_cir(&s, &zero, &zero, &s.c_rd_eff).unwrap();
        assert!(rel_diff(&h_sig, &s.c_sd_eff) < 1e-15);
        assert!(h_noise.is_all_zero());

        let fd = fd_relay_cir(
            &s,
            &budget(1e-3, 0.5),
            2.0,
            &LedModel::default(),
            1e-9,
            None,
        )
        .unwrap();
        let relay_only = s.without_direct_path();
        let (h_rel, _) = end_to_end_cir(&relay_only, &fd.signal, &fd.noise, &s.c_rd_eff).unwrap();
        let (h_all, _) = end_to_end_cir(&s, &fd.signal, &fd.noise, &s.c_rd_eff).unwrap();
        // Superposition against an independently composed reference.
        let oracle = naive_convolve(&naive_convolve(&s.c_sr_eff, &fd.signal), &s.c_rd_eff);
        assert!(rel_diff(&h_rel, &oracle) < 1e-10);
        let direct_plus = h_rel.add(&s.c_sd_eff).unwrap();
        assert!(rel_diff(&h_all, &direct_plus) < 1e-10);
        let e_sum = h_all.energy();
        assert!((e_sum - direct_plus.energy()).abs() / e_sum < 1e-10);
    }

    fn naive_convolve(a: &SampledSignal, b: &SampledSignal) -> SampledSignal {
        let dt = a.sample_interval();
        let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
        for (i, x) in a.samples().iter().enumerate() {
            for (j, y) in b.samples().iter().enumerate() {
                out[i + j] += x * y * dt;
            }
        }
        SampledSignal::new(out, dt)
            .unwrap()
            .with_start_offset(a.start_offset() + b.start_offset())
    }

    #[test]
    fn dc_gain_consistency() {
        let s = set(random_loop());
        for c in [&s.c_sd_eff, &s.c_sr_eff, &s.c_rd_eff, &s.c_rr_eff] {
            let h = frequency_response(c, 64).unwrap();
            assert!((h.bins()[0] - c.dc_gain()).norm() <= 1e-12 * c.dc_gain().norm());
        }
    }
}
