//! Frame construction, pulse shaping, the noisy channel and the
//! equalizing receiver.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};

use crate::channel::LinkBudget;
use crate::error::{invalid, Error, Result};
use crate::signal::{convolve, convolve_discrete, idft, SampledSignal, SpectrumVector};

use super::config::OfdmConfig;

/// Channel gains below this magnitude cannot be equalized.
pub const DEAD_SUBCARRIER_FLOOR: f64 = 1e-15;

/// Hermitian-symmetric frame `[0, S_1 … S_{N/2−1}, 0, S*_{N/2−1} … S*_1]`.
pub fn hermitian_frame(
    data: &[Complex64],
    n: usize,
    symbol_interval: f64,
) -> Result<SpectrumVector> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(invalid(format!(
            "frame size {n} must be even and at least 4"
        )));
    }
    if data.len() != n / 2 - 1 {
        return Err(invalid(format!(
            "{} data symbols given, N = {n} needs {}",
            data.len(),
            n / 2 - 1
        )));
    }
    let mut bins = vec![Complex64::new(0.0, 0.0); n];
    for (k, &s) in data.iter().enumerate() {
        bins[k + 1] = s;
        bins[n - k - 1] = s.conj();
    }
    SpectrumVector::new(bins, symbol_interval)
}

/// Prepends the last `cp_length` samples.
pub fn add_cp(x: &[Complex64], cp_length: usize) -> Result<Vec<Complex64>> {
    if cp_length >= x.len() {
        return Err(invalid(format!(
            "cyclic prefix {cp_length} must be shorter than the {}-sample frame",
            x.len()
        )));
    }
    let mut out = Vec::with_capacity(x.len() + cp_length);
    out.extend_from_slice(&x[x.len() - cp_length..]);
    out.extend_from_slice(x);
    Ok(out)
}

pub fn remove_cp(y: &[Complex64], cp_length: usize) -> Result<Vec<Complex64>> {
    if cp_length >= y.len() {
        return Err(invalid("cyclic prefix longer than the received block"));
    }
    Ok(y[cp_length..].to_vec())
}

/// Time-domain OFDM frame with cyclic prefix, as symbol-rate samples.
pub fn ofdm_modulate(data: &[Complex64], config: &OfdmConfig) -> Result<Vec<Complex64>> {
    let frame = hermitian_frame(data, config.n_subcarriers, config.symbol_interval)?;
    let x = idft(&frame)?;
    add_cp(x.samples(), config.cp_length)
}

/// Places symbol-rate samples on the simulation grid as an impulse train
/// (sample n at index n·samples_per_symbol) and filters it with g_T.
pub fn shape_waveform(
    frame_samples: &[Complex64],
    g_t: &SampledSignal,
    samples_per_symbol: usize,
) -> Result<SampledSignal> {
    if frame_samples.is_empty() || samples_per_symbol == 0 {
        return Err(invalid("nothing to shape"));
    }
    let mut train =
        vec![Complex64::new(0.0, 0.0); (frame_samples.len() - 1) * samples_per_symbol + 1];
    for (n, &s) in frame_samples.iter().enumerate() {
        train[n * samples_per_symbol] = s;
    }
    convolve_discrete(&SampledSignal::new(train, g_t.sample_interval())?, g_t)
}

/// Received matched-filter output
/// `{√(P·K_p)·r·x ⊗ h_signal + r·v_R ⊗ h_noise + v_D} ⊗ g_R`.
///
/// `v_R` and `v_D` are independent real white Gaussian sequences on the
/// simulation grid with per-sample variance σ_v², drawn from `rng_seed`
/// (relay noise first). The channel responses use the integral convolution;
/// g_R is applied as a discrete FIR with dimensionless taps.
pub fn transmit_through(
    waveform: &SampledSignal,
    h_signal: &SampledSignal,
    h_noise: Option<&SampledSignal>,
    g_r: &SampledSignal,
    budget: &LinkBudget,
    rng_seed: u64,
) -> Result<SampledSignal> {
    let amplitude = budget.source_power().sqrt() * budget.responsivity;
    let sigma = budget.noise_variance().sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let dt = waveform.sample_interval();
    let mut rx = convolve(waveform, h_signal)?.scale(amplitude);
    if let Some(h) = h_noise {
        let v_r = white_noise(&mut rng, waveform.len(), sigma, dt)?
            .with_start_offset(waveform.start_offset());
        rx = rx.add(&convolve(&v_r, h)?.scale(budget.responsivity))?;
    }
    let v_d = white_noise(&mut rng, rx.len(), sigma, dt)?.with_start_offset(rx.start_offset());
    convolve_discrete(&rx.add(&v_d)?, g_r)
}

fn white_noise(rng: &mut ChaCha8Rng, len: usize, sigma: f64, dt: f64) -> Result<SampledSignal> {
    let v: Vec<f64> = (0..len)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut *rng);
            sigma * z
        })
        .collect();
    SampledSignal::from_real(&v, dt)
}

/// Number of whole symbol periods a response extends before t = 0.
pub fn precursor_symbols(h: &SampledSignal, samples_per_symbol: usize) -> usize {
    let start = h.start_offset();
    if start >= 0 {
        0
    } else {
        (start.unsigned_abs() as usize).div_ceil(samples_per_symbol)
    }
}

/// Samples of `h` at the symbol instants `m·T_s`, with the lag of the first.
pub fn symbol_taps(h: &SampledSignal, samples_per_symbol: usize) -> (Vec<Complex64>, i64) {
    let sps = samples_per_symbol as i64;
    let first = h.start_offset().div_euclid(sps) + i64::from(h.start_offset().rem_euclid(sps) != 0);
    let last = (h.end_offset() - 1).div_euclid(sps);
    let taps = (first..=last).map(|m| h.at(m * sps)).collect();
    (taps, first)
}

/// Per-subcarrier gains seen by a receiver whose DFT window starts
/// `window_advance` symbols before the end of the cyclic prefix.
///
/// `gains[k] = Σ_m h(m·T_s)·e^{−j2π(m + a)k/N}`; with the window placed this
/// way a composite spanning `[−a, b]` symbols with `a + b ≤ N_cp` acts as a
/// circular convolution, so these gains are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub gains: Vec<Complex64>,
    pub window_advance: usize,
}

impl ChannelEstimate {
    /// Gains of a dimensionless composite response `g_T ⊗ C ⊗ g_R`.
    pub fn from_composite(h: &SampledSignal, config: &OfdmConfig, window_advance: usize) -> Self {
        let (taps, first) = symbol_taps(h, config.samples_per_symbol);
        Self::from_taps(&taps, first, config.n_subcarriers, window_advance)
    }

    /// Gains of symbol-rate taps whose first entry sits at lag `first`.
    pub fn from_taps(taps: &[Complex64], first: i64, n: usize, window_advance: usize) -> Self {
        let gains = (0..n)
            .map(|k| {
                taps.iter()
                    .enumerate()
                    .map(|(i, &c)| {
                        let lag = first + i as i64 + window_advance as i64;
                        let phase =
                            -2.0 * PI * (lag * k as i64).rem_euclid(n as i64) as f64 / n as f64;
                        c * Complex64::from_polar(1.0, phase)
                    })
                    .sum()
            })
            .collect();
        Self {
            gains,
            window_advance,
        }
    }

    /// Gains of the data subcarriers 1..N/2−1.
    pub fn data_gains(&self) -> &[Complex64] {
        &self.gains[1..self.gains.len() / 2]
    }
}

/// Symbol-rate DFT window of a frame: samples `N_cp − a … N_cp − a + N − 1`.
pub fn window_start(config: &OfdmConfig, window_advance: usize) -> Result<i64> {
    if window_advance > config.cp_length {
        return Err(invalid(format!(
            "window advance {window_advance} exceeds the cyclic prefix {}",
            config.cp_length
        )));
    }
    Ok((config.cp_length - window_advance) as i64)
}

/// Reusable forward FFT for the receiver.
#[derive(Clone)]
pub struct Demodulator {
    fft: Arc<dyn Fft<f64>>,
    n: usize,
}

impl Demodulator {
    pub fn new(n: usize) -> Self {
        Self {
            fft: FftPlanner::new().plan_fft_forward(n),
            n,
        }
    }

    /// Unitary DFT of one window, in place.
    pub fn dft_in_place(&self, window: &mut [Complex64]) {
        debug_assert_eq!(window.len(), self.n);
        self.fft.process(window);
        let scale = 1.0 / (self.n as f64).sqrt();
        window.iter_mut().for_each(|v| *v *= scale);
    }

    /// DFT of the window and division of each data bin by `amplitude·H[k]`.
    pub fn equalize(
        &self,
        window: &mut [Complex64],
        estimate: &ChannelEstimate,
        amplitude: f64,
    ) -> Result<Vec<Complex64>> {
        self.dft_in_place(window);
        let half = self.n / 2;
        (1..half)
            .map(|k| {
                let h = estimate.gains[k];
                if h.norm() < DEAD_SUBCARRIER_FLOOR {
                    return Err(Error::DeadSubcarrier {
                        bin: k,
                        magnitude: h.norm(),
                    });
                }
                Ok(window[k] / (h * amplitude))
            })
            .collect()
    }
}

/// Samples the matched-filter output at the symbol instants of the DFT
/// window, removes the prefix, and equalizes the data subcarriers.
pub fn receive_frame(
    y: &SampledSignal,
    config: &OfdmConfig,
    estimate: &ChannelEstimate,
    amplitude: f64,
) -> Result<Vec<Complex64>> {
    let sps = config.samples_per_symbol as i64;
    let start = window_start(config, estimate.window_advance)?;
    let mut window: Vec<Complex64> = (0..config.n_subcarriers as i64)
        .map(|i| y.at((start + i) * sps))
        .collect();
    Demodulator::new(config.n_subcarriers).equalize(&mut window, estimate, amplitude)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ofdm::modulation::{map_bits, ml_detect, ModulationScheme};
    use crate::signal::{dft, rrc_filter};
    use rand::Rng;

    fn random_data(
        rng: &mut ChaCha8Rng,
        n: usize,
        scheme: ModulationScheme,
    ) -> (Vec<u8>, Vec<Complex64>) {
        let bits: Vec<u8> = (0..n * scheme.bits_per_symbol())
            .map(|_| rng.random_range(0..2u8))
            .collect();
        let symbols = map_bits(&bits, scheme).unwrap();
        (bits, symbols)
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hermitian_layout_n4() {
        let s = c(0.3, -0.7);
        let f = hermitian_frame(&[s], 4, 1.0).unwrap();
        assert_eq!(f.bins(), &[c(0.0, 0.0), s, c(0.0, 0.0), s.conj()]);
        assert!(hermitian_frame(&[s, s], 4, 1.0).is_err());
    }

    #[test]
    fn hermitian_frame_gives_real_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for scheme in [ModulationScheme::Psk2, ModulationScheme::Qam(16)] {
            let (_, data) = random_data(&mut rng, 127, scheme);
            let x = idft(&hermitian_frame(&data, 256, 1.0).unwrap()).unwrap();
            assert!(x.max_abs_imag() < 1e-10);
        }
    }

    #[test]
    fn conjugated_inputs_mirror_the_frame() {
        let data = [c(1.0, 2.0), c(-0.5, 0.25), c(0.0, -1.0)];
        let conj: Vec<Complex64> = data.iter().map(|d| d.conj()).collect();
        let f = hermitian_frame(&data, 8, 1.0).unwrap();
        let g = hermitian_frame(&conj, 8, 1.0).unwrap();
        for k in 0..8 {
            assert_eq!(g.bins()[k], f.bins()[(8 - k) % 8]);
        }
    }

    #[test]
    fn cyclic_prefix() {
        let x: Vec<Complex64> = (0..8).map(|i| c(i as f64, 0.0)).collect();
        assert_eq!(add_cp(&x, 0).unwrap(), x);
        let y = add_cp(&x, 2).unwrap();
        assert_eq!(y.len(), 10);
        assert_eq!(&y[..2], &x[6..]);
        assert_eq!(remove_cp(&y, 2).unwrap(), x);
        assert!(add_cp(&x, 8).is_err());
    }

    #[test]
    fn cyclic_prefix_turns_channel_circular() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 64;
        let cp = 8;
        let x: Vec<Complex64> = (0..n)
            .map(|_| c(rng.random_range(-1.0..1.0), 0.0))
            .collect();
        let taps: Vec<Complex64> = (0..=cp)
            .map(|_| c(rng.random_range(-1.0..1.0), 0.0))
            .collect();
        let tx = SampledSignal::new(add_cp(&x, cp).unwrap(), 1.0).unwrap();
        let rx = convolve_discrete(&tx, &SampledSignal::new(taps.clone(), 1.0).unwrap()).unwrap();
        let y = remove_cp(&rx.samples()[..n + cp], cp).unwrap();
        let xs = SampledSignal::new(x, 1.0).unwrap();
        let ys = SampledSignal::new(y, 1.0).unwrap();
        let h = ChannelEstimate::from_taps(&taps, 0, n, 0);
        let (xf, yf) = (dft(&xs, n).unwrap(), dft(&ys, n).unwrap());
        for k in 0..n {
            assert!((yf.bins()[k] - xf.bins()[k] * h.gains[k]).norm() < 1e-9);
        }
    }

    #[test]
    fn single_sample_shapes_to_the_filter() {
        let g = rrc_filter(0.5, 10, 8, 1e-9).unwrap();
        let w = shape_waveform(&[c(1.0, 0.0)], &g, 8).unwrap();
        assert_eq!(w, g);
    }

    #[test]
    fn shaping_is_linear_over_concatenation() {
        let g = rrc_filter(0.5, 4, 8, 1e-9).unwrap();
        let a = [c(1.0, 0.0), c(-2.0, 0.0)];
        let b = [c(0.5, 0.0), c(3.0, 0.0), c(-1.0, 0.0)];
        let ab: Vec<Complex64> = a.iter().chain(&b).cloned().collect();
        let whole = shape_waveform(&ab, &g, 8).unwrap();
        let parts = shape_waveform(&a, &g, 8)
            .unwrap()
            .add(&shape_waveform(&b, &g, 8).unwrap().shifted(16))
            .unwrap();
        assert!(whole.sub(&parts).unwrap().sample_norm() < 1e-12);
    }

    #[test]
    fn back_to_back_recovers_the_frame() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = rrc_filter(0.5, 10, 8, 1e-9).unwrap();
        let x: Vec<Complex64> = (0..200)
            .map(|_| c(rng.random_range(-1.0..1.0), 0.0))
            .collect();
        let y = convolve_discrete(&shape_waveform(&x, &g, 8).unwrap(), &g).unwrap();
        let err: f64 = x
            .iter()
            .enumerate()
            .map(|(n, s)| (y.at(8 * n as i64) - s).norm_sqr())
            .sum();
        let rms = (err / x.iter().map(|s| s.norm_sqr()).sum::<f64>()).sqrt();
        assert!(rms < 0.01, "rms {rms}");
    }

    fn budget(noise_psd: f64) -> LinkBudget {
        LinkBudget {
            p_total: 2e-3,
            k_p: 0.5,
            responsivity: 0.28,
            noise_psd,
            noise_bandwidth: 4e6,
            t_p: 0.0,
        }
    }

    #[test]
    fn noiseless_impulse_channel_is_scaled_matched_filter() {
        let dt = 1e-9;
        let g = rrc_filter(0.5, 4, 8, dt).unwrap();
        let w = shape_waveform(&[c(1.0, 0.0), c(-1.0, 0.0)], &g, 8).unwrap();
        let b = budget(0.0);
        let y = transmit_through(
            &w,
            &SampledSignal::unit_impulse(dt).unwrap(),
            None,
            &g,
            &b,
            1,
        )
        .unwrap();
        let want = convolve_discrete(&w, &g)
            .unwrap()
            .scale(1e-3f64.sqrt() * 0.28);
        assert!(y.sub(&want).unwrap().sample_norm() < 1e-12 * want.sample_norm());
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let dt = 1e-9;
        let g = rrc_filter(0.5, 4, 8, dt).unwrap();
        let w = shape_waveform(&[c(1.0, 0.0); 16], &g, 8).unwrap();
        let h = SampledSignal::unit_impulse(dt).unwrap();
        let b = budget(1e-20);
        let a = transmit_through(&w, &h, Some(&h), &g, &b, 42).unwrap();
        assert_eq!(a, transmit_through(&w, &h, Some(&h), &g, &b, 42).unwrap());
        assert_ne!(a, transmit_through(&w, &h, Some(&h), &g, &b, 43).unwrap());
    }

    #[test]
    fn filtered_noise_variance() {
        let dt = 1e-9;
        let g = rrc_filter(0.5, 10, 8, dt).unwrap();
        let zero = SampledSignal::zeros(100_000, dt).unwrap();
        let b = budget(1e-20);
        let y = transmit_through(
            &zero,
            &SampledSignal::unit_impulse(dt).unwrap(),
            None,
            &g,
            &b,
            9,
        )
        .unwrap();
        let inner = &y.samples()[g.len()..y.len() - g.len()];
        let var = inner.iter().map(|s| s.re * s.re).sum::<f64>() / inner.len() as f64;
        let taps_energy: f64 = g.samples().iter().map(|t| t.norm_sqr()).sum();
        let want = b.noise_variance() * taps_energy;
        assert!((var - want).abs() / want < 0.05, "var {var} want {want}");
    }

    #[test]
    fn noiseless_impulse_channel_recovers_symbols() {
        let config = OfdmConfig {
            samples_per_symbol: 8,
            ..Default::default()
        };
        let dt = config.sample_interval();
        let g = rrc_filter(0.5, config.filter_span, 8, dt).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (_, data) = random_data(&mut rng, 127, ModulationScheme::Qam(16));
        let frame = ofdm_modulate(&data, &config).unwrap();
        let w = shape_waveform(&frame, &g, 8).unwrap();
        let b = budget(0.0);
        let h = SampledSignal::unit_impulse(dt).unwrap();
        let y = transmit_through(&w, &h, None, &g, &b, 0).unwrap();
        let pulse = convolve(&h, &convolve_discrete(&g, &g).unwrap()).unwrap();
        let est = ChannelEstimate::from_composite(&pulse, &config, precursor_symbols(&pulse, 8));
        let amp = b.source_power().sqrt() * b.responsivity;
        let z = receive_frame(&y, &config, &est, amp).unwrap();
        for (a, b) in z.iter().zip(&data) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn noiseless_dispersive_channel_recovers_symbols() {
        let config = OfdmConfig {
            samples_per_symbol: 8,
            ..Default::default()
        };
        let dt = config.sample_interval();
        let g = rrc_filter(0.5, config.filter_span, 8, dt).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // Eight symbols of decaying multipath: inside the prefix with the pulse.
        let h: Vec<f64> = (0..64)
            .map(|i| (-(i as f64) / 10.0).exp() * rng.random_range(0.5..1.5) / dt)
            .collect();
        let h = SampledSignal::from_real(&h, dt).unwrap();
        let scheme = ModulationScheme::Qam(64);
        let (bits, data) = random_data(&mut rng, 127, scheme);
        let w = shape_waveform(&ofdm_modulate(&data, &config).unwrap(), &g, 8).unwrap();
        let b = budget(0.0);
        let y = transmit_through(&w, &h, None, &g, &b, 0).unwrap();
        let composite = convolve(&h, &convolve_discrete(&g, &g).unwrap()).unwrap();
        let est =
            ChannelEstimate::from_composite(&composite, &config, precursor_symbols(&composite, 8));
        let amp = b.source_power().sqrt() * b.responsivity;
        let z = receive_frame(&y, &config, &est, amp).unwrap();
        for (a, b) in z.iter().zip(&data) {
            assert!((a - b).norm() < 1e-6);
        }
        assert_eq!(ml_detect(&z, scheme).unwrap(), bits);
    }

    #[test]
    fn dead_subcarrier_is_reported() {
        let config = OfdmConfig::default();
        let mut est = ChannelEstimate::from_taps(&[c(1.0, 0.0)], 0, 256, 0);
        est.gains[5] = c(0.0, 0.0);
        let y = SampledSignal::zeros(1, config.sample_interval()).unwrap();
        match receive_frame(&y, &config, &est, 1.0) {
            Err(Error::DeadSubcarrier { bin: 5, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scaled_waveform_power() {
        let config = OfdmConfig::default();
        let g = rrc_filter(0.5, 10, 50, config.sample_interval()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let b = budget(0.0);
        let mut energy = 0.0;
        let mut symbols = 0usize;
        for _ in 0..40 {
            let (_, data) = random_data(&mut rng, 127, ModulationScheme::Qam(4));
            let frame = ofdm_modulate(&data, &config).unwrap();
            let w = shape_waveform(&frame, &g, 50)
                .unwrap()
                .scale(b.source_power().sqrt());
            energy += w.samples().iter().map(|s| s.norm_sqr()).sum::<f64>();
            symbols += frame.len();
        }
        let power = energy / symbols as f64;
        assert!(
            (power - b.source_power()).abs() / b.source_power() < 0.02,
            "power {power}"
        );
    }
}
