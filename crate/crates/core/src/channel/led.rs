use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{config, invalid, Result};
use crate::signal::{convolve, SampledSignal};

/// Default tail-energy fraction below which the LED response is truncated.
pub const DEFAULT_LED_TRUNCATION: f64 = 1e-12;

/// First-order low-pass model of an LED's modulation response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedModel {
    cutoff_hz: f64,
}

impl LedModel {
    pub fn new(cutoff_hz: f64) -> Result<Self> {
        if !(cutoff_hz.is_finite() && cutoff_hz > 0.0) {
            return Err(invalid(format!(
                "LED cut-off must be positive, got {cutoff_hz}"
            )));
        }
        Ok(Self { cutoff_hz })
    }

    /// 3-dB cut-off frequency in hertz.
    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff_hz
    }

    /// Coarsest grid that still resolves the pole (ten samples per cut-off period).
    pub fn max_sample_interval(&self) -> f64 {
        1.0 / (10.0 * self.cutoff_hz)
    }
}

impl Default for LedModel {
    fn default() -> Self {
        Self { cutoff_hz: 20e6 }
    }
}

/// `1 / (1 + j f / f_c)`.
pub fn led_frequency_response(led: &LedModel, frequency: f64) -> Complex64 {
    Complex64::new(1.0, frequency / led.cutoff_hz).inv()
}

/// Causal impulse response `2π f_c e^{-2π f_c t}` on the grid.
///
/// Each sample holds the average of the continuous response over its bin, so
/// the DC gain is exactly one up to truncation. The tail is dropped once its
/// energy falls below `truncation_tolerance` of the total.
pub fn led_impulse_response(
    led: &LedModel,
    sample_interval: f64,
    truncation_tolerance: f64,
) -> Result<SampledSignal> {
    if !(sample_interval.is_finite() && sample_interval > 0.0) {
        return Err(invalid("sample interval must be positive"));
    }
    if sample_interval > led.max_sample_interval() * (1.0 + 1e-9) {
        return Err(config(format!(
            "sample interval {sample_interval:e} s too coarse for a {:e} Hz LED (max {:e} s)",
            led.cutoff_hz,
            led.max_sample_interval()
        )));
    }
    if !(truncation_tolerance > 0.0 && truncation_tolerance < 1.0) {
        return Err(invalid("truncation tolerance must lie in (0, 1)"));
    }
    let x = 2.0 * PI * led.cutoff_hz * sample_interval;
    // Tail energy after K samples is e^{-2Kx} of the total.
    let len = ((-truncation_tolerance.ln()) / (2.0 * x)).ceil().max(1.0) as usize;
    let first = -(-x).exp_m1() / sample_interval;
    let samples: Vec<f64> = (0..len).map(|n| first * (-(n as f64) * x).exp()).collect();
    SampledSignal::from_real(&samples, sample_interval)
}

/// Optical CIR filtered by the LED response.
pub fn effective_cir(raw: &SampledSignal, led: &LedModel) -> Result<SampledSignal> {
    let h = led_impulse_response(led, raw.sample_interval(), DEFAULT_LED_TRUNCATION)?;
    convolve(raw, &h)
}
