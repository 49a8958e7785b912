//! Uniformly sampled signals and the discrete primitives every other module
//! builds on: linear convolution, unitary DFT pairs, pulse-shaping filters
//! and delayed impulses.
//!
//! A [`SampledSignal`] approximates a continuous-time function on a grid of
//! spacing `sample_interval`. Convolution carries a factor of the sample
//! interval so that it approximates the convolution integral, and a Dirac
//! impulse is represented by a single sample of amplitude `1 / sample_interval`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{config, invalid, Result};

/// Relative tolerance used when deciding whether two sample intervals match.
const INTERVAL_RTOL: f64 = 1e-12;

/// Both operands longer than this use FFT convolution.
const DIRECT_CONVOLUTION_MAX: usize = 256;

/// A uniformly sampled, finite-length complex sequence.
///
/// Sample `i` of `samples` sits at time `(start_offset + i) * sample_interval`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<Complex64>,
    sample_interval: f64,
    start_offset: i64,
}

impl SampledSignal {
    pub fn new(samples: Vec<Complex64>, sample_interval: f64) -> Result<Self> {
        if !(sample_interval.is_finite() && sample_interval > 0.0) {
            return Err(invalid(format!(
                "sample interval must be positive and finite, got {sample_interval}"
            )));
        }
        if samples.is_empty() {
            return Err(invalid("a signal needs at least one sample"));
        }
        if let Some(i) = samples
            .iter()
            .position(|s| !(s.re.is_finite() && s.im.is_finite()))
        {
            return Err(invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_interval,
            start_offset: 0,
        })
    }

    pub fn from_real(samples: &[f64], sample_interval: f64) -> Result<Self> {
        Self::new(
            samples.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            sample_interval,
        )
    }

    /// An all-zero signal of `len` samples (at least one).
    pub fn zeros(len: usize, sample_interval: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); len.max(1)], sample_interval)
    }

    /// Dirac impulse at t = 0; the identity element of [`convolve`].
    pub fn unit_impulse(sample_interval: f64) -> Result<Self> {
        Self::new(
            vec![Complex64::new(1.0 / sample_interval, 0.0)],
            sample_interval,
        )
    }

    pub fn with_start_offset(mut self, start_offset: i64) -> Self {
        self.start_offset = start_offset;
        self
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn sample_interval(&self) -> f64 {
        self.sample_interval
    }

    pub fn start_offset(&self) -> i64 {
        self.start_offset
    }

    /// One past the grid index of the last sample.
    pub fn end_offset(&self) -> i64 {
        self.start_offset + self.samples.len() as i64
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample at absolute grid index `index`, zero outside the support.
    pub fn at(&self, index: i64) -> Complex64 {
        let rel = index - self.start_offset;
        if rel < 0 || rel >= self.samples.len() as i64 {
            Complex64::new(0.0, 0.0)
        } else {
            self.samples[rel as usize]
        }
    }

    /// Time of absolute grid index `index`.
    pub fn time_of(&self, index: i64) -> f64 {
        index as f64 * self.sample_interval
    }

    /// ∫|x(t)|² dt approximated as Σ|x[n]|²·Δt.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.sample_interval
    }

    /// ∫|x(t)| dt approximated as Σ|x[n]|·Δt.
    pub fn l1_norm(&self) -> f64 {
        self.samples.iter().map(|s| s.norm()).sum::<f64>() * self.sample_interval
    }

    /// ∫x(t) dt, the response at zero frequency.
    pub fn dc_gain(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() * self.sample_interval
    }

    /// Euclidean norm of the raw samples (no Δt weighting).
    pub fn sample_norm(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.samples.iter().map(|s| s.im.abs()).fold(0.0, f64::max)
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.re).collect()
    }

    pub fn is_all_zero(&self) -> bool {
        self.samples.iter().all(|s| s.re == 0.0 && s.im == 0.0)
    }

    /// Absolute grid index of the largest-magnitude sample (first on ties).
    pub fn peak_index(&self) -> i64 {
        let mut best = 0;
        let mut best_mag = -1.0;
        for (i, s) in self.samples.iter().enumerate() {
            let m = s.norm_sqr();
            if m > best_mag {
                best_mag = m;
                best = i;
            }
        }
        self.start_offset + best as i64
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map_samples(|s| s * factor)
    }

    pub fn scale_complex(&self, factor: Complex64) -> Self {
        self.map_samples(|s| s * factor)
    }

    pub fn conj(&self) -> Self {
        self.map_samples(|s| s.conj())
    }

    /// Delays the signal by `samples` grid steps.
    pub fn shifted(&self, samples: i64) -> Self {
        let mut out = self.clone();
        out.start_offset += samples;
        out
    }

    fn map_samples(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            samples: self.samples.iter().map(|&s| f(s)).collect(),
            sample_interval: self.sample_interval,
            start_offset: self.start_offset,
        }
    }

    /// Pointwise sum, aligned on the shared time grid.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &Self, sign: f64) -> Result<Self> {
        check_intervals(self.sample_interval, other.sample_interval)?;
        let start = self.start_offset.min(other.start_offset);
        let end = self.end_offset().max(other.end_offset());
        let samples = (start..end)
            .map(|n| self.at(n) + other.at(n) * sign)
            .collect();
        Ok(Self {
            samples,
            sample_interval: self.sample_interval,
            start_offset: start,
        })
    }

    /// Copy of the samples covering absolute indices `[start, start + len)`,
    /// zero-filled outside the support.
    pub fn window(&self, start: i64, len: usize) -> Vec<Complex64> {
        (0..len as i64).map(|i| self.at(start + i)).collect()
    }
}

/// The spectrum of a length-N block; bin k sits at k / (N · sample_interval).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumVector {
    bins: Vec<Complex64>,
    sample_interval: f64,
}

impl SpectrumVector {
    pub fn new(bins: Vec<Complex64>, sample_interval: f64) -> Result<Self> {
        if bins.is_empty() {
            return Err(invalid("spectrum needs at least one bin"));
        }
        if !(sample_interval.is_finite() && sample_interval > 0.0) {
            return Err(invalid("sample interval must be positive"));
        }
        Ok(Self {
            bins,
            sample_interval,
        })
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn sample_interval(&self) -> f64 {
        self.sample_interval
    }

    /// Frequency of bin `k` in hertz.
    pub fn frequency(&self, k: usize) -> f64 {
        k as f64 / (self.bins.len() as f64 * self.sample_interval)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            bins: self.bins.iter().map(|b| b * factor).collect(),
            sample_interval: self.sample_interval,
        }
    }

    pub fn norm(&self) -> f64 {
        self.bins.iter().map(|b| b.norm_sqr()).sum::<f64>().sqrt()
    }
}

pub(crate) fn check_intervals(a: f64, b: f64) -> Result<()> {
    if (a - b).abs() > INTERVAL_RTOL * a.abs().max(b.abs()) {
        return Err(config(format!(
            "sample intervals differ: {a:e} s vs {b:e} s"
        )));
    }
    Ok(())
}

/// Linear convolution scaled by the sample interval, approximating the
/// continuous-time convolution integral.
pub fn convolve(a: &SampledSignal, b: &SampledSignal) -> Result<SampledSignal> {
    let mut out = convolve_discrete(a, b)?;
    let dt = a.sample_interval;
    out.samples.iter_mut().for_each(|s| *s *= dt);
    Ok(out)
}

/// Plain discrete linear convolution (no Δt factor), used for FIR filtering
/// with dimensionless taps.
pub fn convolve_discrete(a: &SampledSignal, b: &SampledSignal) -> Result<SampledSignal> {
    check_intervals(a.sample_interval, b.sample_interval)?;
    let samples = if a.len() > DIRECT_CONVOLUTION_MAX && b.len() > DIRECT_CONVOLUTION_MAX {
        fft_convolve(&a.samples, &b.samples)
    } else {
        direct_convolve(&a.samples, &b.samples)
    };
    Ok(SampledSignal {
        samples,
        sample_interval: a.sample_interval,
        start_offset: a.start_offset + b.start_offset,
    })
}

fn direct_convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x.re == 0.0 && x.im == 0.0 {
            continue;
        }
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o += x * y;
        }
    }
    out
}

fn fft_convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let out_len = a.len() + b.len() - 1;
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut fa = a.to_vec();
    fa.resize(n, Complex64::new(0.0, 0.0));
    let mut fb = b.to_vec();
    fb.resize(n, Complex64::new(0.0, 0.0));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / n as f64;
    fa.truncate(out_len);
    fa.iter_mut().for_each(|s| *s *= scale);
    fa
}

/// Unitary DFT of the first `n` samples of `x` (zero-padded or truncated).
///
/// `X[k] = (1/√N) Σ x[n] e^{-j2πnk/N}`; the start offset is ignored.
pub fn dft(x: &SampledSignal, n: usize) -> Result<SpectrumVector> {
    if n == 0 {
        return Err(invalid("DFT size must be positive"));
    }
    let mut buf = x.samples.clone();
    buf.resize(n, Complex64::new(0.0, 0.0));
    FftPlanner::<f64>::new()
        .plan_fft_forward(n)
        .process(&mut buf);
    let scale = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|b| *b *= scale);
    SpectrumVector::new(buf, x.sample_interval)
}

/// Unitary inverse DFT, `x[n] = (1/√N) Σ X[k] e^{j2πnk/N}`.
pub fn idft(spectrum: &SpectrumVector) -> Result<SampledSignal> {
    let n = spectrum.len();
    let mut buf = spectrum.bins.clone();
    FftPlanner::<f64>::new()
        .plan_fft_inverse(n)
        .process(&mut buf);
    let scale = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|b| *b *= scale);
    SampledSignal::new(buf, spectrum.sample_interval)
}

/// Continuous-time Fourier transform of `x` sampled on `n` bins:
/// `H[k] = Σ x[m]·Δt·e^{-j2π k (m + offset) / N}`, bin k at k/(N·Δt).
///
/// Samples beyond `n` are time-aliased, which keeps the bins exact samples of
/// the signal's DTFT.
pub fn frequency_response(x: &SampledSignal, n: usize) -> Result<SpectrumVector> {
    if n == 0 {
        return Err(invalid("DFT size must be positive"));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (i, s) in x.samples.iter().enumerate() {
        let idx = (x.start_offset + i as i64).rem_euclid(n as i64) as usize;
        buf[idx] += s;
    }
    FftPlanner::<f64>::new()
        .plan_fft_forward(n)
        .process(&mut buf);
    let dt = x.sample_interval;
    buf.iter_mut().for_each(|b| *b *= dt);
    SpectrumVector::new(buf, dt)
}

/// Continuous-time Fourier transform of `x` at a single frequency.
pub fn frequency_response_at(x: &SampledSignal, frequency: f64) -> Complex64 {
    let w = -2.0 * PI * frequency * x.sample_interval;
    x.samples
        .iter()
        .enumerate()
        .map(|(i, s)| s * Complex64::from_polar(1.0, w * (x.start_offset + i as i64) as f64))
        .sum::<Complex64>()
        * x.sample_interval
}

/// Square-root raised-cosine taps, normalised to unit energy (Σ taps² = 1)
/// and centred on t = 0.
pub fn rrc_filter(
    roll_off: f64,
    span_symbols: usize,
    samples_per_symbol: usize,
    sample_interval: f64,
) -> Result<SampledSignal> {
    if !(0.0..=1.0).contains(&roll_off) {
        return Err(invalid(format!("roll-off {roll_off} outside [0, 1]")));
    }
    if span_symbols == 0 || samples_per_symbol == 0 {
        return Err(invalid("span and samples per symbol must be positive"));
    }
    let len = span_symbols * samples_per_symbol + 1;
    if len.is_multiple_of(2) {
        return Err(invalid(format!(
            "span {span_symbols} x {samples_per_symbol} samples gives an even tap count"
        )));
    }
    let half = (len / 2) as i64;
    let sps = samples_per_symbol as f64;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|i| rrc_value(i as f64 / sps, roll_off))
        .collect();
    let norm = taps.iter().map(|t| t * t).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|t| *t /= norm);
    Ok(SampledSignal::from_real(&taps, sample_interval)?.with_start_offset(-half))
}

/// Unnormalised root-raised-cosine impulse response at `t` symbol periods.
fn rrc_value(t: f64, beta: f64) -> f64 {
    if t == 0.0 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    if beta > 0.0 && ((4.0 * beta * t).abs() - 1.0).abs() < 1e-9 {
        let a = PI / (4.0 * beta);
        return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
    let den = PI * t * (1.0 - (4.0 * beta * t).powi(2));
    num / den
}

/// Scaled Dirac impulse `gain·δ(t − delay)` on the grid.
///
/// The delay must be a whole number of samples.
pub fn delayed_impulse(delay: f64, gain: f64, sample_interval: f64) -> Result<SampledSignal> {
    if !(delay.is_finite() && delay >= 0.0) {
        return Err(invalid(format!("delay must be non-negative, got {delay}")));
    }
    if !(sample_interval.is_finite() && sample_interval > 0.0) {
        return Err(invalid("sample interval must be positive"));
    }
    let ratio = delay / sample_interval;
    let index = ratio.round();
    if (ratio - index).abs() > 1e-9 * ratio.max(1.0) {
        return Err(config(format!(
            "delay {delay:e} s is not a whole number of {sample_interval:e} s samples"
        )));
    }
    let index = index as usize;
    let mut samples = vec![Complex64::new(0.0, 0.0); index + 1];
    samples[index] = Complex64::new(gain / sample_interval, 0.0);
    SampledSignal::new(samples, sample_interval)
}
