//! Seeded, parallel Monte Carlo bit-error-rate engine.
//!
//! Every grid point is split into fixed chunks of frames; chunk `c` of point
//! `i` draws from a ChaCha8 stream keyed by `(seed, i, c)`, so the counts do
//! not depend on thread count or scheduling.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::channel::dbm_to_watts;
use crate::error::{invalid, Error, Result};
use crate::signal::{convolve, SampledSignal};

use super::frame::{ofdm_modulate, window_start, ChannelEstimate, Demodulator};
use super::link::{LinkModel, Mode};
use super::modulation::{map_bits, nearest_index, ModulationScheme};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959963984540054;

/// Smallest accepted bit budget per point.
pub const MIN_BITS: u64 = 10_000;

const FRAMES_PER_CHUNK: u64 = 16;

/// Outcome of one Monte Carlo grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McReport {
    pub bits_sent: u64,
    pub bit_errors: u64,
    pub ber: f64,
    /// 95% Wilson score interval.
    pub ci_low: f64,
    pub ci_high: f64,
    pub rng_seed: u64,
}

impl McReport {
    pub fn new(bits_sent: u64, bit_errors: u64, rng_seed: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(bit_errors, bits_sent, Z_95);
        Self {
            bits_sent,
            bit_errors,
            ber: bit_errors as f64 / bits_sent as f64,
            ci_low,
            ci_high,
            rng_seed,
        }
    }

    pub fn contains(&self, ber: f64) -> bool {
        (self.ci_low..=self.ci_high).contains(&ber)
    }
}

/// Wilson score interval for `errors` successes in `n` trials.
pub fn wilson_interval(errors: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if errors == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if errors as f64 == n {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

/// Power split and noise level of one simulated point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub power_w: f64,
    pub k_p: f64,
    pub noise_variance: f64,
}

/// Sweep axis for [`monte_carlo_sweep`].
#[derive(Debug, Clone, PartialEq)]
pub enum McGrid {
    /// Total power in dBm at the configured noise level.
    PowerDbm(Vec<f64>),
    /// Reference SNR `P·r²·mean|H_SD|²/σ_v²` in dB, reached by setting σ_v²
    /// at P = 1 W.
    SnrDb(Vec<f64>),
}

impl McGrid {
    pub fn points(&self, model: &LinkModel, k_p: f64) -> Vec<OperatingPoint> {
        match self {
            McGrid::PowerDbm(p) => p
                .iter()
                .map(|&dbm| OperatingPoint {
                    power_w: dbm_to_watts(dbm),
                    k_p,
                    noise_variance: model.noise_variance(),
                })
                .collect(),
            McGrid::SnrDb(s) => s
                .iter()
                .map(|&db| OperatingPoint {
                    power_w: 1.0,
                    k_p,
                    noise_variance: model.reference_snr(1.0, 1.0) / 10f64.powf(db / 10.0),
                })
                .collect(),
        }
    }
}

/// One received copy of the frame.
struct Branch {
    /// Symbol-rate composite taps and the lag of the first one.
    taps: Vec<f64>,
    first: i64,
    amplitude: f64,
    estimate: ChannelEstimate,
    /// Fine-grid filter applied to the relay noise, with its start index.
    relay_filter: Option<(Vec<f64>, i64)>,
    /// Per-data-bin noise variance relative to σ_v², for combining.
    relative_noise: Vec<f64>,
}

struct Plan {
    branches: Vec<Branch>,
    sigma: f64,
    matched: Vec<f64>,
    matched_start: i64,
}

fn plan(model: &LinkModel, mode: Mode, point: &OperatingPoint) -> Result<Plan> {
    let budget = model.budget_with_noise(point.power_w, point.k_p, point.noise_variance);
    let r = budget.responsivity;
    let nd = model.data_subcarriers();
    let g = model.pulse_filter();
    let adv = model.window_advance();
    let branch =
        |h: &SampledSignal, amplitude: f64, relay: Option<(SampledSignal, f64)>, rel: Vec<f64>| {
            let (taps, first) = model.taps(h);
            let relay_filter = relay
                .map(|(cir, gain)| -> Result<(Vec<f64>, i64)> {
                    let f = convolve(&cir, g)?.scale(gain);
                    Ok((f.real_parts(), f.start_offset()))
                })
                .transpose()?;
            Ok::<_, Error>(Branch {
                estimate: ChannelEstimate::from_composite(h, model.config(), adv),
                taps,
                first,
                amplitude,
                relay_filter,
                relative_noise: rel,
            })
        };
    let branches = match mode {
        Mode::Direct => {
            if !(point.power_w.is_finite() && point.power_w > 0.0) {
                return Err(invalid("power must be positive"));
            }
            vec![branch(
                model.h_sd(),
                point.power_w.sqrt() * r,
                None,
                vec![1.0; nd],
            )?]
        }
        Mode::HalfDuplex => {
            budget.validate()?;
            let g_a = model.amplification_factor(&budget)?;
            let amp = budget.source_power().sqrt() * r;
            let rel2 = model
                .rd_frequency_gains()
                .iter()
                .map(|h| 1.0 + (r * g_a * h.norm()).powi(2))
                .collect();
            vec![
                branch(model.h_sd(), amp, None, vec![1.0; nd])?,
                branch(
                    &model.h_srd().scale(g_a * r),
                    amp,
                    Some((model.relay_to_destination().clone(), r * g_a)),
                    rel2,
                )?,
            ]
        }
        Mode::FullDuplex => {
            budget.validate()?;
            let g_a = model.amplification_factor(&budget)?;
            let (h_signal, h_noise) = model.fd_responses(g_a)?;
            vec![branch(
                &h_signal,
                budget.source_power().sqrt() * r,
                Some((h_noise, r)),
                vec![1.0; nd],
            )?]
        }
    };
    Ok(Plan {
        branches,
        sigma: point.noise_variance.sqrt(),
        matched: g.real_parts(),
        matched_start: g.start_offset(),
    })
}

/// Simulates `n_bits` (rounded up to whole frames) at every point.
pub fn run_monte_carlo(
    model: &LinkModel,
    scheme: ModulationScheme,
    mode: Mode,
    points: &[OperatingPoint],
    n_bits: u64,
    rng_seed: u64,
) -> Result<Vec<McReport>> {
    if !scheme.is_simulable() {
        return Err(Error::AnalyticOnly(scheme.to_string()));
    }
    if n_bits < MIN_BITS {
        return Err(invalid(format!(
            "at least {MIN_BITS} bits per point are required"
        )));
    }
    if points.is_empty() {
        return Err(invalid("empty simulation grid"));
    }
    let config = model.config();
    let bits_per_frame = (config.data_subcarriers() * scheme.bits_per_symbol()) as u64;
    let frames = n_bits.div_ceil(bits_per_frame);
    let chunks = frames.div_ceil(FRAMES_PER_CHUNK);
    let demod = Demodulator::new(config.n_subcarriers);
    let constellation = scheme.constellation()?;

    points
        .iter()
        .enumerate()
        .map(|(i, point)| {
            let plan = plan(model, mode, point)?;
            let errors = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
                    rng.set_stream(((i as u64) << 32) | c);
                    let count = FRAMES_PER_CHUNK.min(frames - c * FRAMES_PER_CHUNK);
                    let mut errors = 0u64;
                    for _ in 0..count {
                        errors +=
                            simulate_frame(model, scheme, &constellation, &plan, &demod, &mut rng)?;
                    }
                    Ok(errors)
                })
                .collect::<Result<Vec<u64>>>()?
                .into_iter()
                .sum();
            Ok(McReport::new(frames * bits_per_frame, errors, rng_seed))
        })
        .collect()
}

/// [`run_monte_carlo`] over a power or SNR axis at a fixed K_p.
pub fn monte_carlo_sweep(
    model: &LinkModel,
    scheme: ModulationScheme,
    mode: Mode,
    k_p: f64,
    grid: &McGrid,
    n_bits: u64,
    rng_seed: u64,
) -> Result<Vec<McReport>> {
    run_monte_carlo(
        model,
        scheme,
        mode,
        &grid.points(model, k_p),
        n_bits,
        rng_seed,
    )
}

fn simulate_frame(
    model: &LinkModel,
    scheme: ModulationScheme,
    constellation: &[Complex64],
    plan: &Plan,
    demod: &Demodulator,
    rng: &mut ChaCha8Rng,
) -> Result<u64> {
    let config = model.config();
    let n = config.n_subcarriers;
    let nd = config.data_subcarriers();
    let k = scheme.bits_per_symbol();
    let bits: Vec<u8> = (0..nd * k).map(|_| rng.random_range(0..2u8)).collect();
    let frame: Vec<f64> = ofdm_modulate(&map_bits(&bits, scheme)?, config)?
        .iter()
        .map(|s| s.re)
        .collect();
    let start = window_start(config, model.window_advance())?;
    let sps = config.samples_per_symbol as i64;

    let mut num = vec![Complex64::new(0.0, 0.0); nd];
    let mut den = vec![0.0; nd];
    for b in &plan.branches {
        let mut window: Vec<Complex64> = (0..n as i64)
            .map(|i| {
                let m = start + i;
                let y: f64 = b
                    .taps
                    .iter()
                    .enumerate()
                    .filter_map(|(q, &c)| {
                        let idx = m - (b.first + q as i64);
                        (0..frame.len() as i64)
                            .contains(&idx)
                            .then(|| c * frame[idx as usize])
                    })
                    .sum();
                Complex64::new(b.amplitude * y, 0.0)
            })
            .collect();
        if plan.sigma > 0.0 {
            add_filtered_noise(
                &mut window,
                &plan.matched,
                plan.matched_start,
                start,
                sps,
                plan.sigma,
                rng,
            );
            if let Some((f, f0)) = &b.relay_filter {
                add_filtered_noise(&mut window, f, *f0, start, sps, plan.sigma, rng);
            }
        }
        demod.dft_in_place(&mut window);
        for kk in 0..nd {
            let h = b.estimate.gains[kk + 1] * b.amplitude;
            if h.norm() < super::frame::DEAD_SUBCARRIER_FLOOR {
                return Err(Error::DeadSubcarrier {
                    bin: kk + 1,
                    magnitude: h.norm(),
                });
            }
            num[kk] += h.conj() * window[kk + 1] / b.relative_noise[kk];
            den[kk] += h.norm_sqr() / b.relative_noise[kk];
        }
    }

    let mut errors = 0u64;
    for kk in 0..nd {
        let z = num[kk] / den[kk];
        let idx = nearest_index(z, constellation);
        for j in 0..k {
            let sent = bits[kk * k + j];
            let got = ((idx >> (k - 1 - j)) & 1) as u8;
            errors += u64::from(sent != got);
        }
    }
    Ok(errors)
}

/// Adds `σ·(f ⊛ v)` sampled at the window's symbol instants, where `v` is
/// fresh unit white noise on the simulation grid.
fn add_filtered_noise(
    window: &mut [Complex64],
    filter: &[f64],
    filter_start: i64,
    start: i64,
    sps: i64,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) {
    let n = window.len() as i64;
    let filter_end = filter_start + filter.len() as i64;
    // Noise indices needed: m·sps − j for j in [filter_start, filter_end).
    let lo = start * sps - (filter_end - 1);
    let hi = (start + n - 1) * sps - filter_start;
    let v: Vec<f64> = (lo..=hi)
        .map(|_| StandardNormal.sample(&mut *rng))
        .collect();
    for (i, w) in window.iter_mut().enumerate() {
        let m = (start + i as i64) * sps;
        // v index of (m − j) is m − j − lo; walk j upward so the index falls.
        let top = (m - filter_start - lo) as usize;
        let acc: f64 = filter
            .iter()
            .enumerate()
            .map(|(j, &f)| f * v[top - j])
            .sum();
        w.re += sigma * acc;
    }
}
