use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::ofdm::{LinkModel, Mode, ModulationScheme};

use super::{link_ber, AnalysisOptions};

/// Grid of candidate power splits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KpGrid {
    pub step: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Default for KpGrid {
    /// Step 1e-4 over [0.01, 0.99].
    fn default() -> Self {
        Self {
            step: 1e-4,
            lo: 0.01,
            hi: 0.99,
        }
    }
}

impl KpGrid {
    /// Multiples of 0.0099 inside (0, 1).
    pub fn table2() -> Self {
        Self {
            step: 0.0099,
            lo: 0.0,
            hi: 1.0,
        }
    }

    /// Default bounds with a custom step.
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step <= 0.1) {
            return Err(invalid(format!(
                "K_p grid step {} not in (0, 0.1]",
                self.step
            )));
        }
        if !(0.0 <= self.lo && self.lo < self.hi && self.hi <= 1.0) {
            return Err(invalid(format!(
                "K_p grid bounds [{}, {}] invalid",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    /// Ascending grid points `i·step` in `[lo, hi]`, excluding 0 and 1.
    /// When `1/step` is an integer q the points are formed as `i/q`.
    pub fn points(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let inv = 1.0 / self.step;
        let q = inv.round();
        let point = |i: f64| {
            if (inv - q).abs() < 1e-9 * q {
                i / q
            } else {
                i * self.step
            }
        };
        let first = (self.lo / self.step - 1e-9).ceil().max(1.0);
        let last = (self.hi / self.step + 1e-9).floor();
        let pts: Vec<f64> = (first as u64..=last as u64)
            .map(|i| point(i as f64))
            .filter(|&k| k > 0.0 && k < 1.0)
            .collect();
        if pts.is_empty() {
            return Err(invalid("K_p grid is empty"));
        }
        Ok(pts)
    }
}

/// Best split found on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KpOptimum {
    pub k_p: f64,
    pub ber: f64,
}

/// Index of the smallest value; ties go to the earliest.
pub fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if best.is_none_or(|b| *v < values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Average BER at every grid point, in grid order.
pub fn kp_scan(
    model: &LinkModel,
    mode: Mode,
    scheme: ModulationScheme,
    p_total: f64,
    grid: &KpGrid,
    opts: &AnalysisOptions,
) -> Result<Vec<(f64, f64)>> {
    grid.points()?
        .into_par_iter()
        .map(|k| {
            Ok((
                k,
                link_ber(model, mode, scheme, &model.budget(p_total, k), opts)?,
            ))
        })
        .collect()
}

/// Exhaustive search for the split minimizing average BER; G_A is
/// recomputed at every point and ties go to the smaller K_p.
pub fn optimize_kp(
    model: &LinkModel,
    mode: Mode,
    scheme: ModulationScheme,
    p_total: f64,
    grid: &KpGrid,
    opts: &AnalysisOptions,
) -> Result<KpOptimum> {
    let scan = kp_scan(model, mode, scheme, p_total, grid, opts)?;
    let bers: Vec<f64> = scan.iter().map(|s| s.1).collect();
    let i = argmin(&bers).ok_or_else(|| invalid("K_p grid is empty"))?;
    Ok(KpOptimum {
        k_p: scan[i].0,
        ber: scan[i].1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelSource, LedModel, RawChannels, RelayChannelSet};
    use crate::ofdm::link::tests::toy_model;
    use crate::ofdm::{OfdmConfig, RelaySettings};
    use crate::signal::SampledSignal;

    #[test]
    fn grids() {
        let d = KpGrid::default().points().unwrap();
        assert_eq!(d.len(), 9801);
        assert_eq!(d[0], 0.01);
        assert_eq!(*d.last().unwrap(), 0.99);
        let t = KpGrid::table2().points().unwrap();
        assert_eq!(t.len(), 101);
        assert_eq!(t[0], 0.0099);
        assert!((t[82] - 0.8217).abs() < 1e-15);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(KpGrid::with_step(0.1).points().unwrap().len(), 9);
        assert!(KpGrid::with_step(0.2).points().is_err());
        assert!(KpGrid::with_step(0.0).points().is_err());
    }

    #[test]
    fn argmin_prefers_first() {
        assert_eq!(argmin(&[3.0, 1.0, 1.0, 2.0]), Some(1));
        assert_eq!(argmin(&[]), None);
    }

    #[test]
    fn matches_independent_rescan() {
        let m = toy_model();
        let grid = KpGrid::with_step(1e-2);
        let opts = AnalysisOptions::default();
        for mode in [Mode::HalfDuplex, Mode::FullDuplex] {
            for p in [1e-3, 1e-2] {
                let best =
                    optimize_kp(&m, mode, ModulationScheme::BpskSim, p, &grid, &opts).unwrap();
                let mut oracle = (f64::NAN, f64::INFINITY);
                for i in 1..=99 {
                    let k = i as f64 / 100.0;
                    let b = link_ber(&m, mode, ModulationScheme::BpskSim, &m.budget(p, k), &opts)
                        .unwrap();
                    if b < oracle.1 {
                        oracle = (k, b);
                    }
                }
                assert_eq!((best.k_p, best.ber), oracle);
                let epa = link_ber(
                    &m,
                    mode,
                    ModulationScheme::BpskSim,
                    &m.budget(p, 0.5),
                    &opts,
                )
                .unwrap();
                assert!(best.ber <= epa);
            }
        }
    }

    #[test]
    fn dead_relay_puts_power_at_source() {
        let config = OfdmConfig::default();
        let dt = config.sample_interval();
        let imp = |a: f64| SampledSignal::from_real(&[0.0, a / dt], dt).unwrap();
        let raw = RawChannels {
            c_sd: imp(1.5e-5),
            c_sr: imp(1e-30),
            c_rd: imp(1e-30),
            c_rr: imp(1e-30),
        };
        let set = RelayChannelSet::from_raw(&raw, &LedModel::default(), ChannelSource::Synthetic)
            .unwrap();
        let m = LinkModel::new(set, config, RelaySettings::default()).unwrap();
        let grid = KpGrid::with_step(1e-2);
        for mode in [Mode::HalfDuplex, Mode::FullDuplex] {
            let best = optimize_kp(
                &m,
                mode,
                ModulationScheme::Psk2,
                1e-3,
                &grid,
                &AnalysisOptions::default(),
            )
            .unwrap();
            assert_eq!(best.k_p, 0.99, "{mode}");
        }
    }
}
