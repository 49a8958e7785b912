use crate::error::{invalid, Result};

/// DCO-OFDM frame and pulse-shaping parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmConfig {
    /// DFT size N; even and at least 8.
    pub n_subcarriers: usize,
    /// Cyclic prefix length in symbol-rate samples.
    pub cp_length: usize,
    /// Symbol-rate sample spacing T_s in seconds.
    pub symbol_interval: f64,
    /// Simulation-grid oversampling of T_s.
    pub samples_per_symbol: usize,
    /// Root-raised-cosine roll-off of g_T and g_R.
    pub roll_off: f64,
    /// Root-raised-cosine span in symbols.
    pub filter_span: usize,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self {
            n_subcarriers: 256,
            cp_length: 32,
            symbol_interval: 250e-9,
            samples_per_symbol: 100,
            roll_off: 0.5,
            filter_span: 10,
        }
    }
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.n_subcarriers;
        if n < 8 || !n.is_multiple_of(2) {
            return Err(invalid(format!("N = {n} must be even and at least 8")));
        }
        if self.cp_length >= n {
            return Err(invalid(format!(
                "cyclic prefix {} must be below N = {n}",
                self.cp_length
            )));
        }
        if !(self.symbol_interval.is_finite() && self.symbol_interval > 0.0) {
            return Err(invalid("symbol interval must be positive"));
        }
        if self.samples_per_symbol < 4 {
            return Err(invalid("samples per symbol must be at least 4"));
        }
        if !(0.0..=1.0).contains(&self.roll_off) {
            return Err(invalid(format!(
                "roll-off {} outside [0, 1]",
                self.roll_off
            )));
        }
        if self.filter_span == 0 || !(self.filter_span * self.samples_per_symbol).is_multiple_of(2)
        {
            return Err(invalid(
                "filter span times samples per symbol must be positive and even",
            ));
        }
        Ok(())
    }

    /// Simulation grid spacing T_s / samples_per_symbol.
    pub fn sample_interval(&self) -> f64 {
        self.symbol_interval / self.samples_per_symbol as f64
    }

    /// Independent data subcarriers per frame, N/2 − 1.
    pub fn data_subcarriers(&self) -> usize {
        self.n_subcarriers / 2 - 1
    }

    /// Symbol-rate samples per transmitted frame, N + N_cp.
    pub fn frame_length(&self) -> usize {
        self.n_subcarriers + self.cp_length
    }

    /// Frequency of subcarrier k, k / (N·T_s).
    pub fn subcarrier_frequency(&self, k: usize) -> f64 {
        k as f64 / (self.n_subcarriers as f64 * self.symbol_interval)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_consistent() {
        let c = OfdmConfig::default();
        c.validate().unwrap();
        assert_eq!(c.data_subcarriers(), 127);
        assert_eq!(c.frame_length(), 288);
        assert!((c.sample_interval() - 2.5e-9).abs() < 1e-21);
        assert!((c.subcarrier_frequency(1) - 15_625.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_shapes() {
        let bad = [
            OfdmConfig {
                n_subcarriers: 7,
                ..Default::default()
            },
            OfdmConfig {
                n_subcarriers: 6,
                ..Default::default()
            },
            OfdmConfig {
                cp_length: 256,
                ..Default::default()
            },
            OfdmConfig {
                samples_per_symbol: 2,
                ..Default::default()
            },
            OfdmConfig {
                roll_off: 1.5,
                ..Default::default()
            },
            OfdmConfig {
                samples_per_symbol: 5,
                filter_span: 3,
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
