use crate::error::{invalid, Result};
use crate::ofdm::ModulationScheme;

/// Per-subcarrier BER of `scheme` at linear SNR `snr`.
///
/// 2-PSK: `½·erfc(√snr)`; M-QAM:
/// `(√M − 1)/(√M·log₂√M)·erfc(√(3·snr/(2(M − 1))))`; BPSK-SIM:
/// `½·erfc(snr)`, or `½·erfc(√snr)` when `bpsk_sim_sqrt` is set.
pub fn ber_per_subcarrier_with(
    snr: f64,
    scheme: ModulationScheme,
    bpsk_sim_sqrt: bool,
) -> Result<f64> {
    if snr.is_nan() || snr < 0.0 {
        return Err(invalid(format!("SNR must be non-negative, got {snr}")));
    }
    Ok(match scheme {
        ModulationScheme::Psk2 => 0.5 * libm::erfc(snr.sqrt()),
        ModulationScheme::BpskSim if bpsk_sim_sqrt => 0.5 * libm::erfc(snr.sqrt()),
        ModulationScheme::BpskSim => 0.5 * libm::erfc(snr),
        ModulationScheme::Qam(m) => {
            let m = m as f64;
            let root = m.sqrt();
            (root - 1.0) / (root * root.log2())
                * libm::erfc((snr * (3.0 / (2.0 * (m - 1.0)))).sqrt())
        }
    })
}

/// [`ber_per_subcarrier_with`] with BPSK-SIM in its printed form.
pub fn ber_per_subcarrier(snr: f64, scheme: ModulationScheme) -> Result<f64> {
    ber_per_subcarrier_with(snr, scheme, false)
}

/// Normalization `2/(N − 2)` of the subcarrier average for DFT size N.
pub fn averaging_factor(n_subcarriers: usize) -> f64 {
    2.0 / (n_subcarriers as f64 - 2.0)
}

/// Mean of per-bin BERs over the N/2 − 1 data subcarriers.
///
/// Deviations from the first bin are summed before scaling, so a uniform
/// profile returns the single-bin value exactly.
pub fn mean_ber(per_bin: &[f64]) -> Result<f64> {
    let first = *per_bin
        .first()
        .ok_or_else(|| invalid("empty SNR profile"))?;
    let n = 2 * per_bin.len() + 2;
    let dev: f64 = per_bin.iter().map(|b| b - first).sum();
    Ok(first + averaging_factor(n) * dev)
}
