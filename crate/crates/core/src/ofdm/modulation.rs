use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Subcarrier modulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModulationScheme {
    /// Antipodal ±1; bit 0 maps to +1.
    Psk2,
    /// M-QAM with M a power of two ≥ 4. Only square orders have a
    /// constellation; other orders exist for their closed-form BER.
    Qam(u32),
    /// BPSK subcarrier intensity modulation, characterized only by its
    /// closed-form BER.
    BpskSim,
}

impl ModulationScheme {
    pub fn qam(order: u32) -> Result<Self> {
        if order < 4 || !order.is_power_of_two() {
            return Err(invalid(format!(
                "QAM order {order} is not a power of two >= 4"
            )));
        }
        Ok(Self::Qam(order))
    }

    pub fn order(&self) -> u32 {
        match self {
            Self::Psk2 | Self::BpskSim => 2,
            Self::Qam(m) => *m,
        }
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.order().trailing_zeros() as usize
    }

    pub fn is_square_qam(&self) -> bool {
        matches!(self, Self::Qam(m) if m.trailing_zeros() % 2 == 0)
    }

    /// Whether a waveform-level simulation exists for this scheme.
    pub fn is_simulable(&self) -> bool {
        matches!(self, Self::Psk2) || self.is_square_qam()
    }

    /// Unit-average-energy constellation; index `i` carries the bit label of
    /// `i` written MSB first.
    pub fn constellation(&self) -> Result<Vec<Complex64>> {
        match self {
            Self::Psk2 | Self::BpskSim => {
                Ok(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)])
            }
            Self::Qam(m) if self.is_square_qam() => Ok(square_qam(*m)),
            Self::Qam(m) => Err(invalid(format!("{m}-QAM has no square constellation"))),
        }
    }

    fn require_simulable(&self) -> Result<()> {
        if self.is_simulable() {
            Ok(())
        } else {
            Err(Error::AnalyticOnly(self.to_string()))
        }
    }
}

impl fmt::Display for ModulationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Psk2 => f.write_str("2-PSK"),
            Self::Qam(m) => write!(f, "{m}-QAM"),
            Self::BpskSim => f.write_str("BPSK-SIM"),
        }
    }
}

impl FromStr for ModulationScheme {
    type Err = Error;

    /// Accepts names such as `2-PSK`, `bpsk`, `4-QAM`, `qam16` and `BPSK-SIM`.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "2psk" | "bpsk" | "psk2" => return Ok(Self::Psk2),
            "bpsksim" | "sim" => return Ok(Self::BpskSim),
            _ => {}
        }
        let digits = key
            .strip_suffix("qam")
            .or_else(|| key.strip_prefix("qam"))
            .and_then(|d| d.parse::<u32>().ok());
        match digits {
            Some(m) => Self::qam(m),
            None => Err(invalid(format!("unknown modulation scheme `{s}`"))),
        }
    }
}

/// Gray-coded square QAM; the first half of each label selects the in-phase
/// level and the second half the quadrature level.
fn square_qam(m: u32) -> Vec<Complex64> {
    let half_bits = m.trailing_zeros() / 2;
    let levels = 1u32 << half_bits;
    let norm = (2.0 * (m as f64 - 1.0) / 3.0).sqrt();
    let amp = |gray: u32| (2.0 * gray_to_binary(gray) as f64 - (levels as f64 - 1.0)) / norm;
    (0..m)
        .map(|i| Complex64::new(amp(i >> half_bits), amp(i & (levels - 1))))
        .collect()
}

fn gray_to_binary(mut g: u32) -> u32 {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

/// Maps bits (one per `u8`, 0 or 1) to constellation points.
pub fn map_bits(bits: &[u8], scheme: ModulationScheme) -> Result<Vec<Complex64>> {
    scheme.require_simulable()?;
    let k = scheme.bits_per_symbol();
    if !bits.len().is_multiple_of(k) {
        return Err(invalid(format!(
            "{} bits do not divide into {k}-bit symbols",
            bits.len()
        )));
    }
    let points = scheme.constellation()?;
    bits.chunks(k)
        .map(|chunk| {
            let mut idx = 0usize;
            for &b in chunk {
                if b > 1 {
                    return Err(invalid(format!("bit value {b} is not 0 or 1")));
                }
                idx = (idx << 1) | b as usize;
            }
            Ok(points[idx])
        })
        .collect()
}

/// Hard-decision demapping: each symbol goes to its nearest point's label.
pub fn demap_symbols(symbols: &[Complex64], scheme: ModulationScheme) -> Result<Vec<u8>> {
    ml_detect(symbols, scheme)
}

/// Index of the nearest constellation point; ties go to the lowest index.
pub fn nearest_index(symbol: Complex64, points: &[Complex64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        let d = (symbol - p).norm_sqr();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Per-subcarrier maximum-likelihood decision on equalized symbols.
pub fn ml_detect(equalized: &[Complex64], scheme: ModulationScheme) -> Result<Vec<u8>> {
    scheme.require_simulable()?;
    let points = scheme.constellation()?;
    let k = scheme.bits_per_symbol();
    let mut bits = Vec::with_capacity(equalized.len() * k);
    for &s in equalized {
        push_label(&mut bits, nearest_index(s, &points), k);
    }
    Ok(bits)
}

pub(crate) fn push_label(bits: &mut Vec<u8>, index: usize, k: usize) {
    for j in (0..k).rev() {
        bits.push(((index >> j) & 1) as u8);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SIMULABLE: [ModulationScheme; 4] = [
        ModulationScheme::Psk2,
        ModulationScheme::Qam(4),
        ModulationScheme::Qam(16),
        ModulationScheme::Qam(64),
    ];

    #[test]
    fn psk2_convention() {
        let s = map_bits(&[0, 1], ModulationScheme::Psk2).unwrap();
        assert_eq!(s, vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]);
        assert_eq!(
            demap_symbols(&s, ModulationScheme::Psk2).unwrap(),
            vec![0, 1]
        );
    }

    #[test]
    fn qam4_points_are_unit_magnitude() {
        for p in ModulationScheme::Qam(4).constellation().unwrap() {
            assert!((p.norm() - 1.0).abs() < 1e-15);
            assert!((p.re.abs() - 0.5f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_average_energy() {
        for s in SIMULABLE {
            let pts = s.constellation().unwrap();
            let e = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / pts.len() as f64;
            assert!((e - 1.0).abs() < 1e-12, "{s}");
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for s in SIMULABLE {
            let pts = s.constellation().unwrap();
            let min_d = pts
                .iter()
                .enumerate()
                .flat_map(|(i, a)| pts[i + 1..].iter().map(move |b| (a - b).norm()))
                .fold(f64::INFINITY, f64::min);
            for (i, a) in pts.iter().enumerate() {
                for (j, b) in pts.iter().enumerate().skip(i + 1) {
                    if ((a - b).norm() - min_d).abs() < 1e-9 {
                        assert_eq!((i ^ j).count_ones(), 1, "{s}: {i} vs {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn names_parse_and_print() {
        for (text, want) in [
            ("2-PSK", ModulationScheme::Psk2),
            ("bpsk", ModulationScheme::Psk2),
            ("BPSK-SIM", ModulationScheme::BpskSim),
            ("4-QAM", ModulationScheme::Qam(4)),
            ("qam16", ModulationScheme::Qam(16)),
            ("8qam", ModulationScheme::Qam(8)),
        ] {
            let s: ModulationScheme = text.parse().unwrap();
            assert_eq!(s, want);
            assert_eq!(s.to_string().parse::<ModulationScheme>().unwrap(), s);
        }
        assert!("3-QAM".parse::<ModulationScheme>().is_err());
        assert!("ook".parse::<ModulationScheme>().is_err());
    }

    #[test]
    fn analytic_only_schemes_refuse_waveforms() {
        for s in [ModulationScheme::BpskSim, ModulationScheme::Qam(8)] {
            assert!(matches!(
                map_bits(&[0, 0, 0], s),
                Err(Error::AnalyticOnly(_))
            ));
            assert!(!s.is_simulable());
        }
        assert!(map_bits(&[0, 1, 1], ModulationScheme::Qam(4)).is_err());
    }

    #[test]
    fn tie_goes_to_lowest_index() {
        let bits = ml_detect(&[Complex64::new(0.0, 0.0)], ModulationScheme::Psk2).unwrap();
        assert_eq!(bits, vec![0]);
        let bits = ml_detect(&[Complex64::new(0.0, 0.0)], ModulationScheme::Qam(4)).unwrap();
        assert_eq!(bits, vec![0, 0]);
    }

    #[test]
    fn detection_matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for s in SIMULABLE {
            let pts = s.constellation().unwrap();
            let k = s.bits_per_symbol();
            let ys: Vec<Complex64> = (0..25_000)
                .map(|_| Complex64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)))
                .collect();
            let got = ml_detect(&ys, s).unwrap();
            for (n, y) in ys.iter().enumerate() {
                let dists: Vec<f64> = pts.iter().map(|p| (y - p).norm_sqr()).collect();
                let min = dists.iter().cloned().fold(f64::INFINITY, f64::min);
                let idx = dists.iter().position(|&d| d == min).unwrap();
                let mut want = Vec::new();
                push_label(&mut want, idx, k);
                assert_eq!(&got[n * k..(n + 1) * k], &want[..]);
            }
        }
    }

    proptest! {
        #[test]
        fn noiseless_round_trip(seed in any::<u64>(), which in 0usize..4) {
            let s = SIMULABLE[which];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 10_000 / s.bits_per_symbol() * s.bits_per_symbol();
            let bits: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
            let back = demap_symbols(&map_bits(&bits, s).unwrap(), s).unwrap();
            prop_assert_eq!(back, bits);
        }
    }
}
