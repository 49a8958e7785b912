use crate::channel::{Point, RoomScenario};
use crate::error::{invalid, Result};

/// One luminaire with its gains toward every test point.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrSource {
    pub position: Point,
    /// Transmit optical power in watts.
    pub power_w: f64,
    pub h_los: Vec<f64>,
    pub h_nlos: Vec<f64>,
}

/// Luminaires, test points and receiver noise for the interference model.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrScene {
    pub sources: Vec<SinrSource>,
    pub receivers: Vec<Point>,
    pub responsivity: f64,
    /// Noise spectral density η in W/Hz.
    pub noise_psd: f64,
    /// Modulation bandwidth B in Hz.
    pub bandwidth: f64,
}

impl SinrScene {
    /// Scene whose gains come from the room's line-of-sight and diffuse
    /// models; every transmitter emits `power_w`.
    pub fn from_room(
        room: &RoomScenario,
        power_w: f64,
        responsivity: f64,
        noise_psd: f64,
        bandwidth: f64,
    ) -> Result<Self> {
        room.validate()?;
        let diffuse = room.diffuse_gain();
        let sources = (0..room.transmitters.len())
            .map(|i| {
                let h_los = (0..room.receivers.len())
                    .map(|j| room.los_gain(i, j).map(|g| g.0))
                    .collect::<Result<Vec<_>>>()?;
                Ok(SinrSource {
                    position: room.transmitters[i].position,
                    power_w,
                    h_nlos: vec![diffuse; h_los.len()],
                    h_los,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let scene = Self {
            sources,
            receivers: room.receivers.iter().map(|n| n.position).collect(),
            responsivity,
            noise_psd,
            bandwidth,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() || self.receivers.is_empty() {
            return Err(invalid(
                "SINR scene needs at least one source and one test point",
            ));
        }
        for (i, s) in self.sources.iter().enumerate() {
            if s.h_los.len() != self.receivers.len() || s.h_nlos.len() != self.receivers.len() {
                return Err(invalid(format!(
                    "source {i} gain count does not match test points"
                )));
            }
            let ok = |g: &f64| g.is_finite() && *g >= 0.0;
            if !s.h_los.iter().all(ok) || !s.h_nlos.iter().all(ok) || !ok(&s.power_w) {
                return Err(invalid(format!(
                    "source {i} has a negative or non-finite gain or power"
                )));
            }
        }
        if !(self.responsivity > 0.0) || !(self.noise_psd >= 0.0) || !(self.bandwidth >= 0.0) {
            return Err(invalid(
                "responsivity must be positive, noise and bandwidth non-negative",
            ));
        }
        Ok(())
    }

    /// Desired power `H_LOS·P_T` of source `i` at test point `j`.
    pub fn signal_power(&self, i: usize, j: usize) -> f64 {
        let s = &self.sources[i];
        s.h_los[j] * s.power_w
    }

    /// Own diffuse power plus every other source's total received power.
    pub fn interference_power(&self, i: usize, j: usize) -> f64 {
        let isi = self.sources[i].h_nlos[j] * self.sources[i].power_w;
        let cci: f64 = self
            .sources
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i)
            .map(|(_, s)| (s.h_los[j] + s.h_nlos[j]) * s.power_w)
            .sum();
        isi + cci
    }

    fn check(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.sources.len() || j >= self.receivers.len() {
            return Err(invalid(format!("no source/test point pair ({i}, {j})")));
        }
        Ok(())
    }
}

/// `10·log₁₀((r·P_sig)² / (η·B + (r·P_intf)²))`; `+∞` when the denominator
/// vanishes.
pub fn sinr_point(scene: &SinrScene, i: usize, j: usize) -> Result<f64> {
    scene.check(i, j)?;
    let r = scene.responsivity;
    let num = (r * scene.signal_power(i, j)).powi(2);
    let den = scene.noise_psd * scene.bandwidth + (r * scene.interference_power(i, j)).powi(2);
    if den == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (num / den).log10())
}

/// Mean SINR in dB over all source/test-point pairs.
pub fn average_sinr(scene: &SinrScene) -> Result<f64> {
    scene.validate()?;
    let mut sum = 0.0;
    for i in 0..scene.sources.len() {
        for j in 0..scene.receivers.len() {
            sum += sinr_point(scene, i, j)?;
        }
    }
    Ok(sum / pairs(scene))
}

/// Mean signal and interference powers over all pairs.
pub fn average_powers(scene: &SinrScene) -> Result<(f64, f64)> {
    scene.validate()?;
    let (mut sig, mut intf) = (0.0, 0.0);
    for i in 0..scene.sources.len() {
        for j in 0..scene.receivers.len() {
            sig += scene.signal_power(i, j);
            intf += scene.interference_power(i, j);
        }
    }
    Ok((sig / pairs(scene), intf / pairs(scene)))
}

/// SINR at test point `j` from the source that serves it best.
pub fn best_server_sinr(scene: &SinrScene, j: usize) -> Result<f64> {
    (0..scene.sources.len())
        .map(|i| sinr_point(scene, i, j))
        .try_fold(f64::NEG_INFINITY, |acc, s| s.map(|s| acc.max(s)))
}

fn pairs(scene: &SinrScene) -> f64 {
    (scene.sources.len() * scene.receivers.len()) as f64
}
