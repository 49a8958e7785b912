//! Lambertian line-of-sight plus ceiling-bounce diffuse channel synthesis.

use std::f64::consts::{LN_2, PI};

use crate::channel::relay::RawChannels;
use crate::error::{invalid, Result};
use crate::signal::SampledSignal;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Diffuse-tail mass left beyond the last synthesized sample before it is
/// folded into that sample.
const DIFFUSE_TAIL_MASS: f64 = 1e-6;

pub type Point = [f64; 3];

/// An emitter or detector: position plus the direction its axis points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub position: Point,
    pub normal: Point,
}

impl Node {
    pub fn new(position: Point, normal: Point) -> Self {
        Self { position, normal }
    }

    /// Facing straight down, as a ceiling luminaire.
    pub fn facing_down(position: Point) -> Self {
        Self::new(position, [0.0, 0.0, -1.0])
    }

    pub fn facing_up(position: Point) -> Self {
        Self::new(position, [0.0, 0.0, 1.0])
    }
}

/// Room geometry and optical front-end parameters for CIR synthesis.
#[derive(Debug, Clone, PartialEq)]
pub struct RoomScenario {
    /// Length, width and height in metres; the floor is z = 0.
    pub room: Point,
    pub transmitters: Vec<Node>,
    pub receivers: Vec<Node>,
    pub half_angle_deg: f64,
    pub pd_area_m2: f64,
    pub fov_deg: f64,
    /// Average surface reflectivity in [0, 1).
    pub reflectivity: f64,
}

impl RoomScenario {
    pub fn validate(&self) -> Result<()> {
        if self.room.iter().any(|&d| !(d.is_finite() && d > 0.0)) {
            return Err(invalid("room dimensions must be positive"));
        }
        if !(self.half_angle_deg > 0.0 && self.half_angle_deg < 90.0) {
            return Err(invalid(format!(
                "half viewing angle {} not in (0, 90) degrees",
                self.half_angle_deg
            )));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg <= 90.0) {
            return Err(invalid(format!(
                "field of view {} not in (0, 90]",
                self.fov_deg
            )));
        }
        if !(self.pd_area_m2.is_finite() && self.pd_area_m2 > 0.0) {
            return Err(invalid("photodetector area must be positive"));
        }
        if !(0.0..1.0).contains(&self.reflectivity) {
            return Err(invalid(format!(
                "reflectivity {} not in [0, 1)",
                self.reflectivity
            )));
        }
        for (kind, nodes) in [
            ("transmitter", &self.transmitters),
            ("receiver", &self.receivers),
        ] {
            for (i, n) in nodes.iter().enumerate() {
                let inside = n
                    .position
                    .iter()
                    .zip(&self.room)
                    .all(|(&p, &d)| (0.0..=d).contains(&p));
                if !inside {
                    return Err(invalid(format!("{kind} {i} lies outside the room")));
                }
                if norm(n.normal) == 0.0 {
                    return Err(invalid(format!("{kind} {i} has a zero normal")));
                }
            }
        }
        Ok(())
    }

    pub fn lambertian_order(&self) -> f64 {
        lambertian_order(self.half_angle_deg)
    }

    /// Line-of-sight DC gain and path length between transmitter `tx` and
    /// receiver `rx`. Zero gain outside the beam or the field of view.
    pub fn los_gain(&self, tx: usize, rx: usize) -> Result<(f64, f64)> {
        let t = self.transmitter(tx)?;
        let r = self.receiver(rx)?;
        Ok(los_gain(
            t,
            r,
            self.lambertian_order(),
            self.pd_area_m2,
            self.fov_deg,
        ))
    }

    /// Diffuse DC gain from an integrating-sphere room model,
    /// `A_pd·ρ / (A_room·(1 − ρ))`.
    pub fn diffuse_gain(&self) -> f64 {
        let [l, w, h] = self.room;
        let surface = 2.0 * (l * w + l * h + w * h);
        self.pd_area_m2 * self.reflectivity / (surface * (1.0 - self.reflectivity))
    }

    /// Ceiling-bounce time constant `a = 2H/c`.
    pub fn ceiling_bounce_constant(&self) -> f64 {
        2.0 * self.room[2] / SPEED_OF_LIGHT
    }

    fn transmitter(&self, i: usize) -> Result<&Node> {
        self.transmitters
            .get(i)
            .ok_or_else(|| invalid(format!("no transmitter {i}")))
    }

    fn receiver(&self, i: usize) -> Result<&Node> {
        self.receivers
            .get(i)
            .ok_or_else(|| invalid(format!("no receiver {i}")))
    }
}

/// Lambertian order `m = −ln 2 / ln cos(θ½)`.
pub fn lambertian_order(half_angle_deg: f64) -> f64 {
    -LN_2 / half_angle_deg.to_radians().cos().ln()
}

pub(crate) fn los_gain(tx: &Node, rx: &Node, order: f64, area: f64, fov_deg: f64) -> (f64, f64) {
    let v = sub(rx.position, tx.position);
    let d = norm(v);
    if d == 0.0 {
        return (0.0, 0.0);
    }
    let cos_phi = dot(v, tx.normal) / (d * norm(tx.normal));
    let cos_psi = -dot(v, rx.normal) / (d * norm(rx.normal));
    let fov_cos = fov_deg.to_radians().cos();
    if cos_phi <= 0.0 || cos_psi <= 0.0 || cos_psi < fov_cos - 1e-12 {
        return (0.0, d);
    }
    let gain = (order + 1.0) * area / (2.0 * PI * d * d) * cos_phi.powf(order) * cos_psi;
    (gain, d)
}

/// Synthesizes the optical CIR from transmitter `tx` to receiver `rx`.
///
/// The LOS term is a single impulse at delay d/c (rounded to the grid). The
/// diffuse term follows the ceiling-bounce profile `6a⁶/(t + a)⁷` starting at
/// the same delay; each sample holds the profile's mass over its bin and the
/// truncated tail is folded into the last sample, so the CIR integrates to
/// exactly LOS gain plus diffuse gain.
pub fn synthesize_cir(
    scene: &RoomScenario,
    tx: usize,
    rx: usize,
    sample_interval: f64,
) -> Result<SampledSignal> {
    scene.validate()?;
    if !(sample_interval.is_finite() && sample_interval > 0.0) {
        return Err(invalid("sample interval must be positive"));
    }
    let (los, distance) = scene.los_gain(tx, rx)?;
    let diffuse = scene.diffuse_gain();
    let delay_index = (distance / SPEED_OF_LIGHT / sample_interval).round() as usize;

    if los == 0.0 && diffuse == 0.0 {
        return SampledSignal::zeros(1, sample_interval);
    }

    let a = scene.ceiling_bounce_constant();
    // Survival function of the ceiling-bounce profile.
    let survival = |t: f64| (a / (t + a)).powi(6);
    let tail_len = if diffuse > 0.0 {
        let t_end = a * (DIFFUSE_TAIL_MASS.powf(-1.0 / 6.0) - 1.0);
        (t_end / sample_interval).ceil().max(1.0) as usize
    } else {
        1
    };

    let mut samples = vec![0.0; delay_index + tail_len];
    samples[delay_index] += los / sample_interval;
    if diffuse > 0.0 {
        for n in 0..tail_len {
            let t0 = n as f64 * sample_interval;
            let mass = if n + 1 == tail_len {
                survival(t0)
            } else {
                survival(t0) - survival(t0 + sample_interval)
            };
            samples[delay_index + n] += diffuse * mass / sample_interval;
        }
    }
    SampledSignal::from_real(&samples, sample_interval)
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

/// Source, relay and destination placement for a synthetic relay link.
///
/// The source luminaire faces down from the ceiling; the relay has an
/// upward photodetector and a downward LED at one point; the destination
/// detector faces up.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayGeometry {
    pub room: Point,
    pub source: Point,
    pub relay: Point,
    pub destination: Point,
    pub half_angle_deg: f64,
    pub pd_area_m2: f64,
    pub fov_deg: f64,
    pub reflectivity: f64,
}

impl Default for RelayGeometry {
    fn default() -> Self {
        Self {
            room: [5.0, 5.0, 3.0],
            source: [2.5, 2.5, 3.0],
            relay: [2.5, 2.5, 2.8],
            destination: [3.2, 3.2, 0.85],
            half_angle_deg: 40.0,
            pd_area_m2: 1e-4,
            fov_deg: 85.0,
            reflectivity: 0.3,
        }
    }
}

impl RelayGeometry {
    /// Transmitters are [source, relay]; receivers are [relay, destination].
    pub fn room_scenario(&self) -> RoomScenario {
        RoomScenario {
            room: self.room,
            transmitters: vec![
                Node::facing_down(self.source),
                Node::facing_down(self.relay),
            ],
            receivers: vec![
                Node::facing_up(self.relay),
                Node::facing_up(self.destination),
            ],
            half_angle_deg: self.half_angle_deg,
            pd_area_m2: self.pd_area_m2,
            fov_deg: self.fov_deg,
            reflectivity: self.reflectivity,
        }
    }

    /// The four raw optical CIRs on a grid of `sample_interval`.
    pub fn synthesize(&self, sample_interval: f64) -> Result<RawChannels> {
        let scene = self.room_scenario();
        let cir = |tx, rx| synthesize_cir(&scene, tx, rx, sample_interval);
        Ok(RawChannels {
            c_sd: cir(0, 1)?,
            c_sr: cir(0, 0)?,
            c_rd: cir(1, 1)?,
            c_rr: cir(1, 0)?,
        })
    }
}
