//! Run configuration: a TOML file whose every key has a default, so an
//! empty file is a complete configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::Deserialize;
use vlcsim_core::channel::{
    load_cir, ChannelSource, GaNumerator, Node, Point, RawChannels, RdFactor, RelayChannelSet,
    RelayGeometry, RoomScenario,
};
use vlcsim_core::signal::SampledSignal;
use vlcsim_core::{
    AnalysisOptions, FdNoiseGain, KpGrid, LedModel, LinkModel, Mode, ModulationScheme, OfdmConfig,
    RelaySettings,
};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSection,
    pub ofdm: OfdmSection,
    pub budget: BudgetSection,
    pub sweep: SweepSection,
    pub sinr: SinrSection,
    /// Directory that relative CIR paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    /// `synthetic` or `files`.
    pub source: String,
    pub led_cutoff_hz: f64,
    /// `effective` or `raw` relay-to-destination CIR in the relayed path.
    pub rd_factor: String,
    pub geometry: GeometrySection,
    pub files: FilesSection,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            source: "synthetic".into(),
            led_cutoff_hz: 20e6,
            rd_factor: "effective".into(),
            geometry: GeometrySection::default(),
            files: FilesSection::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub room: Point,
    pub source: Point,
    pub relay: Point,
    pub destination: Point,
    pub half_angle_deg: f64,
    pub pd_area_m2: f64,
    pub fov_deg: f64,
    pub reflectivity: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        let g = RelayGeometry::default();
        Self {
            room: g.room,
            source: g.source,
            relay: g.relay,
            destination: g.destination,
            half_angle_deg: g.half_angle_deg,
            pd_area_m2: g.pd_area_m2,
            fov_deg: g.fov_deg,
            reflectivity: g.reflectivity,
        }
    }
}

impl GeometrySection {
    pub fn to_geometry(&self) -> RelayGeometry {
        RelayGeometry {
            room: self.room,
            source: self.source,
            relay: self.relay,
            destination: self.destination,
            half_angle_deg: self.half_angle_deg,
            pd_area_m2: self.pd_area_m2,
            fov_deg: self.fov_deg,
            reflectivity: self.reflectivity,
        }
    }
}

/// Raw CIR files; a missing loop file means no loop interference.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilesSection {
    pub c_sd: Option<PathBuf>,
    pub c_sr: Option<PathBuf>,
    pub c_rd: Option<PathBuf>,
    pub c_rr: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OfdmSection {
    pub n_subcarriers: usize,
    pub cp_length: usize,
    pub symbol_interval: f64,
    pub samples_per_symbol: usize,
    pub roll_off: f64,
    pub filter_span: usize,
}

impl Default for OfdmSection {
    fn default() -> Self {
        let c = OfdmConfig::default();
        Self {
            n_subcarriers: c.n_subcarriers,
            cp_length: c.cp_length,
            symbol_interval: c.symbol_interval,
            samples_per_symbol: c.samples_per_symbol,
            roll_off: c.roll_off,
            filter_span: c.filter_span,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSection {
    pub responsivity: f64,
    pub noise_psd: f64,
    pub t_p: f64,
    /// `total` or `source`.
    pub ga_numerator: String,
    /// `single` or `verbatim`.
    pub fd_noise_gain: String,
    pub bpsk_sim_sqrt: bool,
    pub residual_tolerance: f64,
}

impl Default for BudgetSection {
    fn default() -> Self {
        let s = RelaySettings::default();
        Self {
            responsivity: s.responsivity,
            noise_psd: s.noise_psd,
            t_p: s.t_p,
            ga_numerator: "total".into(),
            fd_noise_gain: "single".into(),
            bpsk_sim_sqrt: false,
            residual_tolerance: s.residual_tolerance,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub power_dbm: Vec<f64>,
    pub schemes: Vec<String>,
    pub modes: Vec<String>,
    pub allocations: Vec<String>,
    /// `default` (step `kp_grid_step` over [0.01, 0.99]) or `table2`.
    pub kp_grid: String,
    pub kp_grid_step: f64,
    /// Monte Carlo bits per row; 0 disables simulation.
    pub bits: u64,
    pub seed: u64,
    /// Mode and scheme whose optimum split `optimize-kp` tabulates.
    pub opt_mode: String,
    pub opt_scheme: String,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            power_dbm: (0..20).map(f64::from).collect(),
            schemes: vec!["2-PSK".into(), "4-QAM".into(), "BPSK-SIM".into()],
            modes: vec!["direct".into(), "HD".into(), "FD".into()],
            allocations: vec!["EPA".into(), "OPA".into()],
            kp_grid: "default".into(),
            kp_grid_step: KpGrid::default().step,
            bits: 0,
            seed: 1,
            opt_mode: "FD".into(),
            opt_scheme: "BPSK-SIM".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SinrSection {
    pub room: Point,
    pub luminaires: Vec<Point>,
    /// Optical transmit power per luminaire in watts.
    pub power_w: f64,
    pub half_angle_deg: f64,
    pub pd_area_m2: f64,
    pub fov_deg: f64,
    pub reflectivity: f64,
    /// Height of the test-point plane.
    pub plane_height: f64,
    /// Test points per room side, centred in equal cells.
    pub grid_points: usize,
    pub responsivity: f64,
    pub noise_psd: f64,
    pub bandwidth_hz: f64,
    /// Schemes evaluated by `--ber-vs-sinr`.
    pub schemes: Vec<String>,
}

impl Default for SinrSection {
    fn default() -> Self {
        Self {
            room: [5.0, 5.0, 3.0],
            luminaires: vec![
                [1.25, 1.25, 3.0],
                [1.25, 3.75, 3.0],
                [3.75, 1.25, 3.0],
                [3.75, 3.75, 3.0],
            ],
            power_w: 1.0,
            half_angle_deg: 40.0,
            pd_area_m2: 1e-4,
            fov_deg: 85.0,
            reflectivity: 0.3,
            plane_height: 0.85,
            grid_points: 10,
            responsivity: 0.28,
            noise_psd: 1e-20,
            bandwidth_hz: 20e6,
            schemes: vec![
                "2-PSK".into(),
                "4-QAM".into(),
                "8-QAM".into(),
                "BPSK-SIM".into(),
            ],
        }
    }
}

/// Power-allocation policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Allocation {
    /// K_p = 0.5.
    Epa,
    /// Brute-force optimal K_p.
    Opa,
}

impl Allocation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Epa => "EPA",
            Self::Opa => "OPA",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "EPA" => Ok(Self::Epa),
            "OPA" => Ok(Self::Opa),
            _ => bail!("unknown allocation `{s}` (expected EPA or OPA)"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg =
            Self::parse(&text).with_context(|| format!("in config {}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn ofdm_config(&self) -> OfdmConfig {
        let o = &self.ofdm;
        OfdmConfig {
            n_subcarriers: o.n_subcarriers,
            cp_length: o.cp_length,
            symbol_interval: o.symbol_interval,
            samples_per_symbol: o.samples_per_symbol,
            roll_off: o.roll_off,
            filter_span: o.filter_span,
        }
    }

    pub fn led(&self) -> Result<LedModel> {
        Ok(LedModel::new(self.scenario.led_cutoff_hz)?)
    }

    pub fn relay_settings(&self) -> Result<RelaySettings> {
        let b = &self.budget;
        Ok(RelaySettings {
            responsivity: b.responsivity,
            noise_psd: b.noise_psd,
            t_p: b.t_p,
            led: self.led()?,
            ga_numerator: match b.ga_numerator.trim().to_ascii_lowercase().as_str() {
                "total" => GaNumerator::Total,
                "source" => GaNumerator::Source,
                other => bail!("unknown ga_numerator `{other}` (total or source)"),
            },
            rd_factor: match self.scenario.rd_factor.trim().to_ascii_lowercase().as_str() {
                "effective" | "eff" => RdFactor::Effective,
                "raw" => RdFactor::Raw,
                other => bail!("unknown rd_factor `{other}` (effective or raw)"),
            },
            residual_tolerance: b.residual_tolerance,
        })
    }

    pub fn analysis_options(&self) -> Result<AnalysisOptions> {
        Ok(AnalysisOptions {
            fd_noise_gain: self.budget.fd_noise_gain.parse::<FdNoiseGain>()?,
            bpsk_sim_sqrt: self.budget.bpsk_sim_sqrt,
        })
    }

    pub fn kp_grid(&self) -> Result<KpGrid> {
        let grid = match self.sweep.kp_grid.trim().to_ascii_lowercase().as_str() {
            "default" => KpGrid::with_step(self.sweep.kp_grid_step),
            "table2" => KpGrid::table2(),
            other => bail!("unknown kp_grid `{other}` (default or table2)"),
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn schemes(&self) -> Result<Vec<ModulationScheme>> {
        parse_list(&self.sweep.schemes, "scheme", |s| {
            Ok(s.parse::<ModulationScheme>()?)
        })
    }

    pub fn modes(&self) -> Result<Vec<Mode>> {
        parse_list(&self.sweep.modes, "mode", |s| Ok(s.parse::<Mode>()?))
    }

    pub fn allocations(&self) -> Result<Vec<Allocation>> {
        parse_list(&self.sweep.allocations, "allocation", Allocation::parse)
    }

    pub fn powers_dbm(&self) -> Result<Vec<f64>> {
        ensure!(
            !self.sweep.power_dbm.is_empty(),
            "power_dbm needs at least one value"
        );
        ensure!(
            self.sweep.power_dbm.iter().all(|p| p.is_finite()),
            "power_dbm values must be finite"
        );
        Ok(self.sweep.power_dbm.clone())
    }

    pub fn sinr_schemes(&self) -> Result<Vec<ModulationScheme>> {
        parse_list(&self.sinr.schemes, "scheme", |s| {
            Ok(s.parse::<ModulationScheme>()?)
        })
    }

    /// Raw optical CIRs on the simulation grid.
    pub fn raw_channels(&self) -> Result<(RawChannels, ChannelSource)> {
        let dt = self.ofdm_config().sample_interval();
        match self.scenario.source.trim().to_ascii_lowercase().as_str() {
            "synthetic" => Ok((
                self.scenario.geometry.to_geometry().synthesize(dt)?,
                ChannelSource::Synthetic,
            )),
            "files" | "file" => {
                let f = &self.scenario.files;
                let load = |p: &Option<PathBuf>, name: &str| -> Result<SampledSignal> {
                    let p = p
                        .as_ref()
                        .with_context(|| format!("scenario.files.{name} is required"))?;
                    Ok(load_cir(self.base_dir.join(p))?)
                };
                let c_rr = match &f.c_rr {
                    Some(_) => load(&f.c_rr, "c_rr")?,
                    None => SampledSignal::zeros(1, dt)?,
                };
                Ok((
                    RawChannels {
                        c_sd: load(&f.c_sd, "c_sd")?,
                        c_sr: load(&f.c_sr, "c_sr")?,
                        c_rd: load(&f.c_rd, "c_rd")?,
                        c_rr,
                    },
                    ChannelSource::File,
                ))
            }
            other => bail!("unknown scenario source `{other}` (synthetic or files)"),
        }
    }

    pub fn channel_set(&self) -> Result<RelayChannelSet> {
        let (raw, source) = self.raw_channels()?;
        Ok(RelayChannelSet::from_raw(&raw, &self.led()?, source)?)
    }

    pub fn link_model(&self) -> Result<LinkModel> {
        Ok(LinkModel::new(
            self.channel_set()?,
            self.ofdm_config(),
            self.relay_settings()?,
        )?)
    }

    /// The SINR room: luminaires facing down, test points facing up on a
    /// centred grid.
    pub fn sinr_room(&self) -> Result<RoomScenario> {
        let s = &self.sinr;
        ensure!(s.grid_points > 0, "sinr.grid_points must be positive");
        let n = s.grid_points;
        let coord = |i: usize, side: f64| (i as f64 + 0.5) * side / n as f64;
        let receivers = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .map(|(a, b)| {
                Node::facing_up([coord(a, s.room[0]), coord(b, s.room[1]), s.plane_height])
            })
            .collect();
        let room = RoomScenario {
            room: s.room,
            transmitters: s.luminaires.iter().map(|&p| Node::facing_down(p)).collect(),
            receivers,
            half_angle_deg: s.half_angle_deg,
            pd_area_m2: s.pd_area_m2,
            fov_deg: s.fov_deg,
            reflectivity: s.reflectivity,
        };
        room.validate()?;
        Ok(room)
    }

    /// `# key = value` lines for every resolved parameter.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "# {k} = {v}");
        };
        let sc = &self.scenario;
        kv("scenario.source", sc.source.clone());
        kv("scenario.led_cutoff_hz", num(sc.led_cutoff_hz));
        kv("scenario.rd_factor", sc.rd_factor.clone());
        if sc.source.trim().eq_ignore_ascii_case("synthetic") {
            let g = &sc.geometry;
            kv("scenario.geometry.room", point(g.room));
            kv("scenario.geometry.source", point(g.source));
            kv("scenario.geometry.relay", point(g.relay));
            kv("scenario.geometry.destination", point(g.destination));
            kv("scenario.geometry.half_angle_deg", num(g.half_angle_deg));
            kv("scenario.geometry.pd_area_m2", num(g.pd_area_m2));
            kv("scenario.geometry.fov_deg", num(g.fov_deg));
            kv("scenario.geometry.reflectivity", num(g.reflectivity));
        } else {
            let f = &sc.files;
            for (k, p) in [
                ("c_sd", &f.c_sd),
                ("c_sr", &f.c_sr),
                ("c_rd", &f.c_rd),
                ("c_rr", &f.c_rr),
            ] {
                let v = p
                    .as_ref()
                    .map_or("none".to_string(), |p| p.display().to_string());
                kv(&format!("scenario.files.{k}"), v);
            }
        }
        let o = &self.ofdm;
        kv("ofdm.n_subcarriers", o.n_subcarriers.to_string());
        kv("ofdm.cp_length", o.cp_length.to_string());
        kv("ofdm.symbol_interval", num(o.symbol_interval));
        kv("ofdm.samples_per_symbol", o.samples_per_symbol.to_string());
        kv("ofdm.roll_off", num(o.roll_off));
        kv("ofdm.filter_span", o.filter_span.to_string());
        let b = &self.budget;
        kv("budget.responsivity", num(b.responsivity));
        kv("budget.noise_psd", num(b.noise_psd));
        kv("budget.t_p", num(b.t_p));
        kv("budget.ga_numerator", b.ga_numerator.clone());
        kv("budget.fd_noise_gain", b.fd_noise_gain.clone());
        kv("budget.bpsk_sim_sqrt", b.bpsk_sim_sqrt.to_string());
        kv("budget.residual_tolerance", num(b.residual_tolerance));
        let w = &self.sweep;
        kv("sweep.power_dbm", list(w.power_dbm.iter().map(|&p| num(p))));
        kv("sweep.schemes", list(w.schemes.iter().cloned()));
        kv("sweep.modes", list(w.modes.iter().cloned()));
        kv("sweep.allocations", list(w.allocations.iter().cloned()));
        kv("sweep.kp_grid", w.kp_grid.clone());
        kv("sweep.kp_grid_step", num(w.kp_grid_step));
        kv("sweep.bits", w.bits.to_string());
        kv("sweep.seed", w.seed.to_string());
        kv("sweep.opt_mode", w.opt_mode.clone());
        kv("sweep.opt_scheme", w.opt_scheme.clone());
        let s = &self.sinr;
        kv("sinr.room", point(s.room));
        kv(
            "sinr.luminaires",
            list(s.luminaires.iter().map(|&p| point(p))),
        );
        kv("sinr.power_w", num(s.power_w));
        kv("sinr.half_angle_deg", num(s.half_angle_deg));
        kv("sinr.pd_area_m2", num(s.pd_area_m2));
        kv("sinr.fov_deg", num(s.fov_deg));
        kv("sinr.reflectivity", num(s.reflectivity));
        kv("sinr.plane_height", num(s.plane_height));
        kv("sinr.grid_points", s.grid_points.to_string());
        kv("sinr.responsivity", num(s.responsivity));
        kv("sinr.noise_psd", num(s.noise_psd));
        kv("sinr.bandwidth_hz", num(s.bandwidth_hz));
        kv("sinr.schemes", list(s.schemes.iter().cloned()));
        out
    }
}

fn parse_list<T: Ord + Copy>(
    items: &[String],
    what: &str,
    parse: impl Fn(&str) -> Result<T>,
) -> Result<Vec<T>> {
    ensure!(!items.is_empty(), "at least one {what} is required");
    let mut out = Vec::with_capacity(items.len());
    for s in items {
        let v = parse(s)?;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    Ok(out)
}

fn num(v: f64) -> String {
    vlcsim_core::channel::fmt_f64(v)
}

fn point(p: Point) -> String {
    format!("[{}, {}, {}]", p[0], p[1], p[2])
}

fn list(items: impl Iterator<Item = String>) -> String {
    format!("[{}]", items.collect::<Vec<_>>().join(", "))
}
