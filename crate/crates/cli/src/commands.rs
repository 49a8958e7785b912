//! The four subcommands; each renders a complete CSV document.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;
use vlcsim_core::analysis::{
    average_sinr, ber_per_subcarrier_with, best_server_sinr, link_ber, optimize_kp,
};
use vlcsim_core::channel::{dbm_to_watts, fmt_f64, store_cir};
use vlcsim_core::ofdm::{run_monte_carlo, OperatingPoint};
use vlcsim_core::{Mode, ModulationScheme, SampledSignal, SinrScene};

use crate::config::{Allocation, RunConfig};

/// Per-power K_p values that replace the optimizer for OPA rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KpTable {
    entries: Vec<(f64, f64)>,
}

impl KpTable {
    /// Reads `power_dbm,kp` lines; a header line and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("power")) {
                continue;
            }
            let (p, k) = line
                .split_once(',')
                .with_context(|| format!("line {}: expected `power_dbm,kp`", i + 1))?;
            let p: f64 = p
                .trim()
                .parse()
                .with_context(|| format!("line {}: bad power", i + 1))?;
            let k: f64 = k
                .trim()
                .parse()
                .with_context(|| format!("line {}: bad K_p", i + 1))?;
            ensure!(k > 0.0 && k < 1.0, "line {}: K_p {k} not in (0, 1)", i + 1);
            entries.push((p, k));
        }
        ensure!(!entries.is_empty(), "K_p table is empty");
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read K_p table {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in K_p table {}", path.display()))
    }

    pub fn lookup(&self, power_dbm: f64) -> Result<f64> {
        self.entries
            .iter()
            .find(|(p, _)| (p - power_dbm).abs() < 1e-9)
            .map(|e| e.1)
            .with_context(|| format!("K_p table has no entry for {power_dbm} dBm"))
    }
}

pub const BER_SWEEP_HEADER: &str =
    "power_dbm,snr_db,mode,scheme,allocation,kp,ber_analytic,ber_mc,mc_ci_lo,mc_ci_hi,bits";

struct SweepRow {
    power_dbm: f64,
    mode: Mode,
    scheme: ModulationScheme,
    allocation: Allocation,
}

/// BER versus power for every mode, scheme and allocation, with optional
/// Monte Carlo columns.
pub fn ber_sweep(cfg: &RunConfig, kp_table: Option<&KpTable>) -> Result<String> {
    let model = cfg.link_model()?;
    let opts = cfg.analysis_options()?;
    let grid = cfg.kp_grid()?;
    let bits = cfg.sweep.bits;
    let mut rows = Vec::new();
    for &power_dbm in &cfg.powers_dbm()? {
        for &mode in &cfg.modes()? {
            for &scheme in &cfg.schemes()? {
                for &allocation in &cfg.allocations()? {
                    rows.push(SweepRow {
                        power_dbm,
                        mode,
                        scheme,
                        allocation,
                    });
                }
            }
        }
    }
    let sigma2 = model.noise_variance();
    let lines = rows
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let p = dbm_to_watts(r.power_dbm);
            let k_p = match (r.mode, r.allocation) {
                (Mode::Direct, _) => 0.5,
                (_, Allocation::Epa) => 0.5,
                (_, Allocation::Opa) => match kp_table {
                    Some(t) => t.lookup(r.power_dbm)?,
                    None => optimize_kp(&model, r.mode, r.scheme, p, &grid, &opts)?.k_p,
                },
            };
            let ber = link_ber(&model, r.mode, r.scheme, &model.budget(p, k_p), &opts)?;
            let shown_kp = if r.mode == Mode::Direct { 1.0 } else { k_p };
            let mut line = format!(
                "{},{},{},{},{},{},{}",
                fmt_f64(r.power_dbm),
                fmt_f64(10.0 * model.reference_snr(p, sigma2).log10()),
                r.mode,
                r.scheme,
                r.allocation.as_str(),
                fmt_f64(shown_kp),
                fmt_f64(ber),
            );
            if bits > 0 && r.scheme.is_simulable() {
                let point = OperatingPoint {
                    power_w: p,
                    k_p,
                    noise_variance: sigma2,
                };
                let seed = cfg.sweep.seed.wrapping_add(i as u64);
                let mc = run_monte_carlo(&model, r.scheme, r.mode, &[point], bits, seed)?;
                let m = &mc[0];
                let _ = write!(
                    line,
                    ",{},{},{},{}",
                    fmt_f64(m.ber),
                    fmt_f64(m.ci_low),
                    fmt_f64(m.ci_high),
                    m.bits_sent
                );
            } else {
                line.push_str(",,,,0");
            }
            Ok(line)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(document(cfg, BER_SWEEP_HEADER, lines))
}

pub const OPTIMIZE_KP_HEADER: &str = "power_dbm,kp_opt,ber_at_opt";

/// Optimal power split per sweep power for `sweep.opt_mode` and
/// `sweep.opt_scheme`.
pub fn optimize_kp_table(cfg: &RunConfig) -> Result<String> {
    let (mode, scheme) = optimization_target(cfg)?;
    let model = cfg.link_model()?;
    let opts = cfg.analysis_options()?;
    let grid = cfg.kp_grid()?;
    let lines = cfg
        .powers_dbm()?
        .par_iter()
        .map(|&dbm| {
            let best = optimize_kp(&model, mode, scheme, dbm_to_watts(dbm), &grid, &opts)?;
            Ok(format!(
                "{},{},{}",
                fmt_f64(dbm),
                fmt_f64(best.k_p),
                fmt_f64(best.ber)
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(document(cfg, OPTIMIZE_KP_HEADER, lines))
}

pub fn optimization_target(cfg: &RunConfig) -> Result<(Mode, ModulationScheme)> {
    let mode: Mode = cfg.sweep.opt_mode.parse()?;
    if mode == Mode::Direct {
        bail!("optimize-kp needs a relay mode (HD or FD), not direct");
    }
    Ok((mode, cfg.sweep.opt_scheme.parse()?))
}

pub const SINR_MAP_HEADER: &str = "x,y,sinr_db";
pub const BER_VS_SINR_HEADER: &str = "sinr_db,scheme,ber";

pub fn sinr_scene(cfg: &RunConfig) -> Result<SinrScene> {
    let s = &cfg.sinr;
    Ok(SinrScene::from_room(
        &cfg.sinr_room()?,
        s.power_w,
        s.responsivity,
        s.noise_psd,
        s.bandwidth_hz,
    )?)
}

/// Best-server SINR at each test point plus the all-pairs average, or with
/// `ber_vs_sinr` the BER of each scheme at those SINR values.
pub fn sinr_map(cfg: &RunConfig, ber_vs_sinr: bool) -> Result<String> {
    let scene = sinr_scene(cfg)?;
    let best = (0..scene.receivers.len())
        .map(|j| best_server_sinr(&scene, j))
        .collect::<vlcsim_core::Result<Vec<_>>>()?;
    if ber_vs_sinr {
        let schemes = cfg.sinr_schemes()?;
        let mut sorted = best.clone();
        sorted.sort_by(f64::total_cmp);
        let mut lines = Vec::new();
        for s in sorted {
            for &scheme in &schemes {
                let snr = 10f64.powf(s / 10.0);
                let ber = ber_per_subcarrier_with(snr, scheme, cfg.budget.bpsk_sim_sqrt)?;
                lines.push(format!("{},{},{}", fmt_f64(s), scheme, fmt_f64(ber)));
            }
        }
        return Ok(document(cfg, BER_VS_SINR_HEADER, lines));
    }
    let mut lines: Vec<String> = scene
        .receivers
        .iter()
        .zip(&best)
        .map(|(p, s)| format!("{},{},{}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(*s)))
        .collect();
    lines.push(format!("average,,{}", fmt_f64(average_sinr(&scene)?)));
    Ok(document(cfg, SINR_MAP_HEADER, lines))
}

pub const CHANNEL_INFO_HEADER: &str = "kind,channel,time_s,value";

/// Effective CIR samples followed by energy, peak delay, loop gain and the
/// equal-split amplification factor at the first sweep power. With
/// `cir_dir`, each effective CIR is also written in the CIR file format.
pub fn channel_info(cfg: &RunConfig, cir_dir: Option<&Path>) -> Result<String> {
    let model = cfg.link_model()?;
    let ch = model.channels();
    let named: [(&str, &SampledSignal); 4] = [
        ("sd", &ch.c_sd_eff),
        ("sr", &ch.c_sr_eff),
        ("rd", &ch.c_rd_eff),
        ("rr", &ch.c_rr_eff),
    ];
    if let Some(dir) = cir_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        for (name, c) in named {
            store_cir(c, dir.join(format!("c_{name}_eff.csv")))?;
        }
    }
    let mut lines = Vec::new();
    for (name, c) in named {
        for (n, v) in c.samples().iter().enumerate() {
            let t = c.time_of(c.start_offset() + n as i64);
            lines.push(format!("cir,{name},{},{}", fmt_f64(t), fmt_f64(v.re)));
        }
    }
    for (name, c) in named {
        lines.push(format!("energy,{name},,{}", fmt_f64(c.energy())));
        lines.push(format!(
            "peak_delay_s,{name},,{}",
            fmt_f64(c.time_of(c.peak_index()))
        ));
    }
    lines.push(format!("loop_gain,rr,,{}", fmt_f64(model.loop_gain())));
    let p = dbm_to_watts(cfg.powers_dbm()?[0]);
    let g_a = model.amplification_factor(&model.budget(p, 0.5))?;
    lines.push(format!("amplification,relay,,{}", fmt_f64(g_a)));
    Ok(document(cfg, CHANNEL_INFO_HEADER, lines))
}

/// Config echo, header and rows, LF-terminated.
fn document(cfg: &RunConfig, header: &str, lines: Vec<String>) -> String {
    let mut out = cfg.echo();
    out.push_str(header);
    out.push('\n');
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}
