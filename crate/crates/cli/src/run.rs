//! Subcommand execution.
//!
//! Output files per subcommand (all in the output directory):
//!
//! | subcommand      | files                                                      |
//! |-----------------|------------------------------------------------------------|
//! | `heatmap`       | `heatmap.csv` (`x_m,y_m,class,error_m`), `heatmap_summary.json` |
//! | `cdf`           | `cdf.csv` (`error_m,cdf`)                                  |
//! | `latency-sweep` | `latency_sweep.csv` (`load_mflop,t_<node>_ms…,best_node,motion_error_m`) |
//! | `pa-raf`        | `pa_raf.csv` (`waveform,with_pa,bin,level_db`), `pa_raf_summary.json` |
//! | `pn-sweep`      | `pn_sweep.csv` (`carrier_ghz,tau_lo_us,mismatch_us,mean_range_error_m,star`) |
//! | `resolution`    | `resolution.json`                                          |
//! | `paths`         | `paths.csv` (one row per propagation path)                 |

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use isac_core::bounds::{build_peb_map, error_cdf};
use isac_core::BoundsError;
use isac_core::channel::build_pathset;
use isac_core::impairments::{pn_range_error_sweep, simulate_floor, Waveform};
use isac_core::latency::{default_nodes, fft2d_flops, placement_sweep, switch_points, write_sweep_csv};
use isac_core::scenarios::build_scenario;
use isac_core::scene::Scene;
use isac_core::waveform::{Axis, Side};
use serde_json::json;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig, ScenarioChoice};
use crate::output::{write_csv, write_json, Metadata};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Heatmap,
    Cdf,
    LatencySweep,
    PaRaf,
    PnSweep,
    Resolution,
    Paths,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Subcommand::Heatmap,
        Subcommand::Cdf,
        Subcommand::LatencySweep,
        Subcommand::PaRaf,
        Subcommand::PnSweep,
        Subcommand::Resolution,
        Subcommand::Paths,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Heatmap => "heatmap",
            Subcommand::Cdf => "cdf",
            Subcommand::LatencySweep => "latency-sweep",
            Subcommand::PaRaf => "pa-raf",
            Subcommand::PnSweep => "pn-sweep",
            Subcommand::Resolution => "resolution",
            Subcommand::Paths => "paths",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown subcommand `{s}`"))
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("no feasible cells: every cell of the test region is outside the sensing region")]
    NoFeasibleCells,
    #[error("{0}")]
    Failed(String),
    #[error("writing output: {0}")]
    Io(#[from] io::Error),
}

impl RunError {
    /// Process exit code: 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl From<BoundsError> for RunError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::NoFeasibleCells => RunError::NoFeasibleCells,
            other => RunError::Failed(other.to_string()),
        }
    }
}

fn failed(e: impl fmt::Display) -> RunError {
    RunError::Failed(e.to_string())
}

/// Builds the stock scene, or loads and regrids a custom one.
pub fn load_scene(cfg: &RunConfig) -> Result<Scene, RunError> {
    match &cfg.scenario {
        ScenarioChoice::Stock(kind) => build_scenario(*kind, &cfg.waveform, &cfg.scene).map_err(failed),
        ScenarioChoice::Custom(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                ConfigError::Read { path: path.display().to_string(), message: e.to_string() }
            })?;
            let mut scene: Scene = serde_json::from_str(&text)
                .map_err(|e| ConfigError::Invalid { key: "scene.file".into(), message: e.to_string() })?;
            scene.test_region.nx = cfg.scene.nx;
            scene.test_region.ny = cfg.scene.ny;
            scene
                .validate()
                .map_err(|e| ConfigError::Invalid { key: "scene.file".into(), message: e.to_string() })?;
            Ok(scene)
        }
    }
}

/// Runs one subcommand and returns the files it wrote.
pub fn run(sub: Subcommand, cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let meta = Metadata { subcommand: sub.name(), seed: cfg.seed, echo: &cfg.echo };
    match sub {
        Subcommand::Heatmap => {
            let scene = load_scene(cfg)?;
            let map = build_peb_map(&scene, &cfg.waveform, cfg.workers)?;
            let mut body = Vec::new();
            map.write_csv(&mut body)?;
            let summary = map.summary(cfg.include_penalty);
            Ok(vec![
                write_csv(out_dir, "heatmap.csv", &meta, &body)?,
                write_json(out_dir, "heatmap_summary.json", &meta, json!({ "summary": summary }))?,
            ])
        }
        Subcommand::Cdf => {
            let scene = load_scene(cfg)?;
            let map = build_peb_map(&scene, &cfg.waveform, cfg.workers)?;
            let cdf = error_cdf(&map, cfg.include_penalty)?;
            let mut body = String::from("error_m,cdf\n");
            for (e, p) in cdf {
                body.push_str(&format!("{e},{p}\n"));
            }
            Ok(vec![write_csv(out_dir, "cdf.csv", &meta, body.as_bytes())?])
        }
        Subcommand::LatencySweep => {
            let nodes = default_nodes();
            let rows = placement_sweep(&cfg.latency, &nodes).map_err(failed)?;
            let mut body = Vec::new();
            write_sweep_csv(&rows, &nodes, &mut body)?;
            Ok(vec![write_csv(out_dir, "latency_sweep.csv", &meta, &body)?])
        }
        Subcommand::PaRaf => {
            let mut body = String::from("waveform,with_pa,bin,level_db\n");
            let mut floors = Vec::new();
            for w in [Waveform::Ofdm, Waveform::SingleCarrier] {
                for with_pa in [false, true] {
                    let s = simulate_floor(&cfg.pa, w, with_pa, cfg.workers).map_err(failed)?;
                    for (bin, level) in s.median_profile_db.iter().enumerate() {
                        body.push_str(&format!("{},{},{},{}\n", w.name(), with_pa, bin, level));
                    }
                    floors.push(json!({
                        "waveform": w.name(),
                        "with_pa": with_pa,
                        "median_floor_db": s.median_floor_db,
                    }));
                }
            }
            Ok(vec![
                write_csv(out_dir, "pa_raf.csv", &meta, body.as_bytes())?,
                write_json(out_dir, "pa_raf_summary.json", &meta, json!({ "floors": floors }))?,
            ])
        }
        Subcommand::PnSweep => {
            let rows = pn_range_error_sweep(&cfg.pn, cfg.workers).map_err(failed)?;
            let mut body = String::from("carrier_ghz,tau_lo_us,mismatch_us,mean_range_error_m,star\n");
            for r in rows {
                body.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.carrier_hz / 1e9,
                    r.tau_lo_s * 1e6,
                    r.mismatch_s * 1e6,
                    r.mean_range_error_m,
                    r.star
                ));
            }
            Ok(vec![write_csv(out_dir, "pn_sweep.csv", &meta, body.as_bytes())?])
        }
        Subcommand::Resolution => {
            let w = &cfg.waveform;
            let angle = |side, axis| {
                let v = w.angular_resolution(side, axis);
                if v.is_finite() { json!(v) } else { json!(null) }
            };
            let nodes = default_nodes();
            let payload = json!({
                "preset": cfg.band.name(),
                "bandwidth_hz": w.bandwidth_hz(),
                "n_symbols": w.n_symbols,
                "frame_duration_s": w.frame_duration(),
                "range_resolution_m": w.range_resolution(),
                "velocity_resolution_m_s": w.velocity_resolution(),
                "angular_resolution_rad": {
                    "tx_azimuth": angle(Side::Tx, Axis::Azimuth),
                    "tx_elevation": angle(Side::Tx, Axis::Elevation),
                    "rx_azimuth": angle(Side::Rx, Axis::Azimuth),
                    "rx_elevation": angle(Side::Rx, Axis::Elevation),
                },
                "fft2d_mflop": fft2d_flops(w.n_subcarriers, w.n_symbols) / 1e6,
                "placement_switch_points_mflop": switch_points(&placement_sweep(&cfg.latency, &nodes).map_err(failed)?)
                    .into_iter()
                    .map(|(load, from, to)| json!({ "load_mflop": load / 1e6, "from": from, "to": to }))
                    .collect::<Vec<_>>(),
            });
            Ok(vec![write_json(out_dir, "resolution.json", &meta, payload)?])
        }
        Subcommand::Paths => {
            let scene = load_scene(cfg)?;
            let (tx, rx) = scene.sensing_pair().map_err(failed)?;
            let ps = build_pathset(&scene, &cfg.waveform, &tx, &rx).map_err(failed)?;
            let mut body = Vec::new();
            ps.write_csv(&mut body)?;
            Ok(vec![write_csv(out_dir, "paths.csv", &meta, &body)?])
        }
    }
}
